"""Seeded scenario presets.

Costs are not published for the reference experiments, so presets draw
1x1 (or diagonal) cost matrices from ``U[0.5, 2]`` and offsets from
``U[-4, 4]`` with a seeded generator.
"""

from dataclasses import dataclass, field

import numpy as np

from ..problem import ConsensusProblem, ConstraintSet, GeneralConsensusProblem, QuadraticCost

MATRIX_RANGE = (0.5, 2.0)
OFFSET_RANGE = (-4.0, 4.0)

DEMO_NET_DIMS = (1, 1, 1)
DEMO_MEMBERSHIPS = ((0, 1), (1, 2), (2, 3, 4))


@dataclass(frozen=True)
class ScenarioPreset:
    name: str
    problem: object
    defaults: dict = field(default_factory=dict)


def random_chain_problem(m, n, seed, constraint=None):
    """Chain problem with diagonal costs drawn from the preset ranges."""
    rng = np.random.default_rng(seed)
    diags = rng.uniform(*MATRIX_RANGE, size=(m, n))
    offsets = rng.uniform(*OFFSET_RANGE, size=(m, n))
    costs = tuple(QuadraticCost(np.diag(d), q) for d, q in zip(diags, offsets))
    return ConsensusProblem(m, n, costs, constraint or ConstraintSet())


def demo_general_problem(seed):
    rng = np.random.default_rng(seed)
    m = 1 + max(i for mem in DEMO_MEMBERSHIPS for i in mem)
    costs = []
    for i in range(m):
        dim = sum(d for d, mem in zip(DEMO_NET_DIMS, DEMO_MEMBERSHIPS) if i in mem)
        costs.append(QuadraticCost(np.diag(rng.uniform(*MATRIX_RANGE, size=dim)),
                                   rng.uniform(*OFFSET_RANGE, size=dim)))
    return GeneralConsensusProblem(DEMO_NET_DIMS, DEMO_MEMBERSHIPS, tuple(costs))


def _case1(seed):
    problem = random_chain_problem(5, 1, seed, ConstraintSet.box(3.0))
    defaults = {
        "algorithm": "full",
        "rule": {"kind": "power", "gamma": None, "p": 0.0, "c": None},
        "distortion": {"kind": "quantizer", "half_width": 3.0, "bits": 5},
        "iterations": 10_000,
    }
    return ScenarioPreset("case1-quantizer", problem, defaults)


def _case2(seed):
    problem = random_chain_problem(5, 1, seed)
    defaults = {
        "algorithm": "partial",
        "rule": {"kind": "power", "gamma": None, "p": 0.0, "c": 0.004},
        "distortion": {"kind": "noise", "sigma": 0.2, "seed": seed, "generator": "uniform"},
        "iterations": 10_000,
    }
    return ScenarioPreset("case2-noise", problem, defaults)


def _general(seed):
    defaults = {
        "algorithm": "exact",
        "rule": {"kind": "power", "gamma": None, "p": 0.0, "c": None},
        "distortion": None,
        "iterations": 10_000,
    }
    return ScenarioPreset("general-nets-demo", demo_general_problem(seed), defaults)


PRESETS = {
    "case1-quantizer": _case1,
    "case2-noise": _case2,
    "general-nets-demo": _general,
}


def make_preset(name, seed=0):
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(seed)
