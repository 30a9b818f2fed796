"""Additive bounded distortions ``y_hat = y + r`` with certified norm bounds.

Every model is a pure function of ``(y, node, iteration)`` plus its own
parameters; random models seed an independent generator per
``(seed, node, iteration)`` so any algorithm replaying the same rounds sees
the same distortion stream.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_scalar
from .exceptions import OutOfDomainError

GENERATORS = ("uniform", "constant-offset")


class DistortionModel:
    """Base class; subclasses implement :meth:`perturb` and :meth:`bound`."""

    def bound(self, node, n):
        raise NotImplementedError

    def perturb(self, y, node, iteration):
        raise NotImplementedError

    def bounds(self, m, n):
        return [self.bound(i, n) for i in range(m)]

    def check_compatible(self, problem):
        pass

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class NoDistortion(DistortionModel):
    def bound(self, node, n):
        return 0.0

    def perturb(self, y, node, iteration):
        return np.array(y, dtype=np.float64, copy=True)

    def to_dict(self):
        return {"kind": "none"}


@dataclass(frozen=True)
class UniformQuantizer(DistortionModel):
    """Snap each coordinate to the centroid of its mini-box.

    ``[-a, a]`` is cut into ``2**bits`` half-open cells ``[lo, lo + t)`` of
    width ``t = 2a / 2**bits``; the top cell is closed so ``+a`` maps to the
    top centroid.
    """

    half_width: float
    bits: int

    def __post_init__(self):
        check_scalar(self.half_width, "half_width", min_val=0.0, include_min=False)
        check_scalar(self.bits, "bits", min_val=1, integer=True)

    @property
    def cell_width(self):
        return 2.0 * self.half_width / 2**self.bits

    def bound(self, node, n):
        return math.sqrt(n) * self.cell_width / 2.0

    def quantize(self, y):
        y = np.asarray(y, dtype=np.float64)
        a = self.half_width
        if np.any(np.abs(y) > a):
            raise OutOfDomainError(f"quantizer input outside [-{a}, {a}]")
        t = self.cell_width
        idx = np.floor((y + a) / t)
        idx = np.minimum(np.maximum(idx, 0.0), 2**self.bits - 1)
        return -a + (idx + 0.5) * t

    def perturb(self, y, node, iteration):
        return self.quantize(y)

    def check_compatible(self, problem):
        cons = problem.constraint
        if not cons.is_box or cons.half_width != self.half_width:
            raise OutOfDomainError("quantizer half_width must equal the box half_width")

    def to_dict(self):
        return {"kind": "quantizer", "half_width": self.half_width, "bits": self.bits}


def _substream(seed, node, iteration):
    return np.random.default_rng([int(seed), int(node), int(iteration)])


@dataclass(frozen=True)
class BoundedNoise(DistortionModel):
    """Measurement noise bounded by ``sigma`` per coordinate.

    ``generator="uniform"`` draws each coordinate from ``U[-sigma, sigma]``;
    ``"constant-offset"`` adds ``+sigma`` to every coordinate every round.
    """

    sigma: float
    seed: int = 0
    generator: str = "uniform"

    def __post_init__(self):
        check_scalar(self.sigma, "sigma", min_val=0.0)
        check_scalar(self.seed, "seed", min_val=0, integer=True)
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")

    def bound(self, node, n):
        return math.sqrt(n) * self.sigma

    def perturb(self, y, node, iteration):
        y = np.asarray(y, dtype=np.float64)
        if self.generator == "constant-offset":
            return y + self.sigma
        rng = _substream(self.seed, node, iteration)
        return y + rng.uniform(-self.sigma, self.sigma, size=y.shape)

    def to_dict(self):
        return {"kind": "noise", "sigma": self.sigma, "seed": self.seed,
                "generator": self.generator}


@dataclass(frozen=True)
class CustomBounded(DistortionModel):
    """Per-node bounds ``eps_i`` with a named generator.

    ``"uniform"`` draws each coordinate from ``U[-eps_i/sqrt(n), eps_i/sqrt(n)]``;
    ``"constant-offset"`` adds ``eps_i/sqrt(n)`` to every coordinate.
    """

    per_node_bounds: tuple
    generator: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        bounds = tuple(float(b) for b in self.per_node_bounds)
        if any(b < 0 or not math.isfinite(b) for b in bounds):
            raise ValueError("per-node bounds must be finite and >= 0")
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")
        check_scalar(self.seed, "seed", min_val=0, integer=True)
        object.__setattr__(self, "per_node_bounds", bounds)

    def bound(self, node, n):
        return self.per_node_bounds[node]

    def perturb(self, y, node, iteration):
        y = np.asarray(y, dtype=np.float64)
        amp = self.per_node_bounds[node] / math.sqrt(y.size)
        if self.generator == "constant-offset":
            return y + amp
        rng = _substream(self.seed, node, iteration)
        return y + rng.uniform(-amp, amp, size=y.shape)

    def check_compatible(self, problem):
        if len(self.per_node_bounds) != problem.m:
            raise ValueError(
                f"need {problem.m} per-node bounds, got {len(self.per_node_bounds)}"
            )

    def to_dict(self):
        return {"kind": "custom", "per_node_bounds": list(self.per_node_bounds),
                "generator": self.generator, "seed": self.seed}


def distort(y, node, iteration, model):
    """Distorted copy of the coordination value ``y`` of ``node`` at ``iteration``."""
    if model is None:
        return np.array(y, dtype=np.float64, copy=True)
    return model.perturb(y, node, iteration)


def per_node_bound(model, n, node=0):
    """Certified bound ``eps_i`` on ``||distort(y) - y||``."""
    if model is None:
        return 0.0
    return model.bound(node, n)


def total_bound(per_node):
    """Aggregate bound ``sqrt(sum_i (eps_i + eps_{i+1})**2)`` on ``||d_hat - d||``."""
    eps = [float(e) for e in per_node]
    return math.sqrt(sum((eps[i] + eps[i + 1]) ** 2 for i in range(len(eps) - 1)))


def model_from_dict(doc):
    """Build a distortion model from its config document (``None`` for no model)."""
    if doc is None:
        return None
    kind = doc.get("kind", "none")
    if kind == "none":
        return None
    if kind == "quantizer":
        return UniformQuantizer(doc["half_width"], doc["bits"])
    if kind == "noise":
        return BoundedNoise(doc["sigma"], doc.get("seed", 0), doc.get("generator", "uniform"))
    if kind == "custom":
        return CustomBounded(tuple(doc["per_node_bounds"]), doc.get("generator", "uniform"),
                             doc.get("seed", 0))
    raise ValueError(f"unknown distortion kind {kind!r}")
