"""Exact, partially distributed and fully distributed dual decomposition.

All three share the multiplier update ``lambda <- lambda + gamma_k * d_hat``
and differ only in how ``d_hat`` is assembled:

* ``exact``   -- ``d_hat = d = A y``.
* ``partial`` -- a central node receives one distorted ``y_hat_i`` per
  subsystem and forms ``d_hat`` from them; multipliers are broadcast back
  without error.
* ``full``    -- every subsystem keeps copies of its two adjacent multiplier
  segments, sends one distorted ``y_hat_i`` to both neighbours and updates
  its own copies.

Runs are synchronous rounds. The simulation is sequential and therefore
deterministic; node computations within a round are independent.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_float_vector, check_scalar
from .distortion import distort, total_bound
from .exceptions import IncompatibleInputsError, InvalidStepRuleError
from .problem import ConsensusProblem, dual_lipschitz_constant, dual_strong_convexity_constant
from .subsolver import _solve, lagrangian, local_solutions

ADMISSIBILITY_RTOL = 1e-12
DESCENT_RTOL = 1e-9
ALGORITHMS = ("exact", "partial", "full")


# -- step-size rules ---------------------------------------------------------

class StepSizeRule:
    """A step-size schedule ``gamma_k``.

    Parameter ranges are checked at construction; the problem-dependent
    ceiling ``gamma_k <= 1/L_h`` by :meth:`validate`, which every runner
    calls before the first round.
    """

    needs_mu_h = False

    def step(self, k, L_h, mu_h=None):
        raise NotImplementedError

    def validate(self, L_h, mu_h=None):
        if self.needs_mu_h and mu_h is None:
            raise InvalidStepRuleError(f"{type(self).__name__} needs the dual strong convexity constant")
        first = self.step(0, L_h, mu_h)
        if not (first > 0 and first <= (1.0 / L_h) * (1.0 + ADMISSIBILITY_RTOL)):
            raise InvalidStepRuleError(
                f"initial step {first:.6g} violates 0 < gamma <= 1/L_h = {1.0 / L_h:.6g}"
            )


def _check_gamma(gamma):
    if gamma is None:
        return None
    try:
        return check_scalar(gamma, "gamma", min_val=0.0, include_min=False)
    except (TypeError, ValueError) as exc:
        raise InvalidStepRuleError(str(exc)) from None


def _check_p(p, allow_zero):
    try:
        return check_scalar(p, "p", min_val=0.0, max_val=1.0, include_min=allow_zero)
    except (TypeError, ValueError) as exc:
        raise InvalidStepRuleError(str(exc)) from None


@dataclass(frozen=True)
class Constant(StepSizeRule):
    """``gamma_k = gamma``; ``gamma=None`` means ``1/L_h``."""

    gamma: float = None

    def __post_init__(self):
        object.__setattr__(self, "gamma", _check_gamma(self.gamma))

    def step(self, k, L_h, mu_h=None):
        return 1.0 / L_h if self.gamma is None else self.gamma

    def to_dict(self):
        return {"kind": "constant", "gamma": self.gamma}


@dataclass(frozen=True)
class PowerDecay(StepSizeRule):
    """``gamma_k = gamma / (k+1)**p`` with ``0 <= p <= 1``."""

    gamma: float = None
    p: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gamma", _check_gamma(self.gamma))
        object.__setattr__(self, "p", _check_p(self.p, allow_zero=True))

    def step(self, k, L_h, mu_h=None):
        g = 1.0 / L_h if self.gamma is None else self.gamma
        return g / (k + 1) ** self.p

    def to_dict(self):
        return {"kind": "power", "gamma": self.gamma, "p": self.p}


@dataclass(frozen=True)
class ScaledPowerDecay(StepSizeRule):
    """``gamma_k = (c / mu_h) / (k+1)**p`` with ``0 < c <= mu_h/L_h``, ``0 < p <= 1``."""

    c: float
    p: float

    needs_mu_h = True

    def __post_init__(self):
        try:
            check_scalar(self.c, "c", min_val=0.0, include_min=False)
        except (TypeError, ValueError) as exc:
            raise InvalidStepRuleError(str(exc)) from None
        object.__setattr__(self, "p", _check_p(self.p, allow_zero=False))

    def step(self, k, L_h, mu_h=None):
        return (self.c / mu_h) / (k + 1) ** self.p

    def to_dict(self):
        return {"kind": "scaled", "c": self.c, "p": self.p}


@dataclass(frozen=True)
class LogOverK(StepSizeRule):
    """Scaled power decay with the iteration-dependent exponent ``log(k)/k``.

    The exponent is taken as 1 for ``k <= 1`` where ``log(k)/k`` is
    undefined or zero.
    """

    c: float

    needs_mu_h = True

    def __post_init__(self):
        try:
            check_scalar(self.c, "c", min_val=0.0, include_min=False)
        except (TypeError, ValueError) as exc:
            raise InvalidStepRuleError(str(exc)) from None

    @staticmethod
    def exponent(k):
        return 1.0 if k <= 1 else math.log(k) / k

    def step(self, k, L_h, mu_h=None):
        return (self.c / mu_h) / (k + 1) ** self.exponent(k)

    def to_dict(self):
        return {"kind": "logk", "c": self.c}


def step_size(rule, k, L_h, mu_h=None):
    return rule.step(k, L_h, mu_h)


def rule_from_dict(doc):
    kind = doc.get("kind", "constant")
    if kind == "constant":
        return Constant(doc.get("gamma"))
    if kind == "power":
        return PowerDecay(doc.get("gamma"), doc.get("p", 0.0))
    if kind == "scaled":
        return ScaledPowerDecay(doc["c"], doc["p"])
    if kind == "logk":
        return LogOverK(doc["c"])
    raise InvalidStepRuleError(f"unknown step rule kind {kind!r}")


# -- traces -------------------------------------------------------------------

@dataclass(frozen=True)
class IterationRecord:
    k: int
    lam: np.ndarray
    y: np.ndarray
    y_hat: np.ndarray
    d: np.ndarray
    d_hat: np.ndarray
    gamma: float


@dataclass(eq=False)
class AlgorithmRun:
    """Configuration plus trace of one execution.

    Per-record arrays (``lam``, ``y``, ...) are stacked along axis 0 and hold
    the retained iterations listed in ``k``. Scalar series ending in
    ``_full`` cover every iteration regardless of thinning.
    """

    algorithm: str
    problem: object
    model: object
    rule: StepSizeRule
    iterations: int
    stride: int
    L_h: float
    mu_h: float
    epsilon: float
    k: np.ndarray
    lam: np.ndarray
    y: np.ndarray
    y_hat: np.ndarray
    d: np.ndarray
    d_hat: np.ndarray
    gamma: np.ndarray
    gamma_full: np.ndarray
    grad_norm_full: np.ndarray
    dual_value_full: np.ndarray
    stop_reason: str
    descent_violations: list = field(default_factory=list)
    segment_mismatches: int = 0

    def __len__(self):
        return len(self.k)

    @property
    def final_iteration(self):
        return int(self.k[-1])

    def record(self, i):
        return IterationRecord(int(self.k[i]), self.lam[i], self.y[i], self.y_hat[i],
                               self.d[i], self.d_hat[i], float(self.gamma[i]))

    @property
    def records(self):
        return [self.record(i) for i in range(len(self))]

    def freeze(self):
        for name in ("k", "lam", "y", "y_hat", "d", "d_hat", "gamma", "gamma_full",
                     "grad_norm_full", "dual_value_full"):
            getattr(self, name).setflags(write=False)
        return self


# -- runners ------------------------------------------------------------------

def _problem_constants(problem):
    L_h = dual_lipschitz_constant(problem)
    try:
        mu_h = dual_strong_convexity_constant(problem)
    except Exception:
        mu_h = None
    return L_h, mu_h


class _Recorder:
    def __init__(self, problem, iterations, stride):
        self.iterations = iterations
        self.stride = stride
        self.rows = {name: [] for name in ("k", "lam", "y", "y_hat", "d", "d_hat", "gamma")}
        self.gamma_full = np.empty(iterations + 1)
        self.grad_norm_full = np.empty(iterations + 1)
        self.dual_value_full = np.empty(iterations + 1)

    def add(self, k, lam, y, y_hat, d, d_hat, gamma, grad_norm, g, force=False):
        self.gamma_full[k] = gamma
        self.grad_norm_full[k] = grad_norm
        self.dual_value_full[k] = g
        if force or k % self.stride == 0:
            for name, val in (("k", k), ("lam", lam), ("y", y), ("y_hat", y_hat),
                              ("d", d), ("d_hat", d_hat), ("gamma", gamma)):
                self.rows[name].append(np.array(val, copy=True))

    def arrays(self, last):
        out = {name: np.array(vals) for name, vals in self.rows.items()}
        out["gamma_full"] = self.gamma_full[:last + 1].copy()
        out["grad_norm_full"] = self.grad_norm_full[:last + 1].copy()
        out["dual_value_full"] = self.dual_value_full[:last + 1].copy()
        return out


def _validate_inputs(problem, rule, model, iterations, lam0, stride, algorithm):
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    iterations = check_scalar(iterations, "iterations", min_val=0, integer=True)
    stride = check_scalar(stride, "stride", min_val=1, integer=True)
    if not isinstance(rule, StepSizeRule):
        raise InvalidStepRuleError("rule must be a StepSizeRule")
    if algorithm != "exact" and not isinstance(problem, ConsensusProblem):
        raise IncompatibleInputsError("distributed algorithms need a chain ConsensusProblem")
    if model is not None:
        model.check_compatible(problem)
    lam0 = np.zeros(problem.num_dual) if lam0 is None else as_float_vector(
        lam0, size=problem.num_dual, name="lambda0")
    L_h, mu_h = _problem_constants(problem)
    rule.validate(L_h, mu_h)
    return iterations, stride, lam0, L_h, mu_h


def _epsilon(problem, model):
    if model is None:
        return 0.0
    return total_bound(model.bounds(problem.m, problem.n))


def _descent_ok(h_next, h_prev, gamma, grad_norm, eps):
    rhs = h_prev - 0.5 * gamma * grad_norm**2 + 0.5 * gamma * eps**2
    return h_next <= rhs + DESCENT_RTOL * max(1.0, abs(h_prev))


def _run(problem, rule, model, iterations, lam0, tol, stride, algorithm):
    iterations, stride, lam0, L_h, mu_h = _validate_inputs(
        problem, rule, model, iterations, lam0, stride, algorithm)
    if algorithm == "exact":
        model = None
    eps = _epsilon(problem, model)
    rec = _Recorder(problem, iterations, stride)
    descent_violations = []
    mismatches = 0
    state = _FullState(problem, lam0) if algorithm == "full" else None
    lam = lam0.copy()
    stop_reason = "budget"
    prev = None
    k = 0
    while True:
        gamma = rule.step(k, L_h, mu_h)
        if algorithm == "full":
            lam = state.assemble()
            y, y_hat, d_hat, lam_next, bad = state.round(k, gamma, model)
            mismatches += bad
        else:
            y = local_solutions(problem, lam)
            y_hat = _distort_all(problem, y, k, model)
            d_hat = problem.coupling_residual(y_hat)
            lam_next = lam + gamma * d_hat
        d = problem.coupling_residual(y)
        grad_norm = float(np.linalg.norm(d))
        g = lagrangian(problem, y, lam)
        if prev is not None and not _descent_ok(-g, -prev[0], prev[1], prev[2], eps):
            descent_violations.append(k - 1)
        prev = (g, gamma, grad_norm)
        done = k >= iterations or (tol is not None and grad_norm <= tol)
        rec.add(k, lam, y, y_hat, d, d_hat, gamma, grad_norm, g, force=done)
        if done:
            if k < iterations:
                stop_reason = "tolerance"
            break
        lam = lam_next
        k += 1
    arrays = rec.arrays(k)
    run = AlgorithmRun(
        algorithm=algorithm, problem=problem, model=model, rule=rule,
        iterations=iterations, stride=stride, L_h=L_h, mu_h=mu_h, epsilon=eps,
        stop_reason=stop_reason, descent_violations=descent_violations,
        segment_mismatches=mismatches, **arrays,
    )
    return run.freeze()


def _distort_all(problem, y, k, model):
    if model is None:
        return y.copy()
    n = problem.n
    return np.concatenate([distort(y[i * n:(i + 1) * n], i, k, model) for i in range(problem.m)])


class _FullState:
    """Per-node multiplier copies for the neighbour message-passing variant.

    Node ``i`` stores ``left = lambda_{i-1}`` and ``right = lambda_i``; the
    outer segments of the chain are pinned to zero.
    """

    def __init__(self, problem, lam0):
        self.problem = problem
        m, n = problem.m, problem.n
        seg = lam0.reshape(m - 1, n)
        self.left = [np.zeros(n)] + [seg[i - 1].copy() for i in range(1, m)]
        self.right = [seg[i].copy() for i in range(m - 1)] + [np.zeros(n)]

    def assemble(self):
        return np.concatenate(self.right[:-1])

    def round(self, k, gamma, model):
        p = self.problem
        m, n = p.m, p.n
        y = [_solve(p.costs[i], self.right[i] - self.left[i], p.constraint) for i in range(m)]
        sent = [distort(y[i], i, k, model) for i in range(m)]
        zero = np.zeros(n)
        d_hat_parts = []
        new_left, new_right = [], []
        for i in range(m):
            prev_hat = sent[i - 1] if i > 0 else zero
            next_hat = sent[i + 1] if i < m - 1 else zero
            d_left = prev_hat - sent[i]
            d_right = sent[i] - next_hat
            new_left.append(self.left[i] + gamma * d_left if i > 0 else self.left[i])
            new_right.append(self.right[i] + gamma * d_right if i < m - 1 else self.right[i])
            if i < m - 1:
                d_hat_parts.append(d_right)
        bad = sum(int(not np.array_equal(new_right[i], new_left[i + 1])) for i in range(m - 1))
        self.left, self.right = new_left, new_right
        lam_next = np.concatenate(new_right[:-1])
        return (np.concatenate(y), np.concatenate(sent), np.concatenate(d_hat_parts),
                lam_next, bad)


def run_exact(problem, rule, iterations, lam0=None, tol=None, stride=1):
    """Undistorted dual decomposition; ``d_hat == d`` at every round."""
    return _run(problem, rule, None, iterations, lam0, tol, stride, "exact")


def run_partially_distributed(problem, rule, model, iterations, lam0=None, tol=None, stride=1):
    """Central-node coordination with distorted uplinks and error-free broadcast."""
    return _run(problem, rule, model, iterations, lam0, tol, stride, "partial")


def run_fully_distributed(problem, rule, model, iterations, lam0=None, tol=None, stride=1):
    """Neighbour-only coordination; each node transmits one distorted value."""
    return _run(problem, rule, model, iterations, lam0, tol, stride, "full")


def run_algorithm(algorithm, problem, rule, model=None, iterations=1000, lam0=None,
                  tol=None, stride=1):
    return _run(problem, rule, model, iterations, lam0, tol, stride, algorithm)
