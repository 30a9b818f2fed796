"""Feasible points, error metrics and convergence envelopes for recorded runs.

Metrics compare a run against a :class:`~dualdecomp.subsolver.ReferenceSolution`.
Envelopes are the finite-k bounds implied by the descent recursion for
inexact gradient steps on the negated dual ``h = -g``:

* running minimum of ``||grad h||`` below ``sqrt(2 gap_0 / sum gamma_i) + eps``;
* for constant steps and a strongly convex ``h``, the dual gap below
  ``(1 - gamma mu_h)^k gap_0 + eps^2 / (2 mu_h)``;
* for any admissible schedule, the dual gap below the numerically iterated
  recursion ``b_{k+1} = (1 - gamma_k mu_h) b_k + gamma_k eps^2 / 2``.

Primal quantities follow from ``mu/2 ||y(lambda) - y*||^2 <= p* - g(lambda)``.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import ConstantUnavailableError, IncompatibleInputsError
from .problem import ConsensusProblem, GeneralConsensusProblem

FEASIBILITY_ATOL = 1e-12
BOUND_RTOL = 1e-9
ASYMPTOTIC_SLACK = 0.05


def exceeds(metric, bound, scale=1.0, rtol=BOUND_RTOL):
    """True where ``metric > bound`` beyond a relative tolerance.

    The tolerance is ``rtol * max(|bound|, scale)`` so comparisons against
    bounds that shrink to zero stay meaningful at rounding level.
    """
    metric = np.asarray(metric, dtype=np.float64)
    bound = np.asarray(bound, dtype=np.float64)
    return metric > bound + rtol * np.maximum(np.abs(bound), scale)


# -- feasible points ----------------------------------------------------------

def feasible_point(y, m, n):
    """Replace every block of ``y`` by the block mean.

    >>> feasible_point([1.0, 2.0, 3.0], 3, 1)
    array([2., 2., 2.])
    """
    blocks = np.asarray(y, dtype=np.float64).reshape(m, n)
    return np.tile(blocks.mean(axis=0), m)


def project_consensus(problem, y):
    """Feasible point for either problem type (per-net averaging for general nets)."""
    if isinstance(problem, GeneralConsensusProblem):
        y = np.asarray(y, dtype=np.float64)
        out = np.empty_like(y)
        for j in range(problem.q):
            copies = problem.net_copies(y, j)
            out[problem.net_slice(j)] = np.tile(copies.mean(axis=0), len(copies))
        return out
    return feasible_point(y, problem.m, problem.n)


def _consensus_radius(problem):
    # S drives the objective-level bounds; it is defined for the chain only
    return math.sqrt((4.0 + 4.0 * math.cos(math.pi / problem.m)) / problem.mu)


def primal_gradient_bound(problem):
    """Sup of ``||grad f||`` over consensus points of the box, or ``None``.

    For diagonal quadratics the squared norm separates per coordinate into
    convex quadratics of the shared value, so the sup sits at ``+-a``.
    """
    if not getattr(problem.constraint, "is_box", False):
        return None
    if problem.stacked_diagonal is None:
        return None
    diag, off = problem.stacked_diagonal
    a = problem.constraint.half_width
    diag = diag.reshape(problem.m, problem.n)
    off = off.reshape(problem.m, problem.n)
    per_coord = np.maximum(
        np.sum((2.0 * diag * a + off) ** 2, axis=0),
        np.sum((-2.0 * diag * a + off) ** 2, axis=0),
    )
    return math.sqrt(float(np.sum(per_coord)))


# -- metrics ------------------------------------------------------------------

@dataclass(eq=False)
class MetricsSeries:
    """Per-record error metrics of one run.

    Gradient and dual-gap series (and their running minima) are computed at
    full resolution and then sampled at the retained iterations ``k``;
    primal running minima run over retained records only.
    """

    k: np.ndarray
    dual_gap: np.ndarray
    grad_norm: np.ndarray
    running_min_grad: np.ndarray
    running_min_dual_gap: np.ndarray
    primal_dist: np.ndarray
    running_min_primal_dist: np.ndarray
    primal_obj_gap: np.ndarray
    running_min_abs_obj_gap: np.ndarray
    feas_dist: np.ndarray
    running_min_feas_dist: np.ndarray
    feas_obj_gap: np.ndarray
    running_min_feas_obj_gap: np.ndarray
    feas_violation: np.ndarray
    feas_in_set: np.ndarray
    dual_gap_full: np.ndarray = field(repr=False)
    grad_norm_full: np.ndarray = field(repr=False)

    COLUMNS = ("k", "dual_gap", "grad_norm", "running_min_grad", "running_min_dual_gap",
               "primal_dist", "running_min_primal_dist", "primal_obj_gap",
               "running_min_abs_obj_gap", "feas_dist", "running_min_feas_dist",
               "feas_obj_gap", "running_min_feas_obj_gap", "feas_violation")

    def __len__(self):
        return len(self.k)

    def final(self):
        return {name: float(getattr(self, name)[-1]) for name in self.COLUMNS if name != "k"}


def same_problem(a, b):
    if a is b:
        return True
    if type(a) is not type(b):
        return False
    return a.to_dict() == b.to_dict()


def _check_pair(run, ref, problem=None):
    problem = run.problem if problem is None else problem
    if ref.primal.shape[0] != problem.num_primal or ref.dual.shape[0] != problem.num_dual:
        raise IncompatibleInputsError("reference solution dimensions do not match the run's problem")
    if problem is not run.problem and not same_problem(problem, run.problem):
        raise IncompatibleInputsError("reference solution belongs to a different problem")
    return problem


def compute_metrics(run, ref, problem=None):
    """Error metrics of ``run`` against ``ref``.

    ``problem``, when given, must describe the same instance as the run; it is
    only used to detect a reference built for another problem.
    """
    problem = _check_pair(run, ref, problem)
    y_star = ref.primal
    p_star = ref.primal_value
    dual_gap_full = ref.dual_value - run.dual_value_full
    grad_full = run.grad_norm_full
    idx = run.k

    y = run.y
    primal_dist = np.linalg.norm(y - y_star, axis=1)
    primal_obj = np.array([problem.objective(row) for row in y]) - p_star
    feas = np.array([project_consensus(problem, row) for row in y]).reshape(y.shape)
    feas_dist = np.linalg.norm(feas - y_star, axis=1)
    feas_obj = np.array([problem.objective(row) for row in feas]) - p_star
    feas_violation = np.array([np.max(np.abs(problem.coupling_residual(row)), initial=0.0)
                               for row in feas])
    feas_in_set = np.array([problem.in_constraint_set(row) for row in feas], dtype=bool)

    return MetricsSeries(
        k=idx.copy(),
        dual_gap=dual_gap_full[idx],
        grad_norm=grad_full[idx],
        running_min_grad=np.minimum.accumulate(grad_full)[idx],
        running_min_dual_gap=np.minimum.accumulate(dual_gap_full)[idx],
        primal_dist=primal_dist,
        running_min_primal_dist=np.minimum.accumulate(primal_dist),
        primal_obj_gap=primal_obj,
        running_min_abs_obj_gap=np.minimum.accumulate(np.abs(primal_obj)),
        feas_dist=feas_dist,
        running_min_feas_dist=np.minimum.accumulate(feas_dist),
        feas_obj_gap=feas_obj,
        running_min_feas_obj_gap=np.minimum.accumulate(feas_obj),
        feas_violation=feas_violation,
        feas_in_set=feas_in_set,
        dual_gap_full=dual_gap_full,
        grad_norm_full=grad_full.copy(),
    )


# -- envelopes ----------------------------------------------------------------

def corollary1_envelope(h0_gap, gammas, eps, k):
    """``sqrt(2 gap_0 / sum_{i<=k} gamma_i) + eps`` for the running-min gradient."""
    total = float(np.sum(np.asarray(gammas, dtype=np.float64)[:k + 1]))
    return math.sqrt(2.0 * max(h0_gap, 0.0) / total) + eps


def corollary1_series(h0_gap, gammas, eps):
    cums = np.cumsum(np.asarray(gammas, dtype=np.float64))
    return np.sqrt(2.0 * max(h0_gap, 0.0) / cums) + eps


def corollary2_envelope(h0_gap, gamma, mu_h, eps, k):
    """``(1 - gamma mu_h)^k gap_0 + eps^2 / (2 mu_h)`` for a constant step."""
    if mu_h is None:
        raise ConstantUnavailableError("dual strong convexity constant unavailable")
    return (1.0 - gamma * mu_h) ** k * max(h0_gap, 0.0) + eps**2 / (2.0 * mu_h)


def corollary2_series(h0_gap, gamma, mu_h, eps, count):
    if mu_h is None:
        raise ConstantUnavailableError("dual strong convexity constant unavailable")
    ks = np.arange(count, dtype=np.float64)
    return (1.0 - gamma * mu_h) ** ks * max(h0_gap, 0.0) + eps**2 / (2.0 * mu_h)


def recursion_envelope(h0_gap, gammas, mu_h, eps):
    """Iterate ``b_{k+1} = (1 - gamma_k mu_h) b_k + gamma_k eps^2 / 2`` from ``b_0 = gap_0``.

    Returns one value per entry of ``gammas`` (``b_0 .. b_{K}`` for ``K+1``
    steps, the last step being unused).
    """
    if mu_h is None:
        raise ConstantUnavailableError("dual strong convexity constant unavailable")
    gammas = np.asarray(gammas, dtype=np.float64)
    out = np.empty(len(gammas))
    if len(gammas) == 0:
        return out
    b = max(h0_gap, 0.0)
    half_eps2 = 0.5 * eps**2
    out[0] = b
    for i in range(len(gammas) - 1):
        b = (1.0 - gammas[i] * mu_h) * b + gammas[i] * half_eps2
        out[i + 1] = b
    return out


@dataclass(frozen=True)
class Prop3Bounds:
    """Levels and per-iteration envelopes for the general convex case."""

    primal_dist_level: float
    obj_level: float
    primal_dist_envelope: np.ndarray
    obj_envelope: np.ndarray


def prop3_bounds(grad_envelope, D, eps, mu, m, lam_star_norm):
    """Running-min primal distance and objective-gap levels from a gradient envelope.

    Pointwise, ``||y - y*||^2 <= (2D/mu) ||grad h||`` and
    ``|f(y) - f*| <= D ||grad h|| + sqrt(D) S (D + ||lambda*||) sqrt(||grad h||)``;
    both are increasing in the gradient norm, so substituting the running-min
    gradient envelope bounds the running minima.
    """
    S = math.sqrt((4.0 + 4.0 * math.cos(math.pi / m)) / mu)
    env = np.asarray(grad_envelope, dtype=np.float64)

    def dist(g):
        return np.sqrt(2.0 * D * g / mu)

    def obj(g):
        return D * g + math.sqrt(D) * S * (D + lam_star_norm) * np.sqrt(g)

    return Prop3Bounds(
        primal_dist_level=float(dist(eps)),
        obj_level=float(obj(eps)),
        primal_dist_envelope=dist(env),
        obj_envelope=obj(env),
    )


class Prop4Levels(NamedTuple):
    primal_dist_level: float
    obj_level: float


def prop4_levels(eps, mu, mu_h, m, lam_star_norm):
    """Asymptotic radii when ``h`` is strongly convex.

    Primal distance ``eps sqrt(1/(mu mu_h))``; objective
    ``(eps^2 / 2 mu_h)(1 + S sqrt(2/mu_h)) + eps S ||lambda*|| sqrt(1/(2 mu_h))``.
    """
    if mu_h is None:
        raise ConstantUnavailableError("dual strong convexity constant unavailable")
    S = math.sqrt((4.0 + 4.0 * math.cos(math.pi / m)) / mu)
    dist = eps * math.sqrt(1.0 / (mu * mu_h))
    obj = (eps**2 / (2.0 * mu_h)) * (1.0 + S * math.sqrt(2.0 / mu_h)) \
        + eps * S * lam_star_norm * math.sqrt(1.0 / (2.0 * mu_h))
    return Prop4Levels(dist, obj)


def feasible_objective_level(dist_level, problem, grad_bound=None):
    """Objective radius of the averaged point from a primal distance radius.

    With a box and a gradient bound ``D~`` this is ``D~ * r``. Unconstrained,
    the first-order term vanishes along consensus directions (``grad f(y*)``
    lies in the range of ``A^T``), leaving ``(L/2) r^2``.
    """
    if grad_bound is not None:
        return grad_bound * dist_level
    return 0.5 * problem.lipschitz * dist_level**2


# -- bound series -------------------------------------------------------------

@dataclass(eq=False)
class BoundSeries:
    """Per-record envelopes plus the constants they were built from.

    Entries that do not apply to a run (for instance ``c2_envelope`` when the
    dual is not known to be strongly convex) are NaN.
    """

    k: np.ndarray
    c1_envelope: np.ndarray
    c2_envelope: np.ndarray
    recursion_envelope: np.ndarray
    prop3_primal_dist_bound: np.ndarray
    prop3_obj_bound: np.ndarray
    prop4_primal_dist_bound: np.ndarray
    lemma5_flag: np.ndarray
    constants: dict
    levels: dict

    COLUMNS = ("k", "c1_envelope", "c2_envelope", "recursion_envelope",
               "prop3_primal_dist_bound", "prop3_obj_bound", "prop4_primal_dist_bound",
               "lemma5_flag")

    def __len__(self):
        return len(self.k)


def trace_radius(run, ref):
    """Empirical ``D = max_k ||lambda^(k) - lambda*||`` over the retained records."""
    if len(run.lam) == 0:
        return 0.0
    return float(np.max(np.linalg.norm(run.lam - ref.dual, axis=1)))


def _constant_step(gammas):
    return len(gammas) > 0 and bool(np.all(gammas == gammas[0]))


def compute_bounds(run, ref, metrics=None):
    problem = run.problem
    metrics = compute_metrics(run, ref) if metrics is None else metrics
    idx = run.k
    eps = run.epsilon
    mu = problem.mu
    mu_h = run.mu_h
    h0 = float(metrics.dual_gap_full[0])
    gam = run.gamma_full
    count = len(gam)
    chain = isinstance(problem, ConsensusProblem)

    c1_full = corollary1_series(h0, gam, eps)
    nan = np.full(count, np.nan)
    if mu_h is not None and _constant_step(gam):
        c2_full = corollary2_series(h0, float(gam[0]), mu_h, eps, count)
    else:
        c2_full = nan
    rec_full = recursion_envelope(h0, gam, mu_h, eps) if mu_h is not None else nan

    D = trace_radius(run, ref)
    lam_norm = ref.dual_norm
    S = _consensus_radius(problem) if chain else None
    grad_bound = primal_gradient_bound(problem) if chain else None

    levels = {}
    if chain:
        p3 = prop3_bounds(c1_full[idx], D, eps, mu, problem.m, lam_norm)
        p3_dist, p3_obj = p3.primal_dist_envelope, p3.obj_envelope
        levels["prop3"] = {"primal_dist": p3.primal_dist_level, "objective": p3.obj_level}
    else:
        p3_dist = np.sqrt(2.0 * D * c1_full[idx] / mu)
        p3_obj = np.full(len(idx), np.nan)
        levels["prop3"] = {"primal_dist": math.sqrt(2.0 * D * eps / mu), "objective": None}
    if mu_h is not None and chain:
        p4 = prop4_levels(eps, mu, mu_h, problem.m, lam_norm)
        levels["prop4"] = {"primal_dist": p4.primal_dist_level, "objective": p4.obj_level}
        p4_dist = np.sqrt(2.0 * np.maximum(rec_full[idx], 0.0) / mu)
    else:
        levels["prop4"] = None
        p4_dist = np.full(len(idx), np.nan)

    feas = {"primal_dist": levels["prop3"]["primal_dist"],
            "objective": feasible_objective_level(levels["prop3"]["primal_dist"], problem, grad_bound)}
    if levels["prop4"] is not None:
        r = levels["prop4"]["primal_dist"]
        feas["strong_primal_dist"] = r
        feas["strong_objective"] = feasible_objective_level(r, problem, grad_bound)
    levels["prop5_6"] = feas

    flag = ~exceeds(metrics.feas_dist, metrics.primal_dist)
    if grad_bound is not None:
        flag &= ~exceeds(metrics.feas_obj_gap, grad_bound * metrics.feas_dist)

    constants = {
        "mu": mu,
        "L": problem.lipschitz,
        "L_h": run.L_h,
        "mu_h": mu_h,
        "epsilon": eps,
        "D": D,
        "S": S,
        "D_tilde": grad_bound,
        "lambda_star_norm": lam_norm,
        "gap0": h0,
    }
    return BoundSeries(
        k=idx.copy(),
        c1_envelope=c1_full[idx],
        c2_envelope=c2_full[idx],
        recursion_envelope=rec_full[idx],
        prop3_primal_dist_bound=p3_dist,
        prop3_obj_bound=p3_obj,
        prop4_primal_dist_bound=p4_dist,
        lemma5_flag=flag,
        constants=constants,
        levels=levels,
    )


# -- verification -------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    check: str
    k: int
    metric: float
    bound: float


def descent_violations(run, rtol=BOUND_RTOL):
    """Iterations ``k`` where the one-step descent inequality fails.

    Checks ``h_{k+1} <= h_k - gamma_k/2 ||grad h_k||^2 + gamma_k/2 eps^2``
    on the full-resolution recorded series.
    """
    h = -np.asarray(run.dual_value_full)
    gam = run.gamma_full
    gn = run.grad_norm_full
    eps = run.epsilon
    rhs = h[:-1] - 0.5 * gam[:-1] * gn[:-1] ** 2 + 0.5 * gam[:-1] * eps**2
    bad = exceeds(h[1:], rhs, scale=np.maximum(1.0, np.abs(h[:-1])), rtol=rtol)
    return [int(i) for i in np.flatnonzero(bad)]


def check_run(run, ref, metrics=None, bounds=None):
    """All applicable envelope and invariant checks; returns a list of violations."""
    metrics = compute_metrics(run, ref) if metrics is None else metrics
    bounds = compute_bounds(run, ref, metrics) if bounds is None else bounds
    scale = 1.0 + abs(ref.dual_value)
    out = []

    def add(name, metric, bound, sc=scale):
        mask = ~np.isnan(bound) & exceeds(metric, np.nan_to_num(bound), scale=sc)
        out.extend(Violation(name, int(metrics.k[i]), float(metric[i]), float(bound[i]))
                   for i in np.flatnonzero(mask))

    add("corollary1", metrics.running_min_grad, bounds.c1_envelope, 1.0)
    add("corollary2", metrics.dual_gap, bounds.c2_envelope)
    add("recursion", metrics.dual_gap, bounds.recursion_envelope)
    add("prop3_primal_dist", metrics.running_min_primal_dist, bounds.prop3_primal_dist_bound, 1.0)
    add("prop3_objective", metrics.running_min_abs_obj_gap, bounds.prop3_obj_bound)
    add("prop4_primal_dist", metrics.primal_dist, bounds.prop4_primal_dist_bound, 1.0)
    add("lemma5_projection", metrics.feas_dist, metrics.primal_dist, 1.0)
    grad_bound = bounds.constants.get("D_tilde")
    if grad_bound is not None:
        add("lemma5_objective", metrics.feas_obj_gap, grad_bound * metrics.feas_dist)
    for i in np.flatnonzero(metrics.feas_violation > FEASIBILITY_ATOL):
        out.append(Violation("feasibility", int(metrics.k[i]), float(metrics.feas_violation[i]),
                             FEASIBILITY_ATOL))
    for i in np.flatnonzero(~metrics.feas_in_set):
        out.append(Violation("feasible_set_membership", int(metrics.k[i]), 1.0, 0.0))
    for k in descent_violations(run):
        out.append(Violation("descent", k, float("nan"), float("nan")))
    out.sort(key=lambda v: (v.k, v.check))
    return out


def fit_slope(x, values):
    """Least-squares slope, intercept and R^2 of ``log(values)`` against ``x``."""
    x = np.asarray(x, dtype=np.float64)
    logv = np.log(np.asarray(values, dtype=np.float64))
    if len(x) < 2:
        raise ValueError("need at least two points for a slope fit")
    slope, intercept = np.polyfit(x, logv, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((logv - pred) ** 2))
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def pre_floor_window(values, floor, factor=3.0):
    """Indices of the leading run of entries above ``factor * floor``."""
    values = np.asarray(values, dtype=np.float64)
    above = values > factor * floor
    if not above.any():
        return np.arange(0)
    stop = int(np.argmin(above)) if not above.all() else len(values)
    return np.arange(stop)
