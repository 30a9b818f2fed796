"""Local subproblem solves, the dual function and reference solutions.

Subsystem ``i`` minimizes ``f_i(y_i) + (lambda_i - lambda_{i-1})^T y_i`` over
the constraint set. For quadratic costs this has a closed form: the
stationary point when unconstrained, and a coordinate-wise clamp for a box
with a diagonal cost matrix.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import as_float_vector, check_scalar, frozen
from .exceptions import (
    DegenerateProblemError,
    NoConvergenceError,
    UnsupportedSubproblemError,
)
from .problem import UNCONSTRAINED, ConstraintSet, QuadraticCost, dual_lipschitz_constant

BOX_ITERATION_CAP = 10**6


@dataclass(frozen=True, eq=False)
class LocalProblem:
    cost: QuadraticCost
    tilt: np.ndarray
    constraint: ConstraintSet = UNCONSTRAINED

    def __post_init__(self):
        object.__setattr__(self, "tilt", as_float_vector(self.tilt, size=self.cost.dim, name="tilt"))


def solve_local(local):
    """Exact minimizer of one subproblem.

    >>> from dualdecomp.problem import QuadraticCost, ConstraintSet
    >>> solve_local(LocalProblem(QuadraticCost([[1.0]], [0.0]), [10.0], ConstraintSet.box(3)))
    array([-3.])
    """
    return _solve(local.cost, local.tilt, local.constraint)


def _solve(cost, tilt, constraint):
    rhs = -(cost.offset + tilt)
    if constraint.is_box:
        if not cost.is_diagonal:
            raise UnsupportedSubproblemError(
                "box-constrained subproblems require a diagonal cost matrix"
            )
        y = rhs / (2.0 * cost.diagonal)
        a = constraint.half_width
        return np.minimum(np.maximum(y, -a), a)
    if cost.is_diagonal:
        return rhs / (2.0 * cost.diagonal)
    return np.linalg.solve(2.0 * cost.matrix, rhs)


def local_solutions(problem, lam):
    """Stacked minimizers ``y(lambda)`` of all subproblems, in subsystem order."""
    tilt = problem.tilt(lam)
    stacked = getattr(problem, "stacked_diagonal", None)
    if stacked is not None:
        # same elementwise arithmetic as the per-block solve, so results match bitwise
        diag, off = stacked
        y = -(off + tilt) / (2.0 * diag)
        if problem.constraint.is_box:
            a = problem.constraint.half_width
            y = np.minimum(np.maximum(y, -a), a)
        return y
    y = np.empty(problem.num_primal)
    for idx, cost in problem.blocks():
        y[idx] = _solve(cost, tilt[idx], problem.constraint)
    return y


def lagrangian(problem, y, lam):
    """``f(y) + lambda^T A y``."""
    return problem.objective(y) + float(np.asarray(lam) @ problem.coupling_residual(y))


def dual_value(problem, lam):
    """Dual function ``g(lambda)``, the sum of the local optimal values."""
    lam = as_float_vector(lam, size=problem.num_dual, name="lambda")
    y = local_solutions(problem, lam)
    return lagrangian(problem, y, lam)


def dual_gradient_exact(problem, lam):
    """Exact gradient of ``g``: ``A y(lambda)``, i.e. the stacked ``y_i - y_{i+1}``."""
    lam = as_float_vector(lam, size=problem.num_dual, name="lambda")
    return problem.coupling_residual(local_solutions(problem, lam))


@dataclass(frozen=True, eq=False)
class ReferenceSolution:
    """High-accuracy primal/dual solution used as ground truth for metrics."""

    primal: np.ndarray
    dual: np.ndarray
    primal_value: float
    dual_value: float
    method: str

    @property
    def dual_norm(self):
        return float(np.linalg.norm(self.dual))

    def to_dict(self):
        return {
            "primal": self.primal.tolist(),
            "dual": self.dual.tolist(),
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "method": self.method,
        }


def kkt_system(problem):
    """Return the KKT matrix and right-hand side of the unconstrained problem."""
    n_p, n_d = problem.num_primal, problem.num_dual
    hess = np.zeros((n_p, n_p))
    q = np.zeros(n_p)
    positions = np.arange(n_p)
    for idx, cost in problem.blocks():
        rows = positions[idx]
        hess[np.ix_(rows, rows)] = 2.0 * cost.matrix
        q[idx] = cost.offset
    a = np.asarray(problem.coupling_matrix)
    kkt = np.zeros((n_p + n_d, n_p + n_d))
    kkt[:n_p, :n_p] = hess
    kkt[:n_p, n_p:] = a.T
    kkt[n_p:, :n_p] = a
    rhs = np.concatenate([-q, np.zeros(n_d)])
    return kkt, rhs


def kkt_residual(problem, y, lam):
    kkt, rhs = kkt_system(problem)
    return float(np.max(np.abs(kkt @ np.concatenate([y, lam]) - rhs)))


def reference_solution(problem, tolerance=1e-10, max_iter=BOX_ITERATION_CAP):
    """Ground-truth ``(y*, lambda*, p*, d*)``.

    Unconstrained problems solve the KKT system directly. Box problems run
    the exact dual iteration with step ``1/L_h`` until ``||d|| <= tolerance``
    and take the block average of the last local solutions as ``y*``.
    """
    tolerance = check_scalar(tolerance, "tolerance", min_val=0.0, include_min=False)
    if problem.constraint.is_box:
        return _reference_by_iteration(problem, tolerance, max_iter)
    kkt, rhs = kkt_system(problem)
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateProblemError(f"KKT system is singular: {exc}") from None
    if np.linalg.cond(kkt) > 1e14:
        raise DegenerateProblemError("KKT system is numerically singular")
    y = sol[:problem.num_primal]
    lam = sol[problem.num_primal:]
    return ReferenceSolution(
        primal=frozen(y),
        dual=frozen(lam),
        primal_value=problem.objective(y),
        dual_value=dual_value(problem, lam),
        method="kkt-solve",
    )


def _reference_by_iteration(problem, tolerance, max_iter):
    gamma = 1.0 / dual_lipschitz_constant(problem)
    lam = np.zeros(problem.num_dual)
    for _ in range(max_iter + 1):
        y = local_solutions(problem, lam)
        d = problem.coupling_residual(y)
        grad_norm = float(np.linalg.norm(d))
        if grad_norm <= tolerance:
            break
        lam = lam + gamma * d
    else:
        raise NoConvergenceError(
            f"exact dual iteration did not reach tolerance {tolerance:g} "
            f"within {max_iter} iterations",
            last_grad_norm=grad_norm,
        )
    m = problem.m
    mean = y.reshape(m, -1).mean(axis=0)
    y_star = np.tile(mean, m)
    return ReferenceSolution(
        primal=frozen(y_star),
        dual=frozen(lam),
        primal_value=problem.objective(y_star),
        dual_value=dual_value(problem, lam),
        method="long-exact-run",
    )
