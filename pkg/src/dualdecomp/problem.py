"""Consensus problem instances, coupling matrices and dual constants.

The chain formulation couples ``m`` private copies ``y_1, ..., y_m`` of an
``n``-dimensional public variable through ``y_i = y_{i+1}``. Every local cost
is a strictly convex quadratic ``y^T M y + q^T y`` so that the strong
convexity and gradient Lipschitz constants follow from the spectrum of ``M``.
"""

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._validation import as_float_matrix, as_float_vector, check_scalar, frozen
from .exceptions import (
    ConstantUnavailableError,
    InvalidDimensionsError,
    InvalidProblemError,
    InvalidTopologyError,
)

SYMMETRY_RTOL = 1e-12
SOFT_MAX_SUBSYSTEMS = 64
SOFT_MAX_DIMENSION = 64


@dataclass(frozen=True, eq=False)
class QuadraticCost:
    """Local cost ``f(y) = y^T M y + q^T y`` with ``M`` symmetric positive definite.

    Constant terms are not representable; every optimality gap reported by
    the package is a difference, so they cancel.
    """

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        mat = as_float_matrix(self.matrix, name="matrix")
        if mat.shape[0] != mat.shape[1]:
            raise InvalidProblemError(f"cost matrix must be square, got {mat.shape}")
        off = as_float_vector(self.offset, size=mat.shape[0], name="offset")
        scale = max(1.0, float(np.max(np.abs(mat))))
        if np.max(np.abs(mat - mat.T)) > SYMMETRY_RTOL * scale:
            raise InvalidProblemError("cost matrix is not symmetric")
        eig = np.linalg.eigvalsh(mat)
        if eig[0] <= 0.0:
            raise InvalidProblemError(
                f"cost matrix must be positive definite (smallest eigenvalue {eig[0]:.3e})"
            )
        object.__setattr__(self, "matrix", frozen(mat))
        object.__setattr__(self, "offset", frozen(off))
        object.__setattr__(self, "_eig", (float(eig[0]), float(eig[-1])))

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def mu(self):
        """Strong convexity constant ``2 * lambda_min(M)``."""
        return 2.0 * self._eig[0]

    @property
    def lipschitz(self):
        """Gradient Lipschitz constant ``2 * lambda_max(M)``."""
        return 2.0 * self._eig[1]

    @cached_property
    def is_diagonal(self):
        return bool(np.all(self.matrix == np.diag(np.diag(self.matrix))))

    @cached_property
    def diagonal(self):
        return frozen(np.diag(self.matrix))

    def value(self, y):
        y = np.asarray(y, dtype=np.float64)
        return float(y @ self.matrix @ y + self.offset @ y)

    def gradient(self, y):
        return 2.0 * self.matrix @ np.asarray(y, dtype=np.float64) + self.offset

    def to_dict(self):
        return {"matrix": self.matrix.ravel().tolist(), "offset": self.offset.tolist()}


@dataclass(frozen=True)
class ConstraintSet:
    """Common constraint set: all of ``R^n`` or the box ``[-a, a]^n``."""

    kind: str = "unconstrained"
    half_width: float = None

    def __post_init__(self):
        if self.kind not in ("unconstrained", "box"):
            raise InvalidProblemError(f"unknown constraint kind {self.kind!r}")
        if self.kind == "box":
            if self.half_width is None:
                raise InvalidProblemError("box constraint needs a half_width")
            hw = check_scalar(self.half_width, "half_width", min_val=0.0, include_min=False)
            object.__setattr__(self, "half_width", hw)
        elif self.half_width is not None:
            raise InvalidProblemError("half_width only applies to box constraints")

    @classmethod
    def box(cls, half_width):
        return cls("box", half_width)

    @property
    def is_box(self):
        return self.kind == "box"

    def contains(self, y):
        if not self.is_box:
            return True
        return bool(np.all(np.abs(np.asarray(y)) <= self.half_width))

    def to_dict(self):
        out = {"kind": self.kind}
        if self.is_box:
            out["half_width"] = self.half_width
        return out


UNCONSTRAINED = ConstraintSet()


def build_coupling_matrix(m, n):
    """Block-bidiagonal consensus matrix of shape ``((m-1)n, mn)``.

    ``A @ y == 0`` exactly when all ``m`` blocks of ``y`` coincide.

    Examples
    --------
    >>> build_coupling_matrix(3, 1)
    array([[ 1., -1.,  0.],
           [ 0.,  1., -1.]])
    """
    _check_dims(m, n)
    a = np.zeros(((m - 1) * n, m * n))
    eye = np.eye(n)
    for i in range(m - 1):
        a[i * n:(i + 1) * n, i * n:(i + 1) * n] = eye
        a[i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] = -eye
    return a


def coupling_spectrum(m):
    """Eigenvalues of ``A A^T`` for ``n = 1``, ascending.

    These are ``2 - 2 cos(j pi / m)`` for ``j = 1..m-1``. Entries past the
    midpoint are evaluated as ``2 + 2 cos((m-j) pi / m)`` so the extremes are
    exactly ``2 -/+ 2 cos(pi / m)``.
    """
    _check_dims(m, 1)
    out = []
    for j in range(1, m):
        if 2 * j <= m:
            out.append(2.0 - 2.0 * math.cos(j * math.pi / m))
        else:
            out.append(2.0 + 2.0 * math.cos((m - j) * math.pi / m))
    return np.array(out)


def _lambda_max_chain(m):
    return 2.0 + 2.0 * math.cos(math.pi / m)


def _lambda_min_chain(m):
    return 2.0 - 2.0 * math.cos(math.pi / m)


def _check_dims(m, n):
    try:
        m = check_scalar(m, "m", min_val=2, integer=True)
        n = check_scalar(n, "n", min_val=1, integer=True)
    except (TypeError, ValueError) as exc:
        raise InvalidDimensionsError(str(exc)) from None
    return m, n


@dataclass(frozen=True, eq=False)
class ConsensusProblem:
    """Chain-coupled global consensus problem with quadratic local costs."""

    m: int
    n: int
    costs: tuple
    constraint: ConstraintSet = field(default=UNCONSTRAINED)

    def __post_init__(self):
        m, n = _check_dims(self.m, self.n)
        costs = tuple(self.costs)
        if len(costs) != m:
            raise InvalidProblemError(f"expected {m} costs, got {len(costs)}")
        for i, c in enumerate(costs):
            if not isinstance(c, QuadraticCost):
                raise InvalidProblemError(f"cost {i} is not a QuadraticCost")
            if c.dim != n:
                raise InvalidProblemError(f"cost {i} has dimension {c.dim}, expected {n}")
        if not isinstance(self.constraint, ConstraintSet):
            raise InvalidProblemError("constraint must be a ConstraintSet")
        if m > SOFT_MAX_SUBSYSTEMS or n > SOFT_MAX_DIMENSION:
            warnings.warn(
                f"problem size m={m}, n={n} exceeds desk-scale defaults "
                f"(m <= {SOFT_MAX_SUBSYSTEMS}, n <= {SOFT_MAX_DIMENSION})",
                RuntimeWarning,
                stacklevel=3,
            )
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "costs", costs)

    @classmethod
    def from_arrays(cls, matrices, offsets, constraint=UNCONSTRAINED):
        costs = tuple(QuadraticCost(a, q) for a, q in zip(matrices, offsets))
        n = costs[0].dim if costs else 1
        return cls(len(costs), n, costs, constraint)

    @property
    def num_primal(self):
        return self.m * self.n

    @property
    def num_dual(self):
        return (self.m - 1) * self.n

    @property
    def mu(self):
        return min(c.mu for c in self.costs)

    @property
    def lipschitz(self):
        return max(c.lipschitz for c in self.costs)

    @cached_property
    def coupling_matrix(self):
        return frozen(build_coupling_matrix(self.m, self.n))

    def blocks(self):
        """Yield ``(index_slice, cost)`` for each subsystem."""
        for i, c in enumerate(self.costs):
            yield slice(i * self.n, (i + 1) * self.n), c

    def tilt(self, lam):
        """Return the stacked linear terms ``lambda_i - lambda_{i-1}``.

        Uses ``lambda_0 = lambda_m = 0``; equals ``A^T lambda``.
        """
        seg = np.asarray(lam, dtype=np.float64).reshape(self.m - 1, self.n)
        padded = np.zeros((self.m + 1, self.n))
        padded[1:self.m] = seg
        return (padded[1:] - padded[:-1]).ravel()

    def coupling_residual(self, y):
        """``A y`` evaluated segment-wise as ``y_i - y_{i+1}``."""
        blocks = np.asarray(y, dtype=np.float64).reshape(self.m, self.n)
        return (blocks[:-1] - blocks[1:]).ravel()

    @cached_property
    def stacked_diagonal(self):
        """Stacked ``(diag(M_i), q_i)`` when every cost is diagonal, else ``None``."""
        if not all(c.is_diagonal for c in self.costs):
            return None
        return (frozen(np.concatenate([c.diagonal for c in self.costs])),
                frozen(np.concatenate([c.offset for c in self.costs])))

    def objective(self, y):
        y = np.asarray(y, dtype=np.float64)
        if self.stacked_diagonal is not None:
            diag, off = self.stacked_diagonal
            return float(y @ (diag * y) + off @ y)
        return sum(c.value(y[s]) for s, c in self.blocks())

    def gradient(self, y):
        y = np.asarray(y, dtype=np.float64)
        return np.concatenate([c.gradient(y[s]) for s, c in self.blocks()])

    def in_constraint_set(self, y):
        return self.constraint.contains(y)

    def to_dict(self):
        return {
            "m": self.m,
            "n": self.n,
            "constraint": self.constraint.to_dict(),
            "costs": [c.to_dict() for c in self.costs],
        }

    @classmethod
    def from_dict(cls, doc):
        m = doc["m"]
        n = doc["n"]
        cons = doc.get("constraint", {"kind": "unconstrained"})
        constraint = ConstraintSet(cons.get("kind", "unconstrained"), cons.get("half_width"))
        costs = []
        for c in doc["costs"]:
            mat = np.asarray(c["matrix"], dtype=np.float64).reshape(n, n)
            costs.append(QuadraticCost(mat, c["offset"]))
        return cls(m, n, tuple(costs), constraint)


def dual_lipschitz_constant(problem):
    """``L_h = (2 + 2 cos(pi/m)) / mu`` for the chain problem.

    General-net problems use the largest ``lambda_max(A_j A_j^T)`` over nets.
    """
    if isinstance(problem, GeneralConsensusProblem):
        return problem.max_coupling_eigenvalue / problem.mu
    return _lambda_max_chain(problem.m) / problem.mu


def dual_strong_convexity_constant(problem):
    """``mu_h = (2 - 2 cos(pi/m)) / L``; only asserted without a box constraint."""
    if isinstance(problem, GeneralConsensusProblem):
        return problem.min_coupling_eigenvalue / problem.lipschitz
    if problem.constraint.is_box:
        raise ConstantUnavailableError(
            "dual strong convexity constant needs an unconstrained problem"
        )
    return _lambda_min_chain(problem.m) / problem.lipschitz


@dataclass(frozen=True, eq=False)
class GeneralConsensusProblem:
    """Consensus over nets: each subsystem touches only some net variables.

    ``memberships[j]`` lists, in order, the subsystems whose cost depends on
    net ``j``. The cost of subsystem ``i`` acts on the concatenation of its
    local copies of the nets it touches, in increasing net index. The
    stacked primal vector is net-major: all copies of net 0, then net 1, etc.
    Local problems are unconstrained.
    """

    net_dims: tuple
    memberships: tuple
    costs: tuple

    def __post_init__(self):
        net_dims = tuple(int(d) for d in self.net_dims)
        memberships = tuple(tuple(int(i) for i in mem) for mem in self.memberships)
        costs = tuple(self.costs)
        if len(net_dims) == 0 or len(memberships) != len(net_dims):
            raise InvalidTopologyError("need one membership list per net")
        if any(d < 1 for d in net_dims):
            raise InvalidTopologyError("net dimensions must be >= 1")
        m = len(costs)
        if m < 1:
            raise InvalidTopologyError("need at least one subsystem")
        for j, mem in enumerate(memberships):
            if len(mem) < 1:
                raise InvalidTopologyError(f"net {j} has no members")
            if len(set(mem)) != len(mem):
                raise InvalidTopologyError(f"net {j} lists a subsystem twice")
            if any(i < 0 or i >= m for i in mem):
                raise InvalidTopologyError(f"net {j} references an unknown subsystem")
        touched = [[j for j, mem in enumerate(memberships) if i in mem] for i in range(m)]
        for i, nets in enumerate(touched):
            if not nets:
                raise InvalidTopologyError(f"subsystem {i} belongs to no net")
            expected = sum(net_dims[j] for j in nets)
            if not isinstance(costs[i], QuadraticCost) or costs[i].dim != expected:
                raise InvalidTopologyError(
                    f"cost of subsystem {i} must act on dimension {expected}"
                )
        offsets = np.cumsum([0] + [net_dims[j] * len(memberships[j]) for j in range(len(net_dims))])
        index = []
        for i in range(m):
            parts = []
            for j in touched[i]:
                k = memberships[j].index(i)
                start = offsets[j] + k * net_dims[j]
                parts.append(np.arange(start, start + net_dims[j]))
            index.append(np.concatenate(parts))
        object.__setattr__(self, "net_dims", net_dims)
        object.__setattr__(self, "memberships", memberships)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "_index", tuple(index))
        object.__setattr__(self, "_net_offsets", offsets)

    @property
    def m(self):
        return len(self.costs)

    @property
    def q(self):
        return len(self.net_dims)

    @property
    def num_primal(self):
        return int(self._net_offsets[-1])

    @property
    def num_dual(self):
        return sum(d * (len(mem) - 1) for d, mem in zip(self.net_dims, self.memberships))

    @property
    def constraint(self):
        return UNCONSTRAINED

    @property
    def mu(self):
        return min(c.mu for c in self.costs)

    @property
    def lipschitz(self):
        return max(c.lipschitz for c in self.costs)

    @cached_property
    def _coupling(self):
        return build_general_coupling(self)

    @property
    def coupling_matrix(self):
        return self._coupling[0]

    @property
    def net_blocks(self):
        return self._coupling[1]

    @property
    def max_coupling_eigenvalue(self):
        vals = [_lambda_max_chain(len(mem)) for mem in self.memberships if len(mem) >= 2]
        if not vals:
            raise ConstantUnavailableError("no net has two or more members")
        return max(vals)

    @property
    def min_coupling_eigenvalue(self):
        vals = [_lambda_min_chain(len(mem)) for mem in self.memberships if len(mem) >= 2]
        if not vals:
            raise ConstantUnavailableError("no net has two or more members")
        return min(vals)

    def blocks(self):
        for idx, c in zip(self._index, self.costs):
            yield idx, c

    def tilt(self, lam):
        return self.coupling_matrix.T @ np.asarray(lam, dtype=np.float64)

    def coupling_residual(self, y):
        return self.coupling_matrix @ np.asarray(y, dtype=np.float64)

    def net_slice(self, j):
        """Slice of the stacked primal vector holding all copies of net ``j``."""
        return slice(int(self._net_offsets[j]), int(self._net_offsets[j + 1]))

    def net_copies(self, y, j):
        """Return the ``m_j`` local copies of net ``j`` as rows."""
        s = self.net_slice(j)
        start, stop = s.start, s.stop
        return np.asarray(y)[start:stop].reshape(len(self.memberships[j]), self.net_dims[j])

    def objective(self, y):
        y = np.asarray(y, dtype=np.float64)
        return sum(c.value(y[idx]) for idx, c in self.blocks())

    def gradient(self, y):
        y = np.asarray(y, dtype=np.float64)
        out = np.zeros(self.num_primal)
        for idx, c in self.blocks():
            out[idx] = c.gradient(y[idx])
        return out

    def in_constraint_set(self, y):
        return True

    def to_dict(self):
        return {
            "net_dims": list(self.net_dims),
            "memberships": [list(mem) for mem in self.memberships],
            "costs": [c.to_dict() for c in self.costs],
        }

    @classmethod
    def from_dict(cls, doc):
        costs = []
        for c in doc["costs"]:
            off = np.asarray(c["offset"], dtype=np.float64)
            mat = np.asarray(c["matrix"], dtype=np.float64).reshape(off.size, off.size)
            costs.append(QuadraticCost(mat, off))
        return cls(tuple(doc["net_dims"]), tuple(doc["memberships"]), tuple(costs))


def build_general_coupling(problem):
    """Assemble ``A_gen = diag(A_1, ..., A_q)`` and return it with the blocks.

    Nets with a single member contribute a block with zero rows.
    """
    blocks = []
    for d, mem in zip(problem.net_dims, problem.memberships):
        mj = len(mem)
        if mj == 1:
            blocks.append(np.zeros((0, d)))
        else:
            blocks.append(build_coupling_matrix(mj, d))
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    a = np.zeros((rows, cols))
    r = c = 0
    for b in blocks:
        a[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return frozen(a), tuple(frozen(b) for b in blocks)
