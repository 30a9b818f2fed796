"""Inexact dual decomposition for chain and general consensus problems.

Subsystems hold private copies of a shared variable and agree through
multipliers on the consistency constraints. The coordination values may be
distorted (quantized, noisy) by a bounded amount; the package simulates the
resulting algorithms and checks their convergence envelopes.
"""

from .algorithms import (
    AlgorithmRun,
    Constant,
    IterationRecord,
    LogOverK,
    PowerDecay,
    ScaledPowerDecay,
    StepSizeRule,
    run_algorithm,
    run_exact,
    run_fully_distributed,
    run_partially_distributed,
    step_size,
)
from .analysis import (
    BoundSeries,
    MetricsSeries,
    check_run,
    compute_bounds,
    compute_metrics,
    corollary1_envelope,
    corollary2_envelope,
    descent_violations,
    feasible_point,
    prop3_bounds,
    prop4_levels,
    recursion_envelope,
)
from .distortion import (
    BoundedNoise,
    CustomBounded,
    DistortionModel,
    NoDistortion,
    UniformQuantizer,
    distort,
    per_node_bound,
    total_bound,
)
from .estimator import ConsensusProjector, InexactDualDecomposition
from .exceptions import (
    ConfigError,
    ConstantUnavailableError,
    DegenerateProblemError,
    DualDecompError,
    IncompatibleInputsError,
    InvalidDimensionsError,
    InvalidProblemError,
    InvalidStepRuleError,
    InvalidTopologyError,
    NoConvergenceError,
    OutOfDomainError,
    UnsupportedSubproblemError,
)
from .problem import (
    ConsensusProblem,
    ConstraintSet,
    GeneralConsensusProblem,
    QuadraticCost,
    build_coupling_matrix,
    build_general_coupling,
    coupling_spectrum,
    dual_lipschitz_constant,
    dual_strong_convexity_constant,
)
from .subsolver import (
    LocalProblem,
    ReferenceSolution,
    dual_gradient_exact,
    dual_value,
    reference_solution,
    solve_local,
)

__version__ = "0.1.0"
