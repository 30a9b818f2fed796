"""Thin scikit-learn style wrappers over the run and projection functions."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .algorithms import Constant, LogOverK, PowerDecay, ScaledPowerDecay, run_algorithm
from .analysis import compute_metrics, project_consensus
from .distortion import DistortionModel, model_from_dict
from .exceptions import ConstantUnavailableError, InvalidStepRuleError
from .problem import dual_strong_convexity_constant
from .subsolver import local_solutions


class InexactDualDecomposition(BaseEstimator):
    """Run one of the dual decomposition variants on a consensus problem.

    Parameters
    ----------
    algorithm : {"exact", "partial", "full"}
    step : {"constant", "power", "scaled", "logk"}
        Step-size schedule; ``gamma=None`` means ``1/L_h``.
    gamma, p, c : float, optional
        Schedule parameters.
    distortion : DistortionModel, dict or None
        Coordination distortion; ignored by the exact variant.
    iterations : int
    tol : float, optional
        Stop once ``||A y|| <= tol``.
    stride : int
        Keep every ``stride``-th record of the trace.

    Attributes
    ----------
    run_ : AlgorithmRun
    lambda_ : ndarray
        Final multipliers.
    y_ : ndarray
        Local solutions at the final multipliers.
    y_feasible_ : ndarray
        Consensus average of ``y_``.
    metrics_ : MetricsSeries or None
        Only set when ``fit`` receives a reference solution.
    """

    def __init__(self, algorithm="exact", step="constant", gamma=None, p=0.0, c=None,
                 distortion=None, iterations=1000, tol=None, stride=1):
        self.algorithm = algorithm
        self.step = step
        self.gamma = gamma
        self.p = p
        self.c = c
        self.distortion = distortion
        self.iterations = iterations
        self.tol = tol
        self.stride = stride

    def _rule(self):
        if self.step == "constant":
            return Constant(self.gamma)
        if self.step == "power":
            return PowerDecay(self.gamma, self.p)
        if self.step == "scaled":
            return ScaledPowerDecay(self.c, self.p)
        if self.step == "logk":
            return LogOverK(self.c)
        raise InvalidStepRuleError(f"unknown step schedule {self.step!r}")

    def _model(self):
        if self.distortion is None or isinstance(self.distortion, DistortionModel):
            return self.distortion
        return model_from_dict(self.distortion)

    def fit(self, problem, reference=None):
        run = run_algorithm(self.algorithm, problem, self._rule(), self._model(),
                            self.iterations, tol=self.tol, stride=self.stride)
        self.run_ = run
        self.problem_ = problem
        self.lambda_ = run.lam[-1].copy()
        self.y_ = run.y[-1].copy()
        self.y_feasible_ = project_consensus(problem, self.y_)
        self.n_iter_ = run.final_iteration
        try:
            self.mu_h_ = dual_strong_convexity_constant(problem)
        except ConstantUnavailableError:
            self.mu_h_ = None
        self.metrics_ = compute_metrics(run, reference) if reference is not None else None
        return self

    def predict(self, lam=None):
        """Local solutions ``y(lambda)``; defaults to the fitted multipliers."""
        check_is_fitted(self, "run_")
        lam = self.lambda_ if lam is None else lam
        return local_solutions(self.problem_, np.asarray(lam, dtype=np.float64))


class ConsensusProjector(TransformerMixin, BaseEstimator):
    """Map each row of stacked local copies (``m`` blocks of size ``n``) to its block average."""

    def __init__(self, m=2, n=1):
        self.m = m
        self.n = n

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.m * self.n:
            raise ValueError(f"expected {self.m * self.n} columns, got {X.shape[1]}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        blocks = X.reshape(X.shape[0], self.m, self.n)
        mean = blocks.mean(axis=1, keepdims=True)
        return np.broadcast_to(mean, blocks.shape).reshape(X.shape).copy()
