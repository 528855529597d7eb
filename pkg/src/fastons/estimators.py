"""scikit-learn style wrappers so the learners compose with pipelines and grid search.

The estimators consume a one-dimensional series.  ``fit`` and
``partial_fit`` run the learner online: each sample after the first is
forecast before the weights learn from it.  ``predict`` returns
one-step-ahead forecasts with the current weights frozen.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._engine import Engine
from .core import DEFAULT_EPSILON, HyperParams
from .harness import running_mse


def check_series(y, name="y") -> np.ndarray:
    """Validate a finite one-dimensional series and return it as float64."""
    arr = check_array(np.asarray(y), ensure_2d=False, dtype=np.float64, ensure_min_samples=0, input_name=name)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.reshape(-1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def lagged_windows(y, dim: int, history=None) -> np.ndarray:
    """Row ``t`` is the newest-first window ``[y[t], ..., y[t-dim+1]]``.

    Samples before the series start come from ``history`` (oldest first),
    then zeros.
    """
    y = check_series(y)
    pre = np.zeros(dim)
    if history is not None and len(history):
        h = np.asarray(history, dtype=np.float64)[-dim:]
        pre[dim - h.size:] = h
    padded = np.concatenate([pre, y])
    idx = np.arange(y.size)[:, None] + dim - np.arange(dim)[None, :]
    return padded[idx]


class _OnlineLinearPredictor(RegressorMixin, BaseEstimator):
    _algorithm = None

    def __init__(self, dim=16, step_size=0.003, ridge=1.0, epsilon=DEFAULT_EPSILON, precision="float64"):
        self.dim = dim
        self.step_size = step_size
        self.ridge = ridge
        self.epsilon = epsilon
        self.precision = precision

    def _hyperparams(self):
        return HyperParams(dim=self.dim, step_size=self.step_size, ridge=self.ridge, epsilon=self.epsilon)

    def _new_engine(self):
        return Engine(self._algorithm, self._hyperparams(), self.precision, keep_history=False)

    def fit(self, y, X=None):
        """Learn online over ``y`` from a cold start.  ``X`` is ignored."""
        self._engine = self._new_engine()
        self.errors_ = np.zeros(0)
        self.n_steps_ = 0
        return self.partial_fit(y)

    def partial_fit(self, y, X=None):
        """Continue the stream with the samples in ``y``."""
        y = check_series(y)
        if not hasattr(self, "_engine"):
            self._engine = self._new_engine()
            self.errors_ = np.zeros(0)
            self.n_steps_ = 0
        _, errors, _ = self._consume(y)
        self.errors_ = np.concatenate([self.errors_, errors])
        self.n_steps_ += errors.size
        self.coef_ = self._engine.w.astype(np.float64)
        self.window_ = self._engine.window
        self.n_features_in_ = self.dim
        return self

    def _consume(self, y):
        return self._engine.consume(y, on_breakdown="raise")

    @property
    def running_mse_(self) -> np.ndarray:
        check_is_fitted(self, "errors_")
        return running_mse(self.errors_)

    def forecast(self) -> float:
        """Prediction of the next, not yet seen, sample."""
        check_is_fitted(self, "coef_")
        return float(self.coef_ @ self.window_)

    def predict(self, y) -> np.ndarray:
        """One-step-ahead forecasts of each ``y[t]`` from the samples before it.

        The first forecasts use the tail of the fitted stream as context.
        Weights are not updated.
        """
        check_is_fitted(self, "coef_")
        y = check_series(y)
        if y.size == 0:
            return np.zeros(0)
        # y[t] is forecast from the window ending at y[t-1]
        X = lagged_windows(y[:-1], self.dim, history=self.window_[::-1])
        first = self.forecast()
        return np.concatenate([[first], X @ self.coef_])

    def score(self, y, X=None):
        """R^2 of :meth:`predict` against ``y``."""
        from sklearn.metrics import r2_score

        return r2_score(check_series(y), self.predict(y))


class OnlineGradientDescent(_OnlineLinearPredictor):
    """First-order learner: ``w += sign(e) / step_size * x`` when ``|e| > epsilon``."""

    _algorithm = "ogd"

    def __init__(self, dim=16, step_size=0.1, ridge=1.0, epsilon=DEFAULT_EPSILON, precision="float64"):
        super().__init__(dim, step_size, ridge, epsilon, precision)


class OnlineNewtonStep(_OnlineLinearPredictor):
    """Second-order learner with an explicit ``dim x dim`` inverse; O(dim^2) per sample."""

    _algorithm = "ons"


class FastOnlineNewtonStep(_OnlineLinearPredictor):
    """Same trajectory as :class:`OnlineNewtonStep` at O(dim) per sample.

    ``on_breakdown="rebuild"`` keeps every sample so that a numerical
    breakdown of the hyperbolic rotation can be repaired; ``"raise"``
    keeps only a window and raises :class:`~fastons.exceptions.HyperbolicBreakdown`.
    """

    _algorithm = "fast-ons"

    def __init__(self, dim=16, step_size=0.003, ridge=1.0, epsilon=DEFAULT_EPSILON, precision="float64",
                 on_breakdown="rebuild"):
        super().__init__(dim, step_size, ridge, epsilon, precision)
        self.on_breakdown = on_breakdown

    def _new_engine(self):
        return Engine(self._algorithm, self._hyperparams(), self.precision,
                      keep_history=self.on_breakdown == "rebuild")

    def _consume(self, y):
        return self._engine.consume(y, on_breakdown=self.on_breakdown)

    @property
    def eta_(self) -> float:
        check_is_fitted(self, "coef_")
        return float(self._engine.sqrt_eta[0]) ** 2

    @property
    def n_breakdowns_(self) -> int:
        check_is_fitted(self, "coef_")
        return self._engine.breakdowns


class SlidingWindowTransformer(TransformerMixin, BaseEstimator):
    """Turn a series into its ``(n, dim)`` matrix of newest-first windows."""

    def __init__(self, dim=16):
        self.dim = dim

    def fit(self, y, X=None):
        check_series(y)
        if int(self.dim) < 1:
            raise ValueError("dim must be positive")
        self.n_features_in_ = 1
        return self

    def transform(self, y):
        check_is_fitted(self, "n_features_in_")
        return lagged_windows(y, int(self.dim))
