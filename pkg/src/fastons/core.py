"""Shared value types, sliding-window mechanics and the thresholded sign rule.

Windows are stored newest sample first, ``[x_t, x_{t-1}, ..., x_{t-M+1}]``,
so a dot product ``w @ window.values`` weights the newest sample with
``w[0]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch

DEFAULT_EPSILON = 1e-8


@dataclass(frozen=True)
class HyperParams:
    """Learner hyperparameters.

    ``step_size`` is the ``mu`` that divides the update (the weight moves by
    ``1/mu`` times the scaled gradient), ``ridge`` is the ``alpha`` of the
    initial Hessian proxy ``alpha * I`` and ``epsilon`` is the error
    magnitude at or below which the weights are left untouched.
    """

    dim: int
    step_size: float = 0.003
    ridge: float = 1.0
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if isinstance(self.dim, bool) or int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        if not np.isfinite(self.step_size) or self.step_size <= 0:
            raise ValueError(f"step_size must be positive, got {self.step_size!r}")
        if not np.isfinite(self.ridge) or self.ridge <= 0:
            raise ValueError(f"ridge must be positive, got {self.ridge!r}")
        if not np.isfinite(self.epsilon) or self.epsilon < 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon!r}")
        object.__setattr__(self, "dim", int(self.dim))


@dataclass(frozen=True)
class SlidingWindow:
    """The ``dim`` most recent samples, newest first; zeros before time 0."""

    values: np.ndarray
    t: int = -1

    @classmethod
    def zeros(cls, dim: int, dtype=np.float64) -> "SlidingWindow":
        return cls(np.zeros(dim, dtype=dtype), -1)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, SlidingWindow):
            return NotImplemented
        return self.t == other.t and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True)
class StepOutcome:
    prediction: float
    error: float
    updated: bool


def push(window: SlidingWindow, sample: float) -> SlidingWindow:
    """Shift ``sample`` in at the front, dropping the oldest entry."""
    values = np.empty_like(window.values)
    if values.shape[0]:
        values[0] = sample
        values[1:] = window.values[:-1]
    return SlidingWindow(values, window.t + 1)


def extended_vector(window: SlidingWindow, sample: float) -> np.ndarray:
    """``[sample; window]``, the length ``dim + 1`` vector spanning two windows.

    Its first ``dim`` entries are the window after pushing ``sample`` and its
    last ``dim`` entries are ``window`` itself.
    """
    out = np.empty(window.dim + 1, dtype=window.values.dtype)
    out[0] = sample
    out[1:] = window.values
    return out


def absolute_loss(error: float) -> float:
    return abs(error)


def gradient_sign(error: float, epsilon: float) -> int:
    """Sign of the error, or 0 when ``|error| <= epsilon`` (no update).

    The weight moves along ``+x`` for a positive error, since the gradient
    of ``|x_{t+1} - w @ x|`` is ``-sign(e) * x``.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if not abs(error) > epsilon:
        return 0
    return 1 if error > 0 else -1


def check_dim(vector: np.ndarray, dim: int, name: str = "vector") -> None:
    if vector.ndim != 1 or vector.shape[0] != dim:
        raise DimensionMismatch(f"{name} has shape {vector.shape}, expected ({dim},)")
