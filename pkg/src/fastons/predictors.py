"""Sequential learners: OGD, regular ONS and fast ONS.

Every learner is a state machine.  A state holds the window ``x_t`` (newest
sample ``x_t`` first).  A step predicts ``x_{t+1} = w @ x_t`` and then learns
from the incoming sample before pushing it into the window.  Steps
are pure: they return a new state and leave the input state untouched.

These functions are the readable reference path.  Long streams are driven by
the compiled loops in :mod:`fastons._kernels`, which are tested against
the functions here.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import HyperParams, SlidingWindow, StepOutcome, check_dim, gradient_sign, push
from .exceptions import DimensionMismatch, NumericalDivergence
from .rotations import BREAKDOWN_TOL, apply_transform

# residual tolerated in the annihilated last entry of the q column
Q_TAIL_TOL = 1e-8

PI = np.array([1.0, -1.0])


@dataclass(frozen=True)
class OgdState:
    w: np.ndarray
    window: SlidingWindow


@dataclass(frozen=True)
class OnsState:
    """Weights plus the explicit inverse Hessian proxy ``A^{-1}``.

    With ``bias=True`` a constant 1 is appended to the features, so ``w`` and
    ``a_inv`` carry one extra coordinate.
    """

    w: np.ndarray
    a_inv: np.ndarray
    window: SlidingWindow
    bias: bool = False

    def features(self) -> np.ndarray:
        if not self.bias:
            return self.window.values
        return np.append(self.window.values, self.window.values.dtype.type(1))


@dataclass(frozen=True)
class FastOnsState:
    """Weights plus the O(M) statistics that stand in for ``A^{-1}``.

    ``sqrt_eta`` and ``rho`` come from the previous step:
    ``eta = 1 + x' A^{-1} x`` and ``rho = A^{-1} x / sqrt(eta)`` for the
    previous window.  ``lam`` is the ``(M+1, 2)`` factor with
    ``lam @ diag(1, -1) @ lam.T`` equal to the difference between the two
    most recent inverse proxies embedded in ``(M+1, M+1)``.  ``tail`` is the
    sample that fell off the window at the last push, so
    ``[window, tail]`` spans the current and the previous window.
    """

    w: np.ndarray
    sqrt_eta: float
    rho: np.ndarray
    lam: np.ndarray
    window: SlidingWindow
    tail: float = 0.0
    breakdowns: int = field(default=0, compare=False)

    def extended(self) -> np.ndarray:
        return np.append(self.window.values, self.window.values.dtype.type(self.tail))


def ogd_init(params: HyperParams, dtype=np.float64) -> OgdState:
    return OgdState(np.zeros(params.dim, dtype=dtype), SlidingWindow.zeros(params.dim, dtype))


def ons_init(params: HyperParams, bias: bool = False, dtype=np.float64) -> OnsState:
    n = params.dim + int(bias)
    return OnsState(
        w=np.zeros(n, dtype=dtype),
        a_inv=np.eye(n, dtype=dtype) / dtype(params.ridge),
        window=SlidingWindow.zeros(params.dim, dtype),
        bias=bias,
    )


def initial_lambda(dim: int, ridge: float, dtype=np.float64) -> np.ndarray:
    lam = np.zeros((dim + 1, 2), dtype=dtype)
    lam[0, 0] = lam[dim, 1] = np.sqrt(1.0 / ridge)
    return lam


def fast_ons_init(params: HyperParams, dtype=np.float64) -> FastOnsState:
    return FastOnsState(
        w=np.zeros(params.dim, dtype=dtype),
        sqrt_eta=1.0,
        rho=np.zeros(params.dim, dtype=dtype),
        lam=initial_lambda(params.dim, params.ridge, dtype),
        window=SlidingWindow.zeros(params.dim, dtype),
    )


def predict(w: np.ndarray, window: SlidingWindow) -> float:
    check_dim(w, window.dim, "w")
    return float(w @ window.values)


def ogd_step(state: OgdState, params: HyperParams, next_sample: float):
    check_dim(state.window.values, params.dim, "window")
    x = state.window.values
    prediction = predict(state.w, state.window)
    error = next_sample - prediction
    sign = gradient_sign(error, params.epsilon)
    w = state.w + (sign / params.step_size) * x if sign else state.w
    return OgdState(w, push(state.window, next_sample)), StepOutcome(prediction, error, sign != 0)


def ons_step(state: OnsState, params: HyperParams, next_sample: float):
    """One regular ONS step; O(M^2) through the explicit ``a_inv`` update.

    ``a_inv`` absorbs the window every step, whether or not the weights move.
    """
    check_dim(state.window.values, params.dim, "window")
    x = state.features()
    check_dim(state.w, x.shape[0], "w")
    prediction = float(state.w @ x)
    error = next_sample - prediction

    g = state.a_inv @ x
    eta = 1.0 + x @ g
    if not eta > 0.0:
        raise NumericalDivergence(f"eta = {eta!r} is not positive")
    a_inv = state.a_inv - np.outer(g, g) / eta

    sign = gradient_sign(error, params.epsilon)
    w = state.w + (sign / params.step_size) * (g / eta) if sign else state.w
    new = OnsState(w, a_inv, push(state.window, next_sample), state.bias)
    return new, StepOutcome(prediction, error, sign != 0)


def pre_array(state: FastOnsState) -> np.ndarray:
    """``[[sqrt_eta, x_ext @ lam], [[0; rho], lam]]``, shape ``(M+2, 3)``."""
    m = state.window.dim
    x_ext = state.extended()
    B = np.zeros((m + 2, 3), dtype=state.lam.dtype)
    B[0, 0] = state.sqrt_eta
    B[0, 1:] = x_ext @ state.lam
    B[2:, 0] = state.rho
    B[1:, 1:] = state.lam
    return B


def fast_ons_step(state: FastOnsState, params: HyperParams, next_sample: float, tol: float = BREAKDOWN_TOL):
    """One fast ONS step; O(M) work, no ``M x M`` object is formed.

    Raises :class:`HyperbolicBreakdown` when round-off makes the hyperbolic
    rotation impossible.
    """
    m = state.window.dim
    check_dim(state.w, params.dim, "w")
    check_dim(state.window.values, params.dim, "window")
    if state.lam.shape != (m + 1, 2) or state.rho.shape != (m,):
        raise DimensionMismatch("fast state statistics do not match the window length")
    prediction = predict(state.w, state.window)
    error = next_sample - prediction

    post = apply_transform(pre_array(state), tol)
    sqrt_eta = float(post[0, 0])
    q = post[1:, 0]
    assert abs(q[m]) <= Q_TAIL_TOL * max(1.0, np.abs(q).max()), "q column tail not annihilated"
    rho = q[:m].copy()
    lam = post[1:, 1:].copy()

    sign = gradient_sign(error, params.epsilon)
    w = state.w + (sign / params.step_size) * (rho / sqrt_eta) if sign else state.w
    new = FastOnsState(
        w=w,
        sqrt_eta=sqrt_eta,
        rho=rho,
        lam=lam,
        window=push(state.window, next_sample),
        tail=float(state.window.values[-1]),
        breakdowns=state.breakdowns,
    )
    return new, StepOutcome(prediction, error, sign != 0)


def eta_of(state: FastOnsState) -> float:
    return state.sqrt_eta * state.sqrt_eta


def lambda_gram(lam: np.ndarray) -> np.ndarray:
    """``lam @ diag(1, -1) @ lam.T``."""
    return (lam * PI) @ lam.T


def embedded_difference(a_inv_new: np.ndarray, a_inv_old: np.ndarray) -> np.ndarray:
    """``[[new, 0], [0, 0]] - [[0, 0], [0, old]]`` in ``(M+1, M+1)``."""
    m = a_inv_new.shape[0]
    out = np.zeros((m + 1, m + 1), dtype=np.result_type(a_inv_new, a_inv_old))
    out[:m, :m] += a_inv_new
    out[1:, 1:] -= a_inv_old
    return out


def factor_difference(delta: np.ndarray) -> np.ndarray:
    """Width-2 factor ``lam`` with ``lam @ diag(1, -1) @ lam.T == delta``.

    ``delta`` has one positive and one negative eigenvalue; anything else in
    its spectrum is round-off and is dropped.
    """
    vals, vecs = np.linalg.eigh(delta)
    lam = np.zeros((delta.shape[0], 2), dtype=delta.dtype)
    if vals[-1] > 0:
        lam[:, 0] = np.sqrt(vals[-1]) * vecs[:, -1]
    if vals[0] < 0:
        lam[:, 1] = np.sqrt(-vals[0]) * vecs[:, 0]
    return lam


def _windows(history: np.ndarray, dim: int) -> np.ndarray:
    """Row ``t`` is the newest-first window ending at ``history[t]``."""
    padded = np.concatenate([np.zeros(dim, dtype=history.dtype), history])
    idx = np.arange(len(history))[:, None] + dim - np.arange(dim)[None, :]
    return padded[idx]


def fast_state_from_history(history, w, params: HyperParams, breakdowns: int = 0) -> FastOnsState:
    """Rebuild a fast state by replaying the explicit inverse over ``history``.

    ``history`` is every sample pushed so far (oldest first) and the state is
    the one a cold-started learner reaches after stepping through all of
    them.  Costs O(n M^2 + M^3); used only to recover from a breakdown.
    """
    history = np.asarray(history)
    m = params.dim
    dtype = np.asarray(w).dtype
    if len(history) == 0:
        return replace(fast_ons_init(params, dtype), w=np.array(w, dtype=dtype), breakdowns=breakdowns)
    X = _windows(history.astype(np.float64), m)
    # windows consumed by completed steps: all but the newest
    a_inv_older = np.eye(m) / params.ridge
    for x in X[:-2]:
        g = a_inv_older @ x
        a_inv_older -= np.outer(g, g) / (1.0 + x @ g)
    if len(X) >= 2:
        x_prev = X[-2]
        g = a_inv_older @ x_prev
        eta = 1.0 + x_prev @ g
        a_inv = a_inv_older - np.outer(g, g) / eta
        rho = g / np.sqrt(eta)
        lam = factor_difference(embedded_difference(a_inv, a_inv_older))
    else:
        eta, rho = 1.0, np.zeros(m)
        lam = initial_lambda(m, params.ridge)
    window = SlidingWindow(X[-1].astype(dtype), len(history) - 1)
    tail = float(history[-m - 1]) if len(history) > m else 0.0
    return FastOnsState(
        w=np.array(w, dtype=dtype),
        sqrt_eta=float(np.sqrt(eta)),
        rho=rho.astype(dtype),
        lam=lam.astype(dtype),
        window=window,
        tail=tail,
        breakdowns=breakdowns,
    )
