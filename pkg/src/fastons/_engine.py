"""Resumable wrapper around the compiled loops, shared by the harness and the estimators."""

from __future__ import annotations

import logging
import time

import numpy as np

from . import _kernels as K
from .core import HyperParams
from .exceptions import HyperbolicBreakdown, NumericalDivergence
from .predictors import fast_state_from_history, initial_lambda
from .rotations import BREAKDOWN_TOL

log = logging.getLogger(__name__)

ALGORITHMS = ("ogd", "ons", "fast-ons")
PRECISIONS = {"float64": np.float64, "float32": np.float32}


def resolve_dtype(precision):
    if isinstance(precision, str):
        try:
            return PRECISIONS[precision]
        except KeyError:
            raise ValueError(f"precision must be one of {sorted(PRECISIONS)}") from None
    return np.dtype(precision).type


class Engine:
    """Learner state plus the last ``dim + 1`` samples, fed in chunks.

    The very first sample only fills the window; every later sample is the
    target of one step.  With ``keep_history`` every sample is retained so
    a fast-ONS breakdown can be repaired by replaying the explicit inverse.
    """

    def __init__(self, algorithm, params: HyperParams, precision="float64", keep_history=True, tol=BREAKDOWN_TOL):
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
        self.algorithm = algorithm
        self.params = params
        self.dtype = resolve_dtype(precision)
        self.tol = tol
        self.keep_history = keep_history
        m = params.dim
        dt = self.dtype
        self.inv_mu = 1.0 / params.step_size
        self.w = np.zeros(m, dtype=dt)
        self.recent = np.zeros(m + 1, dtype=dt)
        self.pushed = 0
        self.breakdowns = 0
        self._history = []
        if algorithm == "ons":
            self.a_inv = np.eye(m, dtype=dt) / dt(params.ridge)
        elif algorithm == "fast-ons":
            lam = initial_lambda(m, params.ridge, dt)
            self.sqrt_eta = np.ones(1, dtype=dt)
            self.u = np.zeros(m + 1, dtype=dt)
            self.lam0 = np.ascontiguousarray(lam[:, 0])
            self.lam1 = np.ascontiguousarray(lam[:, 1])

    @property
    def window(self) -> np.ndarray:
        """Current newest-first window."""
        return self.recent[:0:-1].astype(np.float64)

    def _buffer(self, new):
        m = self.params.dim
        if self.pushed == 0:
            h = np.concatenate([np.zeros(m + 1, dtype=self.dtype), new.astype(self.dtype)])
            return h, new.shape[0]
        h = np.concatenate([np.zeros(1, dtype=self.dtype), self.recent, new.astype(self.dtype)])
        return h, new.shape[0] + 1

    def _run(self, h, n, start, preds, errors):
        p = self.params
        m = p.dim
        if self.algorithm == "ogd":
            return K.run_ogd(h, m, n, start, self.w, self.inv_mu, p.epsilon, preds, errors)
        if self.algorithm == "ons":
            return K.run_ons(h, m, n, start, self.w, self.a_inv, self.inv_mu, p.epsilon, preds, errors)
        return K.run_fast_ons(
            h, m, n, start, self.w, self.sqrt_eta, self.u, self.lam0, self.lam1,
            self.inv_mu, p.epsilon, self.tol, preds, errors,
        )

    def _rebuild(self, history, error):
        """Replace the fast state by the one after the step whose target ends ``history``."""
        w = self.w.astype(np.float64)
        state = fast_state_from_history(history, w, self.params)
        if abs(error) > self.params.epsilon:
            w = w + np.sign(error) * self.inv_mu * state.rho / state.sqrt_eta
        self.w[:] = w
        self.sqrt_eta[0] = state.sqrt_eta
        self.u[0] = 0.0
        self.u[1:] = state.rho
        self.lam0[:] = state.lam[:, 0]
        self.lam1[:] = state.lam[:, 1]

    def consume(self, new, on_breakdown="rebuild"):
        """Feed samples; returns ``(predictions, errors, elapsed_ns)`` for the steps taken."""
        new = np.asarray(new, dtype=np.float64).reshape(-1)
        if on_breakdown not in ("rebuild", "raise"):
            raise ValueError("on_breakdown must be 'rebuild' or 'raise'")
        h, n = self._buffer(new)
        steps = max(n - 1, 0)
        preds = np.zeros(steps)
        errors = np.zeros(steps)
        elapsed = 0
        offset = self.pushed - (1 if self.pushed else 0)
        start = 0
        while steps:
            t0 = time.perf_counter_ns()
            status, t = self._run(h, n, start, preds, errors)
            elapsed += time.perf_counter_ns() - t0
            t = int(t)
            if status == K.OK:
                break
            if status == K.DIVERGED:
                raise NumericalDivergence(f"eta lost positivity at step {offset + t}", step=offset + t)
            if on_breakdown == "raise" or not self.keep_history:
                raise HyperbolicBreakdown(f"hyperbolic rotation broke down at step {offset + t}", step=offset + t)
            self.breakdowns += 1
            # warn once per call; a pathological stream can break down every step
            level = logging.WARNING if start == 0 else logging.DEBUG
            log.log(level, "hyperbolic breakdown at step %d; rebuilding fast state", offset + t)
            consumed = new[: t + 1] if self.pushed else new[: t + 2]
            self._rebuild(np.concatenate(self._history + [consumed]), errors[t])
            start = t + 1

        if self.keep_history:
            self._history.append(new.copy())
        tail = np.concatenate([self.recent, new.astype(self.dtype)])[-(self.params.dim + 1):]
        self.recent = np.ascontiguousarray(tail)
        self.pushed += new.shape[0]
        return preds, errors, elapsed
