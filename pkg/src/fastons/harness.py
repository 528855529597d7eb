"""Experiment drivers: single-learner runs, fast/regular lockstep comparison and timing sweeps."""

from __future__ import annotations

import csv
import io
import logging
import statistics
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.signal import lfilter

from . import _kernels as K
from ._engine import ALGORITHMS, Engine, resolve_dtype
from .core import HyperParams
from .exceptions import HyperbolicBreakdown, NumericalDivergence
from .predictors import initial_lambda
from .rotations import BREAKDOWN_TOL
from .sources import SourceLike, as_samples, default_stream

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
EWMA_DECAY = 0.01
DEFAULT_EQUIVALENCE_TOL = 1e-6


def running_mse(errors: np.ndarray) -> np.ndarray:
    """Mean of the squared errors over steps ``0..t`` for every ``t``."""
    errors = np.asarray(errors, dtype=np.float64)
    return np.cumsum(errors * errors) / np.arange(1, errors.size + 1)


def ewma_mse(errors: np.ndarray, decay: float = EWMA_DECAY) -> np.ndarray:
    """``m_t = (1 - decay) m_{t-1} + decay e_t^2``, started at ``e_0^2``."""
    sq = np.asarray(errors, dtype=np.float64) ** 2
    if sq.size == 0:
        return sq
    out, _ = lfilter([decay], [1.0, decay - 1.0], sq[1:], zi=[(1.0 - decay) * sq[0]])
    return np.concatenate([sq[:1], out])


def settling_step(curve: np.ndarray, factor: float = 2.0) -> int:
    """First index from which ``curve`` stays below ``factor`` times its final value."""
    curve = np.asarray(curve)
    if curve.size == 0:
        return 0
    above = np.flatnonzero(curve >= factor * curve[-1])
    return 0 if above.size == 0 else int(above[-1]) + 1


@dataclass
class RunMetrics:
    algorithm: str
    params: HyperParams
    steps: int
    cumulative_abs_loss: float
    running_mse: np.ndarray = field(repr=False)
    ewma_mse: np.ndarray = field(repr=False)
    wall_time_ns: int = 0
    breakdown_count: int = 0
    per_step_abs_error: Optional[np.ndarray] = field(default=None, repr=False)
    predictions: Optional[np.ndarray] = field(default=None, repr=False)
    weights: Optional[np.ndarray] = field(default=None, repr=False)
    precision: str = "float64"

    @property
    def final_mse(self) -> float:
        return float(self.running_mse[-1]) if self.steps else float("nan")

    def to_dict(self, include_series: bool = True) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "kind": "run_metrics",
            "algorithm": self.algorithm,
            "params": asdict(self.params),
            "precision": self.precision,
            "steps": self.steps,
            "cumulative_abs_loss": self.cumulative_abs_loss,
            "final_mse": self.final_mse if self.steps else None,
            "wall_time_ns": self.wall_time_ns,
            "breakdown_count": self.breakdown_count,
        }
        if include_series:
            out["running_mse"] = self.running_mse.tolist()
            out["ewma_mse"] = self.ewma_mse.tolist()
            if self.per_step_abs_error is not None:
                out["per_step_abs_error"] = self.per_step_abs_error.tolist()
            if self.weights is not None:
                out["weights"] = self.weights.tolist()
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = ["t", "prediction", "abs_error", "running_mse", "ewma_mse"]
        writer.writerow(header)
        preds = self.predictions if self.predictions is not None else [None] * self.steps
        errs = self.per_step_abs_error if self.per_step_abs_error is not None else [None] * self.steps
        for t in range(self.steps):
            writer.writerow([t, _num(preds[t]), _num(errs[t]), repr(float(self.running_mse[t])), repr(float(self.ewma_mse[t]))])
        return buf.getvalue()


def _num(v):
    return "" if v is None else repr(float(v))


_warm = set()


def warmup(dtype=np.float64) -> None:
    """Trigger compilation of every loop for ``dtype`` outside any timed region."""
    key = np.dtype(dtype).name
    if key in _warm:
        return
    x = np.linspace(-1.0, 1.0, 8)
    for algo in ALGORITHMS:
        Engine(algo, HyperParams(dim=2, step_size=1.0), dtype, keep_history=False).consume(x)
    _compare_arrays(HyperParams(dim=2, step_size=1.0), x, dtype, 1e-9)
    _warm.add(key)


def run_stream(
    algorithm: str,
    params: HyperParams,
    source: SourceLike,
    *,
    on_breakdown: str = "rebuild",
    precision="float64",
    record_errors: bool = True,
    ewma_decay: float = EWMA_DECAY,
    _breakdown_tol: float = BREAKDOWN_TOL,
) -> RunMetrics:
    """Drive one learner over the stream, predicting sample ``t+1`` from the window ending at ``t``.

    A stream of ``n`` samples gives ``n - 1`` steps.  With
    ``on_breakdown="rebuild"`` a fast-ONS breakdown is repaired by
    recomputing the state from the explicit inverse and counted in
    ``breakdown_count``; ``"raise"`` propagates :class:`HyperbolicBreakdown`.
    """
    if on_breakdown not in ("rebuild", "raise"):
        raise ValueError("on_breakdown must be 'rebuild' or 'raise'")
    dtype = resolve_dtype(precision)
    samples = as_samples(source)
    warmup(dtype)
    engine = Engine(algorithm, params, dtype, keep_history=on_breakdown == "rebuild", tol=_breakdown_tol)
    preds, errors, elapsed = engine.consume(samples, on_breakdown)
    if not np.all(np.isfinite(errors)):
        bad = int(np.flatnonzero(~np.isfinite(errors))[0])
        raise NumericalDivergence(f"non-finite prediction error at step {bad}", step=bad)
    abs_err = np.abs(errors)
    return RunMetrics(
        algorithm=algorithm,
        params=params,
        steps=errors.size,
        cumulative_abs_loss=float(abs_err.sum()),
        running_mse=running_mse(errors),
        ewma_mse=ewma_mse(errors, ewma_decay),
        wall_time_ns=int(elapsed),
        breakdown_count=engine.breakdowns,
        per_step_abs_error=abs_err if record_errors else None,
        predictions=preds if record_errors else None,
        weights=engine.w.astype(np.float64),
        precision=np.dtype(dtype).name,
    )


@dataclass
class EquivalenceReport:
    params: HyperParams
    steps: int
    tolerance: float
    max_weight_deviation: float
    max_prediction_deviation: float
    max_eta_deviation: float
    max_mse_deviation: float
    first_deviation_step: Optional[int]
    precision: str = "float64"

    @property
    def passed(self) -> bool:
        return self.max_weight_deviation <= self.tolerance and self.max_mse_deviation <= self.tolerance

    def to_dict(self) -> dict:
        out = asdict(self)
        out["params"] = asdict(self.params)
        return {"schema_version": SCHEMA_VERSION, "kind": "equivalence_report", **out, "passed": self.passed}

    def to_csv(self) -> str:
        d = self.to_dict()
        d.pop("params")
        d.update({f"param_{k}": v for k, v in asdict(self.params).items()})
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(d))
        writer.writerow(["" if v is None else v for v in d.values()])
        return buf.getvalue()


def _compare_arrays(params, samples, dtype, tolerance, tol=BREAKDOWN_TOL):
    m, n = params.dim, samples.shape[0]
    h = np.concatenate([np.zeros(m + 1), samples]).astype(dtype)
    lam = initial_lambda(m, params.ridge, dtype)
    err_r = np.zeros(max(n - 1, 0))
    err_f = np.zeros(max(n - 1, 0))
    stats = np.zeros(6)
    stats[3] = -1
    if n >= 2:
        K.run_lockstep(
            h, m, n,
            np.zeros(m, dtype=dtype), np.eye(m, dtype=dtype) / dtype(params.ridge),
            np.zeros(m, dtype=dtype), np.zeros(m + 1, dtype=dtype),
            np.ascontiguousarray(lam[:, 0]), np.ascontiguousarray(lam[:, 1]),
            1.0 / params.step_size, params.epsilon, tol, tolerance, err_r, err_f, stats,
        )
    return err_r, err_f, stats


def compare_trajectories(
    params: HyperParams,
    source: SourceLike,
    tolerance: float = DEFAULT_EQUIVALENCE_TOL,
    precision="float64",
) -> EquivalenceReport:
    """Run regular and fast ONS in lockstep and measure how far they drift apart."""
    dtype = resolve_dtype(precision)
    samples = as_samples(source)
    warmup(dtype)
    err_r, err_f, stats = _compare_arrays(params, samples, dtype, tolerance)
    status, stop = int(stats[4]), int(stats[5])
    if status == K.DIVERGED:
        raise NumericalDivergence(f"regular ONS lost positivity at step {stop}", step=stop)
    if status == K.BREAKDOWN:
        raise HyperbolicBreakdown(f"hyperbolic rotation broke down at step {stop}", step=stop)
    mse_dev = float(np.abs(running_mse(err_r) - running_mse(err_f)).max()) if err_r.size else 0.0
    first = int(stats[3])
    return EquivalenceReport(
        params=params,
        steps=err_r.size,
        tolerance=tolerance,
        max_weight_deviation=float(stats[0]),
        max_prediction_deviation=float(stats[1]),
        max_eta_deviation=float(stats[2]),
        max_mse_deviation=mse_dev,
        first_deviation_step=None if first < 0 else first,
        precision=np.dtype(dtype).name,
    )


def fit_loglog_slope(dims: Sequence[float], times: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log(time) against log(dim); None below 3 points."""
    if len(dims) < 3:
        return None
    slope, _ = np.polyfit(np.log(np.asarray(dims, float)), np.log(np.asarray(times, float)), 1)
    return float(slope)


@dataclass
class BenchReport:
    dims: list
    n: int
    repeats: int
    algorithms: list
    mean_time_per_step_ns: dict
    total_time_ns: dict
    scaling_exponent: dict
    relative_gain: dict

    def time_per_step(self, algorithm: str) -> list:
        return [self.mean_time_per_step_ns[algorithm][str(m)] for m in self.dims]

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "kind": "bench_report", **asdict(self)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["algorithm", "dim", "n", "repeats", "time_per_step_ns", "median_total_ns"])
        for algo in self.algorithms:
            for m in self.dims:
                writer.writerow([
                    algo, m, self.n, self.repeats,
                    repr(self.mean_time_per_step_ns[algo][str(m)]),
                    statistics.median(self.total_time_ns[algo][str(m)]),
                ])
        return buf.getvalue()


def time_run(algorithm: str, params: HyperParams, samples: np.ndarray, precision="float64") -> int:
    """Wall time in ns of one compiled run; state set-up is outside the timed region."""
    dtype = resolve_dtype(precision)
    engine = Engine(algorithm, params, dtype, keep_history=False)
    return engine.consume(samples, on_breakdown="raise")[2]


def bench_sweep(
    dims: Sequence[int],
    n: int,
    repeats: int = 3,
    algorithms: Sequence[str] = ALGORITHMS,
    *,
    seed: int = 0,
    step_size: float = 1.0,
    source: Optional[SourceLike] = None,
    precision="float64",
) -> BenchReport:
    """Time every (algorithm, dim) cell ``repeats`` times on ``n`` steps.

    Each cell runs once untimed first.  The reported per-step time is the
    median over repeats.  Aim for ``n * min(dims) >= 1e6`` so per-step work
    dominates call overhead.
    """
    dims = [int(m) for m in dims]
    if not dims:
        raise ValueError("dims must be non-empty")
    if dims != sorted(dims) or len(set(dims)) != len(dims):
        raise ValueError("dims must be strictly increasing")
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    for algo in algorithms:
        if algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algo!r}")
    samples = as_samples(source)[: n + 1] if source is not None else default_stream(n + 1, seed).samples
    warmup(resolve_dtype(precision))

    per_step, totals = {}, {}
    for algo in algorithms:
        per_step[algo], totals[algo] = {}, {}
        for m in dims:
            params = HyperParams(dim=m, step_size=step_size)
            time_run(algo, params, samples, precision)
            runs = [time_run(algo, params, samples, precision) for _ in range(repeats)]
            steps = max(samples.shape[0] - 1, 1)
            totals[algo][str(m)] = runs
            per_step[algo][str(m)] = statistics.median(runs) / steps
            log.info("%s M=%d: %.1f ns/step", algo, m, per_step[algo][str(m)])

    slopes = {algo: fit_loglog_slope(dims, [per_step[algo][str(m)] for m in dims]) for algo in algorithms}
    gain = {}
    if "ons" in per_step and "fast-ons" in per_step:
        gain["regular_over_fast"] = [per_step["ons"][str(m)] / per_step["fast-ons"][str(m)] for m in dims]
    if "ogd" in per_step and "fast-ons" in per_step:
        gain["fast_over_ogd"] = [per_step["fast-ons"][str(m)] / per_step["ogd"][str(m)] for m in dims]
    return BenchReport(
        dims=dims,
        n=int(samples.shape[0] - 1),
        repeats=repeats,
        algorithms=list(algorithms),
        mean_time_per_step_ns=per_step,
        total_time_ns=totals,
        scaling_exponent=slopes,
        relative_gain=gain,
    )
