"""Online Newton Step predictors for shift-structured time series.

The fast variant replaces the ``M x M`` inverse Hessian proxy of the
regular learner by a width-two factor of its rank-two time difference and
updates it with one Givens and one hyperbolic rotation per sample, so a
step costs O(M) instead of O(M^2) while following the same trajectory.
"""

from .core import DEFAULT_EPSILON, HyperParams, SlidingWindow, StepOutcome
from .estimators import (
    FastOnlineNewtonStep,
    OnlineGradientDescent,
    OnlineNewtonStep,
    SlidingWindowTransformer,
    check_series,
    lagged_windows,
)
from .exceptions import (
    DataError,
    DegeneratePair,
    DegenerateRange,
    DimensionMismatch,
    FonsError,
    HyperbolicBreakdown,
    NumericalDivergence,
    ParseError,
    UnstableProcess,
    UnsupportedFormat,
)
from .harness import (
    BenchReport,
    EquivalenceReport,
    RunMetrics,
    bench_sweep,
    compare_trajectories,
    run_stream,
)
from .sources import StreamSource, ingest_csv, ingest_pcm16, synth_ar

__version__ = "0.1.0"

__all__ = [
    "BenchReport",
    "DEFAULT_EPSILON",
    "DataError",
    "DegeneratePair",
    "DegenerateRange",
    "DimensionMismatch",
    "EquivalenceReport",
    "FastOnlineNewtonStep",
    "FonsError",
    "HyperParams",
    "HyperbolicBreakdown",
    "NumericalDivergence",
    "OnlineGradientDescent",
    "OnlineNewtonStep",
    "ParseError",
    "RunMetrics",
    "SlidingWindow",
    "SlidingWindowTransformer",
    "StepOutcome",
    "StreamSource",
    "UnstableProcess",
    "UnsupportedFormat",
    "bench_sweep",
    "check_series",
    "compare_trajectories",
    "ingest_csv",
    "ingest_pcm16",
    "lagged_windows",
    "run_stream",
    "synth_ar",
]
