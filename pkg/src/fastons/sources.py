"""Sample streams: CSV columns, 16-bit PCM WAV files and synthetic AR processes."""

from __future__ import annotations

import csv
import os
import wave
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence, Union

import numpy as np
from scipy.signal import lfilter

from .exceptions import DegenerateRange, ParseError, UnstableProcess, UnsupportedFormat

PCM16_SCALE = 32768.0

# stationary AR(5) used when no data is supplied
DEFAULT_AR_COEFFS = (0.4, 0.2, 0.1, 0.05, 0.05)
DEFAULT_NOISE_STD = 0.1


@dataclass
class StreamSource:
    """A finite stream of real samples plus a description of where it came from."""

    kind: str
    params: dict = field(default_factory=dict)
    length: Optional[int] = None
    samples: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("csv_column", "pcm16_mono", "synthetic_ar", "array"):
            raise ValueError(f"unknown stream kind {self.kind!r}")
        data = np.asarray(self.samples if self.samples is not None else [], dtype=np.float64)
        if data.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if self.length is not None:
            data = data[: self.length]
        self.samples = data

    def __len__(self):
        return self.samples.shape[0]

    def __iter__(self):
        return iter(self.samples.tolist())

    @classmethod
    def from_array(cls, samples, cap=None) -> "StreamSource":
        return cls("array", {}, cap, np.asarray(samples, dtype=np.float64))

    def scaled(self) -> "StreamSource":
        return StreamSource(self.kind, {**self.params, "scaled": True}, None, scale_minmax(self.samples))


SourceLike = Union[StreamSource, Sequence[float], np.ndarray]


def as_samples(source: SourceLike) -> np.ndarray:
    if isinstance(source, StreamSource):
        return source.samples
    return np.asarray(source, dtype=np.float64).reshape(-1)


def _select(row, column, header):
    if isinstance(column, str):
        return row[header.index(column)]
    return row[column]


def ingest_csv(path, column: Union[int, str] = 0, cap: Optional[int] = None, header="auto") -> StreamSource:
    """Read one numeric column of a UTF-8 CSV file in file order.

    ``column`` is a zero-based index or a header name.  With
    ``header="auto"`` the first row is taken as a header when ``column`` is
    a name or when its selected field is not numeric.  Blank lines are
    skipped.  Rows are numbered from 1 in :class:`ParseError`.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise FileNotFoundError(path)
    values = []
    names = None
    with open(path, newline="", encoding="utf-8") as fh:
        for rowno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if rowno == 1 and names is None and header:
                if header is True or isinstance(column, str):
                    names = [c.strip() for c in row]
                    continue
                try:
                    float(_select(row, column, None))
                except (ValueError, IndexError):
                    names = [c.strip() for c in row]
                    continue
            if isinstance(column, str) and names is None:
                raise ParseError(f"column {column!r} needs a header row", rowno)
            try:
                cell = _select(row, column, names)
            except IndexError:
                raise ParseError(f"missing column {column!r}", rowno) from None
            except ValueError:
                raise ParseError(f"no column named {column!r}", rowno) from None
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(f"not a number: {cell!r}", rowno) from None
            if not np.isfinite(value):
                raise ParseError(f"non-finite value {cell!r}", rowno)
            values.append(value)
            if cap is not None and len(values) >= cap:
                break
    return StreamSource("csv_column", {"path": path, "column": column}, cap, np.array(values))


def ingest_pcm16(path, cap: Optional[int] = None) -> StreamSource:
    """Read a mono 16-bit PCM WAV file as samples in [-1, 1)."""
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise FileNotFoundError(path)
    try:
        with wave.open(path, "rb") as wf:
            if wf.getcomptype() != "NONE":
                raise UnsupportedFormat(f"compressed WAV ({wf.getcomptype()}) is not supported")
            if wf.getnchannels() != 1:
                raise UnsupportedFormat(f"expected mono audio, got {wf.getnchannels()} channels")
            if wf.getsampwidth() != 2:
                raise UnsupportedFormat(f"expected 16-bit samples, got {8 * wf.getsampwidth()}-bit")
            rate = wf.getframerate()
            frames = wf.getnframes() if cap is None else min(cap, wf.getnframes())
            raw = wf.readframes(frames)
    except (wave.Error, EOFError) as exc:
        raise UnsupportedFormat(f"{path}: {exc}") from None
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / PCM16_SCALE
    return StreamSource("pcm16_mono", {"path": path, "rate": rate}, cap, samples)


def write_pcm16(path, samples, rate: int = 16000) -> None:
    """Write samples in [-1, 1] as a mono 16-bit WAV file."""
    ints = np.clip(np.round(np.asarray(samples) * PCM16_SCALE), -32768, 32767).astype("<i2")
    with wave.open(os.fspath(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(rate)
        wf.writeframes(ints.tobytes())


def scale_minmax(samples) -> np.ndarray:
    """Affine map sending the minimum to -1 and the maximum to +1."""
    x = as_samples(samples)
    if x.size == 0:
        return x.copy()
    if not np.all(np.isfinite(x)):
        raise DegenerateRange("stream contains non-finite values")
    lo, hi = x.min(), x.max()
    if hi == lo:
        raise DegenerateRange(f"constant stream (every sample is {lo!r})")
    out = 2.0 * (x - lo) / (hi - lo) - 1.0
    # pin the extremes exactly despite rounding
    out[x == lo] = -1.0
    out[x == hi] = 1.0
    return out


def companion_radius(coeffs) -> float:
    """Largest eigenvalue magnitude of the AR companion matrix."""
    a = np.asarray(coeffs, dtype=np.float64)
    if a.size == 0:
        return 0.0
    comp = np.zeros((a.size, a.size))
    comp[0] = a
    comp[1:, :-1] = np.eye(a.size - 1)
    return float(np.abs(np.linalg.eigvals(comp)).max())


def synth_ar(
    coeffs=DEFAULT_AR_COEFFS,
    noise_std: float = DEFAULT_NOISE_STD,
    seed: Optional[int] = 0,
    n: int = 1000,
    initial=None,
) -> StreamSource:
    """Simulate ``x_t = sum_i coeffs[i] * x_{t-1-i} + noise_std * N(0, 1)``.

    ``initial`` fixes the first samples verbatim (no noise is added to them);
    earlier samples count as zero.
    """
    a = np.asarray(coeffs, dtype=np.float64).reshape(-1)
    if n < 0:
        raise ValueError("n must be non-negative")
    if noise_std < 0:
        raise ValueError("noise_std must be non-negative")
    radius = companion_radius(a)
    if not radius < 1.0:
        raise UnstableProcess(f"AR coefficients {a.tolist()} are unstable (spectral radius {radius:.4g})")
    rng = np.random.default_rng(seed)
    noise = noise_std * rng.standard_normal(n)
    params = {"coeffs": a.tolist(), "noise_std": noise_std, "seed": seed}
    init = np.asarray(initial if initial is not None else [], dtype=np.float64)
    if init.size == 0:
        return StreamSource("synthetic_ar", params, n, lfilter([1.0], np.r_[1.0, -a], noise))
    p = a.size
    x = np.zeros(n + p)
    for t in range(n):
        if t < init.size:
            x[p + t] = init[t]
        elif p:
            x[p + t] = a @ x[p + t - 1 :: -1][:p] + noise[t]
        else:
            x[p + t] = noise[t]
    return StreamSource("synthetic_ar", {**params, "initial": init.tolist()}, n, x[p:])


def default_stream(n: int, seed: Optional[int] = 0) -> StreamSource:
    """The benchmark stand-in: the default AR(5) process scaled to [-1, 1]."""
    return synth_ar(DEFAULT_AR_COEFFS, DEFAULT_NOISE_STD, seed, n).scaled()


def describe(source: StreamSource) -> dict[str, Any]:
    return {"kind": source.kind, "length": len(source), **source.params}
