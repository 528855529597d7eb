"""Command-line front end: ``fastons {run,compare,bench,synth}``.

Every flag can also come from an environment variable ``FONS_<FLAG>``
(upper case, dashes as underscores, e.g. ``FONS_STEP_SIZE``).  An explicit
flag wins over the environment.

Exit codes: 0 success, 1 usage, 2 data, 3 numerical, 4 equivalence gate.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from typing import Optional, Sequence

from ._engine import ALGORITHMS, PRECISIONS
from .core import DEFAULT_EPSILON, HyperParams
from .exceptions import DataError, FonsError
from .harness import DEFAULT_EQUIVALENCE_TOL, SCHEMA_VERSION, bench_sweep, compare_trajectories, run_stream
from .sources import (
    DEFAULT_AR_COEFFS,
    DEFAULT_NOISE_STD,
    StreamSource,
    ingest_csv,
    ingest_pcm16,
    synth_ar,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3
EXIT_GATE = 4

ENV_PREFIX = "FONS_"
SYNTHETIC = "synthetic"
DEFAULT_SYNTH_N = 10_000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2, which is reserved here for data errors
    def error(self, message):
        raise UsageError(message)


def _csv_floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _csv_ints(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _csv_algos(text):
    algos = [v.strip() for v in str(text).split(",") if v.strip()]
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown algorithm(s) {bad}; choose from {list(ALGORITHMS)}")
    return algos


def _optional_int(text):
    if str(text).lower() in ("", "none"):
        return None
    return int(text)


def _column(text):
    return int(text) if str(text).lstrip("-").isdigit() else text


def _add_common(p, defaults):
    p.add_argument("--algo", choices=ALGORITHMS, default=defaults.get("algo", "fast-ons"))
    p.add_argument("--dim", type=int, default=defaults.get("dim", 16), help="window length M")
    p.add_argument("--step-size", type=float, default=defaults.get("step_size", 0.003), help="step size mu")
    p.add_argument("--alpha", type=float, default=1.0, help="ridge alpha of the initial Hessian proxy")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON, help="dead zone of the absolute loss")
    p.add_argument("--precision", choices=sorted(PRECISIONS), default="float64")
    p.add_argument("--input", default=SYNTHETIC, help=f"CSV or WAV path, or '{SYNTHETIC}'")
    p.add_argument("--input-format", choices=("csv", "wav", "synth"), default=None,
                   help="default: from the file extension")
    p.add_argument("--column", type=_column, default=0, help="CSV column index or header name")
    p.add_argument("--no-scale", dest="scale", action="store_false",
                   help="feed samples as read instead of min-max scaling them to [-1, 1]")
    p.add_argument("--coeffs", type=_csv_floats, default=list(DEFAULT_AR_COEFFS), help="AR coefficients")
    p.add_argument("--noise-std", type=float, default=DEFAULT_NOISE_STD)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=_optional_int, default=None, help="maximum number of samples read")
    p.add_argument("--output", default="-", help="output path; '-' for stdout")
    p.add_argument("--output-format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fastons", description="Online Newton Step predictors with an O(M) update.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every breakdown rebuild to stderr")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one learner over a stream and report its error curves")
    _add_common(run, {})
    run.add_argument("--summary", action="store_true", help="omit the per-step series from JSON output")

    compare = sub.add_parser("compare", help="check that fast and regular ONS follow the same trajectory")
    _add_common(compare, {})
    compare.add_argument("--tolerance", type=float, default=DEFAULT_EQUIVALENCE_TOL)

    bench = sub.add_parser("bench", help="time learners across window lengths")
    _add_common(bench, {"step_size": 1.0})
    bench.add_argument("--bench-dims", type=_csv_ints, default=[16, 32, 64, 128])
    bench.add_argument("--algos", type=_csv_algos, default=list(ALGORITHMS))
    bench.add_argument("--repeats", type=int, default=3)
    bench.add_argument("--n", type=int, default=None, help="steps per cell (default: --cap or 100000)")

    synth = sub.add_parser("synth", help="write a synthetic AR stream as CSV")
    _add_common(synth, {})
    synth.add_argument("--n", type=int, default=None, help=f"number of samples (default: --cap or {DEFAULT_SYNTH_N})")
    synth.add_argument("--scale", dest="scale", action="store_true",
                       help="min-max scale the stream to [-1, 1] before writing")
    synth.set_defaults(scale=False)
    return parser


def _env_argv(parser: argparse.ArgumentParser, subcommand: str, argv: Sequence[str], environ) -> list:
    """Flags taken from ``FONS_*`` variables that are not already on the command line."""
    subparser = None
    for action in parser._subparsers._group_actions:
        subparser = action.choices.get(subcommand)
    if subparser is None:
        return []
    given = {a.split("=", 1)[0] for a in argv if a.startswith("--")}
    extra = []
    for action in subparser._actions:
        flags = [o for o in action.option_strings if o.startswith("--")]
        if not flags or action.dest == "help":
            continue
        flag = flags[0]
        key = ENV_PREFIX + flag[2:].upper().replace("-", "_")
        if key not in environ or any(f in given for f in action.option_strings):
            continue
        value = environ[key]
        if action.nargs == 0:
            if value.strip().lower() in ("1", "true", "yes", "on"):
                extra.append(flag)
        else:
            extra.append(f"{flag}={value}")
    return extra


def parse_config(argv: Optional[Sequence[str]] = None, environ=None) -> argparse.Namespace:
    """Parse and validate; raises :class:`UsageError` with a one-line reason."""
    argv = list(sys.argv[1:] if argv is None else argv)
    environ = os.environ if environ is None else environ
    parser = build_parser()
    sub = next((a for a in argv if not a.startswith("-")), None)
    cfg = parser.parse_args(argv + _env_argv(parser, sub, argv, environ) if sub else argv)
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg.dim < 1:
        raise UsageError("--dim must be a positive integer")
    for name in ("step_size", "alpha"):
        value = getattr(cfg, name)
        if not (math.isfinite(value) and value > 0):
            raise UsageError(f"--{name.replace('_', '-')} must be a positive finite number")
    if not (math.isfinite(cfg.epsilon) and cfg.epsilon >= 0):
        raise UsageError("--epsilon must be a non-negative finite number")
    if cfg.cap is not None and cfg.cap < 0:
        raise UsageError("--cap must be non-negative")
    if cfg.noise_std < 0:
        raise UsageError("--noise-std must be non-negative")
    fmt = cfg.input_format or _infer_format(cfg.input)
    if fmt is None:
        raise UsageError(f"cannot infer the format of {cfg.input!r}; pass --input-format")
    if fmt == "synth" and cfg.input != SYNTHETIC:
        raise UsageError(f"--input-format synth needs --input {SYNTHETIC}")
    if fmt != "synth" and cfg.input == SYNTHETIC:
        raise UsageError(f"--input {SYNTHETIC} needs --input-format synth")
    cfg.input_format = fmt
    if cfg.subcommand == "compare" and not (math.isfinite(cfg.tolerance) and cfg.tolerance >= 0):
        raise UsageError("--tolerance must be a non-negative finite number")
    if cfg.subcommand == "bench":
        if cfg.repeats < 1:
            raise UsageError("--repeats must be at least 1")
        if not cfg.bench_dims:
            raise UsageError("--bench-dims must list at least one dimension")
        if any(m < 1 for m in cfg.bench_dims):
            raise UsageError("--bench-dims entries must be positive")
        if sorted(set(cfg.bench_dims)) != cfg.bench_dims:
            raise UsageError("--bench-dims must be strictly increasing")
        if not cfg.algos:
            raise UsageError("--algos must name at least one algorithm")
        if cfg.n is not None and cfg.n < 1:
            raise UsageError("--n must be positive")
    if cfg.subcommand == "synth":
        if cfg.input_format != "synth":
            raise UsageError("synth only generates synthetic streams")
        if cfg.n is not None and cfg.n < 0:
            raise UsageError("--n must be non-negative")


def _infer_format(path) -> Optional[str]:
    if path == SYNTHETIC:
        return "synth"
    ext = os.path.splitext(str(path))[1].lower()
    return {".csv": "csv", ".txt": "csv", ".wav": "wav"}.get(ext)


def _params(cfg) -> HyperParams:
    return HyperParams(dim=cfg.dim, step_size=cfg.step_size, ridge=cfg.alpha, epsilon=cfg.epsilon)


def load_source(cfg, n_default: int = DEFAULT_SYNTH_N) -> StreamSource:
    if cfg.input_format == "synth":
        n = cfg.cap if cfg.cap is not None else n_default
        source = synth_ar(cfg.coeffs, cfg.noise_std, cfg.seed, n)
    elif cfg.input_format == "wav":
        source = ingest_pcm16(cfg.input, cap=cfg.cap)
    else:
        source = ingest_csv(cfg.input, column=cfg.column, cap=cfg.cap)
    return source.scaled() if cfg.scale else source


def write_output(text: str, path: str) -> None:
    """Write ``text`` to ``path`` atomically, or to stdout for ``-``."""
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".fastons-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _render(obj, fmt: str, **json_kw) -> str:
    if fmt == "csv":
        return obj.to_csv()
    return json.dumps(obj.to_dict(**json_kw), indent=2, allow_nan=False, default=_json_default) + "\n"


def _json_default(value):
    # numpy scalars
    if hasattr(value, "item"):
        return value.item()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def cmd_run(cfg) -> int:
    source = load_source(cfg)
    metrics = run_stream(cfg.algo, _params(cfg), source, precision=cfg.precision)
    kw = {} if cfg.output_format == "csv" else {"include_series": not cfg.summary}
    write_output(_render(metrics, cfg.output_format, **kw), cfg.output)
    return EXIT_OK


def cmd_compare(cfg) -> int:
    source = load_source(cfg)
    report = compare_trajectories(_params(cfg), source, tolerance=cfg.tolerance, precision=cfg.precision)
    write_output(_render(report, cfg.output_format), cfg.output)
    if not report.passed:
        print(
            f"fastons: equivalence gate failed: max weight deviation {report.max_weight_deviation:.3g}, "
            f"max MSE deviation {report.max_mse_deviation:.3g}, tolerance {report.tolerance:.3g}",
            file=sys.stderr,
        )
        return EXIT_GATE
    return EXIT_OK


def cmd_bench(cfg) -> int:
    n = cfg.n if cfg.n is not None else (cfg.cap if cfg.cap is not None else 100_000)
    source = None
    if cfg.input_format != "synth" or cfg.coeffs != list(DEFAULT_AR_COEFFS) or cfg.noise_std != DEFAULT_NOISE_STD:
        cfg.cap = n + 1 if cfg.cap is None else cfg.cap
        source = load_source(cfg, n_default=n + 1)
        if len(source) < 2:
            raise DataError("bench needs at least two samples")
        n = min(n, len(source) - 1)
    report = bench_sweep(
        cfg.bench_dims, n, cfg.repeats, cfg.algos,
        seed=cfg.seed, step_size=cfg.step_size, source=source, precision=cfg.precision,
    )
    write_output(_render(report, cfg.output_format), cfg.output)
    return EXIT_OK


def cmd_synth(cfg) -> int:
    n = cfg.n if cfg.n is not None else (cfg.cap if cfg.cap is not None else DEFAULT_SYNTH_N)
    source = synth_ar(cfg.coeffs, cfg.noise_std, cfg.seed, n)
    if cfg.scale and len(source):
        source = source.scaled()
    if cfg.output_format == "json":
        text = json.dumps({"schema_version": SCHEMA_VERSION, "kind": "synthetic_stream", **source.params,
                           "samples": source.samples.tolist()}, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["sample"])
        writer.writerows([repr(float(v))] for v in source.samples)
        text = buf.getvalue()
    write_output(text, cfg.output)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "bench": cmd_bench, "synth": cmd_synth}


def main(argv: Optional[Sequence[str]] = None, environ=None) -> int:
    try:
        cfg = parse_config(argv, environ)
    except UsageError as exc:
        print(f"fastons: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if cfg.verbose else logging.WARNING, format="fastons: %(message)s")
    try:
        return COMMANDS[cfg.subcommand](cfg)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); not an error of ours
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return EXIT_OK
    except (DataError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"fastons: data error: {_one_line(exc)}", file=sys.stderr)
        return EXIT_DATA
    except (FonsError, ArithmeticError, ValueError) as exc:
        # numerical failures; HyperParams validation is caught earlier
        print(f"fastons: numerical error: {_one_line(exc)}", file=sys.stderr)
        return EXIT_NUMERICAL


def _one_line(exc) -> str:
    text = str(exc) or type(exc).__name__
    if isinstance(exc, FileNotFoundError) and exc.filename is None and exc.args:
        text = f"no such file: {exc.args[0]}"
    return " ".join(text.split())


if __name__ == "__main__":
    sys.exit(main())
