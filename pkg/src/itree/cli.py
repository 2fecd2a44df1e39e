"""Command-line entry point: ``itree {sample,exact,solve-basis,export-qasm,compare,hist}``.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 problem too
large for the requested method, 4 amplitudes not decouplable, 5 inconsistent
amplitudes. Failures print one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    chi_square,
    expected_counts,
    full_histogram,
    histogram,
    lambda_sweep,
    sweep_to_csv,
    tv_distance,
    tv_noise_floor,
)
from .circuit import build_circuit, decompose, statevector_run
from .errors import (
    InconsistentAmplitudes,
    ItreeError,
    KeyMismatch,
    LengthMismatch,
    NotDecouplable,
    OutOfRange,
    TooLarge,
)
from .model import ModelConfig, StepAmplitudes, solve_basis
from .observables import OBSERVABLES
from .oracle import (
    MATRIX_PRODUCT_MAX_N,
    brute_force_distribution,
    matrix_product_distribution,
    observable_marginal,
)
from .outcomes import Events
from .qasm import export_qasm
from .samplers import SAMPLERS, enumerate_two_qubit_distribution, sample

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOO_LARGE = 3
EXIT_NOT_DECOUPLABLE = 4
EXIT_INCONSISTENT = 5

EXACT_ALGORITHMS = {
    "brute": brute_force_distribution,
    "matrix": matrix_product_distribution,
    "two-qubit-enum": enumerate_two_qubit_distribution,
    "statevector": statevector_run,
}

JOINT_TV_MAX_N = 12


class UsageError(ItreeError):
    pass


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    config: dict | None = None
    method: str | None = None
    events: int | None = None
    seed: int | None = None
    version: str = __version__
    outputs: list[str] = field(default_factory=list)
    wall_time: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def write(self, path: Path) -> None:
        path.write_text(self.to_json())


def manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def _load_config(path: str, seed: int | None) -> ModelConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    config = ModelConfig.from_json(text)
    if seed is not None:
        config = config.with_seed(seed)
    return config


_PI_EXPR = re.compile(r"^\s*(?:([-+]?[\d.]+)\s*\*\s*)?(-?)pi(?:\s*/\s*([\d.]+))?\s*$")


def parse_angle(text: str) -> float:
    """Radians as a float literal or ``[k*]pi[/m]``."""
    m = _PI_EXPR.match(text)
    if m:
        value = math.pi * float(m.group(1) or 1.0) / float(m.group(3) or 1.0)
        return -value if m.group(2) else value
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"cannot parse angle {text!r}") from None


def parse_sweep(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError("--lambda-sweep expects start:stop:count")
    start, stop = parse_angle(parts[0]), parse_angle(parts[1])
    try:
        count = int(parts[2])
    except ValueError:
        raise UsageError("sweep count must be an integer") from None
    if count < 1:
        raise UsageError("sweep count must be positive")
    return np.linspace(start, stop, count)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _manifest(args, command: str, config: ModelConfig | None, outputs: list[Path], started: float, **extra) -> None:
    argv = list(args._argv)
    m = RunManifest(
        command=command,
        argv=argv,
        config=config.to_dict() if config is not None else None,
        seed=config.seed if config is not None else None,
        outputs=[str(p) for p in outputs],
        wall_time=round(time.perf_counter() - started, 6),
        **extra,
    )
    m.write(manifest_path(outputs[0]))


def cmd_sample(args) -> int:
    started = time.perf_counter()
    config = _load_config(args.config, args.seed)
    if args.events < 0:
        raise UsageError("--events must be non-negative")
    events = sample(args.method, config, args.events, threads=args.threads)
    out = Path(args.out)
    _write(out, events.to_csv())
    _manifest(args, "sample", config, [out], started, method=args.method, events=args.events)
    return EXIT_OK


def cmd_exact(args) -> int:
    started = time.perf_counter()
    config = _load_config(args.config, args.seed)
    dist = EXACT_ALGORITHMS[args.algorithm](config)
    out = Path(args.out)
    _write(out, dist.to_csv())
    _manifest(args, "exact", config, [out], started, method=args.algorithm)
    return EXIT_OK


def cmd_solve_basis(args) -> int:
    started = time.perf_counter()
    try:
        data = json.loads(Path(args.amplitudes).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read amplitudes: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("amplitude file must hold a JSON object")
    params = solve_basis(StepAmplitudes.from_dict(data))
    result = {"lambda": params.lam, "theta_down": params.theta_down[0], "theta_up": params.theta_up[0]}
    text = json.dumps(result, sort_keys=True) + "\n"
    if args.out:
        out = Path(args.out)
        _write(out, text)
        _manifest(args, "solve-basis", None, [out], started)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_export_qasm(args) -> int:
    started = time.perf_counter()
    config = _load_config(args.config, None)
    circuit = build_circuit(config)
    if args.decomposed:
        circuit = decompose(circuit)
    out = Path(args.out)
    _write(out, export_qasm(circuit, decomposed=args.decomposed))
    _manifest(args, "export-qasm", config, [out], started)
    return EXIT_OK


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v) -> str:
    return "" if v is None else f"{v:.17g}"


def cmd_compare(args) -> int:
    started = time.perf_counter()
    template = _load_config(args.config, args.seed)
    if args.lambdas:
        lambdas = np.array([parse_angle(t) for t in args.lambdas.split(",")])
    elif args.lambda_sweep:
        lambdas = parse_sweep(args.lambda_sweep)
    else:
        lambdas = np.array([template.lam])
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in SAMPLERS:
            raise UsageError(f"unknown method {m!r}; choose from {sorted(SAMPLERS)}")
    if args.events < 2:
        raise UsageError("--events must be at least 2 for standard errors")
    have_oracle = template.n_steps <= MATRIX_PRODUCT_MAX_N
    summary: list[list] = []

    def on_events(i: int, config: ModelConfig, method: str, events: Events) -> None:
        if not have_oracle:
            return
        exact = matrix_product_distribution(config)
        for name in OBSERVABLES:
            _, probs = observable_marginal(exact, name)
            hist = full_histogram(events, name)
            tv = tv_distance(probs, hist.counts / hist.total)
            try:
                chi2, dof = chi_square(hist, expected_counts(exact, hist))
            except ItreeError:
                chi2, dof = None, None
            summary.append([_fmt(config.lam), method, name, _fmt(tv),
                            _fmt(tv_noise_floor(probs, len(events))), _fmt(chi2),
                            "" if dof is None else dof])
        if config.n_steps <= JOINT_TV_MAX_N:
            tv = tv_distance(exact, events.empirical())
            summary.append([_fmt(config.lam), method, "joint", _fmt(tv),
                            _fmt(tv_noise_floor(exact, len(events))), "", ""])

    results = lambda_sweep(template, lambdas, args.events, methods, threads=args.threads,
                           include_exact=have_oracle, on_events=on_events)
    out = Path(args.out)
    sweep_path = out.with_name(out.name + ".sweep.csv")
    summary_path = out.with_name(out.name + ".summary.csv")
    _write(sweep_path, sweep_to_csv(results))
    outputs = [sweep_path]
    if have_oracle:
        _write(summary_path, _csv_text(
            ["lambda", "method", "observable", "tv", "tv_noise_floor", "chi2", "dof"], summary))
        outputs.append(summary_path)
    _manifest(args, "compare", template, outputs, started, method=",".join(methods), events=args.events)
    return EXIT_OK


def cmd_hist(args) -> int:
    started = time.perf_counter()
    try:
        events = Events.from_csv(Path(args.events_file).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read events: {exc}") from None
    names = list(OBSERVABLES) if args.observable == "all" else [args.observable]
    text = ""
    for i, name in enumerate(names):
        block = full_histogram(events, name).to_csv() if args.full_range else histogram(events, name).to_csv()
        text += block if i == 0 else block.split("\n", 1)[1]
    out = Path(args.out)
    _write(out, text)
    _manifest(args, "hist", None, [out], started)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="itree", description="Sample and analyse interfering binary trees.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True, seed=True):
        if config:
            p.add_argument("--config", required=True, help="model configuration JSON")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: $ITREE_THREADS or 1)")

    p = sub.add_parser("sample", help="generate events with one sampler")
    common(p)
    p.add_argument("--method", required=True, choices=sorted(SAMPLERS))
    p.add_argument("--events", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("exact", help="write an exact outcome table")
    common(p)
    p.add_argument("--algorithm", required=True, choices=sorted(EXACT_ALGORITHMS))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("solve-basis", help="find the decoupling rotation for one step")
    p.add_argument("--amplitudes", required=True, help="JSON with the eight step amplitudes")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_solve_basis)

    p = sub.add_parser("export-qasm", help="write the circuit as OpenQASM 2.0")
    common(p, seed=False)
    p.add_argument("--decomposed", action="store_true", help="emit only ry, x and cx gates")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_qasm)

    p = sub.add_parser("compare", help="expectation sweep over lambda against the exact oracle")
    common(p)
    p.add_argument("--lambda-sweep", default=None, help="start:stop:count (radians; 'pi/2' accepted)")
    p.add_argument("--lambdas", default=None, help="comma-separated list of angles")
    p.add_argument("--methods", default="two-qubit,mcmc")
    p.add_argument("--events", type=int, required=True)
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("hist", help="histogram an event CSV")
    p.add_argument("--events-file", required=True)
    p.add_argument("--observable", default="all", choices=["all", *OBSERVABLES])
    p.add_argument("--full-range", action="store_true", help="include empty bins over the full range")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_hist)
    return parser


def _fail(code: int, exc: BaseException) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args._argv = argv
    try:
        return args.func(args)
    except TooLarge as exc:
        return _fail(EXIT_TOO_LARGE, exc)
    except NotDecouplable as exc:
        return _fail(EXIT_NOT_DECOUPLABLE, exc)
    except InconsistentAmplitudes as exc:
        return _fail(EXIT_INCONSISTENT, exc)
    except (OutOfRange, LengthMismatch, KeyMismatch, UsageError, ValueError, KeyError) as exc:
        return _fail(EXIT_CONFIG, exc)


def replay_manifest(path: str | os.PathLike, out_dir: str | os.PathLike | None = None) -> int:
    """Re-run the command recorded in a manifest.

    The resolved configuration stored in the manifest is used in place of the
    original config file. With ``out_dir`` the outputs land there instead.
    """
    manifest = RunManifest.from_json(Path(path).read_text())
    argv = list(manifest.argv)
    with tempfile.TemporaryDirectory() as tmp:
        if manifest.config is not None and "--config" in argv:
            cfg = Path(tmp) / "config.json"
            cfg.write_text(json.dumps(manifest.config))
            argv[argv.index("--config") + 1] = str(cfg)
        if manifest.seed is not None and "--seed" not in argv and manifest.command != "export-qasm":
            argv += ["--seed", str(manifest.seed)]
        if out_dir is not None and "--out" in argv:
            i = argv.index("--out") + 1
            argv[i] = str(Path(out_dir) / Path(argv[i]).name)
        return main(argv)


if __name__ == "__main__":
    raise SystemExit(main())
