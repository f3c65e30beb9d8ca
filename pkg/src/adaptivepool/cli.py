"""Operator entry point.

Subcommands map onto the harness arms: `sweep` measures static pools
across a worker-count list, `adaptive` compares the controller against
the naive, best-static, and queue-depth strategies, `sensitivity`
scans the blocking-ratio threshold, `simulate` runs the discrete-time
controller model, and `overhead` prices the per-task timing capture.

Exit codes: 0 success, 1 runtime failure, 2 usage or malformed input,
3 spin-calibration failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from typing import Any, Optional

from . import __version__, bench
from .controller import ControllerConfig, fixed_point
from .pool import QueueDepthScaler
from .reports import (
    BTableParseError,
    COMPARISON_HEADER,
    OVERHEAD_HEADER,
    SENSITIVITY_HEADER,
    SWEEP_HEADER,
    TRAJECTORY_HEADER,
    build_manifest,
    build_sweep_report,
    comparison_rows,
    overhead_rows,
    parse_b_table,
    sweep_beta_table,
    trajectory_rows,
    write_report,
)
from .simulator import SUSTAINED, BlockingCharacteristic, simulate_controller
from .stats import efficiency
from .workload import (
    CalibrationError,
    GateMode,
    SpinCalibration,
    WorkloadSpec,
    calibrate_spin,
    profile_by_name,
    set_core_affinity,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_CALIBRATION = 3

DEFAULT_SWEEP_THREADS = "1,2,4,8,16,32,64,128,256,512,1024"


def _ints(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise ValueError(f"thread counts must be positive, got {text!r}")
    return values


def _floats(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise ValueError("empty list")
    return values


def _add_workload_flags(p: argparse.ArgumentParser, default_profile: str) -> None:
    p.add_argument("--profile", default=default_profile,
                   help=f"workload preset (default {default_profile})")
    p.add_argument("--t-cpu", type=float, default=None, metavar="MS",
                   help="CPU phase target, overrides the profile")
    p.add_argument("--t-io", type=float, default=None, metavar="MS",
                   help="I/O phase target, overrides the profile")
    p.add_argument("--gate", choices=("on", "off"), default=None,
                   help="exclusion gate around CPU phases, overrides the profile")
    p.add_argument("--jitter", type=float, default=None, metavar="FRAC",
                   help="uniform phase-duration jitter in [0, 0.5]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cores", type=int, default=None, metavar="K",
                   help="pin the process to K cores before running")


def _add_controller_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-min", type=int, default=4)
    p.add_argument("--n-max", type=int, default=128)
    p.add_argument("--beta-thresh", type=float, default=0.3)
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--hysteresis", type=int, default=3)
    p.add_argument("--interval", type=float, default=0.5, metavar="S")


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, metavar="PATH",
                   help="write the report here instead of stdout")


def _resolve_spec(args: argparse.Namespace) -> WorkloadSpec:
    base = profile_by_name(args.profile)
    gate = base.gate_mode
    if args.gate is not None:
        gate = GateMode.EMULATED_GIL if args.gate == "on" else GateMode.NONE
    return WorkloadSpec(
        t_cpu_ms=base.t_cpu_ms if args.t_cpu is None else args.t_cpu,
        t_io_ms=base.t_io_ms if args.t_io is None else args.t_io,
        gate_mode=gate,
        jitter_fraction=base.jitter_fraction if args.jitter is None else args.jitter,
        seed=args.seed,
        profile_name=args.profile,
    )


def _controller_from(args: argparse.Namespace) -> ControllerConfig:
    return ControllerConfig(
        n_min=args.n_min,
        n_max=args.n_max,
        beta_thresh=args.beta_thresh,
        alpha=args.alpha,
        hysteresis_h=args.hysteresis,
        interval=args.interval,
    )


def _apply_affinity(args: argparse.Namespace) -> str:
    if getattr(args, "cores", None) is None:
        return "not-requested"
    result = set_core_affinity(args.cores)
    if result.outcome == "applied":
        return f"applied:{result.cores_applied}"
    return "unsupported"


def _calibrate(spec: WorkloadSpec) -> Optional[SpinCalibration]:
    if spec.t_cpu_ms == 0.0:
        return None
    return calibrate_spin()


def _params(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _say(args: argparse.Namespace, text: str) -> None:
    # human summary; kept off stdout whenever stdout carries the report
    stream = sys.stdout if args.out else sys.stderr
    print(text, file=stream)


def cmd_sweep(args: argparse.Namespace) -> int:
    affinity = _apply_affinity(args)
    spec = _resolve_spec(args)
    ns = _ints(args.threads)
    calibration = _calibrate(spec)
    results = bench.sweep(spec, ns, args.runs, calibration, args.warmup, args.duration)
    report = build_sweep_report(results)
    manifest = build_manifest("sweep", _params(args), affinity)
    extra = {
        "peak_n": report.peak_n,
        "peak_tps": report.peak_tps,
        "degradation": report.degradation,
        "beta_table": sweep_beta_table(report),
    }
    write_report(manifest, SWEEP_HEADER, report.rows, args.format, args.out, extra)
    _say(args, f"peak tps {report.peak_tps:.1f} at N={report.peak_n}; "
               f"degradation at N={max(ns)}: {report.degradation:.1%}")
    return EXIT_OK


def _best_static_n(args: argparse.Namespace, spec: WorkloadSpec,
                   calibration: Optional[SpinCalibration]) -> int:
    if args.sweep_json:
        import json

        with open(args.sweep_json, "r", encoding="utf-8") as f:
            doc = json.load(f)
        try:
            rows = doc["rows"]
            best = max(rows, key=lambda r: r["tps_mean"])
            return int(best["n"])
        except (KeyError, TypeError, ValueError):
            raise ValueError(
                f"{args.sweep_json} is not a sweep JSON report (need rows with n, tps_mean)"
            ) from None
    results = bench.sweep(
        spec, _ints(args.threads), 3, calibration, 1.0, args.duration
    )
    return build_sweep_report(results).peak_n


def cmd_adaptive(args: argparse.Namespace) -> int:
    affinity = _apply_affinity(args)
    spec = _resolve_spec(args)
    controller = _controller_from(args)
    calibration = _calibrate(spec)
    best_n = _best_static_n(args, spec, calibration)

    naive = bench.run_static(spec, args.naive_n, calibration, 1.0, args.duration)
    best = bench.run_static(spec, best_n, calibration, 1.0, args.duration)
    adaptive = bench.run_adaptive(
        spec, calibration, controller, args.warmup, args.duration
    )
    scaler_bounds = QueueDepthScaler(controller.n_min, args.scaler_max)
    scaler = bench.run_scaler(
        spec, calibration, scaler_bounds, controller, None, args.duration
    )

    eta = efficiency(adaptive.tps, best.tps)
    rows = comparison_rows([
        ("static-naive", args.naive_n, naive, None),
        ("static-best", best_n, best, None),
        ("adaptive", None, adaptive, eta),
        ("queue-depth-scaler", args.scaler_max, scaler, None),
    ])
    manifest = build_manifest("adaptive", _params(args), affinity)
    extra = {
        "best_static_n": best_n,
        "eta": eta,
        "decision_log": {
            "adaptive": [
                {"kind": d.kind.value, "n_after": d.n_after} for d in adaptive.decisions
            ],
            "queue-depth-scaler": [
                {"kind": d.kind.value, "n_after": d.n_after} for d in scaler.decisions
            ],
        },
    }
    write_report(manifest, COMPARISON_HEADER, rows, args.format, args.out, extra)
    _say(args, f"eta={eta:.3f} (adaptive {adaptive.tps:.1f} tps at N={adaptive.final_n}, "
               f"best static {best.tps:.1f} tps at N={best_n}); "
               f"adaptive vetoes={adaptive.veto_count}; "
               f"scaler settled N={scaler.final_n} at {scaler.tps:.1f} tps")
    return EXIT_OK


def cmd_sensitivity(args: argparse.Namespace) -> int:
    affinity = _apply_affinity(args)
    spec = _resolve_spec(args)
    base = _controller_from(args)
    calibration = _calibrate(spec)
    grid = _floats(args.grid)
    rows = []
    tps_seen = []
    for thresh in grid:
        controller = replace(base, beta_thresh=thresh)
        result = bench.run_adaptive(
            spec, calibration, controller, args.warmup, args.duration
        )
        beta = result.mean_beta if result.mean_beta == result.mean_beta else None
        rows.append((thresh, result.tps, result.final_n, beta, result.veto_count))
        tps_seen.append(result.tps)
    spread = (max(tps_seen) - min(tps_seen)) / max(tps_seen) if max(tps_seen) > 0 else 0.0
    manifest = build_manifest("sensitivity", _params(args), affinity)
    extra = {"best_tps": max(tps_seen), "tps_spread": spread}
    write_report(manifest, SENSITIVITY_HEADER, rows, args.format, args.out, extra)
    _say(args, f"best tps {max(tps_seen):.1f}; spread across grid {spread:.1%}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    controller = _controller_from(args)
    if args.b_table:
        b = BlockingCharacteristic.from_table(parse_b_table(args.b_table))
    else:
        b = BlockingCharacteristic.piecewise(
            args.beta_low, args.beta_peak, args.n_critical, args.decline_slope,
            controller.n_min, controller.n_max,
        )
    trajectory = simulate_controller(
        b, controller, args.steps, SUSTAINED, args.noise, args.seed
    )
    prediction = fixed_point(b, controller)
    terminal = trajectory[-1].n if trajectory else controller.n_min
    manifest = build_manifest("simulate", _params(args))
    extra = {
        "terminal_n": terminal,
        "fixed_point": prediction,
        "agreement": terminal == prediction,
    }
    write_report(
        manifest, TRAJECTORY_HEADER, trajectory_rows(trajectory),
        args.format, args.out, extra,
    )
    _say(args, f"terminal_n={terminal} fixed_point={prediction} "
               f"agreement={'true' if terminal == prediction else 'false'}")
    return EXIT_OK


def cmd_overhead(args: argparse.Namespace) -> int:
    if args.ops < 1:
        print("error: --ops must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    report = bench.instrumentation_overhead(args.ops, args.batch)
    manifest = build_manifest("overhead", _params(args))
    write_report(
        manifest, OVERHEAD_HEADER, overhead_rows(report), args.format, args.out
    )
    _say(args, f"median capture overhead {report['median_us']:.3f} us/task "
               f"({report['fraction_of_10ms']:.4%} of a 10 ms CPU phase)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptivepool",
        description="Blocking-ratio driven worker pool: benchmarks and simulation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("sweep", help="static pools across a worker-count list")
    _add_workload_flags(p, "mixed-default")
    _add_output_flags(p)
    p.add_argument("--threads", default=DEFAULT_SWEEP_THREADS,
                   help="comma-separated worker counts")
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--warmup", type=float, default=1.0, metavar="S")
    p.add_argument("--duration", type=float, default=5.0, metavar="S",
                   help="measurement window per run")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("adaptive", help="controller vs static and queue-depth arms")
    _add_workload_flags(p, "mixed-default")
    _add_controller_flags(p)
    _add_output_flags(p)
    p.add_argument("--threads", default="4,8,16,32,64",
                   help="sweep list when --sweep-json is absent")
    p.add_argument("--sweep-json", default=None, metavar="PATH",
                   help="reuse a sweep JSON report to pick the best static N")
    p.add_argument("--naive-n", type=int, default=256,
                   help="worker count of the naive static arm")
    p.add_argument("--scaler-max", type=int, default=256,
                   help="upper bound of the queue-depth scaler arm")
    p.add_argument("--warmup", type=float, default=45.0, metavar="S",
                   help="adaptive-arm ramp time before measuring")
    p.add_argument("--duration", type=float, default=5.0, metavar="S",
                   help="measurement window per arm")
    p.set_defaults(func=cmd_adaptive)

    p = sub.add_parser("sensitivity", help="adaptive runs across a threshold grid")
    _add_workload_flags(p, "io-heavy")
    _add_controller_flags(p)
    _add_output_flags(p)
    p.add_argument("--grid", default="0.2,0.3,0.4,0.5,0.6,0.7",
                   help="comma-separated blocking-ratio thresholds")
    p.add_argument("--warmup", type=float, default=20.0, metavar="S")
    p.add_argument("--duration", type=float, default=5.0, metavar="S")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("simulate", help="discrete-time controller model")
    _add_controller_flags(p)
    # a noiseless model needs no smoothing; pass --alpha 0.2 to study lag
    p.set_defaults(alpha=1.0)
    _add_output_flags(p)
    p.add_argument("--b-table", default=None, metavar="PATH",
                   help='CSV with header "n,beta", one row per worker count')
    p.add_argument("--beta-low", type=float, default=0.85)
    p.add_argument("--beta-peak", type=float, default=0.9)
    p.add_argument("--n-critical", type=int, default=16)
    p.add_argument("--decline-slope", type=float, default=0.15,
                   help="blocking-ratio drop per worker past the knee")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--noise", type=float, default=0.0, metavar="STD")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("overhead", help="price the per-task timing capture")
    _add_output_flags(p)
    p.add_argument("--ops", type=int, default=1_000_000)
    p.add_argument("--batch", type=int, default=1000)
    p.set_defaults(func=cmd_overhead)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except BTableParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CalibrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
