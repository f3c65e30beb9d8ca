"""Report assembly and serialization.

All machine-readable output funnels through here: CSV with a header
row and one record per unit, or JSON mirroring the same rows plus the
run manifest. Nothing here reads clocks, so a report is a pure
function of its inputs and seeded runs serialize byte-identically.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
import warnings
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence

from . import __version__
from .bench import RunResult
from .simulator import TrajectoryStep
from .stats import RunStats, compute_run_stats, pooled_p99

FORMATS = ("csv", "json")


class BTableParseError(ValueError):
    def __init__(self, path: str, line: int, problem: str) -> None:
        super().__init__(f"{path}:{line}: {problem}")
        self.line = line


@dataclass(frozen=True)
class RunManifest:
    subcommand: str
    parameters: dict[str, Any]
    host: dict[str, Any]
    version: str


def build_manifest(
    subcommand: str, parameters: Mapping[str, Any], affinity: str = "not-requested"
) -> RunManifest:
    host = {
        "cpu_count": os.cpu_count(),
        "platform": sys.platform,
        "affinity": affinity,
    }
    return RunManifest(subcommand, dict(parameters), host, __version__)


def _cell(value: Any) -> str:
    # CSV cells: full-fidelity floats, empty string for missing
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and value != value:
        return None  # NaN has no strict-JSON spelling
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "__dataclass_fields__"):
        return _jsonable(
            {k: getattr(value, k) for k in value.__dataclass_fields__}
        )
    return value


def render_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def render_json(
    manifest: RunManifest, header: Sequence[str], rows: Sequence[Sequence[Any]],
    extra: Optional[Mapping[str, Any]] = None,
) -> str:
    doc: dict[str, Any] = {
        "manifest": _jsonable(manifest),
        "rows": [dict(zip(header, map(_jsonable, row))) for row in rows],
    }
    if extra:
        doc.update(_jsonable(dict(extra)))
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_report(
    manifest: RunManifest,
    header: Sequence[str],
    rows: Sequence[Sequence[Any]],
    fmt: str,
    out: Optional[str],
    extra: Optional[Mapping[str, Any]] = None,
) -> None:
    """Emit one report.

    CSV to a file gets a JSON manifest sidecar (<out>.manifest.json),
    since a comment block inside the CSV would break plain parsers;
    JSON embeds the manifest inline.
    """
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    if fmt == "json":
        text = render_json(manifest, header, rows, extra)
    else:
        text = render_csv(header, rows)
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8") as f:
        f.write(text)
    if fmt == "csv":
        sidecar: dict[str, Any] = {"manifest": _jsonable(manifest)}
        if extra:
            sidecar.update(_jsonable(dict(extra)))
        with open(out + ".manifest.json", "w", encoding="utf-8") as f:
            f.write(json.dumps(sidecar, sort_keys=True, indent=2) + "\n")


# -- sweep ------------------------------------------------------------

SWEEP_HEADER = (
    "n", "runs", "tps_mean", "tps_stddev", "tps_ci95", "pooled_p99_ms",
    "p99_median_ms", "p99_iqr_ms", "mean_beta", "veto_count",
)


@dataclass(frozen=True)
class SweepReport:
    rows: list[tuple[Any, ...]]
    peak_n: int
    peak_tps: float
    degradation: float


def build_sweep_report(results: Mapping[int, Sequence[RunResult]]) -> SweepReport:
    """Fold raw sweep runs into per-N stats plus the cliff summary.

    degradation is the throughput fraction lost at the largest swept
    count relative to the peak, in [0, 1].
    """
    rows = []
    means: dict[int, float] = {}
    for n in sorted(results):
        runs = results[n]
        stats: RunStats = compute_run_stats(
            [r.tps for r in runs], [r.latencies_ms for r in runs]
        )
        betas = [r.mean_beta for r in runs if r.mean_beta == r.mean_beta]
        mean_beta = sum(betas) / len(betas) if betas else None
        veto = sum(r.veto_count for r in runs) or None
        rows.append((
            n, stats.n_runs, stats.mean, stats.stddev, stats.ci_half_width,
            stats.pooled_p99, stats.per_run_p99_median, stats.per_run_p99_iqr,
            mean_beta, veto,
        ))
        means[n] = stats.mean
    peak_n = max(means, key=lambda n: means[n])
    peak_tps = means[peak_n]
    largest = max(means)
    degradation = 0.0 if peak_tps <= 0 else 1.0 - means[largest] / peak_tps
    return SweepReport(rows, peak_n, peak_tps, degradation)


def sweep_beta_table(report: SweepReport) -> dict[int, float]:
    """Measured N -> mean blocking ratio pairs, simulator-ready."""
    return {
        row[0]: row[8] for row in report.rows if row[8] is not None
    }


# -- adaptive comparison ------------------------------------------------

COMPARISON_HEADER = (
    "arm", "n_config", "tps", "pooled_p99_ms", "mean_beta",
    "final_n", "veto_count", "eta",
)


def comparison_rows(
    arms: Sequence[tuple[str, Any, RunResult, Optional[float]]],
) -> list[tuple[Any, ...]]:
    """Rows of (arm label, configured N, result, eta-vs-best)."""
    rows = []
    for label, n_config, result, eta in arms:
        p99 = _p99_or_none(result.latencies_ms)
        beta = result.mean_beta if result.mean_beta == result.mean_beta else None
        rows.append((
            label, n_config, result.tps, p99, beta,
            result.final_n, result.veto_count, eta,
        ))
    return rows


def _p99_or_none(latencies_ms: Sequence[float]) -> Optional[float]:
    if not latencies_ms:
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return pooled_p99(latencies_ms)


# -- sensitivity ---------------------------------------------------------

SENSITIVITY_HEADER = ("beta_thresh", "tps", "settled_n", "mean_beta", "veto_count")


# -- trajectories --------------------------------------------------------

TRAJECTORY_HEADER = ("step", "n", "beta_ewma", "decision")


def trajectory_rows(trajectory: Sequence[TrajectoryStep]) -> list[tuple[Any, ...]]:
    return [(t.step, t.n, t.beta_ewma, t.decision.value) for t in trajectory]


# -- overhead -------------------------------------------------------------

OVERHEAD_HEADER = (
    "ops", "baseline_us", "mean_us", "median_us", "p99_us", "fraction_of_10ms",
)


def overhead_rows(report: Mapping[str, float]) -> list[tuple[Any, ...]]:
    return [tuple(report[k] for k in OVERHEAD_HEADER)]


# -- B-table input ---------------------------------------------------------

def parse_b_table(path: str) -> dict[int, float]:
    """Read an "n,beta" CSV into a table; errors carry the line number."""
    table: dict[int, float] = {}
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise BTableParseError(path, 1, "empty file")
        if [h.strip().lower() for h in header] != ["n", "beta"]:
            raise BTableParseError(path, 1, f'expected header "n,beta", got {",".join(header)!r}')
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise BTableParseError(path, line, f"expected 2 fields, got {len(row)}")
            try:
                n = int(row[0])
            except ValueError:
                raise BTableParseError(path, line, f"bad thread count {row[0]!r}") from None
            try:
                beta = float(row[1])
            except ValueError:
                raise BTableParseError(path, line, f"bad beta {row[1]!r}") from None
            if not 0.0 <= beta <= 1.0:
                raise BTableParseError(path, line, f"beta {beta} outside [0, 1]")
            if n in table:
                raise BTableParseError(path, line, f"duplicate thread count {n}")
            table[n] = beta
    if not table:
        raise BTableParseError(path, 2, "no data rows")
    return table
