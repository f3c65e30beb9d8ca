"""Small-sample statistics for benchmark reports.

Throughput comparisons use few runs (5 to 10), so confidence intervals
come from the t distribution rather than the normal. Latency tails use
the nearest-rank percentile, which has an exact sort-based definition
and therefore an exact test oracle.
"""

from __future__ import annotations

import math
import statistics
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence


class InsufficientSamplesError(ValueError):
    pass


# two-sided 95% quantiles t_{0.975,df}; beyond df=30 the normal 1.96 is close enough
_T_975 = {
    1: 12.706, 2: 4.303, 3: 3.182, 4: 2.776, 5: 2.571,
    6: 2.447, 7: 2.365, 8: 2.306, 9: 2.262, 10: 2.228,
    11: 2.201, 12: 2.179, 13: 2.160, 14: 2.145, 15: 2.131,
    16: 2.120, 17: 2.110, 18: 2.101, 19: 2.093, 20: 2.086,
    21: 2.080, 22: 2.074, 23: 2.069, 24: 2.064, 25: 2.060,
    26: 2.056, 27: 2.052, 28: 2.048, 29: 2.045, 30: 2.042,
}

_Z_975 = 1.96


def t_quantile_975(df: int) -> float:
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    return _T_975.get(df, _Z_975)


def mean_ci(samples: Sequence[float]) -> tuple[float, float]:
    """Sample mean and 95% half-width, t-based: t_{0.975,n-1} * s / sqrt(n)."""
    n = len(samples)
    if n < 2:
        raise InsufficientSamplesError(f"need at least 2 samples for a CI, got {n}")
    mean = statistics.fmean(samples)
    s = statistics.stdev(samples)
    return mean, t_quantile_975(n - 1) * s / math.sqrt(n)


def pooled_p99(samples: Iterable[float]) -> float:
    """Nearest-rank 99th percentile of all samples pooled across runs.

    Returns the ceil(0.99 * n)-th smallest value. Integer arithmetic
    for the rank avoids float-rounding surprises at multiples of 100.
    """
    pool = sorted(samples)
    n = len(pool)
    if n == 0:
        raise InsufficientSamplesError("pooled_p99 of empty input")
    if n < 100:
        warnings.warn(
            f"P99 over only {n} samples is coarse; want >= 100", stacklevel=2
        )
    k = (99 * n + 99) // 100  # ceil(0.99 * n) exactly
    return pool[k - 1]


def _quartiles(sorted_values: Sequence[float]) -> tuple[float, float]:
    # median-of-halves; the overall median is excluded when n is odd
    n = len(sorted_values)
    half = n // 2
    lower = sorted_values[:half]
    upper = sorted_values[half + 1 :] if n % 2 else sorted_values[half:]
    return statistics.median(lower), statistics.median(upper)


def per_run_p99_spread(runs: Sequence[Sequence[float]]) -> tuple[float, float]:
    """Median and IQR of the per-run P99s.

    Runs with no samples are dropped with a warning; at least two
    populated runs must remain.
    """
    p99s = []
    for i, run in enumerate(runs):
        if len(run) == 0:
            warnings.warn(f"run {i} has no latency samples; excluded", stacklevel=2)
            continue
        p99s.append(pooled_p99(run))
    if len(p99s) < 2:
        raise InsufficientSamplesError(
            f"need at least 2 populated runs, got {len(p99s)}"
        )
    p99s.sort()
    q1, q3 = _quartiles(p99s)
    return statistics.median(p99s), q3 - q1


def efficiency(adaptive_tps: float, optimal_tps: float) -> float:
    """Throughput of the adaptive pool relative to the best static size."""
    if optimal_tps <= 0.0:
        raise ValueError(f"optimal_tps must be positive, got {optimal_tps}")
    return adaptive_tps / optimal_tps


@dataclass(frozen=True)
class RunStats:
    """Per-configuration summary over repeated benchmark runs."""

    n_runs: int
    mean: float
    stddev: float
    ci_half_width: float
    pooled_p99: float
    per_run_p99_median: float
    per_run_p99_iqr: float


def compute_run_stats(
    per_run_tps: Sequence[float],
    per_run_latencies_ms: Sequence[Sequence[float]],
) -> RunStats:
    """Fold per-run throughput and latency samples into a RunStats row.

    With a single run the spread fields are NaN: one sample supports a
    point estimate, not an interval.
    """
    n = len(per_run_tps)
    if n == 0:
        raise InsufficientSamplesError("no runs")
    if n >= 2:
        mean, half = mean_ci(per_run_tps)
        sd = statistics.stdev(per_run_tps)
    else:
        mean, half, sd = per_run_tps[0], float("nan"), float("nan")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # small demo runs trip the n>=100 advisory
        pooled = pooled_p99([x for run in per_run_latencies_ms for x in run])
        if n >= 2:
            p99_med, p99_iqr = per_run_p99_spread(per_run_latencies_ms)
        else:
            p99_med, p99_iqr = pooled, float("nan")
    return RunStats(n, mean, sd, half, pooled, p99_med, p99_iqr)
