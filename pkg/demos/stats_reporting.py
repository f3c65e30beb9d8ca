# How repeated runs get folded into the numbers the reports print:
# t-based confidence intervals, pooled tail latency, per-run spread.

import random

from adaptivepool.stats import (
    compute_run_stats,
    efficiency,
    mean_ci,
    pooled_p99,
    t_quantile_975,
)


def main():
    rng = random.Random(4)

    # five runs of the same configuration, throughput wobbling a bit
    tps_runs = [round(rng.gauss(97.0, 3.0), 1) for _ in range(5)]
    mean, half = mean_ci(tps_runs)
    print(f"throughputs      {tps_runs}")
    print(f"mean_ci          {mean:.1f} +/- {half:.1f}  "
          f"(t multiplier for n=5 is {t_quantile_975(4):.3f})")

    # per-run latency samples; run 3 has a slow tail
    runs = [[rng.gauss(60, 5) for _ in range(400)] for _ in range(5)]
    runs[3] = [x * 1.8 for x in runs[3]]
    pooled = [x for run in runs for x in run]
    print(f"pooled P99       {pooled_p99(pooled):.1f} ms over {len(pooled)} samples")

    stats = compute_run_stats(tps_runs, runs)
    print(f"per-run P99      median {stats.per_run_p99_median:.1f} ms, "
          f"IQR {stats.per_run_p99_iqr:.1f} ms (the slow run widens it)")

    print(f"efficiency       adaptive 19100 tps vs best static 19792 tps "
          f"-> eta = {efficiency(19100, 19792):.3f}")


if __name__ == "__main__":
    main()
