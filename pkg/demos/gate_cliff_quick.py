"""Minute-long look at the saturation cliff with real threads.

Sweeps a gated mixed workload (10 ms CPU under the gate, 50 ms sleep)
across a few pool sizes with short windows. Numbers are rougher than
the benchmark CLI's defaults but the shape shows up: throughput climbs,
flattens, then sags once workers mostly fight over the gate.

Takes about a minute. For publishable numbers use:
  adaptivepool sweep --cores 1 --runs 5
"""

from adaptivepool.bench import run_static
from adaptivepool.workload import calibrate_spin, profile_by_name


def main():
    spec = profile_by_name("mixed-default")
    print("calibrating the spin loop...")
    calibration = calibrate_spin()
    print(f"  {calibration.iterations_per_ms:,.0f} iterations/ms "
          f"(spread {calibration.calibration_error:.1%})")

    print(f"\n{'N':>5} {'tps':>8} {'mean beta':>10}")
    results = {}
    for n in (1, 4, 16, 128):
        result = run_static(spec, n, calibration, warmup_s=0.6, measure_s=3.0)
        results[n] = result.tps
        print(f"{n:>5} {result.tps:>8.1f} {result.mean_beta:>10.3f}")

    peak_n = max(results, key=results.get)
    largest = max(results)
    drop = 1.0 - results[largest] / results[peak_n]
    print(f"\npeak at N={peak_n}; N={largest} gives up {drop:.0%} of it")


if __name__ == "__main__":
    main()
