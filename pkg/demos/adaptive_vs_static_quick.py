"""Adaptive pool against two static choices, abbreviated.

Three arms on the gated mixed workload: a deliberately oversized static
pool, a sensibly sized one, and the adaptive pool starting small. Short
windows, so expect 10-20% wobble; the ordering is what matters.

Runs a couple of minutes. The full comparison is:
  adaptivepool adaptive --sweep-json <sweep.json>
"""

from adaptivepool.bench import run_adaptive, run_static
from adaptivepool.controller import ControllerConfig
from adaptivepool.stats import efficiency
from adaptivepool.workload import calibrate_spin, profile_by_name


def main():
    spec = profile_by_name("mixed-default")
    calibration = calibrate_spin()

    print("static N=128 (oversized)...")
    naive = run_static(spec, 128, calibration, warmup_s=1.0, measure_s=4.0)
    print(f"  {naive.tps:.1f} tps")

    print("static N=8 (hand-tuned)...")
    tuned = run_static(spec, 8, calibration, warmup_s=1.0, measure_s=4.0)
    print(f"  {tuned.tps:.1f} tps")

    # small bounds and a fast tick so the ramp fits in the demo window
    config = ControllerConfig(n_min=2, n_max=32, interval=0.25)
    print("adaptive, starting at N=2...")
    adaptive = run_adaptive(spec, calibration, config, warmup_s=12.0, measure_s=4.0)
    print(f"  {adaptive.tps:.1f} tps, settled N={adaptive.final_n}, "
          f"vetoes={adaptive.veto_count}")

    eta = efficiency(adaptive.tps, tuned.tps)
    print(f"\nadaptive reaches {eta:.0%} of the hand-tuned pool's throughput")
    print(f"oversized static leaves {1 - efficiency(naive.tps, tuned.tps):.0%} on the table")


if __name__ == "__main__":
    main()
