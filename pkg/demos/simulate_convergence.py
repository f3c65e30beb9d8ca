"""Closed-loop model: the controller walking a saturation curve.

The curve rises to a knee and then falls off a cliff; the controller
should climb until the step past the knee would saturate, then hold
one worker short of it. Pure computation, instant.
"""

from adaptivepool.controller import ControllerConfig, fixed_point
from adaptivepool.simulator import SUSTAINED, BlockingCharacteristic, simulate_controller


def main():
    config = ControllerConfig(n_min=4, n_max=32, alpha=1.0)
    curve = BlockingCharacteristic.piecewise(
        beta_low=0.85, beta_peak=0.9, n_critical=16, decline_slope=0.15,
        n_lo=config.n_min, n_hi=config.n_max,
    )

    print("the curve the controller cannot see directly:")
    for n in range(config.n_min, 22):
        bar = "#" * round(curve(n) * 40)
        print(f"  B({n:>2}) = {curve(n):.3f} {bar}")

    target = fixed_point(curve, config)
    print(f"\npredicted resting point: N* = {target}")

    trajectory = simulate_controller(curve, config, steps=60, load=SUSTAINED)
    print("\ntrajectory (sustained backlog, noiseless):")
    last_n = None
    for row in trajectory:
        if row.n != last_n:
            print(f"  step {row.step:>3}: N={row.n:<3} {row.decision.value}")
            last_n = row.n
    vetoes = [row.step for row in trajectory if row.decision.value == "Veto"]
    if vetoes:
        print(f"  step {vetoes[0]:>3}: first Veto; parked here for the "
              f"remaining {len(vetoes)} ticks")
    print(f"\nterminal N = {trajectory[-1].n} (matches N*: {trajectory[-1].n == target})")

    print("\nsame curve with measurement noise (std 0.05, alpha 0.5):")
    from dataclasses import replace

    noisy_cfg = replace(config, alpha=0.5)
    noisy = simulate_controller(curve, noisy_cfg, 120, SUSTAINED, 0.05, seed=3)
    tail = [row.n for row in noisy[-12:]]
    print(f"  last 12 worker counts: {tail}")
    print(f"  all within one of N*: {all(abs(n - target) <= 1 for n in tail)}")


if __name__ == "__main__":
    main()
