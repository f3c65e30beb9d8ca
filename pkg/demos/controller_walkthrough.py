# Drive the scaling rule by hand, one tick at a time, and watch each
# branch fire: hysteresis-gated scale-up, the veto, and idle decay.

from adaptivepool.controller import ControllerConfig, controller_step, initial_state


def tick(state, config, queue_len, beta, note=""):
    state, decision = controller_step(state, queue_len, beta, config)
    print(
        f"  Q={queue_len:>3} beta={beta if beta is not None else '  --'}"
        f" -> {decision.kind.value:<9} N={decision.n_after:<3}"
        f" c_up={state.c_up} ewma={state.beta_ewma:.3f} {note}"
    )
    return state


def main():
    config = ControllerConfig(n_min=4, n_max=8, alpha=1.0)
    state = initial_state(config)
    print(f"start at N={state.n_current}, threshold {config.beta_thresh}, "
          f"H={config.hysteresis_h} consecutive signals required")

    print()
    print("backlogged and I/O-bound: three signals, then one step up")
    state = tick(state, config, 40, 0.8)
    state = tick(state, config, 40, 0.8)
    state = tick(state, config, 40, 0.8, "<- third signal acts")

    print()
    print("backlogged but CPU-saturated: scale-up refused")
    state = tick(state, config, 40, 0.1, "<- queue alone is not evidence")
    print(f"  vetoes so far: {state.veto_count}")

    print()
    print("queue drains: decay one worker per tick, floor at n_min")
    for _ in range(3):
        state = tick(state, config, 0, None)

    print()
    print("a missing sample freezes the filter but not the decision")
    state = tick(state, config, 12, None)


if __name__ == "__main__":
    main()
