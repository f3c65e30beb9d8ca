"""Blocking ratio from per-task clocks, and how a window folds it.

Runs in well under a second; everything here is arithmetic.
"""

from adaptivepool.metrics import (
    EwmaFilter,
    IntervalAggregate,
    TaskTiming,
    blocking_ratio,
    ewma_time_constant,
    ewma_update,
    weighted_beta,
)


def main():
    print("== single tasks ==")
    for label, cpu_ms, wall_ms in [
        ("mixed 10ms CPU + 50ms sleep", 10, 60),
        ("pure CPU", 50, 50),
        ("mostly waiting", 1, 100),
    ]:
        t = TaskTiming(cpu_time=cpu_ms / 1e3, wall_time=wall_ms / 1e3)
        print(f"  {label:30s} beta = {blocking_ratio(t):.3f}")

    print()
    print("== a measurement window ==")
    agg = IntervalAggregate()
    agg.record(TaskTiming(cpu_time=0.010, wall_time=0.060))
    agg.record(TaskTiming(cpu_time=0.050, wall_time=0.050))
    print(f"  two tasks, wall-weighted beta = {weighted_beta(agg):.4f}")
    print("  (the long waiter dominates; a plain mean would say 0.417)")

    snap = agg.snapshot_reset()
    print(f"  drained {snap.task_count} tasks; window now empty ->", weighted_beta(agg))

    print()
    print("== smoothing ==")
    filt = EwmaFilter()  # starts at 0.5, alpha 0.2
    for sample in [0.9, 0.9, 0.9, 0.9, 0.9]:
        filt = ewma_update(filt, sample)
        print(f"  sample 0.9 -> ewma {filt.value:.4f}")
    tau = ewma_time_constant(0.2, 0.5)
    print(f"  at alpha=0.2 with 0.5s ticks the filter's time constant is {tau:.4f}s")


if __name__ == "__main__":
    main()
