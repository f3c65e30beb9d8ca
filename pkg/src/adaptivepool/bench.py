"""Benchmark harness: offered-load feeder, measurement windows, run arms.

Every arm follows the same shape: start a pool, saturate its queue,
let it warm up (static pools need a second; adaptive ones need their
ramp), then count completions over a fixed window. Throughput is
completions divided by window length; latencies are enqueue-to-finish
times of tasks that completed inside the window.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .controller import ControllerConfig, Decision
from .metrics import IntervalAggregate, TaskTiming, weighted_beta
from .pool import (
    Adaptive,
    PoolConfig,
    PoolShutDownError,
    QueueDepthScaler,
    StaticFixed,
    WorkerPool,
)
from .workload import (
    GLOBAL_GATE,
    ExclusionGate,
    SpinCalibration,
    WorkloadSpec,
    make_task,
)

_FEED_POLL_S = 0.02


class _LatencySink:
    """Thread-safe completion log: (completed_at, latency_ms) pairs."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._items: list[tuple[float, float]] = []

    def __call__(self, latency_ms: float, completed_at: float) -> None:
        with self._lock:
            self._items.append((completed_at, latency_ms))

    def in_window(self, t0: float, t1: float) -> list[float]:
        with self._lock:
            return [ms for (t, ms) in self._items if t0 <= t <= t1]

    def clear(self) -> None:
        with self._lock:
            self._items.clear()


class SaturatingFeeder:
    """Keeps the pool's queue backlogged so offered load never gates TPS.

    Tops the queue up to max(64, 2 * live_workers) on a short poll so
    even a pool growing toward large N always sees pending work.
    """

    def __init__(
        self,
        pool: WorkerPool,
        spec: WorkloadSpec,
        calibration: Optional[SpinCalibration],
        gate: Optional[ExclusionGate] = None,
    ) -> None:
        self._pool = pool
        self._spec = spec
        self._calibration = calibration
        self._gate = gate
        self._rng = random.Random(spec.seed)
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._fixed_task = (
            make_task(spec, calibration, gate=gate)
            if spec.jitter_fraction == 0.0
            else None
        )

    def start(self) -> "SaturatingFeeder":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        self._thread.join()

    def _run(self) -> None:
        while not self._stop.is_set():
            status = self._pool.status()
            watermark = max(64, 2 * status.live_workers)
            deficit = watermark - status.queue_len
            try:
                for _ in range(deficit):
                    if self._fixed_task is not None:
                        self._pool.submit(self._fixed_task)
                    else:
                        self._pool.submit(
                            make_task(self._spec, self._calibration, self._rng, self._gate)
                        )
            except PoolShutDownError:
                return
            self._stop.wait(_FEED_POLL_S)


@dataclass
class RunResult:
    tps: float
    latencies_ms: list[float]
    mean_beta: float  # wall-weighted over the measurement window; nan if idle
    duration_s: float
    completed: int
    final_n: int
    veto_count: int = 0
    decisions: list[Decision] = field(default_factory=list)


def _measure_window(
    pool: WorkerPool, sink: _LatencySink, warmup_s: float, measure_s: float
) -> tuple[float, float, list[float], float, int]:
    time.sleep(warmup_s)
    pool.window_snapshot()  # discard warmup contributions
    c0 = pool.status().completed
    t0 = time.perf_counter()
    time.sleep(measure_s)
    c1 = pool.status().completed
    t1 = time.perf_counter()
    snap = pool.window_snapshot()
    duration = t1 - t0
    tps = (c1 - c0) / duration
    beta = weighted_beta(snap)
    return tps, (beta if beta is not None else float("nan")), sink.in_window(t0, t1), duration, c1 - c0


def _run_pool_arm(
    config: PoolConfig,
    spec: WorkloadSpec,
    calibration: Optional[SpinCalibration],
    warmup_s: float,
    measure_s: float,
    gate: Optional[ExclusionGate],
) -> RunResult:
    gate_obj = gate if gate is not None else GLOBAL_GATE
    gate_obj.reset()  # a previous immediate shutdown leaves the gate cancelled
    sink = _LatencySink()
    pool = WorkerPool(config, completion_hook=sink, abort_hook=gate_obj.cancel_all)
    pool.start()
    feeder = SaturatingFeeder(pool, spec, calibration, gate_obj).start()
    try:
        tps, beta, latencies, duration, completed = _measure_window(
            pool, sink, warmup_s, measure_s
        )
        status = pool.status()
        final_n = pool.current_target
        veto = status.veto_count
        decisions = pool.decision_log
    finally:
        feeder.stop()
        pool.shutdown("immediate")
    return RunResult(tps, latencies, beta, duration, completed, final_n, veto, decisions)


def run_static(
    spec: WorkloadSpec,
    n: int,
    calibration: Optional[SpinCalibration],
    warmup_s: float = 1.0,
    measure_s: float = 5.0,
    gate: Optional[ExclusionGate] = None,
) -> RunResult:
    config = PoolConfig(mode=StaticFixed(n))
    return _run_pool_arm(config, spec, calibration, warmup_s, measure_s, gate)


def run_adaptive(
    spec: WorkloadSpec,
    calibration: Optional[SpinCalibration],
    controller: ControllerConfig,
    warmup_s: float = 45.0,
    measure_s: float = 5.0,
    gate: Optional[ExclusionGate] = None,
) -> RunResult:
    """Adaptive arm; warmup_s must cover the ramp from n_min."""
    config = PoolConfig(controller=controller, mode=Adaptive())
    return _run_pool_arm(config, spec, calibration, warmup_s, measure_s, gate)


def run_scaler(
    spec: WorkloadSpec,
    calibration: Optional[SpinCalibration],
    bounds: QueueDepthScaler,
    controller: ControllerConfig,
    warmup_s: Optional[float] = None,
    measure_s: float = 5.0,
    gate: Optional[ExclusionGate] = None,
) -> RunResult:
    """Queue-depth baseline arm.

    The rule climbs one worker per tick while backlog exists, so the
    default warmup is sized from its own bounds: enough ticks to walk
    the whole range, plus slack.
    """
    if warmup_s is None:
        warmup_s = (bounds.n_max - bounds.n_min) * controller.interval * 1.05 + 2.0
    config = PoolConfig(controller=controller, mode=bounds)
    return _run_pool_arm(config, spec, calibration, warmup_s, measure_s, gate)


def sweep(
    spec: WorkloadSpec,
    ns: Sequence[int],
    runs: int,
    calibration: Optional[SpinCalibration],
    warmup_s: float = 1.0,
    measure_s: float = 5.0,
    gate: Optional[ExclusionGate] = None,
) -> dict[int, list[RunResult]]:
    """Repeated fixed-size runs over a worker-count list, fresh pool each run."""
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    results: dict[int, list[RunResult]] = {}
    for n in ns:
        results[n] = [
            run_static(spec, n, calibration, warmup_s, measure_s, gate)
            for _ in range(runs)
        ]
    return results


def instrumentation_overhead(ops: int = 1_000_000, batch: int = 1000) -> dict[str, float]:
    """Cost of the per-task timing-capture pattern, in microseconds per task.

    Times batches of no-ops bare and wrapped in the same capture the
    worker applies (two wall reads, two per-thread CPU reads, a timing
    record, one aggregate update), then reports the per-op difference
    against the median bare batch. Batch-level timing keeps the probe
    itself from dominating what it measures.
    """
    if ops < 1:
        raise ValueError(f"ops must be >= 1, got {ops}")
    batches = max(1, ops // batch)
    agg = IntervalAggregate()

    def noop() -> None:
        pass

    def bare_batch() -> float:
        t0 = time.perf_counter()
        for _ in range(batch):
            noop()
        return (time.perf_counter() - t0) / batch

    def instrumented_batch() -> float:
        t0 = time.perf_counter()
        for _ in range(batch):
            w0 = time.perf_counter()
            c0 = time.thread_time()
            noop()
            c1 = time.thread_time()
            w1 = time.perf_counter()
            timing = TaskTiming(
                cpu_time=max(c1 - c0, 0.0), wall_time=max(w1 - w0, 1e-9)
            )
            agg.record(timing)
        return (time.perf_counter() - t0) / batch

    for _ in range(3):  # warm both paths
        bare_batch()
        instrumented_batch()
    bare = sorted(bare_batch() for _ in range(batches))
    inst = sorted(instrumented_batch() for _ in range(batches))
    base = bare[len(bare) // 2]
    deltas_us = sorted((x - base) * 1e6 for x in inst)
    n = len(deltas_us)
    return {
        "ops": float(batches * batch),
        "baseline_us": base * 1e6,
        "mean_us": sum(deltas_us) / n,
        "median_us": deltas_us[n // 2],
        "p99_us": deltas_us[min(n - 1, (99 * n + 99) // 100 - 1)],
        "fraction_of_10ms": deltas_us[n // 2] / 10_000.0,
    }
