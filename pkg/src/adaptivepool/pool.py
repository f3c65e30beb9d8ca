"""Resizable worker pool with per-task timing capture.

Workers pull from a FIFO queue and wrap every task in two clock reads
on each side (wall and per-thread CPU), feeding the interval aggregate
the scaling monitor consumes. Growth spawns threads immediately;
shrinking is cooperative: surplus workers finish their current task and
exit, so timing data is never truncated mid-task.

Three sizing modes: a fixed count, the blocking-ratio controller, and
a queue-depth rule kept as the overscaling baseline.
"""

from __future__ import annotations

import math
import queue
import threading
import time
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Union

from .controller import (
    ControllerConfig,
    ControllerState,
    Decision,
    DecisionKind,
    controller_step,
    initial_state,
)
from .metrics import AggregateSnapshot, IntervalAggregate, TaskTiming, weighted_beta

_POLL_S = 0.05  # idle workers re-check retirement/shutdown at this cadence
_SENTINEL: Any = object()

try:
    time.thread_time()
    _HAS_THREAD_TIME = True
except (AttributeError, OSError):  # pragma: no cover - host-dependent
    _HAS_THREAD_TIME = False


class PoolShutDownError(RuntimeError):
    """Submit was called on a pool that is not accepting work."""


class QueueFullError(RuntimeError):
    """Submit would exceed the configured queue capacity."""


class TaskAborted(RuntimeError):
    """Raised inside a task to abandon it during immediate shutdown.

    Workload tasks blocked on the exclusion gate raise this when the
    pool tears down, so a large pool does not take one full task per
    parked worker to die.
    """


class TaskCancelledError(RuntimeError):
    """The task was dequeued unrun by an immediate shutdown."""


@dataclass(frozen=True)
class Adaptive:
    pass


@dataclass(frozen=True)
class StaticFixed:
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"worker count must be >= 1, got {self.n}")


@dataclass(frozen=True)
class QueueDepthScaler:
    n_min: int
    n_max: int

    def __post_init__(self) -> None:
        if self.n_min < 1 or self.n_max < self.n_min:
            raise ValueError(
                f"need 1 <= n_min <= n_max, got [{self.n_min}, {self.n_max}]"
            )


Mode = Union[Adaptive, StaticFixed, QueueDepthScaler]


@dataclass(frozen=True)
class PoolConfig:
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    mode: Mode = field(default_factory=Adaptive)
    queue_capacity: Optional[int] = None

    def __post_init__(self) -> None:
        if self.queue_capacity is not None and self.queue_capacity < 1:
            raise ValueError(
                f"queue_capacity must be >= 1 or None, got {self.queue_capacity}"
            )


@dataclass(frozen=True)
class PoolStatus:
    live_workers: int
    queue_len: int
    completed: int
    current_beta_ewma: float
    veto_count: int


def queue_depth_scaler_step(status: PoolStatus, bounds: QueueDepthScaler) -> Decision:
    """Naive sizing rule: any backlog means grow, an empty queue means shrink.

    Never consults the blocking ratio; on gated workloads it climbs to
    its ceiling because backlog persists at every size.
    """
    n = status.live_workers
    if status.queue_len > 0:
        if n < bounds.n_max:
            return Decision(DecisionKind.SCALE_UP, n + 1)
        return Decision(DecisionKind.HOLD, n)
    if n > bounds.n_min:
        return Decision(DecisionKind.SCALE_DOWN, n - 1)
    return Decision(DecisionKind.HOLD, n)


class TaskHandle:
    """Resolves to the task's result and its timing record."""

    __slots__ = (
        "_done", "_outcome", "_result", "_error", "_timing", "_enqueue_t",
    )

    def __init__(self, enqueue_t: float) -> None:
        self._done = threading.Event()
        self._outcome = "pending"
        self._result: Any = None
        self._error: Optional[BaseException] = None
        self._timing: Optional[TaskTiming] = None
        self._enqueue_t = enqueue_t

    @property
    def outcome(self) -> str:
        return self._outcome

    @property
    def task_timing(self) -> Optional[TaskTiming]:
        return self._timing

    def wait(self, timeout: Optional[float] = None) -> bool:
        return self._done.wait(timeout)

    def result(self, timeout: Optional[float] = None) -> Any:
        if not self._done.wait(timeout):
            raise TimeoutError("task not finished")
        if self._outcome == "ok":
            return self._result
        if self._outcome == "cancelled":
            raise TaskCancelledError("task cancelled before execution")
        if self._outcome == "aborted":
            raise TaskAborted("task abandoned by immediate shutdown")
        assert self._error is not None
        raise self._error

    # mutation happens on exactly one thread per transition
    def _finish(self, outcome: str, result: Any = None,
                error: Optional[BaseException] = None,
                timing: Optional[TaskTiming] = None) -> None:
        self._result = result
        self._error = error
        self._timing = timing
        self._outcome = outcome
        self._done.set()


# completion hooks receive (latency_ms, completed_at perf_counter seconds)
CompletionHook = Callable[[float, float], None]


class WorkerPool:
    def __init__(
        self,
        config: Optional[PoolConfig] = None,
        completion_hook: Optional[CompletionHook] = None,
        abort_hook: Optional[Callable[[], None]] = None,
    ) -> None:
        self._config = config or PoolConfig()
        self._completion_hook = completion_hook
        self._abort_hook = abort_hook
        self._q: queue.Queue = queue.Queue()
        self._lock = threading.Lock()
        self._live = 0
        self._retiring = 0
        self._target = self._initial_target()
        self._workers: list[threading.Thread] = []
        self._running = False
        self._accepting = False
        self._completed = 0
        self._cancel = threading.Event()
        self._interval_agg = IntervalAggregate()  # controller channel
        self._window_agg = IntervalAggregate()  # measurement channel
        self._ctrl_state: Optional[ControllerState] = None
        self._decision_log: list[Decision] = []
        self._monitor: Optional[threading.Thread] = None
        self._monitor_stop = threading.Event()

    def _initial_target(self) -> int:
        mode = self._config.mode
        if isinstance(mode, StaticFixed):
            return mode.n
        if isinstance(mode, QueueDepthScaler):
            return mode.n_min
        return self._config.controller.n_min

    # -- lifecycle ---------------------------------------------------

    def start(self) -> "WorkerPool":
        with self._lock:
            if self._running:
                raise RuntimeError("pool already started")
            if isinstance(self._config.mode, Adaptive) and not _HAS_THREAD_TIME:
                raise RuntimeError(
                    "adaptive mode needs a per-thread CPU clock "
                    "(time.thread_time unavailable on this host)"
                )
            self._running = True
            self._accepting = True
            self._spawn_locked(self._target)
        if isinstance(self._config.mode, Adaptive):
            self._ctrl_state = initial_state(self._config.controller)
            self._start_monitor(self._adaptive_tick)
        elif isinstance(self._config.mode, QueueDepthScaler):
            self._start_monitor(self._scaler_tick)
        return self

    def __enter__(self) -> "WorkerPool":
        return self.start()

    def __exit__(self, *exc: Any) -> None:
        self.shutdown("drain")

    def shutdown(self, mode: str = "drain") -> None:
        if mode not in ("drain", "immediate"):
            raise ValueError(f"shutdown mode must be drain or immediate, got {mode!r}")
        with self._lock:
            if not self._running:
                return
            self._accepting = False
        if self._monitor is not None:
            self._monitor_stop.set()
            self._monitor.join()
            self._monitor = None
        if mode == "immediate":
            self._cancel.set()
            if self._abort_hook is not None:
                self._abort_hook()
            while True:
                try:
                    item = self._q.get_nowait()
                except queue.Empty:
                    break
                if item is not _SENTINEL:
                    item[0]._finish("cancelled")
        with self._lock:
            live = self._live
            workers = list(self._workers)
        for _ in range(live):
            self._q.put(_SENTINEL)
        for t in workers:
            t.join()
        with self._lock:
            self._running = False
            self._workers.clear()

    # -- work submission ---------------------------------------------

    def submit(self, fn: Callable[[], Any]) -> TaskHandle:
        with self._lock:
            if not (self._running and self._accepting):
                raise PoolShutDownError("pool is not accepting work")
            cap = self._config.queue_capacity
            if cap is not None and self._q.qsize() >= cap:
                raise QueueFullError(f"queue at capacity {cap}")
        handle = TaskHandle(enqueue_t=time.perf_counter())
        self._q.put((handle, fn))
        return handle

    # -- sizing --------------------------------------------------------

    def resize(self, target: int) -> int:
        """Request a worker-count change; returns the effective target.

        Out-of-range targets are clamped with a warning rather than
        rejected, matching the controller's bounded steps.
        """
        lo, hi = 1, self._bound_max()
        effective = min(hi, max(lo, target))
        if effective != target:
            warnings.warn(
                f"resize target {target} clamped to {effective}", stacklevel=2
            )
        self._apply_target(effective)
        return effective

    def _bound_max(self) -> int:
        mode = self._config.mode
        if isinstance(mode, QueueDepthScaler):
            return mode.n_max
        if isinstance(mode, Adaptive):
            return self._config.controller.n_max
        return 4096  # static pools: practical thread ceiling, not a policy bound

    def _apply_target(self, target: int) -> None:
        with self._lock:
            self._target = target
            deficit = target - (self._live - self._retiring)
            if deficit > 0 and self._running:
                self._spawn_locked(deficit)
        # surplus workers notice live - retiring > target and exit on their own

    def _spawn_locked(self, count: int) -> None:
        for _ in range(count):
            t = threading.Thread(target=self._worker_main, daemon=True)
            self._live += 1
            self._workers.append(t)
            t.start()

    # -- observation ---------------------------------------------------

    def status(self) -> PoolStatus:
        state = self._ctrl_state
        if state is not None:
            ewma, vetoes = state.beta_ewma, state.veto_count
        else:
            ewma, vetoes = math.nan, 0
        with self._lock:
            live = self._live
            completed = self._completed
        return PoolStatus(live, self._q.qsize(), completed, ewma, vetoes)

    @property
    def current_target(self) -> int:
        return self._target

    @property
    def decision_log(self) -> list[Decision]:
        return list(self._decision_log)

    @property
    def controller_state(self) -> Optional[ControllerState]:
        return self._ctrl_state

    def window_snapshot(self) -> AggregateSnapshot:
        """Atomically read and reset the measurement-window aggregate."""
        return self._window_agg.snapshot_reset()

    # -- monitor -------------------------------------------------------

    def _start_monitor(self, tick: Callable[[], None]) -> None:
        def monitor_main() -> None:
            interval = self._config.controller.interval
            next_t = time.perf_counter() + interval
            while not self._monitor_stop.wait(max(0.0, next_t - time.perf_counter())):
                next_t += interval
                tick()

        self._monitor_stop.clear()
        self._monitor = threading.Thread(target=monitor_main, daemon=True)
        self._monitor.start()

    def _adaptive_tick(self) -> None:
        q_len = self._q.qsize()
        sample = weighted_beta(self._interval_agg.snapshot_reset())
        assert self._ctrl_state is not None
        state, decision = controller_step(
            self._ctrl_state, q_len, sample, self._config.controller
        )
        self._ctrl_state = state
        self._decision_log.append(decision)
        if decision.kind in (DecisionKind.SCALE_UP, DecisionKind.SCALE_DOWN):
            self._apply_target(decision.n_after)

    def _scaler_tick(self) -> None:
        bounds = self._config.mode
        assert isinstance(bounds, QueueDepthScaler)
        decision = queue_depth_scaler_step(self.status(), bounds)
        self._decision_log.append(decision)
        if decision.kind in (DecisionKind.SCALE_UP, DecisionKind.SCALE_DOWN):
            self._apply_target(decision.n_after)

    # -- worker --------------------------------------------------------

    def _worker_main(self) -> None:
        claimed = False
        try:
            while True:
                if self._cancel.is_set():
                    break
                with self._lock:
                    if self._live - self._retiring > self._target:
                        self._retiring += 1
                        claimed = True
                if claimed:
                    break
                try:
                    item = self._q.get(timeout=_POLL_S)
                except queue.Empty:
                    continue
                if item is _SENTINEL:
                    break
                handle, fn = item
                if self._cancel.is_set():
                    handle._finish("cancelled")
                    break
                self._run_task(handle, fn)
        finally:
            with self._lock:
                self._live -= 1
                if claimed:
                    self._retiring -= 1

    def _run_task(self, handle: TaskHandle, fn: Callable[[], Any]) -> None:
        handle._outcome = "running"
        start_wall = time.perf_counter()
        start_cpu = time.thread_time() if _HAS_THREAD_TIME else 0.0
        try:
            result = fn()
        except TaskAborted:
            handle._finish("aborted")
            return
        except Exception as exc:
            outcome, result, error = "failed", None, exc
        else:
            outcome, error = "ok", None
        end_cpu = time.thread_time() if _HAS_THREAD_TIME else 0.0
        end_wall = time.perf_counter()

        timing = TaskTiming(
            cpu_time=max(end_cpu - start_cpu, 0.0),
            wall_time=max(end_wall - start_wall, 1e-9),
            queue_latency=max(start_wall - handle._enqueue_t, 0.0),
        )
        self._interval_agg.record(timing)
        self._window_agg.record(timing)
        with self._lock:
            self._completed += 1
        handle._finish(outcome, result=result, error=error, timing=timing)
        if outcome == "ok" and self._completion_hook is not None:
            latency_ms = (end_wall - handle._enqueue_t) * 1e3
            self._completion_hook(latency_ms, end_wall)
