"""Task timing capture and blocking-ratio aggregation.

The blocking ratio of a task is the fraction of its execution spent
off-CPU (waiting on I/O, locks, or the scheduler):

    beta = 1 - cpu_time / wall_time

A value near 1 means the task mostly waited; a value near 0 means it
mostly computed. ``IntervalAggregate`` keeps constant-size running sums
so a monitor can read the wall-time-weighted mean blocking ratio of each
control interval without retaining per-task history.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass


class InvalidTimingError(ValueError):
    """Raised for clock deltas that cannot come from a completed task."""


class InvalidSampleError(ValueError):
    """Raised for smoothing samples outside [0, 1]."""


@dataclass(frozen=True)
class TaskTiming:
    """Clock deltas captured around one task execution, in seconds.

    ``cpu_time`` is a per-thread CPU clock delta and ``wall_time`` a
    monotonic clock delta, both spanning the execution only.
    ``queue_latency`` is the enqueue-to-start wall time and is not part
    of the execution span.
    """

    cpu_time: float
    wall_time: float
    queue_latency: float = 0.0

    def __post_init__(self) -> None:
        if not self.wall_time > 0.0:
            raise InvalidTimingError(f"wall_time must be positive, got {self.wall_time!r}")
        if self.cpu_time < 0.0:
            raise InvalidTimingError(f"cpu_time must be >= 0, got {self.cpu_time!r}")
        if self.queue_latency < 0.0:
            raise InvalidTimingError(f"queue_latency must be >= 0, got {self.queue_latency!r}")


def blocking_ratio(timing: TaskTiming) -> float:
    """Off-CPU fraction of one task's execution, clamped to [0, 1].

    Clamping absorbs timer skew: the per-thread CPU clock and the wall
    clock are unsynchronized, so cpu_time can marginally exceed
    wall_time on very short tasks.
    """
    if not timing.wall_time > 0.0:
        raise InvalidTimingError(f"wall_time must be positive, got {timing.wall_time!r}")
    raw = 1.0 - timing.cpu_time / timing.wall_time
    return min(1.0, max(0.0, raw))


@dataclass(frozen=True)
class AggregateSnapshot:
    """Frozen contents of an interval aggregate."""

    sum_wall: float = 0.0
    sum_weighted_beta: float = 0.0
    task_count: int = 0


class IntervalAggregate:
    """Running sums for the time-weighted mean blocking ratio.

    ``record`` is called by many worker threads; ``snapshot_reset`` by a
    single monitor. The pair is linearizable: every recorded task lands
    in exactly one snapshot, and the cost of ``record`` does not depend
    on how many tasks came before.
    """

    __slots__ = ("_lock", "_sum_wall", "_sum_weighted_beta", "_task_count")

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._sum_wall = 0.0
        self._sum_weighted_beta = 0.0
        self._task_count = 0

    def record(self, timing: TaskTiming) -> None:
        beta = blocking_ratio(timing)
        weighted = timing.wall_time * beta
        with self._lock:
            self._sum_wall += timing.wall_time
            self._sum_weighted_beta += weighted
            self._task_count += 1

    def snapshot_reset(self) -> AggregateSnapshot:
        """Atomically return the current sums and reset them to empty."""
        with self._lock:
            snap = AggregateSnapshot(self._sum_wall, self._sum_weighted_beta, self._task_count)
            self._sum_wall = 0.0
            self._sum_weighted_beta = 0.0
            self._task_count = 0
        return snap

    @property
    def sum_wall(self) -> float:
        return self._sum_wall

    @property
    def sum_weighted_beta(self) -> float:
        return self._sum_weighted_beta

    @property
    def task_count(self) -> int:
        return self._task_count


def weighted_beta(agg: IntervalAggregate | AggregateSnapshot) -> float | None:
    """Wall-time-weighted mean blocking ratio, or None for an empty window.

    Absence is a value here, not an error: an idle interval carries no
    information and the caller decides whether to hold its estimate.
    """
    if agg.task_count == 0:
        return None
    return agg.sum_weighted_beta / agg.sum_wall


def ewma_scalar(value: float, sample: float, alpha: float) -> float:
    """One exponential-smoothing step: alpha*sample + (1-alpha)*value."""
    return alpha * sample + (1.0 - alpha) * value


@dataclass(frozen=True)
class EwmaFilter:
    """Exponentially weighted moving average of blocking-ratio samples."""

    value: float = 0.5
    alpha: float = 0.2

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise InvalidSampleError(f"alpha must be in (0, 1], got {self.alpha!r}")
        if not 0.0 <= self.value <= 1.0:
            raise InvalidSampleError(f"value must be in [0, 1], got {self.value!r}")


def ewma_update(filt: EwmaFilter, sample: float) -> EwmaFilter:
    """Fold one sample into the filter; samples must lie in [0, 1]."""
    if not 0.0 <= sample <= 1.0:
        raise InvalidSampleError(f"sample must be in [0, 1], got {sample!r}")
    return EwmaFilter(ewma_scalar(filt.value, sample, filt.alpha), filt.alpha)


def ewma_time_constant(alpha: float, interval: float) -> float:
    """Time for the filter to absorb ~63% of a step change, in seconds.

    Derived from the geometric decay of the smoothing recursion:
    tau = -interval / ln(1 - alpha).
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidSampleError(f"alpha must be in (0, 1) for a finite time constant, got {alpha!r}")
    if not interval > 0.0:
        raise InvalidSampleError(f"interval must be positive, got {interval!r}")
    return -interval / math.log(1.0 - alpha)
