"""Synthetic mixed CPU/I-O tasks with an emulated interpreter lock.

A task is a calibrated integer spin (the CPU phase) followed by a
timed sleep (the I/O phase). With the gate enabled the spin runs under
process-wide mutual exclusion, reproducing the serialization that
makes oversized pools collapse: parked waiters re-check the gate on a
short timed slice, so each surplus worker adds wakeup churn the way
contended interpreter-lock waiters do.
"""

from __future__ import annotations

import os
import random
import threading
import time
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from .pool import TaskAborted


class CalibrationError(RuntimeError):
    """Spin timing too unstable to trust (spread above 10% per batch set)."""


class GateMode(Enum):
    EMULATED_GIL = "gil"
    NONE = "none"


@dataclass(frozen=True)
class WorkloadSpec:
    t_cpu_ms: float = 10.0
    t_io_ms: float = 50.0
    gate_mode: GateMode = GateMode.EMULATED_GIL
    jitter_fraction: float = 0.0
    seed: int = 0
    profile_name: str = "mixed-default"

    def __post_init__(self) -> None:
        if self.t_cpu_ms < 0.0 or self.t_io_ms < 0.0:
            raise ValueError(
                f"phase targets must be >= 0, got cpu={self.t_cpu_ms}, io={self.t_io_ms}"
            )
        if self.t_cpu_ms == 0.0 and self.t_io_ms == 0.0:
            raise ValueError("task needs a CPU phase, an I/O phase, or both")
        if not 0.0 <= self.jitter_fraction <= 0.5:
            raise ValueError(
                f"jitter_fraction must be in [0, 0.5], got {self.jitter_fraction}"
            )


@dataclass(frozen=True)
class SpinCalibration:
    iterations_per_ms: float
    calibration_error: float  # fractional spread across timing batches


def spin(iterations: int) -> int:
    """Pure-CPU integer churn; the returned accumulator defeats elision."""
    acc = 0x9E3779B9
    for _ in range(iterations):
        acc = (acc * 1103515245 + 12345) & 0xFFFFFFFF
    return acc


_sink = 0  # consumed spin results land here so callers need not keep them


def _consume(value: int) -> None:
    global _sink
    _sink ^= value


def calibrate_spin(batch_ms: float = 20.0, batches: int = 5, attempts: int = 3) -> SpinCalibration:
    """Measure spin iterations per millisecond on the current host.

    Times several fixed-size batches against the monotonic clock and
    takes the median rate. A spread above 10% between the slowest and
    fastest batch means something else is stealing the core; retried a
    few times before giving up.
    """
    _consume(spin(200_000))  # warm the loop and any allocator caches
    last_spread = 0.0
    for _ in range(attempts):
        t0 = time.perf_counter()
        _consume(spin(500_000))
        rough = 500_000 / ((time.perf_counter() - t0) * 1e3)
        batch_iters = max(1, int(rough * batch_ms))
        rates = []
        for _ in range(batches):
            t0 = time.perf_counter()
            _consume(spin(batch_iters))
            dt_ms = (time.perf_counter() - t0) * 1e3
            rates.append(batch_iters / dt_ms)
        rates.sort()
        median = rates[len(rates) // 2]
        last_spread = (rates[-1] - rates[0]) / median
        if last_spread <= 0.10:
            return SpinCalibration(median, last_spread)
    raise CalibrationError(
        f"spin timing spread {last_spread:.1%} exceeds 10% after {attempts} attempts"
    )


class ExclusionGate:
    """Process-wide gate held for the whole CPU phase of gated tasks.

    Waiters block on a condition with a short timed slice instead of an
    uninterruptible lock: the holder's release notifies one waiter
    promptly, while every other parked worker keeps waking on its slice
    to re-check. That periodic wakeup is what charges oversized pools
    for each extra waiter, and it also gives shutdown a bounded-latency
    cancellation point.
    """

    def __init__(self, wait_slice_s: float = 0.005) -> None:
        if wait_slice_s <= 0.0:
            raise ValueError(f"wait_slice_s must be positive, got {wait_slice_s}")
        self._wait_slice_s = wait_slice_s
        self._cond = threading.Condition()
        self._held = False
        self._cancelled = False
        self._occupancy = 0
        self._max_occupancy = 0

    def acquire(self) -> None:
        with self._cond:
            while True:
                if self._cancelled:
                    raise TaskAborted("gate cancelled")
                if not self._held:
                    self._held = True
                    self._occupancy += 1
                    if self._occupancy > self._max_occupancy:
                        self._max_occupancy = self._occupancy
                    return
                self._cond.wait(self._wait_slice_s)

    def release(self) -> None:
        with self._cond:
            if not self._held:
                raise RuntimeError("release of an unheld gate")
            self._held = False
            self._occupancy -= 1
            self._cond.notify(1)

    def cancel_all(self) -> None:
        """Make every current and future acquire raise TaskAborted."""
        with self._cond:
            self._cancelled = True
            self._cond.notify_all()

    def reset(self) -> None:
        with self._cond:
            self._cancelled = False

    @property
    def occupancy(self) -> int:
        return self._occupancy

    @property
    def max_occupancy(self) -> int:
        """High-water mark of concurrent holders; must never pass 1."""
        return self._max_occupancy


GLOBAL_GATE = ExclusionGate()


def make_task(
    spec: WorkloadSpec,
    calibration: Optional[SpinCalibration],
    rng: Optional[random.Random] = None,
    gate: Optional[ExclusionGate] = None,
) -> Callable[[], None]:
    """Build one executable task: gated spin, then gate-free sleep.

    With jitter off the returned callable is a pure function of the
    spec and can be reused for every submission; with jitter on, each
    call to make_task draws this task's phase durations from `rng`.
    """
    if spec.t_cpu_ms > 0.0 and calibration is None:
        raise ValueError("spin calibration required when t_cpu_ms > 0")
    f_cpu = f_io = 1.0
    if spec.jitter_fraction > 0.0:
        if rng is None:
            raise ValueError("jitter needs an rng")
        j = spec.jitter_fraction
        f_cpu = 1.0 + rng.uniform(-j, j)
        f_io = 1.0 + rng.uniform(-j, j)
    iterations = (
        int(round(spec.t_cpu_ms * f_cpu * calibration.iterations_per_ms))
        if spec.t_cpu_ms > 0.0
        else 0
    )
    sleep_s = spec.t_io_ms * f_io / 1e3
    gated = spec.gate_mode is GateMode.EMULATED_GIL
    g = gate if gate is not None else GLOBAL_GATE

    def task() -> None:
        if gated:
            g.acquire()
            try:
                _consume(spin(iterations))
            finally:
                g.release()
        else:
            _consume(spin(iterations))
        if sleep_s > 0.0:
            time.sleep(sleep_s)

    # observability: what this task instance will actually do
    task.iterations = iterations  # type: ignore[attr-defined]
    task.sleep_s = sleep_s  # type: ignore[attr-defined]
    return task


def profile_catalog() -> list[WorkloadSpec]:
    """Named presets spanning I/O-heavy through CPU-dominant mixes."""
    return [
        WorkloadSpec(0.1, 1.0, GateMode.EMULATED_GIL, profile_name="io-heavy"),
        WorkloadSpec(10.0, 50.0, GateMode.EMULATED_GIL, profile_name="mixed-default"),
        WorkloadSpec(10.0, 10.0, GateMode.EMULATED_GIL, profile_name="balanced"),
        WorkloadSpec(10.0, 0.0, GateMode.EMULATED_GIL, profile_name="cpu-dominant"),
        WorkloadSpec(0.0, 50.0, GateMode.NONE, profile_name="pure-io"),
    ]


def profile_by_name(name: str) -> WorkloadSpec:
    for spec in profile_catalog():
        if spec.profile_name == name:
            return spec
    known = ", ".join(s.profile_name for s in profile_catalog())
    raise ValueError(f"unknown profile {name!r}; known: {known}")


@dataclass(frozen=True)
class AffinityResult:
    outcome: str  # "applied" or "unsupported"
    cores_applied: int


def set_core_affinity(cores: int) -> AffinityResult:
    """Best-effort restriction of the process to `cores` CPU cores.

    Hosts without affinity control get a warning and an unsupported
    result; gate-only runs are still meaningful there.
    """
    if cores < 1:
        raise ValueError(f"cores must be >= 1, got {cores}")
    if not hasattr(os, "sched_setaffinity"):
        warnings.warn("core affinity not supported on this platform", stacklevel=2)
        return AffinityResult("unsupported", 0)
    available = sorted(os.sched_getaffinity(0))
    if cores > len(available):
        warnings.warn(
            f"asked for {cores} cores, only {len(available)} available", stacklevel=2
        )
        cores = len(available)
    chosen = set(available[:cores])
    os.sched_setaffinity(0, chosen)
    return AffinityResult("applied", len(chosen))
