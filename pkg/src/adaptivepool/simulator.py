"""Discrete-time model of the scaling controller against a known blocking curve.

Replaces the worker pool with a blocking characteristic B(N) that maps
a worker count to the blocking ratio the aggregate would report at that
size, so the no-shrink-under-load and fixed-point convergence
properties can be checked in milliseconds without spawning threads.

Each tick feeds the controller the ratio it would observe if the pool
grew by one worker. Scale-up asks "would one more worker still spend
most of its time off-CPU": sampling the incumbent size instead answers
the previous step's question and parks the loop one count past the
predicted fixed point.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .controller import (
    ControllerConfig,
    CurveDomainError,
    DecisionKind,
    beta_lookup,
    controller_step,
    initial_state,
)

SUSTAINED = "sustained"

LoadSchedule = Union[str, Sequence[int]]


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


@dataclass(frozen=True)
class BlockingCharacteristic:
    """Expected blocking ratio per worker count on [n_lo, n_hi].

    values[i] is the ratio at count n_lo + i, clamped to [0, 1].
    """

    n_lo: int
    n_hi: int
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.n_lo < 1:
            raise ValueError(f"n_lo must be >= 1, got {self.n_lo}")
        if self.n_hi < self.n_lo:
            raise ValueError(f"n_hi must be >= n_lo, got {self.n_hi}")
        if len(self.values) != self.n_hi - self.n_lo + 1:
            raise ValueError(
                f"need {self.n_hi - self.n_lo + 1} values for "
                f"[{self.n_lo}, {self.n_hi}], got {len(self.values)}"
            )

    @classmethod
    def from_table(cls, table: Mapping[int, float]) -> "BlockingCharacteristic":
        """Build from an explicit count -> ratio table; keys must be contiguous."""
        if not table:
            raise ValueError("empty table")
        counts = sorted(table)
        n_lo, n_hi = counts[0], counts[-1]
        if counts != list(range(n_lo, n_hi + 1)):
            raise ValueError(f"table counts must be contiguous, got {counts}")
        return cls(n_lo, n_hi, tuple(_clamp01(float(table[n])) for n in counts))

    @classmethod
    def piecewise(
        cls,
        beta_low: float,
        beta_peak: float,
        n_critical: int,
        decline_slope: float,
        n_lo: int,
        n_hi: int,
    ) -> "BlockingCharacteristic":
        """Linear rise from (n_lo, beta_low) to (n_critical, beta_peak),
        then linear decline at decline_slope per added worker."""
        if not 0.0 <= beta_low <= beta_peak <= 1.0:
            raise ValueError(
                f"need 0 <= beta_low <= beta_peak <= 1, got {beta_low}, {beta_peak}"
            )
        if not n_lo <= n_critical <= n_hi:
            raise ValueError(
                f"n_critical must lie in [{n_lo}, {n_hi}], got {n_critical}"
            )
        if decline_slope <= 0.0:
            raise ValueError(f"decline_slope must be positive, got {decline_slope}")
        values = []
        for n in range(n_lo, n_hi + 1):
            if n <= n_critical:
                if n_critical == n_lo:
                    v = beta_peak
                else:
                    frac = (n - n_lo) / (n_critical - n_lo)
                    v = beta_low + frac * (beta_peak - beta_low)
            else:
                v = beta_peak - decline_slope * (n - n_critical)
            values.append(_clamp01(v))
        return cls(n_lo, n_hi, tuple(values))

    def __call__(self, n: int) -> float:
        if not self.n_lo <= n <= self.n_hi:
            raise CurveDomainError(
                f"curve defined on [{self.n_lo}, {self.n_hi}], asked for N={n}"
            )
        return self.values[n - self.n_lo]


@dataclass(frozen=True)
class UtilizationModel:
    """Acquisition/release rates for the shared-lock utilization estimate."""

    lambda_rate: float
    mu_rate: float

    def __post_init__(self) -> None:
        if self.lambda_rate <= 0.0 or self.mu_rate <= 0.0:
            raise ValueError(
                f"rates must be positive, got lambda={self.lambda_rate}, mu={self.mu_rate}"
            )


def utilization(model: UtilizationModel, n: int) -> float:
    """Per-worker share of the contended lock: lambda / (lambda + (n-1)*mu)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return model.lambda_rate / (model.lambda_rate + (n - 1) * model.mu_rate)


@dataclass(frozen=True)
class TrajectoryStep:
    step: int
    n: int
    beta_ewma: float
    decision: DecisionKind


def _queue_at(load: LoadSchedule, step: int) -> int:
    # schedules shorter than the run repeat their final entry
    if load == SUSTAINED:
        return 1
    if isinstance(load, str):
        raise ValueError(f"load must be {SUSTAINED!r} or a queue-length schedule, got {load!r}")
    if len(load) == 0:
        raise ValueError("load schedule is empty")
    return load[min(step - 1, len(load) - 1)]


def simulate_controller(
    b: object,
    config: ControllerConfig,
    steps: int,
    load: LoadSchedule = SUSTAINED,
    noise_std: float = 0.0,
    seed: int | None = None,
) -> list[TrajectoryStep]:
    """Drive the controller for `steps` ticks against blocking curve `b`.

    `b` is anything beta_lookup accepts: a BlockingCharacteristic, a
    mapping, a sequence aligned at n_min, or a callable. Optional
    Gaussian noise (stddev `noise_std`, deterministic under `seed`) is
    added to each sample before clamping to [0, 1]. Without noise the
    output is a pure function of (b, config, steps, load).
    """
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    if noise_std < 0.0:
        raise ValueError(f"noise_std must be >= 0, got {noise_std}")
    beta_at = beta_lookup(b, config)
    for n in range(config.n_min, config.n_max + 1):
        beta_at(n)  # fail fast if the curve has holes in the working range
    rng = random.Random(seed)
    state = initial_state(config)
    rows: list[TrajectoryStep] = []
    for k in range(1, steps + 1):
        q = _queue_at(load, k)
        sample = beta_at(min(state.n_current + 1, config.n_max))
        if noise_std > 0.0:
            sample = _clamp01(sample + rng.gauss(0.0, noise_std))
        state, decision = controller_step(state, q, sample, config)
        rows.append(TrajectoryStep(k, state.n_current, state.beta_ewma, decision.kind))
    return rows


def verify_monotonicity(
    trajectory: Sequence[TrajectoryStep], load: LoadSchedule
) -> int | None:
    """Check that worker count never drops while the queue stays non-empty.

    Compares consecutive trajectory rows whose ticks both ran under a
    positive scheduled queue length; returns the step index of the
    first decrease inside such a stretch, or None when the trajectory
    is clean. Decreases where the schedule shows an empty queue are the
    intended decay behavior and are exempt.
    """
    prev: TrajectoryStep | None = None
    for row in trajectory:
        if (
            prev is not None
            and row.n < prev.n
            and _queue_at(load, row.step) > 0
            and _queue_at(load, prev.step) > 0
        ):
            return row.step
        prev = row
    return None
