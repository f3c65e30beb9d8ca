"""Scaling decision engine: smoothed blocking ratio, hysteresis, veto.

Each control tick folds the latest blocking-ratio sample into an EWMA
and then picks exactly one action:

* queued work and a high smoothed ratio: count the tick toward a
  scale-up and add one worker once ``hysteresis_h`` such ticks accrue;
* queued work but a low smoothed ratio: veto, because queued work with
  little off-CPU time means the pool is compute-saturated and another
  worker would only add contention;
* an empty queue: drop one worker until the floor is reached.

Steps are pure functions of (state, inputs), so the scaling laws are
directly property-testable.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Sequence, Union

from .metrics import InvalidSampleError, ewma_scalar


class CurveDomainError(ValueError):
    """Raised when a blocking characteristic is undefined on the needed range."""


class DecisionKind(Enum):
    SCALE_UP = "ScaleUp"
    SCALE_DOWN = "ScaleDown"
    HOLD = "Hold"
    VETO = "Veto"


@dataclass(frozen=True)
class Decision:
    kind: DecisionKind
    n_after: int


@dataclass(frozen=True)
class ControllerConfig:
    n_min: int = 4
    n_max: int = 128
    beta_thresh: float = 0.3
    alpha: float = 0.2
    hysteresis_h: int = 3
    interval: float = 0.5

    def __post_init__(self) -> None:
        if self.n_min < 1:
            raise ValueError(f"n_min must be >= 1, got {self.n_min}")
        if self.n_max < self.n_min:
            raise ValueError(f"n_max must be >= n_min, got {self.n_max} < {self.n_min}")
        if not 0.0 < self.beta_thresh < 1.0:
            raise ValueError(f"beta_thresh must be in (0, 1), got {self.beta_thresh}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.hysteresis_h < 1:
            raise ValueError(f"hysteresis_h must be >= 1, got {self.hysteresis_h}")
        if not self.interval > 0.0:
            raise ValueError(f"interval must be positive, got {self.interval}")


@dataclass(frozen=True)
class ControllerState:
    n_current: int
    beta_ewma: float = 0.5
    c_up: int = 0
    veto_count: int = 0


def initial_state(config: ControllerConfig) -> ControllerState:
    return ControllerState(n_current=config.n_min)


def controller_step(
    state: ControllerState,
    queue_len: int,
    beta_sample: float | None,
    config: ControllerConfig,
) -> tuple[ControllerState, Decision]:
    """Advance the controller by one tick.

    ``beta_sample`` is the interval's weighted mean blocking ratio, or
    None when the interval completed no tasks; an absent sample skips
    the smoothing update but the queue-driven branches still apply.
    """
    if queue_len < 0:
        raise ValueError(f"queue_len must be >= 0, got {queue_len}")
    ewma = state.beta_ewma
    if beta_sample is not None:
        if not 0.0 <= beta_sample <= 1.0:
            raise InvalidSampleError(f"beta_sample must be in [0, 1], got {beta_sample!r}")
        ewma = ewma_scalar(state.beta_ewma, beta_sample, config.alpha)

    n = state.n_current
    c_up = state.c_up
    vetoes = state.veto_count

    if queue_len > 0:
        if ewma > config.beta_thresh:
            c_up += 1
            if c_up >= config.hysteresis_h:
                c_up = 0
                if n < config.n_max:
                    n += 1
                    kind = DecisionKind.SCALE_UP
                else:
                    # at the ceiling: the counter still resets
                    kind = DecisionKind.HOLD
            else:
                kind = DecisionKind.HOLD
        else:
            kind = DecisionKind.VETO
            c_up = 0
            vetoes += 1
    elif n > config.n_min:
        n -= 1
        kind = DecisionKind.SCALE_DOWN
    else:
        kind = DecisionKind.HOLD

    return ControllerState(n, ewma, c_up, vetoes), Decision(kind, n)


BetaCurve = Union[Callable[[int], float], Mapping[int, float], Sequence[float]]


def beta_lookup(b_curve: BetaCurve, config: ControllerConfig) -> Callable[[int], float]:
    """Normalize table/sequence/callable curves to a checked callable.

    Sequences are aligned so index 0 is n_min. Values are clamped to
    [0, 1] on ingestion.
    """
    if callable(b_curve):
        raw = b_curve
    elif isinstance(b_curve, Mapping):
        raw = b_curve.__getitem__
    else:
        seq = b_curve

        def raw(n: int, _seq: Sequence[float] = seq) -> float:
            idx = n - config.n_min
            if idx < 0:
                raise CurveDomainError(f"curve undefined at N={n}")
            return _seq[idx]

    def beta_at(n: int) -> float:
        try:
            value = raw(n)
        except (KeyError, IndexError) as exc:
            raise CurveDomainError(f"curve undefined at N={n}") from exc
        return min(1.0, max(0.0, float(value)))

    return beta_at


def fixed_point(b_curve: BetaCurve, config: ControllerConfig) -> int:
    """Predicted convergence thread count for a blocking characteristic.

    Scans upward for the first count whose expected blocking ratio sits
    at or below the threshold and returns the count just before it: the
    last size at which adding a worker is still justified. A curve
    already at or below threshold at n_min pins to n_min (compute-bound
    pools never grow); a curve that never crosses pins to n_max.
    """
    beta_at = beta_lookup(b_curve, config)
    if beta_at(config.n_min) <= config.beta_thresh:
        return config.n_min
    for n in range(config.n_min + 1, config.n_max + 1):
        if beta_at(n) <= config.beta_thresh:
            return n - 1
    return config.n_max
