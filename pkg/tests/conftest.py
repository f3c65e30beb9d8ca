"""Shared fixtures and generators. Calibration is expensive (~1 s), so it
is session-scoped; the curve generator is shared between the simulator
tests and the acceptance suite."""
import random

import pytest

from adaptivepool.controller import ControllerConfig
from adaptivepool.workload import SpinCalibration, calibrate_spin


def patient_calibrate() -> SpinCalibration:
    """Calibrate on a core other tenants keep borrowing.

    Transient load shows up as a too-wide timing spread; it passes,
    systematic problems do not, so retry whole calibrations with short
    pauses rather than loosening the spread bar.
    """
    import time

    from adaptivepool.workload import CalibrationError

    last: CalibrationError | None = None
    for _ in range(6):
        try:
            return calibrate_spin(attempts=10)
        except CalibrationError as exc:
            last = exc
            time.sleep(0.3)
    raise last


@pytest.fixture(scope="session")
def calibration() -> SpinCalibration:
    return patient_calibrate()


def random_compliant_curve(
    rng: random.Random, thresh: float = 0.3
) -> tuple[dict[int, float], ControllerConfig, str]:
    """Draw one blocking curve from the three shapes the controller is
    specified against: everything-below-threshold (parks at the floor),
    cliff (rises, then declines through the threshold), and
    never-crossing (stays above the threshold out to the cap).

    Returns (table, config, family). Margins keep every value at least
    0.1 away from the threshold so noisy runs stay decidable.
    """
    n_min = rng.randrange(1, 5)
    span = rng.randrange(8, 40)
    n_max = n_min + span
    cfg = ControllerConfig(n_min=n_min, n_max=n_max, beta_thresh=thresh)
    family = rng.choice(("cpu-bound", "cliff", "never-crossing"))
    counts = range(n_min, n_max + 1)

    if family == "cpu-bound":
        peak = rng.uniform(0.02, thresh - 0.1)
        vals = sorted(rng.uniform(0.0, peak) for _ in counts)
    elif family == "never-crossing":
        lo = rng.uniform(thresh + 0.12, 0.7)
        peak = rng.uniform(lo, 0.98)
        n_crit = rng.randrange(n_min, n_max + 1)
        floor = rng.uniform(thresh + 0.11, max(thresh + 0.11, lo - 0.01))
        vals = _rise_then_decline(counts, lo, peak, n_crit, floor)
    else:
        lo = rng.uniform(0.45, 0.7)
        peak = rng.uniform(lo, 0.85)
        n_crit = rng.randrange(n_min, n_max)  # decline must exist
        floor = rng.uniform(0.0, 0.12)
        vals = _rise_then_decline(counts, lo, peak, n_crit, floor)

    return dict(zip(counts, vals)), cfg, family


def _rise_then_decline(counts, lo, peak, n_crit, floor):
    # linear rise to the knee, then a hard drop to a gently sagging tail;
    # the drop keeps every value clear of the decision band around thresh
    counts = list(counts)
    n_min, n_max = counts[0], counts[-1]
    vals = []
    for n in counts:
        if n <= n_crit:
            if n_crit == n_min:
                vals.append(peak)
            else:
                vals.append(lo + (peak - lo) * (n - n_min) / (n_crit - n_min))
        else:
            sag = min(0.05, floor) * (n - n_crit - 1) / max(1, n_max - n_crit)
            vals.append(max(0.0, floor - sag))
    return vals
