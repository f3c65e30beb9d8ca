"""Synthetic task generation: calibrated spin, exclusion gate, profiles."""
import os
import threading
import time

import pytest

from adaptivepool.metrics import TaskTiming, blocking_ratio
from adaptivepool.pool import TaskAborted
from adaptivepool.workload import (
    AffinityResult,
    ExclusionGate,
    GateMode,
    SpinCalibration,
    WorkloadSpec,
    calibrate_spin,
    make_task,
    profile_by_name,
    profile_catalog,
    set_core_affinity,
    spin,
)
from conftest import patient_calibrate
import random


# ------------------------------------------------------------ WorkloadSpec


def test_spec_defaults_are_the_mixed_profile():
    s = WorkloadSpec()
    assert (s.t_cpu_ms, s.t_io_ms) == (10.0, 50.0)
    assert s.gate_mode is GateMode.EMULATED_GIL
    assert s.jitter_fraction == 0.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"t_cpu_ms": -1.0},
        {"t_io_ms": -0.1},
        {"t_cpu_ms": 0.0, "t_io_ms": 0.0},
        {"jitter_fraction": -0.01},
        {"jitter_fraction": 0.6},
    ],
)
def test_spec_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        WorkloadSpec(**kwargs)


def test_gate_mode_labels():
    assert GateMode.EMULATED_GIL.value == "gil"
    assert GateMode.NONE.value == "none"


# ------------------------------------------------------------------- spin


def test_spin_is_deterministic():
    assert spin(1000) == spin(1000)
    assert spin(0) == 0x9E3779B9


def test_spin_scales_roughly_linearly(calibration):
    t0 = time.thread_time()
    spin(int(calibration.iterations_per_ms * 4))
    short = time.thread_time() - t0
    t0 = time.thread_time()
    spin(int(calibration.iterations_per_ms * 16))
    long = time.thread_time() - t0
    assert 2.0 < long / short < 8.0  # 4x work, generous scheduling slack


# ------------------------------------------------------------- calibration


def test_calibration_fixture_sane(calibration):
    assert isinstance(calibration, SpinCalibration)
    assert calibration.iterations_per_ms > 1000  # any modern core
    assert 0.0 <= calibration.calibration_error <= 0.10


def test_calibration_is_stable():
    # back-to-back so the comparison sees one frequency regime
    first = patient_calibrate()
    again = patient_calibrate()
    ratio = again.iterations_per_ms / first.iterations_per_ms
    assert 0.85 < ratio < 1.15


def test_spin_duration_matches_target():
    # 2 ms target on an unloaded core, CPU clock, median of several
    # trials. The shared sandbox core is not always unloaded, so retry
    # whole calibrate+measure cycles: a real calibration defect fails
    # every cycle, a borrowed core does not.
    medians = []
    for _ in range(5):
        cal = patient_calibrate()
        iters = int(round(2.0 * cal.iterations_per_ms))
        durations = []
        for _ in range(9):
            t0 = time.thread_time()
            spin(iters)
            durations.append((time.thread_time() - t0) * 1e3)
        durations.sort()
        medians.append(durations[4])
        if 1.8 <= durations[4] <= 2.2:
            return
        time.sleep(0.3)
    pytest.fail(f"2 ms spin never landed within 10%: medians {medians}")


# --------------------------------------------------------------- make_task


def test_make_task_requires_calibration_for_cpu_phase():
    with pytest.raises(ValueError):
        make_task(WorkloadSpec(t_cpu_ms=10.0, t_io_ms=0.0), None)


def test_make_task_pure_io_needs_no_calibration():
    task = make_task(WorkloadSpec(t_cpu_ms=0.0, t_io_ms=5.0, gate_mode=GateMode.NONE), None)
    assert task.iterations == 0
    assert task.sleep_s == pytest.approx(0.005)


def test_make_task_jitter_requires_rng(calibration):
    with pytest.raises(ValueError):
        make_task(WorkloadSpec(jitter_fraction=0.2), calibration)


def test_make_task_without_jitter_is_exact(calibration):
    task = make_task(WorkloadSpec(t_cpu_ms=3.0, t_io_ms=7.0), calibration)
    assert task.iterations == int(round(3.0 * calibration.iterations_per_ms))
    assert task.sleep_s == pytest.approx(0.007)


def test_jitter_sequences_deterministic_per_seed(calibration):
    spec = WorkloadSpec(t_cpu_ms=5.0, t_io_ms=5.0, jitter_fraction=0.3, seed=9)

    def draw(seed):
        rng = random.Random(seed)
        tasks = [make_task(spec, calibration, rng=rng) for _ in range(8)]
        return [(t.iterations, t.sleep_s) for t in tasks]

    assert draw(9) == draw(9)
    assert draw(9) != draw(10)


def test_jitter_stays_inside_fraction(calibration):
    j = 0.25
    spec = WorkloadSpec(t_cpu_ms=4.0, t_io_ms=8.0, jitter_fraction=j)
    rng = random.Random(1)
    for _ in range(200):
        task = make_task(spec, calibration, rng=rng)
        assert (1 - j) * 4.0 * calibration.iterations_per_ms - 1 <= task.iterations
        assert task.iterations <= (1 + j) * 4.0 * calibration.iterations_per_ms + 1
        assert 0.008 * (1 - j) <= task.sleep_s <= 0.008 * (1 + j)


def test_mixed_task_blocking_ratio_near_five_sixths():
    # 2 ms CPU + 10 ms sleep: beta should sit near 1 - 2/12
    cal = patient_calibrate()
    spec = WorkloadSpec(t_cpu_ms=2.0, t_io_ms=10.0)
    gate = ExclusionGate()
    betas = []
    for _ in range(5):
        task = make_task(spec, cal, gate=gate)
        w0, c0 = time.perf_counter(), time.thread_time()
        task()
        timing = TaskTiming(
            cpu_time=max(time.thread_time() - c0, 0.0),
            wall_time=max(time.perf_counter() - w0, 1e-9),
        )
        betas.append(blocking_ratio(timing))
    betas.sort()
    assert betas[2] == pytest.approx(1.0 - 2.0 / 12.0, abs=0.08)


def test_pure_io_task_blocks_nearly_completely():
    task = make_task(WorkloadSpec(t_cpu_ms=0.0, t_io_ms=20.0, gate_mode=GateMode.NONE), None)
    w0, c0 = time.perf_counter(), time.thread_time()
    task()
    beta = blocking_ratio(
        TaskTiming(max(time.thread_time() - c0, 0.0), max(time.perf_counter() - w0, 1e-9))
    )
    assert beta > 0.9


def test_ungated_task_leaves_gate_untouched(calibration):
    gate = ExclusionGate()
    task = make_task(
        WorkloadSpec(t_cpu_ms=1.0, t_io_ms=0.0, gate_mode=GateMode.NONE),
        calibration,
        gate=gate,
    )
    task()
    assert gate.max_occupancy == 0


# ----------------------------------------------------------- ExclusionGate


def test_gate_tracks_occupancy():
    g = ExclusionGate()
    g.acquire()
    assert g.occupancy == 1
    g.release()
    assert g.occupancy == 0
    assert g.max_occupancy == 1


def test_gate_release_unheld_raises():
    with pytest.raises(RuntimeError):
        ExclusionGate().release()


def test_gate_rejects_nonpositive_slice():
    with pytest.raises(ValueError):
        ExclusionGate(wait_slice_s=0.0)


def test_gate_never_admits_two_holders(calibration):
    g = ExclusionGate()
    spec = WorkloadSpec(t_cpu_ms=1.0, t_io_ms=0.0)

    def worker():
        for _ in range(30):
            make_task(spec, calibration, gate=g)()

    threads = [threading.Thread(target=worker) for _ in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert g.max_occupancy == 1


def test_gate_cancel_unblocks_waiters_quickly():
    g = ExclusionGate()
    g.acquire()  # hold it so the waiter parks
    outcome = []

    def waiter():
        try:
            g.acquire()
            outcome.append("acquired")
        except TaskAborted:
            outcome.append("aborted")

    t = threading.Thread(target=waiter)
    t.start()
    time.sleep(0.05)
    start = time.perf_counter()
    g.cancel_all()
    t.join(timeout=1.0)
    assert not t.is_alive()
    assert time.perf_counter() - start < 0.5
    assert outcome == ["aborted"]
    # cancelled gates refuse new entrants until reset
    with pytest.raises(TaskAborted):
        g.acquire()
    g.release()  # original holder still owns it
    g.reset()
    g.acquire()
    g.release()


def test_serialized_throughput_is_gate_bound():
    # four workers pushing 10 ms gated CPU tasks move ~100 tasks/s
    # total; fresh calibration so frequency drift cannot stretch or
    # shrink the spin relative to an earlier measurement
    cal = patient_calibrate()
    g = ExclusionGate()
    spec = WorkloadSpec(t_cpu_ms=10.0, t_io_ms=0.0)
    per_thread = 30

    def worker():
        for _ in range(per_thread):
            make_task(spec, cal, gate=g)()

    threads = [threading.Thread(target=worker) for _ in range(4)]
    t0 = time.perf_counter()
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    tps = 4 * per_thread / (time.perf_counter() - t0)
    assert tps == pytest.approx(100.0, rel=0.15)


# ---------------------------------------------------------------- profiles


def test_profile_catalog_names():
    names = [s.profile_name for s in profile_catalog()]
    assert names == ["io-heavy", "mixed-default", "balanced", "cpu-dominant", "pure-io"]


def test_profile_shapes():
    mixed = profile_by_name("mixed-default")
    assert (mixed.t_cpu_ms, mixed.t_io_ms) == (10.0, 50.0)
    assert profile_by_name("cpu-dominant").t_io_ms == 0.0
    pure = profile_by_name("pure-io")
    assert pure.t_cpu_ms == 0.0
    assert pure.gate_mode is GateMode.NONE
    heavy = profile_by_name("io-heavy")
    assert heavy.t_io_ms / heavy.t_cpu_ms >= 10.0


def test_profile_unknown_name():
    with pytest.raises(ValueError, match="unknown profile"):
        profile_by_name("gpu-heavy")


# ---------------------------------------------------------------- affinity


@pytest.fixture
def restore_affinity():
    if not hasattr(os, "sched_getaffinity"):
        pytest.skip("no affinity control on this platform")
    original = os.sched_getaffinity(0)
    yield
    os.sched_setaffinity(0, original)


def test_affinity_pins_to_one_core(restore_affinity):
    result = set_core_affinity(1)
    assert result == AffinityResult("applied", 1)
    assert len(os.sched_getaffinity(0)) == 1


def test_affinity_clamps_overask(restore_affinity):
    available = len(os.sched_getaffinity(0))
    with pytest.warns(UserWarning, match="available"):
        result = set_core_affinity(available + 64)
    assert result.outcome == "applied"
    assert result.cores_applied == available


def test_affinity_rejects_zero_cores():
    with pytest.raises(ValueError):
        set_core_affinity(0)
