"""Blocking-ratio driven adaptive worker pool, benchmark harness, and simulator."""

__version__ = "0.1.0"

from .controller import (
    ControllerConfig,
    ControllerState,
    CurveDomainError,
    Decision,
    DecisionKind,
    controller_step,
    fixed_point,
    initial_state,
)
from .metrics import (
    AggregateSnapshot,
    EwmaFilter,
    IntervalAggregate,
    InvalidSampleError,
    InvalidTimingError,
    TaskTiming,
    blocking_ratio,
    ewma_time_constant,
    ewma_update,
    weighted_beta,
)
from .pool import (
    Adaptive,
    PoolConfig,
    PoolShutDownError,
    PoolStatus,
    QueueDepthScaler,
    QueueFullError,
    StaticFixed,
    TaskAborted,
    TaskCancelledError,
    TaskHandle,
    WorkerPool,
    queue_depth_scaler_step,
)
from .simulator import (
    BlockingCharacteristic,
    TrajectoryStep,
    UtilizationModel,
    simulate_controller,
    utilization,
    verify_monotonicity,
)
from .stats import (
    InsufficientSamplesError,
    RunStats,
    compute_run_stats,
    efficiency,
    mean_ci,
    per_run_p99_spread,
    pooled_p99,
    t_quantile_975,
)
from .workload import (
    AffinityResult,
    CalibrationError,
    ExclusionGate,
    GateMode,
    SpinCalibration,
    WorkloadSpec,
    calibrate_spin,
    make_task,
    profile_by_name,
    profile_catalog,
    set_core_affinity,
)

__all__ = [
    "__version__",
    "Adaptive",
    "AffinityResult",
    "AggregateSnapshot",
    "BlockingCharacteristic",
    "CalibrationError",
    "ControllerConfig",
    "ControllerState",
    "CurveDomainError",
    "Decision",
    "DecisionKind",
    "EwmaFilter",
    "ExclusionGate",
    "GateMode",
    "InsufficientSamplesError",
    "IntervalAggregate",
    "InvalidSampleError",
    "InvalidTimingError",
    "PoolConfig",
    "PoolShutDownError",
    "PoolStatus",
    "QueueDepthScaler",
    "QueueFullError",
    "RunStats",
    "SpinCalibration",
    "StaticFixed",
    "TaskAborted",
    "TaskCancelledError",
    "TaskHandle",
    "TrajectoryStep",
    "UtilizationModel",
    "WorkerPool",
    "WorkloadSpec",
    "blocking_ratio",
    "calibrate_spin",
    "compute_run_stats",
    "controller_step",
    "efficiency",
    "ewma_time_constant",
    "ewma_update",
    "fixed_point",
    "initial_state",
    "make_task",
    "mean_ci",
    "per_run_p99_spread",
    "pooled_p99",
    "profile_by_name",
    "profile_catalog",
    "queue_depth_scaler_step",
    "set_core_affinity",
    "simulate_controller",
    "t_quantile_975",
    "utilization",
    "verify_monotonicity",
    "weighted_beta",
]
