from .loop import (
    Mode,
    StepRecord,
    TrainerConfig,
    TrainingState,
    finalize,
    total_params,
    train,
    train_step,
)
from .monitors import ConvergenceReport, StabilityReport, convergence_monitor, stability_monitor

__all__ = [
    "Mode",
    "StepRecord",
    "TrainerConfig",
    "TrainingState",
    "finalize",
    "total_params",
    "train",
    "train_step",
    "ConvergenceReport",
    "StabilityReport",
    "convergence_monitor",
    "stability_monitor",
]
