from .harness import (
    ExperimentResult,
    ModeResult,
    RANK_CSV_HEADER,
    run_experiment,
    run_mode,
    run_r0_sweep,
    task_for,
)
from .planted import PlantedTask, generate_task, recovery_score, spearman, student_for
from .settings import RunConfig, TaskConfig
from .toys import ConvexToy, convex_toy

__all__ = [
    "ExperimentResult",
    "ModeResult",
    "RANK_CSV_HEADER",
    "run_experiment",
    "run_mode",
    "run_r0_sweep",
    "task_for",
    "PlantedTask",
    "generate_task",
    "recovery_score",
    "spearman",
    "student_for",
    "RunConfig",
    "TaskConfig",
    "ConvexToy",
    "convex_toy",
]
