"""Typed bundle of everything one experiment run needs."""

from dataclasses import dataclass, field, replace
from typing import Optional

from src.model import ModelConfig
from src.trainer import Mode, TrainerConfig


@dataclass(frozen=True)
class TaskConfig:
    planted_ranks: tuple[int, ...] = (1, 2, 4, 8)
    n_samples: int = 512
    noise: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    task: TaskConfig = field(default_factory=TaskConfig)

    @property
    def seed(self) -> int:
        return self.trainer.seed

    def with_overrides(self, seed: Optional[int] = None, mode: Optional[str] = None) -> "RunConfig":
        trainer, model = self.trainer, self.model
        if seed is not None:
            trainer = replace(trainer, seed=seed)
            model = replace(model, seed=seed)
        if mode is not None:
            trainer = replace(trainer, mode=Mode(mode))
        return replace(self, trainer=trainer, model=model)
