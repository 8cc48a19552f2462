from .network import (
    GradientBundle,
    ModelConfig,
    ModelState,
    backward,
    base_weights_digest,
    build_model,
    forward,
    frozen_weights,
    task_loss,
)

__all__ = [
    "GradientBundle",
    "ModelConfig",
    "ModelState",
    "backward",
    "base_weights_digest",
    "build_model",
    "forward",
    "frozen_weights",
    "task_loss",
]
