"""Small closed-form problems used by the oracle checks."""

import math
from typing import NamedTuple

import numpy as np

from src.adapter import LoraAdapter
from src.model import ModelConfig, ModelState, forward, frozen_weights
from src.trainer import Mode, TrainerConfig, TrainingState


class ConvexToy(NamedTuple):
    state: TrainingState
    trainer: TrainerConfig
    x: np.ndarray
    y: np.ndarray


def convex_toy(seed: int = 0, d: int = 8, k: int = 8, r: int = 4, n: int = 64,
               steps: int = 2000, eta_theta: float = 0.5) -> ConvexToy:
    """One linear layer, identity mixing, fixed ``B``: the loss is a convex quadratic in ``A``.

    The target is produced by the same network with a different ``A``, so the
    minimum loss is zero. Scale factors stay frozen at 1 and ``lambda = 0``.
    """
    cfg = ModelConfig(layers=1, heads=1, d=d, k=k, seed=seed)
    base, _ = frozen_weights(cfg)
    mixing = [np.eye(k, d)]
    rng = np.random.default_rng(np.random.SeedSequence([seed, 4]))
    b = rng.standard_normal((d, r)) / math.sqrt(d)
    a_start = rng.standard_normal((r, k)) / math.sqrt(k)
    a_goal = rng.standard_normal((r, k)) / math.sqrt(k)
    x = rng.standard_normal((n, k))

    teacher = ModelState(cfg, base, mixing, [[LoraAdapter(b=b, a=a_goal, r0=r)]])
    y = forward(teacher, x)
    student = ModelState(cfg, base, mixing, [[LoraAdapter(b=b.copy(), a=a_start, r0=r, alpha_history=[1.0])]])
    trainer = TrainerConfig(
        r0=r, lam=0.0, beta=0.0, eta_theta=eta_theta, steps=steps,
        seed=seed, mode=Mode.UNIFORM, freeze_b=True,
    )
    return ConvexToy(state=TrainingState.start(student), trainer=trainer, x=x, y=y)
