"""Synthetic regression tasks with planted per-head update ranks."""

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from src.adapter import LoraAdapter, forward_delta
from src.errors import RejectedInputError
from src.linalg import Matrix
from src.model import ModelConfig, ModelState, build_model, forward, frozen_weights

logger = logging.getLogger(__name__)


@dataclass
class PlantedTask:
    teacher: ModelState
    planted_ranks: list[list[int]]
    x: Matrix
    y: Matrix
    noise: float
    seed: int

    def planted_deltas(self) -> list[list[Matrix]]:
        return [[forward_delta(ad) for ad in row] for row in self.teacher.adapters]


def _rank_grid(planted_ranks: Sequence[int], layers: int, heads: int) -> list[list[int]]:
    if not planted_ranks:
        raise RejectedInputError("planted_ranks must not be empty")
    flat = [int(planted_ranks[i % len(planted_ranks)]) for i in range(layers * heads)]
    return [flat[l * heads:(l + 1) * heads] for l in range(layers)]


def generate_task(
    layers: int,
    heads: int,
    d: int,
    k: int,
    planted_ranks: Sequence[int],
    n_samples: int,
    seed: int,
    noise: float = 0.0,
) -> PlantedTask:
    """Teacher network whose head ``(l, h)`` carries an exact-rank update.

    ``planted_ranks`` is cycled over heads in layer-major order. Each planted
    update is a product of seeded Gaussian factors with that inner dimension.
    """
    grid = _rank_grid(planted_ranks, layers, heads)
    for r in (r for row in grid for r in row):
        if not 1 <= r <= min(d, k):
            raise RejectedInputError(f"planted rank {r} outside [1, {min(d, k)}]")
    if n_samples < 1:
        raise RejectedInputError(f"n_samples must be >= 1, got {n_samples}")
    if noise < 0:
        raise RejectedInputError(f"noise must be >= 0, got {noise}")

    cfg = ModelConfig(layers=layers, heads=heads, d=d, k=k, seed=seed)
    base, mixing = frozen_weights(cfg)
    factor_rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    adapters = []
    for l, row in enumerate(grid):
        adapters.append([
            LoraAdapter(
                b=factor_rng.standard_normal((d, r)) / math.sqrt(d),
                a=factor_rng.standard_normal((r, k)) / math.sqrt(k),
                r0=r,
                layer_id=l,
                head_id=h,
                alpha_history=[1.0],
            )
            for h, r in enumerate(row)
        ])
    teacher = ModelState(config=cfg, base=base, mixing=mixing, adapters=adapters)

    data_rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    x = data_rng.standard_normal((n_samples, k))
    y = forward(teacher, x)
    if noise > 0:
        y = y + noise * data_rng.standard_normal(y.shape)
    logger.info(
        "planted task L=%d H=%d d=%d k=%d ranks=%s n=%d seed=%d",
        layers, heads, d, k, grid, n_samples, seed,
    )
    return PlantedTask(teacher=teacher, planted_ranks=grid, x=x, y=y, noise=noise, seed=seed)


def student_for(task: PlantedTask, r0: int, adapter_seed: int, alpha_max: float = 4.0) -> ModelState:
    """Same frozen network as the teacher, fresh adapters at rank ``r0``."""
    return build_model(task.teacher.config, r0, adapter_seed, alpha_max=alpha_max)


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman correlation with tie-averaged ranks; 0.0 if either side is constant."""
    rx = rankdata(np.asarray(x, dtype=np.float64), method="average")
    ry = rankdata(np.asarray(y, dtype=np.float64), method="average")
    if np.ptp(rx) == 0 or np.ptp(ry) == 0:
        logger.warning("spearman correlation undefined for constant ranks; reporting 0.0")
        return 0.0
    return float(np.corrcoef(rx, ry)[0, 1])


def recovery_score(state: ModelState, task: PlantedTask) -> float:
    """Rank correlation between planted ranks and learned effective ranks."""
    learned = [[ad.r_cur for ad in row] for row in state.adapters]
    if [len(row) for row in learned] != [len(row) for row in task.planted_ranks]:
        raise RejectedInputError("trained grid and planted grid differ in shape")
    planted_flat = [r for row in task.planted_ranks for r in row]
    if len(planted_flat) < 3:
        raise RejectedInputError("recovery score needs at least 3 heads")
    return spearman(planted_flat, [r for row in learned for r in row])
