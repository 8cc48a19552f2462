"""Rank-allocation statistics over a trained adapter grid."""

from typing import NamedTuple, Optional, Sequence

import numpy as np

from src.adapter import LoraAdapter, param_count
from src.errors import RejectedInputError


class RankSummary(NamedTuple):
    frac_below: float
    frac_middle: float
    frac_above: float
    mean_scaled_rank: float
    mean_effective_rank: float
    total_params: int
    uniform_params: int
    relative_params: float
    pruned_fraction: float
    layer_rank_ratio: tuple[float, ...]


def rank_statistics(adapters: Sequence[Sequence[LoraAdapter]], r0: int) -> RankSummary:
    """Band fractions (``r < 0.8 r0``, middle, ``r > 1.5 r0``), average ranks and budgets.

    ``mean_scaled_rank`` is the average of ``r0 * alpha`` (unrounded);
    ``uniform_params`` is what the same grid costs at rank ``r0`` everywhere.
    """
    flat = [ad for row in adapters for ad in row]
    if not flat:
        raise RejectedInputError("empty adapter grid")
    ranks = np.array([ad.r_cur for ad in flat], dtype=np.float64)
    n = len(flat)
    below = int(np.sum(ranks < 0.8 * r0))
    above = int(np.sum(ranks > 1.5 * r0))
    total = sum(param_count(ad) for ad in flat)
    uniform = sum(ad.d * r0 + r0 * ad.k for ad in flat)
    relative = total / uniform
    return RankSummary(
        frac_below=below / n,
        frac_middle=(n - below - above) / n,
        frac_above=above / n,
        mean_scaled_rank=float(np.mean([r0 * ad.alpha for ad in flat])),
        mean_effective_rank=float(ranks.mean()),
        total_params=total,
        uniform_params=uniform,
        relative_params=relative,
        pruned_fraction=1.0 - relative,
        layer_rank_ratio=tuple(float(np.mean([ad.r_cur for ad in row])) / r0 for row in adapters),
    )


def rank_stabilization_step(rank_trajectory: Sequence[Sequence[Sequence[int]]]) -> Optional[int]:
    """Last step index at which any head's rank differs from the previous step."""
    ranks = np.asarray(rank_trajectory)
    if ranks.shape[0] < 2:
        return None
    changed = np.any(ranks[1:] != ranks[:-1], axis=tuple(range(1, ranks.ndim)))
    steps = np.flatnonzero(changed)
    return int(steps[-1]) + 1 if steps.size else None
