"""Approximation-error and capacity quantities for adapted heads."""

import logging
import math
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from src.adapter import LoraAdapter, default_rank_cap, forward_delta
from src.errors import RejectedInputError
from src.linalg import Matrix, as_matrix, frobenius_norm, svd, tail_energy

logger = logging.getLogger(__name__)


class ApproxErrorReport(NamedTuple):
    """``epsilon = ||target - delta||_F`` next to the SVD tail quantities at rank ``r``."""

    epsilon: float
    tail_sqrt: float
    loose_bound: float
    rank: int


class AlphaSearch(NamedTuple):
    alpha: float
    rank: int
    saturated: bool


def approx_error(target, ad: LoraAdapter) -> ApproxErrorReport:
    target = as_matrix(target, "target")
    if target.shape != (ad.d, ad.k):
        raise RejectedInputError(f"target {target.shape} does not match adapter {(ad.d, ad.k)}")
    sigma = svd(target).sigma
    r = ad.r_cur
    return ApproxErrorReport(
        epsilon=frobenius_norm(target - forward_delta(ad)),
        tail_sqrt=tail_energy(sigma, r),
        loose_bound=float(np.sum(sigma[r:])),
        rank=r,
    )


def approx_error_grid(
    targets: Sequence[Sequence[Matrix]], adapters: Sequence[Sequence[LoraAdapter]]
) -> list[list[ApproxErrorReport]]:
    if len(targets) != len(adapters) or any(len(t) != len(a) for t, a in zip(targets, adapters)):
        raise RejectedInputError("target grid and adapter grid have different shapes")
    return [[approx_error(t, ad) for t, ad in zip(trow, arow)] for trow, arow in zip(targets, adapters)]


def min_alpha_for_tolerance(target, r0: int, eps: float, r_max: int | None = None) -> AlphaSearch:
    """Smallest ``alpha`` in ``{1/r0, ..., r_max/r0}`` whose rank meets ``eps``.

    Ranks at or beyond ``min(d, k)`` have zero tail. If even ``r_max`` does
    not reach ``eps`` the cap is returned with ``saturated=True``.
    """
    if eps <= 0:
        raise RejectedInputError(f"eps must be > 0, got {eps}")
    if r0 < 1:
        raise RejectedInputError(f"r0 must be >= 1, got {r0}")
    cap = default_rank_cap(r0) if r_max is None else r_max
    sigma = svd(target).sigma
    for r in range(1, cap + 1):
        if tail_energy(sigma, r) <= eps:
            return AlphaSearch(alpha=r / r0, rank=r, saturated=False)
    logger.debug("tolerance %.3e unreachable below rank cap %d", eps, cap)
    return AlphaSearch(alpha=cap / r0, rank=cap, saturated=True)


def capacity_term(alphas: Iterable[float], r0: int) -> float:
    """``sum log(max(1, r0 * alpha))`` (natural log); floored heads add nothing."""
    return float(sum(math.log(max(1.0, r0 * a)) for a in alphas))
