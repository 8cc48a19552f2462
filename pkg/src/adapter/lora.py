"""Per-head low-rank adapter with a learnable rank scale.

The adapter's contribution to its head weight is ``alpha * (B @ A)``. The
same ``alpha`` also sets the inner dimension of the factor pair through
:func:`effective_rank`; that rounding carries no gradient.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from src.errors import InvariantBreachError, RejectedInputError
from src.linalg import Matrix, as_matrix

logger = logging.getLogger(__name__)

DEFAULT_ALPHA_MAX = 4.0


def round_half_away(x: float) -> int:
    """Nearest integer, ties away from zero."""
    return int(Decimal(repr(float(x))).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def default_rank_cap(r0: int) -> int:
    return 2 * r0


def effective_rank(r0: int, alpha: float, r_max: int | None = None) -> int:
    """``max(1, round(r0 * alpha))`` capped at ``r_max`` (default ``2 * r0``)."""
    if r0 < 1:
        raise RejectedInputError(f"r0 must be >= 1, got {r0}")
    if alpha < 0 or not math.isfinite(alpha):
        raise RejectedInputError(f"alpha must be finite and >= 0, got {alpha}")
    cap = default_rank_cap(r0) if r_max is None else r_max
    return min(cap, max(1, round_half_away(r0 * alpha)))


@dataclass
class LoraAdapter:
    """Factor pair ``(b, a)`` of one (layer, head) plus its scale factor."""

    b: Matrix
    a: Matrix
    r0: int
    alpha: float = 1.0
    alpha_prev: float = 1.0
    layer_id: int = 0
    head_id: int = 0
    r_max: int = 0
    alpha_max: float = DEFAULT_ALPHA_MAX
    alpha_history: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.b = as_matrix(self.b, "b")
        self.a = as_matrix(self.a, "a")
        if self.r_max == 0:
            self.r_max = default_rank_cap(self.r0)
        if self.b.shape[1] != self.a.shape[0]:
            raise RejectedInputError(
                f"factor mismatch: b has {self.b.shape[1]} columns, a has {self.a.shape[0]} rows"
            )

    @property
    def r_cur(self) -> int:
        return self.b.shape[1]

    @property
    def d(self) -> int:
        return self.b.shape[0]

    @property
    def k(self) -> int:
        return self.a.shape[1]


def init_adapter(
    d: int, k: int, r0: int, rng: np.random.Generator,
    layer_id: int = 0, head_id: int = 0, alpha_max: float = DEFAULT_ALPHA_MAX,
) -> LoraAdapter:
    """Standard LoRA start: zero ``B``, Gaussian ``A`` with std ``1/sqrt(k)``."""
    return LoraAdapter(
        b=np.zeros((d, r0)),
        a=rng.standard_normal((r0, k)) / math.sqrt(k),
        r0=r0,
        layer_id=layer_id,
        head_id=head_id,
        alpha_max=alpha_max,
        alpha_history=[1.0],
    )


def forward_delta(ad: LoraAdapter) -> Matrix:
    """``alpha * (B @ A)``.

    Columns of ``B`` that are identically zero contribute nothing and are
    left out of the product, so growing an adapter with zero columns keeps
    the result bit-identical.
    """
    live = np.any(ad.b != 0.0, axis=0)
    product = ad.b[:, live] @ ad.a[live, :]
    return ad.alpha * product


def pair_importance(ad: LoraAdapter) -> np.ndarray:
    """``s_i = ||B[:, i]|| * ||A[i, :]||`` for every rank index."""
    return np.linalg.norm(ad.b, axis=0) * np.linalg.norm(ad.a, axis=1)


def importance_order(ad: LoraAdapter) -> list[int]:
    """Rank indices by descending importance; ties keep ascending index."""
    scores = pair_importance(ad)
    return [int(i) for i in np.argsort(-scores, kind="stable")]


_EXCHANGE_RTOL = 1e-12


def _dropped_norm(ad: LoraAdapter, keep: list[int]) -> float:
    dropped = np.ones(ad.r_cur, dtype=bool)
    dropped[keep] = False
    return float(np.linalg.norm(ad.b[:, dropped] @ ad.a[dropped, :]))


def shrink_selection(ad: LoraAdapter, new_r: int) -> list[int]:
    """Indices of the ``new_r`` pairs a shrink keeps, most important first.

    Starts from the importance cut and then exchanges one kept pair for one
    dropped pair while that lowers ``||sum of dropped b_i a_i||_F``. The
    result is a local optimum: no single swap lowers the residual further.
    """
    order = importance_order(ad)
    keep, spare = order[:new_r], order[new_r:]
    residual = _dropped_norm(ad, keep)
    while spare:
        best = None
        for i in range(len(keep)):
            for j, out in enumerate(spare):
                trial = keep[:i] + [out] + keep[i + 1:]
                value = _dropped_norm(ad, trial)
                if value < residual * (1.0 - _EXCHANGE_RTOL) and (best is None or value < best[0]):
                    best = (value, i, j)
        if best is None:
            break
        residual, i, j = best
        keep[i], spare[j] = spare[j], keep[i]
    rank_of = {idx: pos for pos, idx in enumerate(order)}
    return sorted(keep, key=rank_of.__getitem__)


def resize(ad: LoraAdapter, new_r: int, rng_seed) -> LoraAdapter:
    """Return a copy of ``ad`` whose factor pair has inner dimension ``new_r``.

    Shrinking keeps the pairs chosen by :func:`shrink_selection`, most
    important first. Growing appends zero columns to ``B`` and Gaussian rows
    (std ``1/sqrt(k)``) to ``A`` drawn from ``rng_seed``.
    """
    if not isinstance(new_r, (int, np.integer)) or not 1 <= new_r <= ad.r_max:
        raise RejectedInputError(f"new rank must be in [1, {ad.r_max}], got {new_r!r}")
    if new_r == ad.r_cur:
        return ad
    if new_r < ad.r_cur:
        keep = shrink_selection(ad, new_r)
        b, a = ad.b[:, keep], ad.a[keep, :]
        logger.debug("shrink l=%d h=%d %d->%d", ad.layer_id, ad.head_id, ad.r_cur, new_r)
    else:
        extra = new_r - ad.r_cur
        rng = np.random.default_rng(rng_seed)
        b = np.hstack([ad.b, np.zeros((ad.d, extra))])
        a = np.vstack([ad.a, rng.standard_normal((extra, ad.k)) / math.sqrt(ad.k)])
        logger.debug("grow l=%d h=%d %d->%d", ad.layer_id, ad.head_id, ad.r_cur, new_r)
    return replace(ad, b=b, a=a)


def synchronize(ad: LoraAdapter, rng_seed) -> LoraAdapter:
    """Resize ``ad`` to the rank its current ``alpha`` implies."""
    return resize(ad, effective_rank(ad.r0, ad.alpha, ad.r_max), rng_seed)


def param_count(ad: LoraAdapter) -> int:
    return ad.d * ad.r_cur + ad.r_cur * ad.k


def check_invariants(ad: LoraAdapter) -> None:
    """Raise :class:`InvariantBreachError` if a synchronized adapter is inconsistent."""
    problems = {}
    expected = effective_rank(ad.r0, ad.alpha, ad.r_max)
    if ad.r_cur != expected:
        problems["r_cur"] = (ad.r_cur, expected)
    if not 1 <= ad.r_cur <= ad.r_max:
        problems["r_bounds"] = (ad.r_cur, ad.r_max)
    if not 0.0 <= ad.alpha <= ad.alpha_max:
        problems["alpha_box"] = (ad.alpha, ad.alpha_max)
    if ad.b.shape[1] != ad.a.shape[0]:
        problems["factor_shapes"] = (ad.b.shape, ad.a.shape)
    if problems:
        raise InvariantBreachError(
            f"adapter (layer={ad.layer_id}, head={ad.head_id}) out of sync", problems
        )
