"""Post-hoc checks over a stream of step records.

``stability_monitor`` proves that the per-step change of every scale factor
stayed within ``clip_c * eta_alpha``. ``convergence_monitor`` is an empirical
check that the running minimum of the squared meta-gradient norm decays at
least like ``C / T``.
"""

import logging
from typing import NamedTuple, Optional, Sequence

import numpy as np

from src.errors import InvariantBreachError, RejectedInputError

from .loop import StepRecord

logger = logging.getLogger(__name__)

_BOUND_SLACK = 1e-9


class StabilityReport(NamedTuple):
    bound: float
    max_delta: float
    steps_checked: int
    worst_step: int
    worst_head: tuple[int, int]


class ConvergenceReport(NamedTuple):
    fitted_c: float
    max_tail_product: float
    final_min_grad_sq: float
    split_index: int
    passed: bool


def stability_monitor(
    records: Sequence[StepRecord],
    clip_c: float,
    eta_alpha: float,
    final_alphas: Optional[Sequence[Sequence[float]]] = None,
) -> StabilityReport:
    """Check every recorded scale-factor change against ``clip_c * eta_alpha``.

    Records carry the scale factors each step started from. ``final_alphas``
    are the values after the last step's update; pass them so that update is
    checked too.
    """
    rows = [r.alphas for r in records]
    if final_alphas is not None:
        rows.append(tuple(tuple(row) for row in final_alphas))
    if len(rows) < 2:
        raise RejectedInputError("stability monitor needs at least 2 scale-factor snapshots")
    bound = clip_c * eta_alpha
    alphas = np.array(rows, dtype=np.float64)
    deltas = np.abs(np.diff(alphas, axis=0))
    worst = np.unravel_index(int(np.argmax(deltas)), deltas.shape)
    max_delta = float(deltas[worst])
    report = StabilityReport(
        bound=bound,
        max_delta=max_delta,
        steps_checked=deltas.shape[0],
        worst_step=records[int(worst[0])].step,
        worst_head=(int(worst[1]), int(worst[2])),
    )
    limit = bound * (1.0 + _BOUND_SLACK)
    if max_delta > limit:
        violations = int(np.sum(deltas > limit))
        logger.error("stability bound %.3e exceeded: max |d alpha| = %.3e", bound, max_delta)
        raise InvariantBreachError(
            "scale-factor step exceeded clip_c * eta_alpha",
            {"bound": bound, "max_delta": max_delta, "violations": violations, **report._asdict()},
        )
    return report


def convergence_monitor(records: Sequence[StepRecord], split: float = 0.5) -> ConvergenceReport:
    """Check ``T * min_{t<=T} ||g_t||^2`` on the tail against the head of the run.

    ``C`` is the median of ``T * m(T)`` over the first ``split`` fraction of
    the run; the check passes when the tail never exceeds ``3 * C``.
    """
    if not records:
        raise RejectedInputError("convergence monitor needs at least one record")
    if not 0.0 < split < 1.0:
        raise RejectedInputError(f"split must be in (0, 1), got {split}")
    grad_sq = np.array([r.grad_sq for r in records], dtype=np.float64)
    running_min = np.minimum.accumulate(grad_sq)
    horizon = np.arange(1, len(records) + 1, dtype=np.float64)
    products = horizon * running_min

    split_index = max(1, int(split * len(records)))
    fitted_c = float(np.median(products[:split_index]))
    tail = products[split_index:]
    max_tail = float(tail.max()) if tail.size else 0.0
    passed = max_tail <= 3.0 * fitted_c
    logger.info(
        "convergence check: C=%.4g max tail T*m(T)=%.4g -> %s",
        fitted_c, max_tail, "pass" if passed else "fail",
    )
    return ConvergenceReport(
        fitted_c=fitted_c,
        max_tail_product=max_tail,
        final_min_grad_sq=float(running_min[-1]),
        split_index=split_index,
        passed=passed,
    )
