"""Sparsity + total-variation regularizer over the rank scale factors.

For a set of heads with scale traces ``alpha_h(0..t)``::

    R(t) = sum_h |alpha_h(t)| + beta * sum_h (alpha_h(t) - alpha_h(t-1))^2

evaluated online, one step at a time.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from src.errors import RejectedInputError


@dataclass
class AlphaTrace:
    """Append-only history of one head's scale factor; index 0 is the start value."""

    values: list[float] = field(default_factory=lambda: [1.0])

    def append(self, alpha: float) -> None:
        self.values.append(float(alpha))

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, t: int) -> float:
        return self.values[t]

    @property
    def last_step(self) -> int:
        return len(self.values) - 1


@dataclass(frozen=True)
class RegConfig:
    lam: float = 0.01
    beta: float = 0.1

    def __post_init__(self):
        if self.lam < 0 or self.beta < 0:
            raise RejectedInputError(f"lambda and beta must be >= 0, got {self.lam}, {self.beta}")


class RegValue(NamedTuple):
    total: float
    l1: float
    tv: float


def _check_step(trace: AlphaTrace, t: int) -> None:
    if t < 0 or t > trace.last_step:
        raise RejectedInputError(f"step {t} outside trace covering 0..{trace.last_step}")


def sign(x: float) -> float:
    """Subgradient of ``|x|`` with ``sign(0) = 0``."""
    return 0.0 if x == 0 else math.copysign(1.0, x)


def temporal_gradient(trace: AlphaTrace, t: int) -> float:
    """``alpha(t) - alpha(t-1)``; zero at ``t = 0``."""
    _check_step(trace, t)
    if t == 0:
        return 0.0
    return trace[t] - trace[t - 1]


def regularizer_value(traces: Sequence[AlphaTrace], t: int, cfg: RegConfig) -> RegValue:
    lengths = {len(trace) for trace in traces}
    if len(lengths) > 1:
        raise RejectedInputError(f"inconsistent trace lengths: {sorted(lengths)}")
    l1 = 0.0
    tv = 0.0
    for trace in traces:
        _check_step(trace, t)
        l1 += abs(trace[t])
        step = temporal_gradient(trace, t)
        tv += step * step
    return RegValue(total=l1 + cfg.beta * tv, l1=l1, tv=tv)


def alpha_gradient(task_grad_alpha: float, trace: AlphaTrace, t: int, cfg: RegConfig) -> float:
    """Meta-gradient for one head's scale factor at step ``t``.

    The look-ahead term ``alpha(t+1) - alpha(t)`` is not available online
    and is dropped; the regularizer part is then the exact derivative of
    :func:`regularizer_value` with respect to ``alpha(t)``.
    """
    _check_step(trace, t)
    smooth = 2.0 * cfg.beta * temporal_gradient(trace, t)
    return task_grad_alpha + cfg.lam * (sign(trace[t]) + smooth)
