"""Joint training of factor pairs and rank scale factors.

Each step synchronizes every adapter's rank to its scale factor, runs the
forward/backward pass, evaluates the meta-objective, takes a clipped and
box-projected step on the scale factors and a plain gradient step on the
factors.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np

from src.adapter import LoraAdapter, effective_rank, param_count, resize
from src.errors import RejectedInputError, TrainingDivergedError
from src.model import ModelState, backward
from src.regularizer import AlphaTrace, RegConfig, alpha_gradient, regularizer_value

logger = logging.getLogger(__name__)

AlphaGradHook = Callable[[int, np.ndarray], np.ndarray]


class Mode(str, Enum):
    ADAPTIVE = "adaptive"
    UNIFORM = "uniform"
    LAYERWISE = "layerwise"


@dataclass(frozen=True)
class TrainerConfig:
    r0: int = 16
    lam: float = 0.01
    beta: float = 0.1
    eta_theta: float = 1e-4
    eta_alpha: float = 5e-5
    clip_c: float = 10.0
    steps: int = 3000
    seed: int = 0
    alpha_max: float = 4.0
    mode: Mode = Mode.ADAPTIVE
    resize_every: int = 1
    freeze_b: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.seed < 0:
            raise RejectedInputError(f"seed must be >= 0, got {self.seed}")
        if self.r0 < 1:
            raise RejectedInputError(f"r0 must be >= 1, got {self.r0}")
        if self.eta_theta <= 0:
            raise RejectedInputError(f"eta_theta must be > 0, got {self.eta_theta}")
        if self.eta_alpha < 0:
            raise RejectedInputError(f"eta_alpha must be >= 0, got {self.eta_alpha}")
        if self.clip_c <= 0:
            raise RejectedInputError(f"clip_c must be > 0, got {self.clip_c}")
        if self.steps < 1 or self.resize_every < 1:
            raise RejectedInputError("steps and resize_every must be >= 1")
        if self.alpha_max <= 0:
            raise RejectedInputError(f"alpha_max must be > 0, got {self.alpha_max}")

    @property
    def reg(self) -> RegConfig:
        return RegConfig(lam=self.lam, beta=self.beta)

    @property
    def trains_alpha(self) -> bool:
        return self.mode is not Mode.UNIFORM

    @property
    def stability_bound(self) -> float:
        return self.clip_c * self.eta_alpha


@dataclass(frozen=True)
class StepRecord:
    step: int
    task_loss: float
    meta_loss: float
    l1: float
    tv: float
    alphas: tuple[tuple[float, ...], ...]
    ranks: tuple[tuple[int, ...], ...]
    grad_sup: float
    grad_sq: float
    params: int

    def metrics_row(self) -> dict:
        return {
            "step": self.step,
            "task_loss": self.task_loss,
            "meta_loss": self.meta_loss,
            "l1": self.l1,
            "tv": self.tv,
            "grad_norm": self.grad_sup,
            "params": self.params,
        }


@dataclass
class TrainingState:
    """A model together with the scale-factor history of every head."""

    model: ModelState
    traces: list[list[AlphaTrace]] = field(default_factory=list)
    step: int = 0

    @classmethod
    def start(cls, model: ModelState) -> "TrainingState":
        traces = [[AlphaTrace([ad.alpha]) for ad in row] for row in model.adapters]
        return cls(model=model, traces=traces)

    def flat_traces(self) -> list[AlphaTrace]:
        return [trace for row in self.traces for trace in row]

    def alphas(self) -> tuple[tuple[float, ...], ...]:
        return tuple(tuple(ad.alpha for ad in row) for row in self.model.adapters)


def total_params(model: ModelState) -> int:
    return sum(param_count(ad) for _, _, ad in model.heads())


def _grow_seed(cfg: TrainerConfig, step: int, ad: LoraAdapter) -> np.random.SeedSequence:
    return np.random.SeedSequence([cfg.seed, step, ad.layer_id, ad.head_id])


def _synchronize_ranks(model: ModelState, cfg: TrainerConfig, step: int) -> None:
    for row in model.adapters:
        for h, ad in enumerate(row):
            new_r = effective_rank(ad.r0, ad.alpha, ad.r_max)
            row[h] = resize(ad, new_r, _grow_seed(cfg, step, ad))


def _meta_alpha_gradients(state: TrainingState, task_grads, cfg: TrainerConfig, t: int) -> np.ndarray:
    return np.array([
        [alpha_gradient(task_grads[l][h], trace, t, cfg.reg) for h, trace in enumerate(row)]
        for l, row in enumerate(state.traces)
    ])


def train_step(
    state: TrainingState,
    cfg: TrainerConfig,
    batch: tuple[np.ndarray, np.ndarray],
    alpha_grad_hook: Optional[AlphaGradHook] = None,
) -> tuple[TrainingState, StepRecord]:
    """Advance ``state`` by one step; ``state`` is updated in place and returned."""
    t = state.step
    model = state.model
    x, y = batch

    if cfg.trains_alpha and t % cfg.resize_every == 0:
        _synchronize_ranks(model, cfg, t)

    bundle = backward(model, x, y)
    if not math.isfinite(bundle.loss):
        raise TrainingDivergedError("task loss is not finite", t)

    reg = regularizer_value(state.flat_traces(), t, cfg.reg)
    meta_loss = bundle.loss + cfg.lam * reg.total

    pieces = [g.ravel() for row in bundle.grad_a for g in row]
    if not cfg.freeze_b:
        pieces += [g.ravel() for row in bundle.grad_b for g in row]
    g_alpha = None
    if cfg.trains_alpha:
        g_alpha = _meta_alpha_gradients(state, bundle.grad_alpha, cfg, t)
        if alpha_grad_hook is not None:
            g_alpha = np.asarray(alpha_grad_hook(t, g_alpha), dtype=np.float64)
        pieces.append(g_alpha.ravel())
    flat = np.concatenate(pieces)
    if not np.all(np.isfinite(flat)):
        raise TrainingDivergedError("gradient is not finite", t)

    record = StepRecord(
        step=t,
        task_loss=bundle.loss,
        meta_loss=meta_loss,
        l1=reg.l1,
        tv=reg.tv,
        alphas=state.alphas(),
        ranks=tuple(tuple(ad.r_cur for ad in row) for row in model.adapters),
        grad_sup=float(np.max(np.abs(flat))) if flat.size else 0.0,
        grad_sq=float(flat @ flat),
        params=total_params(model),
    )

    if g_alpha is not None:
        if cfg.mode is Mode.LAYERWISE:
            g_alpha = np.repeat(g_alpha.mean(axis=1, keepdims=True), g_alpha.shape[1], axis=1)
        g_alpha = np.clip(g_alpha, -cfg.clip_c, cfg.clip_c)

    for l, row in enumerate(model.adapters):
        for h, ad in enumerate(row):
            alpha = ad.alpha
            if g_alpha is not None:
                alpha = min(max(ad.alpha - cfg.eta_alpha * float(g_alpha[l, h]), 0.0), ad.alpha_max)
            b = ad.b if cfg.freeze_b else ad.b - cfg.eta_theta * bundle.grad_b[l][h]
            a = ad.a - cfg.eta_theta * bundle.grad_a[l][h]
            if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
                raise TrainingDivergedError(f"factor update overflowed at layer {l} head {h}", t)
            row[h] = replace(
                ad,
                b=b,
                a=a,
                alpha_prev=ad.alpha,
                alpha=alpha,
            )
            ad.alpha_history.append(alpha)
            state.traces[l][h].append(alpha)

    state.step = t + 1
    return state, record


def train(
    state: TrainingState,
    cfg: TrainerConfig,
    x: np.ndarray,
    y: np.ndarray,
    on_step: Optional[Callable[[StepRecord], None]] = None,
    alpha_grad_hook: Optional[AlphaGradHook] = None,
) -> list[StepRecord]:
    """Run ``cfg.steps`` full-batch steps and return every step's record."""
    records = []
    log_every = max(1, cfg.steps // 10)
    logger.info("training mode=%s steps=%d r0=%d seed=%d", cfg.mode.value, cfg.steps, cfg.r0, cfg.seed)
    for _ in range(cfg.steps):
        state, record = train_step(state, cfg, (x, y), alpha_grad_hook)
        records.append(record)
        if on_step is not None:
            on_step(record)
        if record.step % log_every == 0:
            logger.debug(
                "step=%d task_loss=%.6g meta_loss=%.6g params=%d",
                record.step, record.task_loss, record.meta_loss, record.params,
            )
    logger.info("training done: final task_loss=%.6g params=%d", records[-1].task_loss, records[-1].params)
    return records


def finalize(state: TrainingState, cfg: TrainerConfig) -> TrainingState:
    """Bring every rank in line with the last scale-factor update."""
    if cfg.trains_alpha:
        _synchronize_ranks(state.model, cfg, state.step)
    return state
