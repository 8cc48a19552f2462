"""Frozen multi-head network with per-head adapters.

Layer ``l`` takes ``x`` (``n x k``), sends it through every head's effective
weight ``W_{l,h} + alpha * B A`` (``d x k``), concatenates the ``H`` head
outputs (``n x H*d``), applies the frozen mixing matrix (``k x H*d``) and a
``tanh``. The last layer skips the ``tanh``. Gradients are derived by hand
from the cached activations of the forward pass.
"""

import hashlib
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from src.adapter import LoraAdapter, forward_delta, init_adapter
from src.errors import RejectedInputError
from src.linalg import Matrix, as_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelConfig:
    layers: int = 3
    heads: int = 4
    d: int = 32
    k: int = 32
    seed: int = 0
    nonlinearity: str = "tanh"

    def __post_init__(self):
        for name in ("layers", "heads", "d", "k"):
            if getattr(self, name) < 1:
                raise RejectedInputError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.nonlinearity != "tanh":
            raise RejectedInputError(f"unsupported nonlinearity {self.nonlinearity!r}")


@dataclass
class ModelState:
    config: ModelConfig
    base: list[list[Matrix]]
    mixing: list[Matrix]
    adapters: list[list[LoraAdapter]] = field(default_factory=list)

    def heads(self):
        """Iterate ``(layer, head, adapter)`` in layer-major order."""
        for l, row in enumerate(self.adapters):
            for h, ad in enumerate(row):
                yield l, h, ad

    @property
    def grid_shape(self) -> tuple[int, int]:
        return len(self.adapters), len(self.adapters[0]) if self.adapters else 0


class GradientBundle(NamedTuple):
    loss: float
    grad_b: list[list[Matrix]]
    grad_a: list[list[Matrix]]
    grad_alpha: list[list[float]]


def _orthonormal(rng: np.random.Generator, rows: int, cols: int) -> Matrix:
    """Seeded matrix with orthonormal rows (``rows <= cols``) or columns."""
    q, r = np.linalg.qr(rng.standard_normal((max(rows, cols), min(rows, cols))))
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    return q if rows >= cols else q.T


def frozen_weights(cfg: ModelConfig) -> tuple[list[list[Matrix]], list[Matrix]]:
    """Seeded base head weights and mixing matrices.

    Mixing matrices are semi-orthogonal. With ``heads * d <= k`` the mixing
    is injective, so every head's contribution to a layer stays separable.
    """
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
    base = [
        [rng.standard_normal((cfg.d, cfg.k)) / math.sqrt(cfg.k) for _ in range(cfg.heads)]
        for _ in range(cfg.layers)
    ]
    width = cfg.heads * cfg.d
    mixing = [_orthonormal(rng, cfg.k, width) for _ in range(cfg.layers)]
    return base, mixing


def build_model(cfg: ModelConfig, r0: int, adapter_seed: int, alpha_max: float = 4.0) -> ModelState:
    """Frozen network plus freshly initialized adapters at rank ``r0``."""
    base, mixing = frozen_weights(cfg)
    rng = np.random.default_rng(np.random.SeedSequence([adapter_seed, 1]))
    adapters = [
        [init_adapter(cfg.d, cfg.k, r0, rng, layer_id=l, head_id=h, alpha_max=alpha_max)
         for h in range(cfg.heads)]
        for l in range(cfg.layers)
    ]
    logger.info(
        "built model L=%d H=%d d=%d k=%d r0=%d", cfg.layers, cfg.heads, cfg.d, cfg.k, r0
    )
    return ModelState(config=cfg, base=base, mixing=mixing, adapters=adapters)


def base_weights_digest(state: ModelState) -> str:
    """sha256 over every frozen array, for the frozen-base invariant."""
    digest = hashlib.sha256()
    for row in state.base:
        for w in row:
            digest.update(np.ascontiguousarray(w).tobytes())
    for m in state.mixing:
        digest.update(np.ascontiguousarray(m).tobytes())
    return digest.hexdigest()


class _Cache(NamedTuple):
    inputs: list[Matrix]
    effective: list[list[Matrix]]
    outputs: list[Matrix]


def _check_input(state: ModelState, x) -> Matrix:
    x = as_matrix(x, "x")
    if x.shape[1] != state.config.k:
        raise RejectedInputError(f"input has {x.shape[1]} features, model expects {state.config.k}")
    if state.grid_shape != (state.config.layers, state.config.heads):
        raise RejectedInputError(f"adapter grid {state.grid_shape} does not match the model")
    return x


def _run(state: ModelState, x: Matrix) -> _Cache:
    inputs, effective, outputs = [], [], []
    last = state.config.layers - 1
    h_in = x
    for l in range(state.config.layers):
        weights = [
            state.base[l][h] + forward_delta(ad) for h, ad in enumerate(state.adapters[l])
        ]
        z = np.hstack([h_in @ w.T for w in weights])
        pre = z @ state.mixing[l].T
        out = pre if l == last else np.tanh(pre)
        inputs.append(h_in)
        effective.append(weights)
        outputs.append(out)
        h_in = out
    return _Cache(inputs, effective, outputs)


def forward(state: ModelState, x) -> Matrix:
    x = _check_input(state, x)
    return _run(state, x).outputs[-1]


def task_loss(pred, target) -> float:
    """Mean squared error over every element of the batch."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise RejectedInputError(f"prediction {pred.shape} and target {target.shape} differ")
    diff = pred - target
    return float(np.mean(diff * diff))


def backward(state: ModelState, x, target) -> GradientBundle:
    """Exact gradients of :func:`task_loss` for every ``A``, ``B`` and ``alpha``.

    ``alpha`` is differentiated only through the ``alpha * B A`` gate.
    """
    x = _check_input(state, x)
    target = as_matrix(target, "target")
    cache = _run(state, x)
    pred = cache.outputs[-1]
    loss = task_loss(pred, target)

    cfg = state.config
    last = cfg.layers - 1
    grad_b = [[None] * cfg.heads for _ in range(cfg.layers)]
    grad_a = [[None] * cfg.heads for _ in range(cfg.layers)]
    grad_alpha = [[0.0] * cfg.heads for _ in range(cfg.layers)]

    g_out = 2.0 * (pred - target) / pred.size
    for l in range(last, -1, -1):
        out = cache.outputs[l]
        g_pre = g_out if l == last else g_out * (1.0 - out * out)
        g_z = g_pre @ state.mixing[l]
        h_in = cache.inputs[l]
        g_in = np.zeros_like(h_in)
        for h, ad in enumerate(state.adapters[l]):
            g_zh = g_z[:, h * cfg.d:(h + 1) * cfg.d]
            g_w = g_zh.T @ h_in
            grad_b[l][h] = ad.alpha * (g_w @ ad.a.T)
            grad_a[l][h] = ad.alpha * (ad.b.T @ g_w)
            grad_alpha[l][h] = float(np.sum(g_w * (ad.b @ ad.a)))
            g_in += g_zh @ cache.effective[l][h]
        g_out = g_in
    return GradientBundle(loss=loss, grad_b=grad_b, grad_a=grad_a, grad_alpha=grad_alpha)
