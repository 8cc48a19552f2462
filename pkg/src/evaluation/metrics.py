"""Oracle checks for the numerical core.

Each check returns ``(label, score, reason)``: ``label`` is ``pass`` or
``fail``, ``score`` is the fraction of sub-cases that held.
"""

import logging
import math
from dataclasses import replace

import numpy as np

from src.adapter import LoraAdapter, forward_delta, resize
from src.errors import InvariantBreachError
from src.experiments import convex_toy
from src.linalg import frobenius_norm, svd, truncate_rank
from src.model import ModelConfig, backward, build_model, forward, task_loss
from src.trainer import (
    TrainerConfig,
    TrainingState,
    convergence_monitor,
    stability_monitor,
    train,
)

logger = logging.getLogger(__name__)

CheckResult = tuple[str, float, str]

FD_STEP = 1e-5
FD_REL_TOL = 1e-4
FD_ABS_FLOOR = 1e-9


def _verdict(passed: int, total: int, reason: str) -> CheckResult:
    score = passed / total if total else 0.0
    return ("pass" if passed == total else "fail", score, reason)


def check_eckart_young(seed: int = 0, n_matrices: int = 50, n_random: int = 200) -> CheckResult:
    """Truncation residual equals the SVD tail, respects the loose bound, and beats random factorizations."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 10]))
    passed = total = 0
    worst = 0.0
    for _ in range(n_matrices):
        m, n = int(rng.integers(1, 33)), int(rng.integers(1, 25))
        target = rng.standard_normal((m, n))
        sigma = svd(target).sigma
        for r in range(1, min(m, n) + 1):
            total += 1
            trunc = truncate_rank(target, r)
            actual = frobenius_norm(target - trunc.matrix)
            tail = math.sqrt(float(np.sum(sigma[r:] ** 2)))
            worst = max(worst, abs(actual - tail))
            ok = abs(actual - tail) <= 1e-8 and actual <= float(np.sum(sigma[r:])) + 1e-8
            if ok:
                p = rng.standard_normal((n_random, m, r))
                q = rng.standard_normal((n_random, r, n))
                random_residuals = np.linalg.norm(target - p @ q, axis=(1, 2))
                ok = bool(np.all(random_residuals >= actual - 1e-12))
            passed += ok
    return _verdict(passed, total, f"{passed}/{total} (matrix, rank) cases; worst |residual - tail| = {worst:.2e}")


def check_gradients(seed: int = 0, n_coords: int = 100) -> CheckResult:
    """Analytic gradients against central finite differences on a small network."""
    cfg = ModelConfig(layers=2, heads=2, d=16, k=16, seed=seed)
    state = build_model(cfg, r0=4, adapter_seed=seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))
    for row in state.adapters:
        for h, ad in enumerate(row):
            row[h] = replace(ad, b=rng.standard_normal(ad.b.shape) / math.sqrt(ad.d),
                             alpha=float(rng.uniform(0.5, 1.5)))
    x = rng.standard_normal((8, cfg.k))
    y = rng.standard_normal((8, cfg.k))
    bundle = backward(state, x, y)

    def loss() -> float:
        return task_loss(forward(state, x), y)

    passed = 0
    worst = 0.0
    for _ in range(n_coords):
        l, h = int(rng.integers(cfg.layers)), int(rng.integers(cfg.heads))
        ad = state.adapters[l][h]
        kind = ("a", "b", "alpha")[int(rng.integers(3))]
        if kind == "alpha":
            analytic = bundle.grad_alpha[l][h]
            base = ad.alpha
            ad.alpha = base + FD_STEP
            plus = loss()
            ad.alpha = base - FD_STEP
            minus = loss()
            ad.alpha = base
        else:
            arr = getattr(ad, kind)
            idx = tuple(int(rng.integers(s)) for s in arr.shape)
            analytic = float((bundle.grad_a if kind == "a" else bundle.grad_b)[l][h][idx])
            base = arr[idx]
            arr[idx] = base + FD_STEP
            plus = loss()
            arr[idx] = base - FD_STEP
            minus = loss()
            arr[idx] = base
        numeric = (plus - minus) / (2 * FD_STEP)
        err = abs(numeric - analytic)
        worst = max(worst, err / max(abs(numeric), abs(analytic), FD_ABS_FLOOR))
        passed += err <= FD_REL_TOL * max(abs(numeric), abs(analytic)) + FD_ABS_FLOOR
    return _verdict(passed, n_coords, f"{passed}/{n_coords} coordinates; worst relative error = {worst:.2e}")


def check_stability(seed: int = 0, steps: int = 300) -> CheckResult:
    """Per-step scale-factor change stays within ``clip_c * eta_alpha`` under gradient spikes."""
    cfg = ModelConfig(layers=2, heads=3, d=8, k=8, seed=seed)
    trainer = TrainerConfig(r0=2, eta_theta=1e-2, eta_alpha=5e-3, clip_c=10.0, steps=steps, seed=seed)
    state = TrainingState.start(build_model(cfg, trainer.r0, adapter_seed=seed))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 12]))
    x = rng.standard_normal((32, cfg.k))
    y = rng.standard_normal((32, cfg.k))

    def spikes(t: int, g: np.ndarray) -> np.ndarray:
        if t % 7 == 0:
            return g + rng.choice([-1e6, 1e6], size=g.shape)
        return g

    records = train(state, trainer, x, y, alpha_grad_hook=spikes)
    try:
        report = stability_monitor(records, trainer.clip_c, trainer.eta_alpha, final_alphas=state.alphas())
    except InvariantBreachError as e:
        return ("fail", 0.0, str(e))
    return ("pass", 1.0, f"max |d alpha| = {report.max_delta:.3e} <= bound {report.bound:.3e}")


def check_convergence(seed: int = 0, steps: int = 2000) -> CheckResult:
    """Convex toy passes the ``C / T`` check; a constant gradient stream fails it."""
    toy = convex_toy(seed=seed, steps=steps)
    records = train(toy.state, toy.trainer, toy.x, toy.y)
    toy_report = convergence_monitor(records)
    flat = [replace(r, grad_sq=1.0) for r in records]
    flat_report = convergence_monitor(flat)
    passed = int(toy_report.passed) + int(not flat_report.passed)
    return _verdict(
        passed, 2,
        f"toy C={toy_report.fitted_c:.3g} tail={toy_report.max_tail_product:.3g} "
        f"({'pass' if toy_report.passed else 'fail'}); constant-gradient stream "
        f"{'rejected' if not flat_report.passed else 'accepted'}",
    )


def check_grow_neutral(seed: int = 0, n_cases: int = 1000) -> CheckResult:
    """Growing an adapter leaves its delta bit-identical."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 13]))
    passed = 0
    for case in range(n_cases):
        d, k = int(rng.integers(1, 17)), int(rng.integers(1, 17))
        r0 = int(rng.integers(1, 9))
        r = int(rng.integers(1, 2 * r0 + 1))
        ad = LoraAdapter(
            b=rng.standard_normal((d, r)), a=rng.standard_normal((r, k)), r0=r0,
            alpha=float(rng.uniform(0.0, 4.0)),
        )
        new_r = int(rng.integers(r, 2 * r0 + 1))
        grown = resize(ad, new_r, np.random.SeedSequence([seed, case]))
        passed += bool(np.array_equal(forward_delta(ad), forward_delta(grown)))
    return _verdict(passed, n_cases, f"{passed}/{n_cases} grow cases bit-identical")
