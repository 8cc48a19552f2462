"""Tests for the joint training loop and its monitors."""

from dataclasses import replace

import numpy as np
import pytest

from src.adapter import effective_rank
from src.errors import InvariantBreachError, RejectedInputError, TrainingDivergedError
from src.evaluation import check_convergence, check_stability
from src.experiments import convex_toy
from src.model import ModelConfig, base_weights_digest, build_model
from src.trainer import (
    Mode,
    TrainerConfig,
    TrainingState,
    convergence_monitor,
    finalize,
    stability_monitor,
    train,
    train_step,
)


def run(cfg, model_cfg=None, seed=5, hook=None):
    model_cfg = model_cfg or ModelConfig(layers=2, heads=2, d=6, k=6, seed=seed)
    state = TrainingState.start(build_model(model_cfg, cfg.r0, adapter_seed=seed))
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((16, model_cfg.k))
    y = rng.standard_normal((16, model_cfg.k))
    records = train(state, cfg, x, y, alpha_grad_hook=hook)
    return state, records


class TestTrainerConfig:
    def test_default_stability_bound(self):
        assert TrainerConfig().stability_bound == pytest.approx(5e-4)

    @pytest.mark.parametrize("field, value", [("r0", 0), ("eta_theta", 0.0), ("eta_alpha", -1e-3), ("clip_c", 0.0)])
    def test_invalid_rejected(self, field, value):
        with pytest.raises(RejectedInputError):
            TrainerConfig(**{field: value})

    def test_mode_from_string(self):
        assert TrainerConfig(mode="layerwise").mode is Mode.LAYERWISE


class TestTrainStep:
    def test_loss_decreases_on_quadratic(self):
        toy = convex_toy(seed=1, steps=100, eta_theta=0.05)
        records = train(toy.state, toy.trainer, toy.x, toy.y)
        losses = [r.task_loss for r in records]
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_frozen_alpha_is_fixed_rank(self):
        state, records = run(TrainerConfig(r0=2, eta_alpha=0.0, eta_theta=0.05, steps=30))
        for record in records:
            assert all(a == 1.0 for row in record.alphas for a in row)
            assert all(r == 2 for row in record.ranks for r in row)
        assert all(ad.alpha == 1.0 for _, _, ad in state.model.heads())

    def test_uniform_mode_never_resizes(self):
        _, records = run(TrainerConfig(r0=3, mode=Mode.UNIFORM, eta_alpha=0.5, steps=20))
        assert {r for rec in records for row in rec.ranks for r in row} == {3}

    def test_replay_is_bit_identical(self):
        cfg = TrainerConfig(r0=2, eta_theta=0.05, eta_alpha=0.05, lam=0.5, steps=25)
        _, first = run(cfg)
        _, second = run(cfg)
        assert first == second

    def test_meta_loss_identity(self):
        cfg = TrainerConfig(r0=2, eta_theta=0.05, eta_alpha=0.05, lam=0.3, beta=0.2, steps=25)
        _, records = run(cfg)
        for r in records:
            assert abs(r.meta_loss - (r.task_loss + cfg.lam * (r.l1 + cfg.beta * r.tv))) <= 1e-12

    def test_records_are_synchronized_pre_update(self):
        cfg = TrainerConfig(r0=2, eta_theta=0.05, eta_alpha=0.2, lam=2.0, steps=15)
        state, records = run(cfg)
        trace = state.traces[0][0]
        for r in records:
            assert r.alphas[0][0] == trace[r.step]
            assert r.ranks[0][0] == effective_rank(2, r.alphas[0][0])

    def test_strong_l1_shrinks_ranks(self):
        cfg = TrainerConfig(r0=3, eta_theta=0.01, eta_alpha=0.05, lam=5.0, clip_c=10.0, steps=40)
        state, _ = run(cfg)
        finalize(state, cfg)
        assert all(ad.r_cur == 1 for _, _, ad in state.model.heads())

    def test_layerwise_shares_alpha_within_layer(self):
        cfg = TrainerConfig(r0=2, eta_theta=0.05, eta_alpha=0.1, lam=0.5, mode=Mode.LAYERWISE, steps=20)
        state, records = run(cfg)
        for record in records:
            for row in record.alphas:
                assert len(set(row)) == 1

    def test_base_weights_frozen(self):
        cfg = TrainerConfig(r0=2, eta_theta=0.05, eta_alpha=0.05, steps=10)
        model = build_model(ModelConfig(layers=2, heads=2, d=6, k=6, seed=5), 2, adapter_seed=5)
        digest = base_weights_digest(model)
        state = TrainingState.start(model)
        rng = np.random.default_rng(0)
        train(state, cfg, rng.standard_normal((8, 6)), rng.standard_normal((8, 6)))
        assert base_weights_digest(state.model) == digest

    def test_divergence_raises(self):
        cfg = TrainerConfig(r0=2, eta_theta=1e6, eta_alpha=0.0, steps=200)
        with pytest.raises(TrainingDivergedError) as exc:
            run(cfg)
        assert exc.value.step > 0

    def test_step_advances_and_histories_grow(self, small_model, small_batch):
        state = TrainingState.start(small_model)
        cfg = TrainerConfig(r0=2, eta_theta=0.01, eta_alpha=0.01, steps=1)
        state, record = train_step(state, cfg, small_batch)
        assert state.step == 1 and record.step == 0
        assert all(len(trace) == 2 for trace in state.flat_traces())
        assert all(len(ad.alpha_history) == 2 for _, _, ad in state.model.heads())

    def test_metrics_row_keys(self, small_model, small_batch):
        state = TrainingState.start(small_model)
        _, record = train_step(state, TrainerConfig(r0=2, steps=1), small_batch)
        assert list(record.metrics_row()) == ["step", "task_loss", "meta_loss", "l1", "tv", "grad_norm", "params"]


class TestStabilityMonitor:
    def test_constant_alpha(self):
        _, records = run(TrainerConfig(r0=2, eta_alpha=0.0, steps=5))
        assert stability_monitor(records, 10.0, 5e-5).max_delta == 0.0

    def test_spikes_are_clipped(self):
        cfg = TrainerConfig(r0=2, eta_theta=0.01, eta_alpha=1e-3, clip_c=10.0, steps=30)
        spike = lambda t, g: g + 1e8 * np.sign(np.cos(t + np.arange(g.size).reshape(g.shape)))
        _, records = run(cfg, hook=spike)
        report = stability_monitor(records, cfg.clip_c, cfg.eta_alpha)
        assert report.max_delta <= cfg.stability_bound * (1 + 1e-9)
        assert report.max_delta == pytest.approx(cfg.stability_bound, rel=1e-9)

    def test_oracle_suite(self):
        assert check_stability(steps=60)[0] == "pass"

    def test_violation_raises(self):
        _, records = run(TrainerConfig(r0=2, eta_alpha=0.1, lam=1.0, steps=5))
        with pytest.raises(InvariantBreachError):
            stability_monitor(records, clip_c=1e-6, eta_alpha=1e-6)

    def test_needs_two_records(self):
        _, records = run(TrainerConfig(r0=2, steps=1))
        with pytest.raises(RejectedInputError):
            stability_monitor(records, 10.0, 5e-5)

    def test_last_update_is_checked(self):
        cfg = TrainerConfig(r0=2, eta_theta=0.01, eta_alpha=0.01, lam=0.0, steps=6)
        kick_last = lambda t, g: np.full_like(g, 5.0 if t == cfg.steps - 1 else 0.0)
        state, records = run(cfg, hook=kick_last)
        assert stability_monitor(records, clip_c=1.0, eta_alpha=cfg.eta_alpha).max_delta == 0.0
        with pytest.raises(InvariantBreachError) as exc:
            stability_monitor(records, clip_c=1.0, eta_alpha=cfg.eta_alpha, final_alphas=state.alphas())
        assert exc.value.details["worst_step"] == cfg.steps - 1
        assert exc.value.details["max_delta"] == pytest.approx(0.05)

    def test_single_record_with_final_alphas(self):
        state, records = run(TrainerConfig(r0=2, steps=1))
        report = stability_monitor(records, 10.0, 5e-5, final_alphas=state.alphas())
        assert report.steps_checked == 1


class TestConvergenceMonitor:
    def test_zero_gradients_pass(self):
        _, records = run(TrainerConfig(r0=2, steps=4))
        zeroed = [replace(r, grad_sq=0.0) for r in records]
        report = convergence_monitor(zeroed)
        assert report.passed and report.final_min_grad_sq == 0.0

    def test_constant_gradient_fails(self):
        _, records = run(TrainerConfig(r0=2, steps=40))
        assert not convergence_monitor([replace(r, grad_sq=1.0) for r in records]).passed

    def test_convex_toy(self):
        label, _, reason = check_convergence()
        assert label == "pass", reason

    def test_bad_split_rejected(self):
        _, records = run(TrainerConfig(r0=2, steps=2))
        with pytest.raises(RejectedInputError):
            convergence_monitor(records, split=1.0)
