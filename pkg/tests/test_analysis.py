"""Tests for approximation-error, capacity and allocation statistics."""

import math

import numpy as np
import pytest

from src.adapter import LoraAdapter
from src.analysis import (
    approx_error,
    approx_error_grid,
    capacity_term,
    min_alpha_for_tolerance,
    rank_stabilization_step,
    rank_statistics,
)
from src.errors import RejectedInputError
from src.linalg import frobenius_norm, svd, tail_energy


def adapter_at_rank(r, r0, d=8, k=8):
    return LoraAdapter(b=np.zeros((d, r)), a=np.zeros((r, k)), r0=r0, alpha=r / r0)


class TestApproxError:
    def test_svd_truncation_meets_tail(self, rng):
        target = rng.standard_normal((6, 5))
        result = svd(target)
        r = 2
        ad = LoraAdapter(b=result.u[:, :r] * result.sigma[:r], a=result.v[:, :r].T, r0=r)
        report = approx_error(target, ad)
        assert abs(report.epsilon - report.tail_sqrt) <= 1e-8
        assert report.tail_sqrt <= report.loose_bound

    def test_zero_adapter(self, rng):
        target = rng.standard_normal((4, 4))
        ad = LoraAdapter(b=np.zeros((4, 2)), a=np.zeros((2, 4)), r0=2, alpha=0.0)
        assert approx_error(target, ad).epsilon == pytest.approx(frobenius_norm(target))

    def test_random_adapter_not_better_than_svd(self, rng):
        target = rng.standard_normal((7, 6))
        for _ in range(20):
            ad = LoraAdapter(b=rng.standard_normal((7, 3)), a=rng.standard_normal((3, 6)), r0=3)
            report = approx_error(target, ad)
            assert report.epsilon >= report.tail_sqrt - 1e-8

    def test_shape_mismatch_rejected(self):
        with pytest.raises(RejectedInputError):
            approx_error(np.zeros((3, 3)), adapter_at_rank(1, 1, d=4, k=4))

    def test_grid(self, rng):
        targets = [[rng.standard_normal((8, 8)) for _ in range(2)] for _ in range(2)]
        adapters = [[adapter_at_rank(2, 2) for _ in range(2)] for _ in range(2)]
        grid = approx_error_grid(targets, adapters)
        assert len(grid) == 2 and all(len(row) == 2 for row in grid)
        with pytest.raises(RejectedInputError):
            approx_error_grid(targets, adapters[:1])


class TestMinAlpha:
    def test_loose_tolerance_gives_floor(self, rng):
        target = rng.standard_normal((5, 5))
        search = min_alpha_for_tolerance(target, r0=4, eps=frobenius_norm(target))
        assert search.alpha == pytest.approx(1 / 4)
        assert search.rank == 1

    def test_exact_rank_three(self, rng):
        target = rng.standard_normal((20, 3)) @ rng.standard_normal((3, 20))
        search = min_alpha_for_tolerance(target, r0=16, eps=1e-9)
        assert search.alpha == pytest.approx(3 / 16)
        assert not search.saturated

    def test_matches_linear_scan(self, rng):
        target = rng.standard_normal((9, 7))
        sigma = svd(target).sigma
        for eps in (0.5, 1.0, 2.0, 4.0):
            expected = next(r for r in range(1, 20) if tail_energy(sigma, r) <= eps)
            assert min_alpha_for_tolerance(target, 8, eps).rank == expected

    def test_non_increasing_in_eps(self, rng):
        target = rng.standard_normal((12, 9))
        total = frobenius_norm(target)
        eps_grid = np.geomspace(1e-3, 1.5, 60) * total
        alphas = [min_alpha_for_tolerance(target, r0=6, eps=float(e)).alpha for e in eps_grid]
        assert all(hi >= lo for hi, lo in zip(alphas, alphas[1:]))
        assert alphas[0] > alphas[-1] == pytest.approx(1 / 6)

    def test_saturates_at_cap(self, rng):
        target = rng.standard_normal((10, 10))
        search = min_alpha_for_tolerance(target, r0=1, eps=1e-12)
        assert search.saturated and search.rank == 2

    def test_nonpositive_eps_rejected(self):
        with pytest.raises(RejectedInputError):
            min_alpha_for_tolerance(np.eye(3), 2, 0.0)


class TestCapacity:
    def test_unit_alphas(self):
        assert capacity_term([1.0] * 4, 16) == pytest.approx(4 * math.log(16), abs=1e-4)
        assert capacity_term([1.0] * 4, 16) == pytest.approx(11.0904, abs=1e-4)

    def test_floored_head_adds_nothing(self):
        assert capacity_term([0.0, 1 / 16], 16) == 0.0

    def test_matches_scalar_loop(self, rng):
        alphas = rng.uniform(0.0, 3.0, size=12)
        expected = 0.0
        for a in alphas:
            expected += math.log(max(1.0, 8 * a))
        assert capacity_term(alphas, 8) == pytest.approx(expected, rel=1e-12)

    def test_monotone_in_each_alpha(self, rng):
        base = rng.uniform(0.0, 2.0, size=6)
        for i in range(base.size):
            values = []
            for a in np.linspace(0.0, 4.0, 41):
                alphas = base.copy()
                alphas[i] = a
                values.append(capacity_term(alphas, 8))
            assert all(hi >= lo for lo, hi in zip(values, values[1:]))
            assert values[-1] > values[0]


class TestRankStatistics:
    def test_uniform_grid(self):
        grid = [[adapter_at_rank(16, 16, d=32, k=32) for _ in range(4)] for _ in range(2)]
        stats = rank_statistics(grid, 16)
        assert (stats.frac_below, stats.frac_above) == (0.0, 0.0)
        assert stats.mean_scaled_rank == pytest.approx(16.0)
        assert stats.relative_params == 1.0 and stats.pruned_fraction == 0.0
        assert stats.layer_rank_ratio == (1.0, 1.0)

    def test_split_grid(self):
        grid = [[adapter_at_rank(1, 16, 32, 32), adapter_at_rank(32, 16, 32, 32)] for _ in range(2)]
        stats = rank_statistics(grid, 16)
        assert (stats.frac_below, stats.frac_middle, stats.frac_above) == (0.5, 0.0, 0.5)
        assert stats.mean_effective_rank == pytest.approx(16.5)

    def test_params_against_uniform(self):
        grid = [[adapter_at_rank(2, 4), adapter_at_rank(4, 4)]]
        stats = rank_statistics(grid, 4)
        assert stats.total_params == 16 * 2 + 16 * 4
        assert stats.uniform_params == 2 * 16 * 4
        assert stats.pruned_fraction == pytest.approx(0.25)

    def test_empty_rejected(self):
        with pytest.raises(RejectedInputError):
            rank_statistics([], 4)


class TestRankStabilization:
    def test_never_changes(self):
        assert rank_stabilization_step([[[2, 2]]] * 5) is None

    def test_last_change(self):
        trajectory = [[[2, 2]], [[3, 2]], [[3, 2]], [[3, 1]], [[3, 1]]]
        assert rank_stabilization_step(trajectory) == 3
