"""Tests for the sparsity + temporal-variation regularizer."""

import pytest

from src.errors import RejectedInputError
from src.regularizer import AlphaTrace, RegConfig, alpha_gradient, regularizer_value, sign, temporal_gradient


class TestTemporalGradient:
    def test_constant_trace(self):
        assert temporal_gradient(AlphaTrace([1.0, 1.0, 1.0]), 2) == 0.0

    def test_single_step(self):
        assert temporal_gradient(AlphaTrace([1.0, 1.5]), 1) == pytest.approx(0.5)

    def test_first_step_is_zero(self):
        assert temporal_gradient(AlphaTrace([3.0]), 0) == 0.0

    @pytest.mark.parametrize("t", [-1, 2])
    def test_outside_trace_rejected(self, t):
        with pytest.raises(RejectedInputError):
            temporal_gradient(AlphaTrace([1.0, 1.5]), t)


class TestRegularizerValue:
    def test_single_head(self):
        value = regularizer_value([AlphaTrace([1.0, 1.5])], 1, RegConfig(beta=0.1))
        assert value.l1 == pytest.approx(1.5)
        assert value.tv == pytest.approx(0.25)
        assert value.total == pytest.approx(1.525)

    def test_all_zero(self):
        traces = [AlphaTrace([0.0, 0.0]) for _ in range(3)]
        assert regularizer_value(traces, 1, RegConfig()).total == 0.0

    def test_constant_heads_only_l1(self):
        traces = [AlphaTrace([1.0, 1.0]) for _ in range(4)]
        value = regularizer_value(traces, 1, RegConfig())
        assert value.total == pytest.approx(4.0)
        assert value.tv == 0.0

    def test_permutation_invariant(self):
        traces = [AlphaTrace([1.0, 0.7]), AlphaTrace([1.0, 1.3]), AlphaTrace([1.0, 2.0])]
        cfg = RegConfig(beta=0.3)
        forward = regularizer_value(traces, 1, cfg)
        backward = regularizer_value(traces[::-1], 1, cfg)
        assert forward.total == pytest.approx(backward.total, abs=1e-15)

    def test_inconsistent_lengths_rejected(self):
        with pytest.raises(RejectedInputError, match="inconsistent"):
            regularizer_value([AlphaTrace([1.0]), AlphaTrace([1.0, 1.0])], 0, RegConfig())

    def test_negative_weights_rejected(self):
        with pytest.raises(RejectedInputError):
            RegConfig(lam=-0.1)


class TestAlphaGradient:
    def test_worked_example(self):
        cfg = RegConfig(lam=0.01, beta=0.1)
        assert alpha_gradient(0.2, AlphaTrace([1.0, 1.5]), 1, cfg) == pytest.approx(0.211, abs=1e-12)

    def test_regularizer_off(self):
        cfg = RegConfig(lam=0.0, beta=0.1)
        assert alpha_gradient(0.37, AlphaTrace([1.0, 1.5]), 1, cfg) == 0.37

    def test_pure_l1_pull(self):
        assert alpha_gradient(0.0, AlphaTrace([1.0, 1.0]), 1, RegConfig()) == pytest.approx(0.01)

    def test_sign_of_zero(self):
        assert sign(0.0) == 0.0
        assert alpha_gradient(0.0, AlphaTrace([0.0]), 0, RegConfig()) == 0.0

    def test_matches_finite_difference_of_value(self):
        cfg = RegConfig(lam=0.05, beta=0.4)
        h = 1e-6
        up = regularizer_value([AlphaTrace([1.0, 1.3 + h])], 1, cfg).total
        down = regularizer_value([AlphaTrace([1.0, 1.3 - h])], 1, cfg).total
        numeric = cfg.lam * (up - down) / (2 * h)
        assert alpha_gradient(0.0, AlphaTrace([1.0, 1.3]), 1, cfg) == pytest.approx(numeric, rel=1e-6)
