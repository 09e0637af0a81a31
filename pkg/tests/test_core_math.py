"""Tests for the log-odds algebra: frozen values, laws, and input policing."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bplab.core import (
    BP_EXACT_PARAMS,
    PROB_EPS,
    FfnParams,
    ProbabilityError,
    clamp_probability,
    logit,
    sigmoid,
    update_belief,
    update_belief_logit,
    weighted_update,
)

beliefs = st.floats(min_value=0.01, max_value=0.99)


class TestLogitSigmoid:
    def test_logit_of_even_odds_is_zero(self):
        assert logit(0.5) == 0.0

    def test_logit_at_four_to_one_odds(self):
        # ln(odds) with odds = 0.8 / 0.2 = 4
        assert math.isclose(logit(0.8), math.log(4.0), rel_tol=0, abs_tol=1e-15)

    def test_sigmoid_at_zero(self):
        assert sigmoid(0.0) == 0.5

    def test_sigmoid_inverts_logit(self):
        for p in (0.001, 0.25, 0.37, 0.5, 0.93, 0.999):
            assert math.isclose(sigmoid(logit(p)), p, rel_tol=0, abs_tol=1e-12)

    def test_sigmoid_is_clamped_at_saturation(self):
        assert sigmoid(40.0) == 1.0 - PROB_EPS
        assert sigmoid(-40.0) == PROB_EPS

    def test_sigmoid_rejects_non_finite(self):
        for bad in (math.nan, math.inf, -math.inf):
            with pytest.raises(ProbabilityError):
                sigmoid(bad)

    @given(x=st.floats(min_value=-30, max_value=30))
    @settings(max_examples=200)
    def test_sigmoid_is_bounded(self, x):
        assert PROB_EPS <= sigmoid(x) <= 1.0 - PROB_EPS

    @given(x=st.floats(min_value=-15, max_value=14.5))
    @settings(max_examples=200)
    def test_sigmoid_is_strictly_monotone_away_from_the_clamp(self, x):
        assert sigmoid(x + 0.5) > sigmoid(x)


class TestClamping:
    def test_interior_values_pass_through(self):
        assert clamp_probability(0.37) == 0.37

    def test_values_near_the_edges_are_clamped(self):
        assert clamp_probability(1e-300) == PROB_EPS
        assert clamp_probability(1.0 - 1e-13) == 1.0 - PROB_EPS

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.5, math.nan, math.inf, "0.5", None])
    def test_values_outside_the_open_interval_are_rejected(self, bad):
        with pytest.raises(ProbabilityError):
            clamp_probability(bad)

    def test_logit_rejects_the_closed_endpoints(self):
        with pytest.raises(ProbabilityError):
            logit(0.0)
        with pytest.raises(ProbabilityError):
            logit(1.0)


class TestUpdateBelief:
    def test_known_combination(self):
        # 0.8 and 0.4 combine to 0.32 / (0.32 + 0.12) = 8/11
        assert update_belief(0.8, 0.4) == pytest.approx(8.0 / 11.0, abs=1e-15)

    def test_ratio_and_logit_forms_agree(self):
        rng = np.random.default_rng(42)
        for m0, m1 in rng.uniform(0.01, 0.99, size=(500, 2)):
            assert math.isclose(update_belief(m0, m1), update_belief_logit(m0, m1),
                                rel_tol=0, abs_tol=1e-12)

    @given(m0=beliefs, m1=beliefs)
    @settings(max_examples=300)
    def test_commutativity(self, m0, m1):
        assert update_belief(m0, m1) == update_belief(m1, m0)

    @given(m0=beliefs, m1=beliefs, m2=beliefs)
    @settings(max_examples=300)
    def test_associativity(self, m0, m1, m2):
        left = update_belief(update_belief(m0, m1), m2)
        right = update_belief(m0, update_belief(m1, m2))
        assert math.isclose(left, right, rel_tol=0, abs_tol=1e-10)

    @given(m=beliefs)
    @settings(max_examples=300)
    def test_even_odds_is_the_identity(self, m):
        assert math.isclose(update_belief(m, 0.5), m, rel_tol=0, abs_tol=1e-12)

    @given(m=beliefs)
    @settings(max_examples=300)
    def test_complement_is_the_inverse(self, m):
        assert math.isclose(update_belief(m, 1.0 - m), 0.5, rel_tol=0, abs_tol=1e-12)

    @given(m0=beliefs, m1=beliefs)
    @settings(max_examples=300)
    def test_output_stays_in_the_open_interval(self, m0, m1):
        assert PROB_EPS <= update_belief(m0, m1) <= 1.0 - PROB_EPS

    def test_output_is_clamped_at_extreme_agreement(self):
        high = 1.0 - PROB_EPS
        assert update_belief(high, high) == 1.0 - PROB_EPS
        assert update_belief(PROB_EPS, PROB_EPS) == PROB_EPS

    def test_rejects_invalid_messages(self):
        with pytest.raises(ProbabilityError):
            update_belief(0.0, 0.5)
        with pytest.raises(ProbabilityError):
            update_belief(0.5, 1.2)


class TestWeightedUpdate:
    def test_exact_parameters_reduce_bit_for_bit(self):
        rng = np.random.default_rng(7)
        for m0, m1 in rng.uniform(0.01, 0.99, size=(200, 2)):
            assert weighted_update(m0, m1, BP_EXACT_PARAMS) == update_belief(m0, m1)

    def test_doubled_weight_squares_the_odds(self):
        # sigmoid(2 * logit(0.7)) has odds (7/3)^2, i.e. 49/58
        got = weighted_update(0.7, 0.7, FfnParams(2.0, 0.0, 0.0))
        assert got == pytest.approx(49.0 / 58.0, abs=1e-15)

    def test_bias_shifts_the_log_odds(self):
        shift = weighted_update(0.5, 0.5, FfnParams(1.0, 1.0, math.log(4.0)))
        assert shift == pytest.approx(0.8, abs=1e-12)

    def test_zero_weights_yield_the_bias_alone(self):
        assert weighted_update(0.9, 0.2, FfnParams(0.0, 0.0, 0.0)) == 0.5

    def test_accepts_plain_triples(self):
        assert weighted_update(0.6, 0.7, (1.0, 1.0, 0.0)) == update_belief(0.6, 0.7)

    def test_params_must_be_finite(self):
        with pytest.raises(ValueError):
            FfnParams(math.nan, 1.0, 0.0)
        with pytest.raises(ValueError):
            FfnParams(1.0, math.inf, 0.0)

    def test_is_exact_flags_only_the_exact_point(self):
        assert BP_EXACT_PARAMS.is_exact
        assert not FfnParams(1.0, 1.0, 1e-12).is_exact
        assert not FfnParams(0.9, 1.0, 0.0).is_exact
