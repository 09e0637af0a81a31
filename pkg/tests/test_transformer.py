"""Tests for the token encoding and the constructed attention layer."""

import math

import numpy as np
import pytest

from bplab.core import BP_EXACT_PARAMS, FfnParams, ProbabilityError
from bplab.engine import gather_update_round, weighted_gather_round
from bplab.graph import (
    BeliefState,
    FactorGraph,
    GraphError,
    StructureKind,
    generate_structure,
)
from bplab.experiments import random_connected_graph
from bplab.transformer import (
    DIM_BELIEF,
    DIM_NBR_INDEX,
    DIM_NODE_TYPE,
    DIM_OWN_INDEX,
    TokenLayout,
    attention_weights,
    build_round_weights,
    cross_project,
    decode_state,
    encode_bp_state,
    ffn_update,
    forward_pass,
    project_dim,
    stack_rounds,
)

TABLE = (0.9, 0.2, 0.3, 1.0)


class TestLayout:
    def test_dimension_bookkeeping(self):
        layout = TokenLayout(4)
        assert layout.num_tokens == 5
        assert layout.neutral_token == 4
        assert layout.block_own == 8
        assert layout.block_nbr0 == 13
        assert layout.block_nbr1 == 18
        assert layout.dim_scratch0 == 23
        assert layout.dim_scratch1 == 24
        assert layout.d_model == 25

    def test_rejects_nonpositive_sizes(self):
        with pytest.raises(GraphError):
            TokenLayout(0)


class TestProjections:
    def test_project_dim_keeps_one_coordinate(self):
        x = np.array([3.0, 5.0, 7.0])
        np.testing.assert_array_equal(project_dim(1, 3) @ x, [0.0, 5.0, 0.0])

    def test_cross_project_moves_one_coordinate(self):
        x = np.array([3.0, 5.0, 7.0])
        np.testing.assert_array_equal(cross_project(0, 2, 3) @ x, [0.0, 0.0, 3.0])

    def test_out_of_range_dimensions_are_rejected(self):
        with pytest.raises(ValueError):
            project_dim(3, 3)
        with pytest.raises(ValueError):
            cross_project(0, 3, 3)


class TestEncodeDecode:
    def test_encoding_layout_of_a_small_graph(self):
        g = FactorGraph.build(3, [(0, 1, TABLE), (1, 2, TABLE)])
        state = BeliefState(np.array([0.8, 0.4, 0.6]))
        x = encode_bp_state(g, state)
        layout = TokenLayout(3)
        assert x.shape == (4, layout.d_model)
        np.testing.assert_array_equal(x[:, DIM_BELIEF], [0.8, 0.4, 0.6, 0.5])
        assert np.all(x[:, DIM_NODE_TYPE] == 0.0)
        # variable 0: gathers neighbour 1 and the pad
        assert x[0, layout.block_nbr0 + 1] == 1.0
        assert x[0, layout.block_nbr1 + layout.neutral_token] == 1.0
        # variable 1: gathers 0 then 2
        assert x[1, layout.block_nbr0 + 0] == 1.0
        assert x[1, layout.block_nbr1 + 2] == 1.0
        # own one-hots are on the diagonal
        for t in range(4):
            assert x[t, layout.block_own + t] == 1.0
        # scalar annotations
        assert x[1, DIM_OWN_INDEX] == 0.5
        assert x[1, DIM_NBR_INDEX] == 0.0
        # the neutral token points at itself
        s = layout.neutral_token
        assert x[s, layout.block_nbr0 + s] == 1.0
        assert x[s, layout.block_nbr1 + s] == 1.0
        # scratch starts clean
        assert np.all(x[:, layout.dim_scratch0:] == 0.0)

    def test_decode_inverts_encode_for_beliefs(self):
        rng = np.random.default_rng(5)
        g = random_connected_graph(6, rng)
        state = BeliefState(rng.uniform(0.01, 0.99, 6))
        decoded = decode_state(encode_bp_state(g, state))
        np.testing.assert_array_equal(decoded.beliefs, state.beliefs)
        # unwritten scratch decodes to the neutral pad
        np.testing.assert_array_equal(decoded.scratch, np.full((6, 2), 0.5))

    def test_decode_rejects_foreign_shapes(self):
        with pytest.raises(GraphError):
            decode_state(np.zeros((3, 7)))
        with pytest.raises(GraphError):
            decode_state(np.zeros((4, 25)), num_vars=4)  # 25 dims means 4+1 tokens

    def test_single_variable_graph_encodes_with_a_pad_partner(self):
        g = FactorGraph.build(1, [])
        x = encode_bp_state(g, BeliefState(np.array([0.9])))
        layout = TokenLayout(1)
        assert x.shape == (2, layout.d_model)
        assert x[0, layout.block_nbr0 + layout.neutral_token] == 1.0


class TestForwardPass:
    def test_matches_the_reference_round_bit_for_bit(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(1, 9))
            g = random_connected_graph(n, rng) if n > 1 else FactorGraph.build(1, [])
            state = BeliefState(rng.uniform(0.01, 0.99, n))
            reference = gather_update_round(g, state)
            decoded = decode_state(forward_pass(encode_bp_state(g, state),
                                                build_round_weights(n)))
            np.testing.assert_array_equal(decoded.beliefs, reference.beliefs)
            np.testing.assert_array_equal(decoded.scratch, reference.scratch)

    def test_weighted_parameters_match_the_weighted_round(self):
        rng = np.random.default_rng(13)
        g = generate_structure(StructureKind.TRIANGLE_TAIL, rng)
        state = BeliefState(rng.uniform(0.05, 0.95, 5))
        params = tuple(FfnParams(w0, w1, b) for w0, w1, b in
                       rng.uniform(-0.5, 1.5, size=(5, 3)))
        reference = weighted_gather_round(g, state, list(params))
        weights = build_round_weights(5, ffn=params)
        decoded = decode_state(forward_pass(encode_bp_state(g, state), weights))
        np.testing.assert_array_equal(decoded.beliefs, reference.beliefs)

    def test_soft_attention_at_high_temperature_matches_hard(self):
        rng = np.random.default_rng(17)
        g = generate_structure(StructureKind.SQUARE, rng)
        state = BeliefState(rng.uniform(0.05, 0.95, 4))
        x = encode_bp_state(g, state)
        hard = decode_state(forward_pass(x, build_round_weights(4))).beliefs
        soft = decode_state(forward_pass(x, build_round_weights(
            4, attention_mode="soft", temperature=64.0))).beliefs
        np.testing.assert_allclose(soft, hard, rtol=0, atol=1e-9)

    def test_neutral_token_is_a_fixed_point(self):
        g = generate_structure(StructureKind.TRIANGLE, np.random.default_rng(0))
        x = encode_bp_state(g, BeliefState(np.array([0.9, 0.1, 0.7])))
        hard = forward_pass(x, build_round_weights(3))
        assert hard[3, DIM_BELIEF] == 0.5
        soft = forward_pass(x, build_round_weights(3, attention_mode="soft",
                                                   temperature=64.0))
        assert soft[3, DIM_BELIEF] == pytest.approx(0.5, abs=1e-9)

    def test_routing_blocks_surve_the_pass_unchanged(self):
        g = generate_structure(StructureKind.SQUARE, np.random.default_rng(3))
        x = encode_bp_state(g, BeliefState(np.full(4, 0.25)))
        y = forward_pass(x, build_round_weights(4))
        layout = TokenLayout(4)
        np.testing.assert_array_equal(y[:, 1:layout.dim_scratch0],
                                      x[:, 1:layout.dim_scratch0])

    def test_stacked_layers_compute_that_many_rounds(self):
        rng = np.random.default_rng(23)
        g = generate_structure(StructureKind.CHORD_CHAIN, rng)
        state = BeliefState(rng.uniform(0.05, 0.95, 6))
        x = stack_rounds(encode_bp_state(g, state), build_round_weights(6), 4)
        reference = state
        for _ in range(4):
            reference = gather_update_round(g, reference)
        np.testing.assert_array_equal(decode_state(x).beliefs, reference.beliefs)

    def test_rejects_non_matrix_input(self):
        with pytest.raises(ValueError):
            forward_pass(np.zeros(5), build_round_weights(2))


class TestAttentionInternals:
    def test_scores_route_each_token_to_its_declared_target(self):
        g = FactorGraph.build(3, [(0, 1, TABLE), (1, 2, TABLE)])
        x = encode_bp_state(g, BeliefState.fresh(3))
        weights = build_round_weights(3)
        att0 = attention_weights(x, weights.heads[0])
        att1 = attention_weights(x, weights.heads[1])
        np.testing.assert_array_equal(np.argmax(att0, axis=1), [1, 0, 1, 3])
        np.testing.assert_array_equal(np.argmax(att1, axis=1), [3, 2, 3, 3])

    def test_rows_are_stochastic_in_both_modes(self):
        g = generate_structure(StructureKind.TWO_TRIANGLES, np.random.default_rng(1))
        x = encode_bp_state(g, BeliefState.fresh(4))
        weights = build_round_weights(4)
        for mode, beta in (("hard", 1.0), ("soft", 3.0)):
            att = attention_weights(x, weights.heads[0], mode, beta)
            np.testing.assert_allclose(att.sum(axis=1), 1.0, rtol=0, atol=1e-12)

    def test_unknown_mode_is_rejected(self):
        g = FactorGraph.build(2, [(0, 1, TABLE)])
        x = encode_bp_state(g, BeliefState.fresh(2))
        weights = build_round_weights(2)
        with pytest.raises(ValueError):
            attention_weights(x, weights.heads[0], "warm")
        with pytest.raises(ValueError):
            build_round_weights(2, attention_mode="warm")
        with pytest.raises(ValueError):
            build_round_weights(2, temperature=0.0)


class TestFfnPolicy:
    def test_zero_scratch_reads_as_the_neutral_pad(self):
        x = np.zeros((1, 4))
        out = ffn_update(x, [BP_EXACT_PARAMS], scratch_dims=(2, 3))
        assert out[0, 0] == 0.5

    def test_out_of_range_scratch_is_clamped(self):
        x = np.zeros((1, 4))
        x[0, 2] = 1.7   # overshooting accumulation clamps to the top of the range
        x[0, 3] = -0.2  # undershooting clamps to the bottom
        out = ffn_update(x, [BP_EXACT_PARAMS], scratch_dims=(2, 3))
        assert 0.0 < out[0, 0] < 1.0

    def test_non_finite_scratch_is_rejected(self):
        x = np.zeros((1, 4))
        x[0, 2] = math.nan
        with pytest.raises(ProbabilityError):
            ffn_update(x, [BP_EXACT_PARAMS], scratch_dims=(2, 3))

    def test_ffn_parameter_count_is_validated(self):
        g = FactorGraph.build(2, [(0, 1, TABLE)])
        x = encode_bp_state(g, BeliefState.fresh(2))
        with pytest.raises(ValueError):
            forward_pass(x, build_round_weights(2, ffn=(BP_EXACT_PARAMS,) * 5))
