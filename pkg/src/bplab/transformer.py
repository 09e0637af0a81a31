"""A one-layer attention network, with weights constructed by hand, whose
forward pass executes the simplified gather round exactly.

Tokens and layout
-----------------
A graph with ``n`` variables becomes ``n + 1`` tokens: one per variable and
one trailing *neutral token* that permanently carries the padding belief
0.5.  Each token is a vector with this layout (``T = n + 1``)::

    dim 0                belief
    dims 1..4            factor-table annotation (zero for variable tokens)
    dim 5                node-type flag (0 = variable)
    dim 6                own index / max(1, n - 1)
    dim 7                first gathered neighbour index / max(1, n - 1)
    dims 8      .. 8+T   one-hot own index          (block_own)
    dims 8+T    .. 8+2T  one-hot first gather target  (block_nbr0)
    dims 8+2T   .. 8+3T  one-hot second gather target (block_nbr1)
    dims 8+3T, 8+3T+1    scratch slots written by the attention heads

Variables with fewer than two neighbours point the missing gather target at
the neutral token, whose belief is exactly 0.5, so padding needs no special
case in the attention itself: hard and soft attention both fetch a real
token.  The neutral token's own gather targets point at itself and its
combination parameters are the exact ones, so 0.5 = combine(0.5, 0.5) makes
it a fixed point under repeated layers.

Heads and feed-forward
----------------------
Head h matches each token's ``block_nbr<h>`` one-hot against every token's
``block_own`` one-hot, so the score of (token i, token j) is exactly 1 when
j is i's declared gather target and exactly 0 otherwise.  Its value map
copies the source token's belief into scratch slot h.  ``hard`` attention
routes by argmax; ``soft`` attention applies a softmax at inverse
temperature ``temperature``, which concentrates on the same target as the
temperature grows.  The feed-forward step reads the two scratch slots and
replaces each token's belief with the weighted log-odds combination - the
sigmoid-activated two-input network of :func:`bplab.core.weighted_update`.
With parameters (1, 1, 0) the layer output decodes to exactly the state
:func:`bplab.engine.gather_update_round` produces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import BP_EXACT_PARAMS, FfnParams, ProbabilityError, PROB_EPS, weighted_update
from .graph import BeliefState, FactorGraph, GraphError

__all__ = [
    "DIM_BELIEF",
    "DIMS_TABLE",
    "DIM_NODE_TYPE",
    "DIM_OWN_INDEX",
    "DIM_NBR_INDEX",
    "TokenLayout",
    "HeadWeights",
    "TransformerWeights",
    "project_dim",
    "cross_project",
    "encode_bp_state",
    "decode_state",
    "build_round_weights",
    "attention_weights",
    "attention_head",
    "ffn_update",
    "forward_pass",
    "stack_rounds",
]

DIM_BELIEF = 0
DIMS_TABLE = (1, 2, 3, 4)
DIM_NODE_TYPE = 5
DIM_OWN_INDEX = 6
DIM_NBR_INDEX = 7
_NUM_SCALAR_DIMS = 8


@dataclass(frozen=True)
class TokenLayout:
    """Dimension bookkeeping for the token encoding of an ``n``-variable graph."""

    num_vars: int

    def __post_init__(self) -> None:
        if not isinstance(self.num_vars, int) or self.num_vars < 1:
            raise GraphError(f"layout needs a positive variable count, "
                             f"got {self.num_vars!r}")

    @property
    def num_tokens(self) -> int:
        return self.num_vars + 1

    @property
    def neutral_token(self) -> int:
        """Index of the trailing token that carries the 0.5 padding belief."""
        return self.num_vars

    @property
    def block_own(self) -> int:
        return _NUM_SCALAR_DIMS

    @property
    def block_nbr0(self) -> int:
        return _NUM_SCALAR_DIMS + self.num_tokens

    @property
    def block_nbr1(self) -> int:
        return _NUM_SCALAR_DIMS + 2 * self.num_tokens

    @property
    def dim_scratch0(self) -> int:
        return _NUM_SCALAR_DIMS + 3 * self.num_tokens

    @property
    def dim_scratch1(self) -> int:
        return self.dim_scratch0 + 1

    @property
    def d_model(self) -> int:
        return _NUM_SCALAR_DIMS + 3 * self.num_tokens + 2


def project_dim(dim_index: int, d_model: int) -> np.ndarray:
    """The rank-one projection keeping only coordinate ``dim_index``.

    ``(project_dim(d, D) @ x)[i]`` is ``x[d]`` when ``i == d`` and 0 otherwise.
    """
    if not (0 <= dim_index < d_model):
        raise ValueError(f"dimension {dim_index} outside [0, {d_model})")
    m = np.zeros((d_model, d_model))
    m[dim_index, dim_index] = 1.0
    return m


def cross_project(src_dim: int, dst_dim: int, d_model: int) -> np.ndarray:
    """The rank-one map copying coordinate ``src_dim`` into ``dst_dim``.

    ``(cross_project(s, d, D) @ x)[d] == x[s]``, all other outputs zero.
    """
    if not (0 <= src_dim < d_model) or not (0 <= dst_dim < d_model):
        raise ValueError(f"dimensions ({src_dim}, {dst_dim}) outside [0, {d_model})")
    m = np.zeros((d_model, d_model))
    m[dst_dim, src_dim] = 1.0
    return m


@dataclass(frozen=True)
class HeadWeights:
    """Query/key/value matrices of one attention head (column-vector maps)."""

    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray


@dataclass(frozen=True)
class TransformerWeights:
    """Two attention heads plus the combination parameters of the feed-forward.

    ``ffn`` is a single :class:`FfnParams` applied to every variable token or
    a tuple with one entry per variable; the neutral token always uses the
    exact parameters so its belief stays at 0.5.  ``attention_mode`` selects
    hard routing (argmax) or a softmax at inverse temperature ``temperature``.
    """

    heads: tuple[HeadWeights, HeadWeights]
    ffn: FfnParams | tuple[FfnParams, ...] = BP_EXACT_PARAMS
    attention_mode: str = "hard"
    temperature: float = 1.0

    def __post_init__(self) -> None:
        if len(self.heads) != 2:
            raise ValueError(f"exactly two heads are required, got {len(self.heads)}")
        if self.attention_mode not in ("hard", "soft"):
            raise ValueError(f"attention_mode must be 'hard' or 'soft', "
                             f"got {self.attention_mode!r}")
        if not (isinstance(self.temperature, (int, float))
                and math.isfinite(self.temperature) and self.temperature > 0):
            raise ValueError(f"temperature must be positive and finite, "
                             f"got {self.temperature!r}")

    def with_mode(self, attention_mode: str, temperature: float | None = None
                  ) -> "TransformerWeights":
        """A copy in a different attention mode / temperature."""
        kwargs = {"attention_mode": attention_mode}
        if temperature is not None:
            kwargs["temperature"] = float(temperature)
        return replace(self, **kwargs)


def encode_bp_state(graph: FactorGraph, state: BeliefState) -> np.ndarray:
    """Encode a graph and its current beliefs into the token matrix.

    Produces ``num_vars + 1`` rows in the layout described in the module
    docstring; the scratch slots start at zero (meaning "not yet written").
    """
    if state.num_vars != graph.num_vars:
        raise GraphError(f"state has {state.num_vars} beliefs for a graph with "
                         f"{graph.num_vars} variables")
    layout = TokenLayout(graph.num_vars)
    x = np.zeros((layout.num_tokens, layout.d_model))
    scale = 1.0 / max(1, graph.num_vars - 1)
    for v in range(graph.num_vars):
        nbrs = graph.first_two_neighbors(v)
        nb0 = nbrs[0] if len(nbrs) >= 1 else layout.neutral_token
        nb1 = nbrs[1] if len(nbrs) >= 2 else layout.neutral_token
        x[v, DIM_BELIEF] = state.beliefs[v]
        x[v, DIM_OWN_INDEX] = v * scale
        x[v, DIM_NBR_INDEX] = (nbrs[0] if nbrs else v) * scale
        x[v, layout.block_own + v] = 1.0
        x[v, layout.block_nbr0 + nb0] = 1.0
        x[v, layout.block_nbr1 + nb1] = 1.0
    s = layout.neutral_token
    x[s, DIM_BELIEF] = 0.5
    x[s, DIM_OWN_INDEX] = s * scale
    x[s, DIM_NBR_INDEX] = s * scale
    x[s, layout.block_own + s] = 1.0
    x[s, layout.block_nbr0 + s] = 1.0
    x[s, layout.block_nbr1 + s] = 1.0
    return x


def _layout_for(x: np.ndarray) -> TokenLayout | None:
    """The standard layout matching ``x``'s shape, or None for foreign matrices."""
    if x.ndim != 2 or x.shape[0] < 2:
        return None
    layout = TokenLayout(x.shape[0] - 1)
    return layout if x.shape[1] == layout.d_model else None


def _scratch_value(raw: float) -> float:
    """Interpret one scratch slot: 0.0 means "never written" and pads to 0.5."""
    if not math.isfinite(raw):
        raise ProbabilityError(f"scratch slot holds a non-finite value {raw!r}")
    if raw == 0.0:
        return 0.5
    return min(max(raw, PROB_EPS), 1.0 - PROB_EPS)


def decode_state(x: np.ndarray, num_vars: int | None = None) -> BeliefState:
    """Read a token matrix back into a belief state.

    The final (neutral) token is dropped; beliefs come from dim 0 and the
    scratch pair from the trailing scratch dims, with 0.0 decoding to the
    neutral 0.5.
    """
    x = np.asarray(x, dtype=np.float64)
    layout = _layout_for(x)
    if layout is None:
        raise GraphError(f"matrix of shape {x.shape} is not a standard token encoding")
    if num_vars is not None and num_vars != layout.num_vars:
        raise GraphError(f"expected {num_vars} variables, encoding has {layout.num_vars}")
    n = layout.num_vars
    scratch = np.empty((n, 2))
    for v in range(n):
        scratch[v, 0] = _scratch_value(x[v, layout.dim_scratch0])
        scratch[v, 1] = _scratch_value(x[v, layout.dim_scratch1])
    return BeliefState(x[:n, DIM_BELIEF].copy(), scratch)


def build_round_weights(num_vars: int, ffn: FfnParams | tuple[FfnParams, ...] = BP_EXACT_PARAMS,
                        attention_mode: str = "hard",
                        temperature: float = 1.0) -> TransformerWeights:
    """Construct the weights that make one layer execute one gather round.

    Head h queries with the ``block_nbr<h>`` one-hot, keys with ``block_own``,
    and copies the attended token's belief into scratch slot h.  Scores are
    exactly 1 on each token's declared gather target and exactly 0 elsewhere,
    so hard attention routes exactly and soft attention concentrates on the
    same target as ``temperature`` grows.
    """
    layout = TokenLayout(num_vars)
    d = layout.d_model
    heads = []
    for nbr_block, scratch_dim in ((layout.block_nbr0, layout.dim_scratch0),
                                   (layout.block_nbr1, layout.dim_scratch1)):
        wq = np.zeros((d, d))
        wk = np.zeros((d, d))
        for t in range(layout.num_tokens):
            wq += cross_project(nbr_block + t, layout.block_own + t, d)
            wk += project_dim(layout.block_own + t, d)
        wv = cross_project(DIM_BELIEF, scratch_dim, d)
        heads.append(HeadWeights(wq=wq, wk=wk, wv=wv))
    return TransformerWeights(heads=(heads[0], heads[1]), ffn=ffn,
                              attention_mode=attention_mode, temperature=temperature)


def attention_weights(x: np.ndarray, head: HeadWeights, attention_mode: str = "hard",
                      temperature: float = 1.0) -> np.ndarray:
    """The row-stochastic attention matrix of one head over token matrix ``x``.

    Row i gives token i's mixing weights.  ``hard`` puts weight 1 on the
    highest-scoring key (lowest index on ties); ``soft`` is a softmax of the
    scores scaled by ``temperature``.
    """
    x = np.asarray(x, dtype=np.float64)
    scores = (x @ head.wq.T) @ (x @ head.wk.T).T
    if attention_mode == "hard":
        winners = np.argmax(scores, axis=1)
        weights = np.zeros_like(scores)
        weights[np.arange(scores.shape[0]), winners] = 1.0
        return weights
    if attention_mode == "soft":
        scaled = temperature * scores
        scaled -= scaled.max(axis=1, keepdims=True)
        weights = np.exp(scaled)
        weights /= weights.sum(axis=1, keepdims=True)
        return weights
    raise ValueError(f"attention_mode must be 'hard' or 'soft', got {attention_mode!r}")


def attention_head(x: np.ndarray, head: HeadWeights, attention_mode: str = "hard",
                   temperature: float = 1.0) -> np.ndarray:
    """The additive contribution of one head: ``weights @ (x @ wv.T)``."""
    x = np.asarray(x, dtype=np.float64)
    weights = attention_weights(x, head, attention_mode, temperature)
    return weights @ (x @ head.wv.T)


def _per_token_params(ffn, layout: TokenLayout | None, num_tokens: int) -> list[FfnParams]:
    if isinstance(ffn, FfnParams):
        if layout is None:
            return [ffn] * num_tokens
        return [ffn] * layout.num_vars + [BP_EXACT_PARAMS]
    params = [p if isinstance(p, FfnParams) else FfnParams(*p) for p in ffn]
    if layout is not None and len(params) == layout.num_vars:
        return params + [BP_EXACT_PARAMS]
    if len(params) == num_tokens:
        return params
    raise ValueError(f"ffn parameters must be one triple or one per variable; "
                     f"got {len(params)} for {num_tokens} tokens")


def ffn_update(x: np.ndarray, params_per_token, scratch_dims: tuple[int, int],
               belief_dim: int = DIM_BELIEF) -> np.ndarray:
    """Apply the two-input sigmoid combination to every token.

    Reads the two scratch slots (0.0 decodes to the neutral 0.5, anything
    else is clamped into the open belief interval), writes the combined
    belief into ``belief_dim``, and leaves the gathered values in place as a
    record of the round.  Non-finite scratch values raise
    :class:`ProbabilityError`.
    """
    x = np.asarray(x, dtype=np.float64)
    out = x.copy()
    s0, s1 = scratch_dims
    for t in range(x.shape[0]):
        m0 = _scratch_value(x[t, s0])
        m1 = _scratch_value(x[t, s1])
        out[t, belief_dim] = weighted_update(m0, m1, params_per_token[t])
    return out


def forward_pass(x: np.ndarray, weights: TransformerWeights) -> np.ndarray:
    """One layer: two attention heads, residual add, sigmoid feed-forward.

    For matrices in the standard encoding the scratch slots are the layout's
    scratch dims and the neutral token keeps exact parameters; any other
    matrix is treated as raw tokens whose last two dims are scratch.  The
    input's scratch slots must be clean (zero) for the gathered values to
    arrive intact; :func:`encode_bp_state` guarantees that.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"token matrix must be 2-D, got shape {x.shape}")
    layout = _layout_for(x)
    if layout is not None:
        scratch_dims = (layout.dim_scratch0, layout.dim_scratch1)
    else:
        scratch_dims = (x.shape[1] - 2, x.shape[1] - 1)
    mode, beta = weights.attention_mode, weights.temperature
    gathered = x + attention_head(x, weights.heads[0], mode, beta) \
                 + attention_head(x, weights.heads[1], mode, beta)
    params = _per_token_params(weights.ffn, layout, x.shape[0])
    return ffn_update(gathered, params, scratch_dims)


def stack_rounds(x: np.ndarray, weights: TransformerWeights, layers: int) -> np.ndarray:
    """Apply ``layers`` copies of the layer, clearing scratch slots in between.

    The clearing step is the fixed rank-deficient residual projection a
    stacked network applies between layers; with it, ``layers`` applications
    compute exactly that many gather rounds.
    """
    if layers < 0:
        raise ValueError(f"layer count must be nonnegative, got {layers}")
    x = np.asarray(x, dtype=np.float64).copy()
    layout = _layout_for(x)
    if layout is not None:
        scratch_dims = (layout.dim_scratch0, layout.dim_scratch1)
    else:
        scratch_dims = (x.shape[1] - 2, x.shape[1] - 1)
    for _ in range(layers):
        x = forward_pass(x, weights)
        x[:, scratch_dims[0]] = 0.0
        x[:, scratch_dims[1]] = 0.0
    return x
