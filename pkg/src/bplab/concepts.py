"""Counting the discrete behaviours the constructed layer distinguishes.

The attention construction routes purely on a token's *routing key* - its
node-type flag together with its own index and the index it gathers from.
Over an ``n``-variable graph there are exactly ``2 * n * n`` distinct keys
(two node types, n own positions, n gather targets), so the layer can only
ever express that many routing behaviours, regardless of the beliefs riding
along in the payload dims.  :func:`routing_invariance` demonstrates the
flip side: tokens whose keys agree are routed identically even when their
payload dims differ.

The same counting style bounds table-driven controllers: a finite-state
machine over ``n`` states has at most ``n ** n`` distinct per-symbol
behaviours (each symbol acts as a function from states to states), which
:func:`behavior_class_count` measures for concrete machines.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .graph import GraphParseError
from .transformer import TransformerWeights, attention_weights

__all__ = [
    "NODE_TYPES",
    "RoutingKey",
    "routing_key_count",
    "enumerate_routing_keys",
    "routing_invariance",
    "FsmError",
    "FsmSpec",
    "behavior_class_count",
    "max_behavior_classes",
    "parse_fsm",
    "format_fsm",
]

#: The two node roles a token can declare in its type flag.
NODE_TYPES = ("variable", "factor")


class RoutingKey(NamedTuple):
    """What attention routing can see: type, own position, gather target."""

    node_type: str
    own_index: int
    nbr_index: int


def routing_key_count(num_vars: int) -> int:
    """Number of distinct routing keys over ``num_vars`` positions: 2 * n**2."""
    if not isinstance(num_vars, int) or num_vars < 1:
        raise ValueError(f"num_vars must be a positive integer, got {num_vars!r}")
    return 2 * num_vars * num_vars


def enumerate_routing_keys(num_vars: int) -> tuple[RoutingKey, ...]:
    """All routing keys over ``num_vars`` positions, in lexicographic order."""
    routing_key_count(num_vars)  # validates num_vars
    return tuple(
        RoutingKey(node_type, own, nbr)
        for node_type, own, nbr in itertools.product(
            NODE_TYPES, range(num_vars), range(num_vars))
    )


def _routing_signature(x: np.ndarray) -> bytes:
    """The routing-relevant content of a token matrix (everything except the
    belief/table payload dims 0-4 and the scratch slots)."""
    key_dims = x[:, 5:-2]
    return key_dims.tobytes()


def routing_invariance(weights: TransformerWeights, x_a: np.ndarray,
                       x_b: np.ndarray) -> bool:
    """Do two matrices with identical routing keys route identically?

    ``x_a`` and ``x_b`` must agree on every routing dimension (all but the
    payload dims 0-4 and the scratch slots) and differ somewhere in the
    payload dims - i.e. they are two belief assignments over the same keyed
    tokens.  Returns True when both heads produce bit-identical attention
    matrices for the two inputs, which the constructed weights always do.
    """
    x_a = np.asarray(x_a, dtype=np.float64)
    x_b = np.asarray(x_b, dtype=np.float64)
    if x_a.shape != x_b.shape:
        raise ValueError(f"token matrices must share a shape, got {x_a.shape} "
                         f"and {x_b.shape}")
    if _routing_signature(x_a) != _routing_signature(x_b):
        raise ValueError("matrices differ in routing dimensions; the invariance "
                         "question needs identical keys")
    if np.array_equal(x_a[:, :5], x_b[:, :5]):
        raise ValueError("matrices are identical in the payload dims; vary the "
                         "beliefs to make the invariance check meaningful")
    for head in weights.heads:
        att_a = attention_weights(x_a, head, weights.attention_mode, weights.temperature)
        att_b = attention_weights(x_b, head, weights.attention_mode, weights.temperature)
        if not np.array_equal(att_a, att_b):
            return False
    return True


# ---------------------------------------------------------------------------
# Finite-state machines as transition tables
# ---------------------------------------------------------------------------


class FsmError(ValueError):
    """A transition table is malformed."""


@dataclass(frozen=True)
class FsmSpec:
    """A deterministic machine: per symbol, the full state -> state map."""

    num_states: int
    symbols: tuple[str, ...]
    transitions: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if not isinstance(self.num_states, int) or self.num_states < 1:
            raise FsmError(f"state count must be a positive integer, "
                           f"got {self.num_states!r}")
        if len(self.symbols) != len(self.transitions):
            raise FsmError(f"{len(self.symbols)} symbols but "
                           f"{len(self.transitions)} transition rows")
        if len(set(self.symbols)) != len(self.symbols):
            raise FsmError("symbol identifiers must be distinct")
        for sym, row in zip(self.symbols, self.transitions):
            if len(row) != self.num_states:
                raise FsmError(f"symbol {sym!r} maps {len(row)} states, "
                               f"expected {self.num_states}")
            for q, target in enumerate(row):
                if not isinstance(target, int) or not (0 <= target < self.num_states):
                    raise FsmError(f"symbol {sym!r} sends state {q} to {target!r}, "
                                   f"outside [0, {self.num_states})")

    def step(self, state: int, symbol: str) -> int:
        """Apply one symbol to one state."""
        if not (0 <= state < self.num_states):
            raise FsmError(f"state {state} outside [0, {self.num_states})")
        try:
            row = self.transitions[self.symbols.index(symbol)]
        except ValueError:
            raise FsmError(f"unknown symbol {symbol!r}") from None
        return row[state]


def behavior_class_count(spec: FsmSpec) -> int:
    """Number of distinct state->state maps among the machine's symbols."""
    return len(set(spec.transitions))


def max_behavior_classes(num_states: int) -> int:
    """The ceiling on behaviour classes: n ** n functions on n states."""
    if not isinstance(num_states, int) or num_states < 1:
        raise ValueError(f"state count must be a positive integer, got {num_states!r}")
    return num_states ** num_states


def format_fsm(spec: FsmSpec) -> str:
    """Serialise a machine to the line format (``states N`` then ``sym`` rows)."""
    lines = [f"states {spec.num_states}"]
    for sym, row in zip(spec.symbols, spec.transitions):
        targets = " ".join(str(t) for t in row)
        lines.append(f"sym {sym} {targets}")
    return "\n".join(lines) + "\n"


def parse_fsm(text: str) -> FsmSpec:
    """Parse the line format::

        states 2
        sym a 1 0
        sym b 0 0

    Each ``sym`` row lists the successor of every state in order.
    """
    num_states = None
    symbols: list[str] = []
    rows: list[tuple[int, ...]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if num_states is None:
            if tokens[0] != "states" or len(tokens) != 2:
                raise GraphParseError(f"line {lineno}: expected header 'states N', "
                                      f"got {line!r}")
            try:
                num_states = int(tokens[1])
            except ValueError:
                raise GraphParseError(f"line {lineno}: state count must be an "
                                      f"integer, got {tokens[1]!r}") from None
            continue
        if tokens[0] != "sym":
            raise GraphParseError(f"line {lineno}: unknown directive {tokens[0]!r}")
        if len(tokens) != 2 + num_states:
            raise GraphParseError(f"line {lineno}: symbol rows need an identifier "
                                  f"and {num_states} targets, got {len(tokens) - 2}")
        try:
            row = tuple(int(tok) for tok in tokens[2:])
        except ValueError:
            raise GraphParseError(f"line {lineno}: transition targets must be "
                                  f"integers") from None
        symbols.append(tokens[1])
        rows.append(row)
    if num_states is None:
        raise GraphParseError("empty machine text: missing 'states N' header")
    try:
        return FsmSpec(num_states=num_states, symbols=tuple(symbols),
                       transitions=tuple(rows))
    except FsmError as exc:
        raise FsmError(str(exc)) from None
