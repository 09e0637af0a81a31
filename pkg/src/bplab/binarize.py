"""Reduction of k-ary gather nodes to balanced chains of pairwise combines.

A k-ary OR node combines k incoming beliefs as ``sigmoid(sum of logits)``.
Because the pairwise log-odds combination is associative, the same value is
computed by a balanced binary tree of k - 1 pairwise combines with depth
``ceil(log2 k)``.  AND nodes are handled only at the certainty limits
{PROB_EPS, 1 - PROB_EPS}, where the pairwise combine degenerates to ``min``
and chains of it compute the exact k-ary AND.

``binarize_graph`` rewrites a graph annotated with k-ary nodes into a purely
pairwise one: each k-ary node gains ``k - 2`` fresh intermediate variables
(none for arity 1 or 2) wired in its combine-tree shape.  The introduced
edges carry the neutral all-ones table, so the joint distribution over the
original variables is untouched; the gate semantics live in the recorded
combine plans, which :meth:`CombinePlan.evaluate` replays exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .core import PROB_EPS, logit, sigmoid, update_belief
from .graph import (
    Factor,
    FactorGraph,
    GraphParseError,
    format_graph,
    parse_graph,
)

__all__ = [
    "MAX_ARITY",
    "NEUTRAL_TABLE",
    "BinarizeError",
    "ArityError",
    "GateKind",
    "CombineStep",
    "CombinePlan",
    "build_combine_plan",
    "or_combine",
    "limit_and_combine",
    "KNode",
    "AnnotatedGraph",
    "KNodeExpansion",
    "BinarizeMapping",
    "binarize_graph",
    "parse_annotated",
    "format_annotated",
]

#: Largest supported k-ary node width.
MAX_ARITY = 8

#: The pairwise table that leaves the joint distribution unchanged.
NEUTRAL_TABLE = (1.0, 1.0, 1.0, 1.0)


class BinarizeError(ValueError):
    """Base class for k-ary reduction errors."""


class ArityError(BinarizeError):
    """A k-ary node is wider than ``MAX_ARITY`` or has no inputs."""


class GateKind(enum.Enum):
    """How a k-ary node combines its inputs."""

    OR = "or"
    AND = "and"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


def or_combine(inputs) -> float:
    """The k-ary OR value: ``sigmoid`` of the summed log-odds of the inputs."""
    values = list(inputs)
    if not values:
        raise ArityError("or_combine needs at least one input")
    return sigmoid(sum(logit(v) for v in values))


def limit_and_combine(inputs) -> float:
    """The k-ary AND value at the certainty limits.

    Inputs must be PROB_EPS (false) or 1 - PROB_EPS (true); the result is
    true only when every input is.  Outside the limits k-ary AND has no
    pairwise log-odds form, so other values are rejected.
    """
    values = list(inputs)
    if not values:
        raise ArityError("limit_and_combine needs at least one input")
    for v in values:
        if v != PROB_EPS and v != 1.0 - PROB_EPS:
            raise BinarizeError(f"limit AND is defined only at the certainty limits "
                                f"{{{PROB_EPS}, {1.0 - PROB_EPS}}}, got {v!r}")
    return 1.0 - PROB_EPS if all(v == 1.0 - PROB_EPS for v in values) else PROB_EPS


@dataclass(frozen=True)
class CombineStep:
    """One pairwise combine: slots ``left`` and ``right`` feed slot ``out``."""

    left: int
    right: int
    out: int


@dataclass(frozen=True)
class CombinePlan:
    """A balanced pairwise reduction of a k-ary node.

    Slots 0..arity-1 are the inputs; each step writes a fresh slot and the
    last step's slot holds the result.  ``depth`` counts combine levels and
    equals ``ceil(log2 arity)``; there are ``arity - 1`` steps.
    """

    arity: int
    kind: GateKind
    steps: tuple[CombineStep, ...]
    depth: int

    @property
    def num_intermediates(self) -> int:
        """Fresh slots that are not the final result (``arity - 2``, floor 0)."""
        return max(0, len(self.steps) - 1)

    @property
    def result_slot(self) -> int:
        return self.steps[-1].out if self.steps else 0

    def evaluate(self, inputs) -> float:
        """Replay the chain on concrete inputs.

        OR steps use the exact pairwise log-odds combine; AND steps use the
        certainty-limit ``min`` rule (inputs are checked to sit at the
        limits).
        """
        values = list(inputs)
        if len(values) != self.arity:
            raise BinarizeError(f"plan of arity {self.arity} got {len(values)} inputs")
        if self.kind is GateKind.AND:
            limit_and_combine(values)  # validates the limit precondition
        slots = dict(enumerate(values))
        for step in self.steps:
            left, right = slots[step.left], slots[step.right]
            if self.kind is GateKind.OR:
                slots[step.out] = update_belief(left, right)
            else:
                slots[step.out] = min(left, right)
        return slots[self.result_slot]


def build_combine_plan(arity: int, kind: GateKind = GateKind.OR) -> CombinePlan:
    """Build the balanced plan for one k-ary node (1 <= k <= MAX_ARITY)."""
    if not isinstance(arity, int) or arity < 1:
        raise ArityError(f"arity must be a positive integer, got {arity!r}")
    if arity > MAX_ARITY:
        raise ArityError(f"arity {arity} exceeds the supported maximum {MAX_ARITY}")
    kind = GateKind(kind)
    steps: list[CombineStep] = []
    level = list(range(arity))
    next_slot = arity
    depth = 0
    while len(level) > 1:
        depth += 1
        nxt = []
        for i in range(0, len(level) - 1, 2):
            steps.append(CombineStep(level[i], level[i + 1], next_slot))
            nxt.append(next_slot)
            next_slot += 1
        if len(level) % 2 == 1:
            nxt.append(level[-1])
        level = nxt
    return CombinePlan(arity=arity, kind=kind, steps=tuple(steps), depth=depth)


@dataclass(frozen=True)
class KNode:
    """A k-ary node annotation: ``output`` combines the ``inputs``."""

    output: int
    inputs: tuple[int, ...]
    kind: GateKind


@dataclass(frozen=True)
class AnnotatedGraph:
    """A pairwise graph plus k-ary node annotations awaiting reduction."""

    num_vars: int
    factors: tuple[Factor, ...]
    knodes: tuple[KNode, ...]

    @staticmethod
    def build(num_vars: int, factors, knodes) -> "AnnotatedGraph":
        base = FactorGraph.build(num_vars, factors)
        validated = []
        for node in knodes:
            node = node if isinstance(node, KNode) else KNode(node[0], tuple(node[1]), GateKind(node[2]))
            if not (0 <= node.output < num_vars):
                raise BinarizeError(f"k-node output {node.output} outside [0, {num_vars})")
            if not node.inputs:
                raise ArityError(f"k-node at variable {node.output} has no inputs")
            if len(node.inputs) > MAX_ARITY:
                raise ArityError(f"k-node at variable {node.output} has arity "
                                 f"{len(node.inputs)}, maximum is {MAX_ARITY}")
            if len(set(node.inputs)) != len(node.inputs):
                raise BinarizeError(f"k-node at variable {node.output} repeats an input")
            for v in node.inputs:
                if not (0 <= v < num_vars):
                    raise BinarizeError(f"k-node input {v} outside [0, {num_vars})")
                if v == node.output:
                    raise BinarizeError(f"k-node at variable {node.output} uses itself "
                                        f"as an input")
            validated.append(KNode(node.output, tuple(node.inputs), GateKind(node.kind)))
        return AnnotatedGraph(base.num_vars, base.factors, tuple(validated))

    @property
    def pairwise(self) -> FactorGraph:
        return FactorGraph(self.num_vars, self.factors)


@dataclass(frozen=True)
class KNodeExpansion:
    """How one k-ary node was rewritten: its plan and the slot-to-variable map."""

    knode: KNode
    plan: CombinePlan
    slot_vars: tuple[int, ...]
    intermediates: tuple[int, ...]


@dataclass(frozen=True)
class BinarizeMapping:
    """Bookkeeping of a reduction: originals keep their indices, fresh
    intermediates are appended after them."""

    original_vars: int
    total_vars: int
    expansions: tuple[KNodeExpansion, ...]


def binarize_graph(annotated: AnnotatedGraph) -> tuple[FactorGraph, BinarizeMapping]:
    """Rewrite every k-ary node as its balanced pairwise chain.

    Original variables keep their indices; each k-ary node adds
    ``arity - 2`` intermediates (arity 1 and 2 add none) and wires
    neutral-table edges in its combine-tree shape, the final combine landing
    on the node's output variable.  Because the added tables are neutral,
    the joint marginals of the original variables are exactly preserved.
    """
    factors = [(f.var_a, f.var_b, f.table) for f in annotated.factors]
    occupied = {(min(f.var_a, f.var_b), max(f.var_a, f.var_b))
                for f in annotated.factors}

    def add_neutral_edge(a: int, b: int) -> None:
        # A neutral table multiplies an existing factor without changing it,
        # so a combine-tree edge over an already-factored pair is redundant.
        key = (min(a, b), max(a, b))
        if key not in occupied:
            occupied.add(key)
            factors.append((a, b, NEUTRAL_TABLE))

    next_var = annotated.num_vars
    expansions = []
    for node in annotated.knodes:
        plan = build_combine_plan(len(node.inputs), node.kind)
        slot_vars = list(node.inputs)
        intermediates = []
        if not plan.steps:  # arity 1: a single pass-through edge
            add_neutral_edge(node.inputs[0], node.output)
        for i, step in enumerate(plan.steps):
            if i == len(plan.steps) - 1:
                out_var = node.output
            else:
                out_var = next_var
                intermediates.append(next_var)
                next_var += 1
            slot_vars.append(out_var)
            add_neutral_edge(slot_vars[step.left], out_var)
            add_neutral_edge(slot_vars[step.right], out_var)
        expansions.append(KNodeExpansion(knode=node, plan=plan,
                                         slot_vars=tuple(slot_vars),
                                         intermediates=tuple(intermediates)))
    graph = FactorGraph.build(next_var, factors)
    mapping = BinarizeMapping(original_vars=annotated.num_vars, total_vars=next_var,
                              expansions=tuple(expansions))
    return graph, mapping


# ---------------------------------------------------------------------------
# Text format:  pairwise lines as in graph.py, plus
#   kfactor OUT IN1 ... INk kind=or
# ---------------------------------------------------------------------------


def format_annotated(annotated: AnnotatedGraph) -> str:
    """Serialise an annotated graph; pairwise part first, k-nodes after."""
    text = format_graph(annotated.pairwise)
    lines = []
    for node in annotated.knodes:
        inputs = " ".join(str(v) for v in node.inputs)
        lines.append(f"kfactor {node.output} {inputs} kind={node.kind.value}")
    return text + ("\n".join(lines) + "\n" if lines else "")


def parse_annotated(text: str) -> AnnotatedGraph:
    """Parse the annotated format; k-node lines may be interleaved with factors."""
    plain_lines = []
    knode_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped.startswith("kfactor"):
            knode_lines.append((lineno, stripped.split()))
            plain_lines.append("")  # keep line numbers aligned for graph errors
        else:
            plain_lines.append(raw)
    base = parse_graph("\n".join(plain_lines))
    knodes = []
    for lineno, tokens in knode_lines:
        if len(tokens) < 4:
            raise GraphParseError(f"line {lineno}: kfactor lines take an output, at "
                                  f"least one input, and kind=or|and")
        if not tokens[-1].startswith("kind="):
            raise GraphParseError(f"line {lineno}: kfactor lines must end with "
                                  f"kind=or|and, got {tokens[-1]!r}")
        kind_name = tokens[-1][len("kind="):]
        try:
            kind = GateKind(kind_name)
        except ValueError:
            raise GraphParseError(f"line {lineno}: unknown k-node kind "
                                  f"{kind_name!r}") from None
        try:
            indices = [int(tok) for tok in tokens[1:-1]]
        except ValueError:
            raise GraphParseError(f"line {lineno}: kfactor indices must be "
                                  f"integers") from None
        knodes.append(KNode(indices[0], tuple(indices[1:]), kind))
    return AnnotatedGraph.build(base.num_vars,
                                [(f.var_a, f.var_b, f.table) for f in base.factors],
                                knodes)
