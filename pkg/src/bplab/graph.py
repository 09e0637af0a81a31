"""Pairwise binary factor graphs, pinned benchmark structures, and a text format.

A graph is ``num_vars`` binary variables plus a list of factors, each
scoring one unordered pair of variables with a nonnegative 2x2 table
``[f00, f01, f10, f11]`` (row index = first endpoint's state).  Tables are
unnormalised potentials; at least one entry of each must be positive.

The text format is line oriented::

    # anything after a hash is a comment
    vars 3
    factor 0 1 0.9 0.1 0.4 1.0
    factor 1 2 1.0 0.25 0.25 1.0

Floats are printed with ``repr`` (shortest round-trip form), so
serialise/parse is byte-stable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .core import PROB_EPS, ProbabilityError

__all__ = [
    "GraphError",
    "SelfLoopError",
    "DuplicateEdgeError",
    "VariableRangeError",
    "FactorTableError",
    "DisconnectedGraphError",
    "GraphParseError",
    "Factor",
    "FactorGraph",
    "BeliefState",
    "StructureKind",
    "LOOPY_SUITE",
    "generate_structure",
    "random_tree_edges",
    "parse_graph",
    "format_graph",
]


class GraphError(ValueError):
    """Base class for graph construction and parsing errors."""


class SelfLoopError(GraphError):
    """A factor joins a variable to itself."""


class DuplicateEdgeError(GraphError):
    """Two factors cover the same unordered variable pair."""


class VariableRangeError(GraphError):
    """A factor references a variable index outside [0, num_vars)."""


class FactorTableError(GraphError):
    """A factor table entry is negative, non-finite, or the table is all zero."""


class DisconnectedGraphError(GraphError):
    """An operation that needs a connected graph was given a disconnected one."""


class GraphParseError(GraphError):
    """The text form of a graph is malformed; the message names line and field."""


@dataclass(frozen=True)
class Factor:
    """One pairwise factor: endpoints and the table [f00, f01, f10, f11]."""

    var_a: int
    var_b: int
    table: tuple[float, float, float, float]

    def entry(self, state_a: int, state_b: int) -> float:
        return self.table[2 * state_a + state_b]


def _validated_factor(var_a, var_b, table, num_vars, where: str = "") -> Factor:
    if not isinstance(var_a, (int, np.integer)) or not isinstance(var_b, (int, np.integer)):
        raise VariableRangeError(f"{where}factor endpoints must be integers, "
                                 f"got {var_a!r} and {var_b!r}")
    var_a = int(var_a)
    var_b = int(var_b)
    if not (0 <= var_a < num_vars) or not (0 <= var_b < num_vars):
        raise VariableRangeError(f"{where}factor ({var_a}, {var_b}) references a variable "
                                 f"outside [0, {num_vars})")
    if var_a == var_b:
        raise SelfLoopError(f"{where}factor joins variable {var_a} to itself")
    entries = tuple(float(x) for x in table)
    if len(entries) != 4:
        raise FactorTableError(f"{where}factor table needs exactly 4 entries, "
                               f"got {len(entries)}")
    if any(not np.isfinite(x) or x < 0.0 for x in entries):
        raise FactorTableError(f"{where}factor table entries must be finite and "
                               f"nonnegative, got {entries}")
    if all(x == 0.0 for x in entries):
        raise FactorTableError(f"{where}factor table must have at least one positive entry")
    return Factor(var_a, var_b, entries)


@dataclass(frozen=True)
class FactorGraph:
    """An immutable pairwise factor graph over binary variables."""

    num_vars: int
    factors: tuple[Factor, ...]

    @staticmethod
    def build(num_vars: int, factors) -> "FactorGraph":
        """Validate and construct a graph from (var_a, var_b, table) triples."""
        if not isinstance(num_vars, (int, np.integer)) or num_vars < 1:
            raise GraphError(f"num_vars must be a positive integer, got {num_vars!r}")
        num_vars = int(num_vars)
        seen: set[tuple[int, int]] = set()
        validated = []
        for item in factors:
            factor = item if isinstance(item, Factor) else Factor(*item)
            factor = _validated_factor(factor.var_a, factor.var_b, factor.table, num_vars)
            key = (min(factor.var_a, factor.var_b), max(factor.var_a, factor.var_b))
            if key in seen:
                raise DuplicateEdgeError(f"duplicate factor over variable pair {key}")
            seen.add(key)
            validated.append(factor)
        return FactorGraph(num_vars, tuple(validated))

    @property
    def num_factors(self) -> int:
        return len(self.factors)

    @cached_property
    def _adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.num_vars)]
        for f in self.factors:
            nbrs[f.var_a].append(f.var_b)
            nbrs[f.var_b].append(f.var_a)
        return tuple(tuple(sorted(ns)) for ns in nbrs)

    def neighbors(self, var: int) -> tuple[int, ...]:
        """Neighbours of ``var`` in ascending index order."""
        return self._adjacency[var]

    def first_two_neighbors(self, var: int) -> tuple[int, ...]:
        """The (up to) two lowest-indexed neighbours; the gather set of a round."""
        return self._adjacency[var][:2]

    def degree(self, var: int) -> int:
        return len(self._adjacency[var])

    @cached_property
    def kernel_arrays(self):
        """Edge endpoint and flat table arrays in the kernels' layout."""
        edge_a = np.asarray([f.var_a for f in self.factors], dtype=np.int32)
        edge_b = np.asarray([f.var_b for f in self.factors], dtype=np.int32)
        tables = np.asarray([x for f in self.factors for x in f.table], dtype=np.float64)
        return edge_a, edge_b, tables

    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in self._adjacency[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.num_vars

    def is_tree(self) -> bool:
        """Connected with exactly num_vars - 1 factors."""
        return self.is_connected() and self.num_factors == self.num_vars - 1

    def loop_count(self) -> int:
        """Independent cycles (num_factors - num_vars + 1); connected graphs only."""
        if not self.is_connected():
            raise DisconnectedGraphError("loop count is defined for connected graphs")
        return self.num_factors - self.num_vars + 1

    def diameter(self) -> int:
        """Longest shortest path, in edges, between any two variables."""
        if not self.is_connected():
            raise DisconnectedGraphError("diameter is defined for connected graphs")
        best = 0
        for start in range(self.num_vars):
            dist = {start: 0}
            frontier = [start]
            while frontier:
                nxt = []
                for v in frontier:
                    for w in self._adjacency[v]:
                        if w not in dist:
                            dist[w] = dist[v] + 1
                            nxt.append(w)
                frontier = nxt
            best = max(best, max(dist.values()))
        return best


def _validated_beliefs(values, num_vars=None) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ProbabilityError("beliefs must form a one-dimensional vector")
    if num_vars is not None and arr.shape[0] != num_vars:
        raise ProbabilityError(f"expected {num_vars} beliefs, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ProbabilityError("beliefs must lie strictly in (0, 1)")
    return np.clip(arr, PROB_EPS, 1.0 - PROB_EPS)


@dataclass
class BeliefState:
    """Per-variable beliefs plus the two scratch slots a round gathers into."""

    beliefs: np.ndarray
    scratch: np.ndarray = field(default=None)  # shape (num_vars, 2)

    def __post_init__(self):
        self.beliefs = _validated_beliefs(self.beliefs)
        if self.scratch is None:
            self.scratch = np.full((self.num_vars, 2), 0.5)
        else:
            self.scratch = np.array(self.scratch, dtype=np.float64, copy=True)
            if self.scratch.shape != (self.num_vars, 2):
                raise ProbabilityError("scratch must have shape (num_vars, 2)")

    @classmethod
    def fresh(cls, num_vars: int) -> "BeliefState":
        """The uniform state: every belief and scratch slot at 0.5."""
        return cls(np.full(num_vars, 0.5))

    @property
    def num_vars(self) -> int:
        return self.beliefs.shape[0]

    def copy(self) -> "BeliefState":
        return BeliefState(self.beliefs.copy(), self.scratch.copy())


class StructureKind(enum.Enum):
    """The benchmark graph shapes, named by their topology."""

    TRIANGLE = "triangle"
    SQUARE = "square"
    TRIANGLE_TAIL = "triangle_tail"
    TWO_TRIANGLES = "two_triangles"
    CHORD_CHAIN = "chord_chain"
    CHAIN2 = "chain2"
    RANDOM_TREE = "random_tree"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


#: Edge lists of the fixed structures (endpoints ascending, edges in listed order).
_FIXED_EDGES: dict[StructureKind, tuple[tuple[int, int], ...]] = {
    StructureKind.TRIANGLE: ((0, 1), (0, 2), (1, 2)),
    StructureKind.SQUARE: ((0, 1), (1, 2), (2, 3), (0, 3)),
    # a 3-cycle with a two-edge tail hanging off one corner
    StructureKind.TRIANGLE_TAIL: ((0, 1), (0, 2), (1, 2), (2, 3), (3, 4)),
    # two 3-cycles sharing the edge (1, 2)
    StructureKind.TWO_TRIANGLES: ((0, 1), (0, 2), (1, 2), (1, 3), (2, 3)),
    # a 6-variable path with one chord closing a 4-cycle
    StructureKind.CHORD_CHAIN: ((0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (1, 4)),
    StructureKind.CHAIN2: ((0, 1),),
}

#: The five loopy structures used by the benchmark suite, in report order.
LOOPY_SUITE: tuple[StructureKind, ...] = (
    StructureKind.TRIANGLE,
    StructureKind.SQUARE,
    StructureKind.TRIANGLE_TAIL,
    StructureKind.TWO_TRIANGLES,
    StructureKind.CHORD_CHAIN,
)


def random_tree_edges(num_vars: int, rng: np.random.Generator) -> tuple[tuple[int, int], ...]:
    """A uniform random-attachment tree: each new variable picks an earlier parent."""
    if num_vars < 1:
        raise GraphError(f"a tree needs at least one variable, got {num_vars}")
    edges = []
    for v in range(1, num_vars):
        parent = int(rng.integers(0, v))
        edges.append((parent, v))
    return tuple(edges)


def generate_structure(kind: StructureKind, rng: np.random.Generator, *,
                       low: float = 0.1, high: float = 1.0,
                       num_vars: int | None = None) -> FactorGraph:
    """Instantiate a structure with factor tables drawn uniformly from [low, high].

    ``num_vars`` applies only to ``RANDOM_TREE``; the fixed structures define
    their own sizes.  Table entries are drawn in edge-list order, four per
    factor, so a given generator state maps to exactly one graph.
    """
    if not (0.0 < low <= high):
        raise GraphError(f"table entry range must satisfy 0 < low <= high, "
                         f"got [{low}, {high}]")
    if kind is StructureKind.RANDOM_TREE:
        if num_vars is None:
            raise GraphError("random_tree needs num_vars")
        edges = random_tree_edges(num_vars, rng)
        n = num_vars
    else:
        if num_vars is not None:
            raise GraphError(f"{kind.value} has a fixed size; num_vars is not accepted")
        edges = _FIXED_EDGES[kind]
        n = max((max(a, b) for a, b in edges), default=0) + 1
    factors = [(a, b, tuple(rng.uniform(low, high, size=4))) for a, b in edges]
    return FactorGraph.build(n, factors)


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------


def format_graph(graph: FactorGraph) -> str:
    """Serialise a graph to the line format; floats in shortest round-trip form."""
    lines = [f"vars {graph.num_vars}"]
    for f in graph.factors:
        entries = " ".join(repr(x) for x in f.table)
        lines.append(f"factor {f.var_a} {f.var_b} {entries}")
    return "\n".join(lines) + "\n"


def _parse_int(token: str, lineno: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise GraphParseError(f"line {lineno}: {what} must be an integer, "
                              f"got {token!r}") from None


def _parse_float(token: str, lineno: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise GraphParseError(f"line {lineno}: {what} must be a number, "
                              f"got {token!r}") from None
    return value


def parse_graph(text: str) -> FactorGraph:
    """Parse the line format back into a graph.

    Raises :class:`GraphParseError` for malformed syntax and the specific
    :class:`GraphError` subclasses for semantic problems; messages carry the
    line number.
    """
    num_vars = None
    factors: list[Factor] = []
    seen: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if num_vars is None:
            if tokens[0] != "vars" or len(tokens) != 2:
                raise GraphParseError(f"line {lineno}: expected header 'vars N', "
                                      f"got {line!r}")
            num_vars = _parse_int(tokens[1], lineno, "variable count")
            if num_vars < 1:
                raise GraphParseError(f"line {lineno}: variable count must be positive, "
                                      f"got {num_vars}")
            continue
        if tokens[0] != "factor":
            raise GraphParseError(f"line {lineno}: unknown directive {tokens[0]!r}")
        if len(tokens) != 7:
            raise GraphParseError(f"line {lineno}: factor lines take 2 endpoints and "
                                  f"4 table entries, got {len(tokens) - 1} fields")
        var_a = _parse_int(tokens[1], lineno, "endpoint")
        var_b = _parse_int(tokens[2], lineno, "endpoint")
        table = tuple(_parse_float(tok, lineno, f"table entry {i}")
                      for i, tok in enumerate(tokens[3:7]))
        factor = _validated_factor(var_a, var_b, table, num_vars, where=f"line {lineno}: ")
        key = (min(var_a, var_b), max(var_a, var_b))
        if key in seen:
            raise DuplicateEdgeError(f"line {lineno}: duplicate factor over "
                                     f"variable pair {key}")
        seen.add(key)
        factors.append(factor)
    if num_vars is None:
        raise GraphParseError("empty graph text: missing 'vars N' header")
    return FactorGraph(num_vars, tuple(factors))
