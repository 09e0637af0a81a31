"""Inference engines: the simplified gather round and full sum-product.

Two distinct algorithms live here and are never interchangeable:

* ``gather_update_round`` - the simplified round.  Every variable reads the
  current beliefs of its two lowest-indexed neighbours (padding with the
  neutral 0.5 when it has fewer than two), stores them in its scratch slots,
  and replaces its own belief with their log-odds combination.  One call is
  one synchronous round; it is a pure function of the input state.

* ``sumproduct_run`` - textbook pairwise sum-product message passing under a
  parallel (flooding) schedule, iterated to a fixed point.  On trees it is
  exact; on loopy graphs it approximates the true marginals.

The sum-product inner loop runs in :mod:`bplab.kernels` and therefore uses
the compiled backend when available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import FfnParams, update_belief, weighted_update
from .graph import BeliefState, FactorGraph, GraphError

__all__ = [
    "ConvergenceOptions",
    "MessageSet",
    "BpResult",
    "gather_update_round",
    "weighted_gather_round",
    "sumproduct_run",
]


@dataclass(frozen=True)
class ConvergenceOptions:
    """Stopping rule for iterated message passing.

    ``tol`` bounds the largest absolute change of any single message entry
    across one sweep; ``damping`` mixes that fraction of the previous
    factor-to-variable message into the new one (0 = undamped).
    """

    max_iters: int = 1000
    tol: float = 1e-10
    damping: float = 0.0
    schedule: str = "parallel"

    def __post_init__(self) -> None:
        if not isinstance(self.max_iters, int) or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters!r}")
        if not (isinstance(self.tol, (int, float)) and math.isfinite(self.tol) and self.tol > 0):
            raise ValueError(f"tol must be a positive finite number, got {self.tol!r}")
        if not (isinstance(self.damping, (int, float)) and 0.0 <= self.damping < 1.0):
            raise ValueError(f"damping must lie in [0, 1), got {self.damping!r}")
        if self.schedule != "parallel":
            raise ValueError(f"unknown schedule {self.schedule!r}; only 'parallel' "
                             f"is implemented")


@dataclass
class MessageSet:
    """The message tables of a sum-product run.

    Both arrays have shape ``(num_factors, 2, 2)``: factor index, endpoint
    side (0 = first endpoint), variable state.  Rows are normalised to sum
    to one.
    """

    var_to_factor: np.ndarray
    factor_to_var: np.ndarray


@dataclass
class BpResult:
    """Outcome of a sum-product run."""

    marginals: np.ndarray
    iterations: int
    converged: bool
    messages: MessageSet


def _gather_pair(graph: FactorGraph, beliefs: np.ndarray, var: int) -> tuple[float, float]:
    nbrs = graph.first_two_neighbors(var)
    m0 = float(beliefs[nbrs[0]]) if len(nbrs) >= 1 else 0.5
    m1 = float(beliefs[nbrs[1]]) if len(nbrs) >= 2 else 0.5
    return m0, m1


def gather_update_round(graph: FactorGraph, state: BeliefState) -> BeliefState:
    """One synchronous simplified round over all variables.

    Every variable gathers the pre-round beliefs of its two lowest-indexed
    neighbours (neutral 0.5 for missing ones) into its scratch slots and
    re-derives its own belief as their log-odds combination.  Returns a new
    state; the input is untouched.
    """
    if state.num_vars != graph.num_vars:
        raise GraphError(f"state has {state.num_vars} beliefs for a graph with "
                         f"{graph.num_vars} variables")
    beliefs = np.empty(graph.num_vars)
    scratch = np.empty((graph.num_vars, 2))
    for v in range(graph.num_vars):
        m0, m1 = _gather_pair(graph, state.beliefs, v)
        scratch[v, 0] = m0
        scratch[v, 1] = m1
        beliefs[v] = update_belief(m0, m1)
    return BeliefState(beliefs, scratch)


def _per_var_params(params, num_vars: int) -> list[FfnParams]:
    if isinstance(params, FfnParams):
        return [params] * num_vars
    params = list(params)
    if len(params) != num_vars:
        raise ValueError(f"expected one FfnParams per variable ({num_vars}), "
                         f"got {len(params)}")
    return [p if isinstance(p, FfnParams) else FfnParams(*p) for p in params]


def weighted_gather_round(graph: FactorGraph, state: BeliefState, params) -> BeliefState:
    """The simplified round with a weighted combination rule per variable.

    ``params`` is one :class:`FfnParams` applied to every variable or a
    sequence with one entry per variable.  With parameters (1, 1, 0) this
    equals :func:`gather_update_round` bit for bit.
    """
    if state.num_vars != graph.num_vars:
        raise GraphError(f"state has {state.num_vars} beliefs for a graph with "
                         f"{graph.num_vars} variables")
    per_var = _per_var_params(params, graph.num_vars)
    beliefs = np.empty(graph.num_vars)
    scratch = np.empty((graph.num_vars, 2))
    for v in range(graph.num_vars):
        m0, m1 = _gather_pair(graph, state.beliefs, v)
        scratch[v, 0] = m0
        scratch[v, 1] = m1
        beliefs[v] = weighted_update(m0, m1, per_var[v])
    return BeliefState(beliefs, scratch)


def sumproduct_run(graph: FactorGraph, options: ConvergenceOptions | None = None) -> BpResult:
    """Run parallel sum-product to convergence (or ``max_iters`` sweeps).

    Converged means the largest absolute message change in the final sweep
    was at most ``options.tol``.  On trees the fixed point is exact and is
    reached within diameter + 1 sweeps.
    """
    if options is None:
        options = ConvergenceOptions()
    edge_a, edge_b, tables = graph.kernel_arrays
    marginals, iterations, converged, vf, fv = kernels.sumproduct(
        graph.num_vars, edge_a, edge_b, tables,
        options.max_iters, options.tol, options.damping,
    )
    return BpResult(
        marginals=marginals,
        iterations=int(iterations),
        converged=bool(converged),
        messages=MessageSet(var_to_factor=vf, factor_to_var=fv),
    )
