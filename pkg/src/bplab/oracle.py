"""Exact marginals by brute-force enumeration, and comparison metrics.

The oracle sums the unnormalised joint over all ``2**num_vars``
assignments, so it is exact up to float round-off and entirely independent
of any message-passing code.  It refuses graphs with more than
``MAX_ENUM_VARS`` variables; everything in this package stays far below
that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import PROB_EPS
from .graph import FactorGraph

__all__ = [
    "MAX_ENUM_VARS",
    "OracleError",
    "ExactMarginals",
    "exact_marginals",
    "kl_divergence",
    "mean_abs_error",
    "max_abs_error",
]

#: Enumeration is O(2**n); refuse anything wider than this.
MAX_ENUM_VARS = 24


class OracleError(ValueError):
    """The graph cannot be handled exactly (too wide, or zero total mass)."""


@dataclass(frozen=True)
class ExactMarginals:
    """Exact per-variable P(X=1) and the partition value of the joint."""

    marginals: np.ndarray
    partition: float


def exact_marginals(graph: FactorGraph) -> ExactMarginals:
    """Enumerate the joint and return exact marginals.

    Raises :class:`OracleError` when the graph has more than
    ``MAX_ENUM_VARS`` variables or its potentials give the joint zero or
    non-finite total mass.
    """
    if graph.num_vars > MAX_ENUM_VARS:
        raise OracleError(f"enumeration over {graph.num_vars} variables exceeds the "
                          f"{MAX_ENUM_VARS}-variable cap")
    edge_a, edge_b, tables = graph.kernel_arrays
    acc, z = kernels.enumerate_joint(graph.num_vars, edge_a, edge_b, tables)
    if not math.isfinite(z) or z <= 0.0:
        raise OracleError(f"joint distribution has no usable mass (partition = {z!r})")
    return ExactMarginals(marginals=acc / z, partition=float(z))


def _paired(exact, approx) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(exact, dtype=np.float64).reshape(-1)
    q = np.asarray(approx, dtype=np.float64).reshape(-1)
    if p.shape != q.shape or p.size == 0:
        raise ValueError(f"marginal vectors must match and be non-empty, "
                         f"got shapes {p.shape} and {q.shape}")
    return p, q


def kl_divergence(exact, approx) -> float:
    """Mean per-variable KL(exact || approx) over the binary marginals.

    Each variable contributes ``p*ln(p/q) + (1-p)*ln((1-p)/(1-q))``; both
    sides are clamped into [PROB_EPS, 1 - PROB_EPS] so the value is finite.
    Nonnegative, and zero only when the clamped marginals agree.
    """
    p, q = _paired(exact, approx)
    p = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    q = np.clip(q, PROB_EPS, 1.0 - PROB_EPS)
    terms = p * np.log(p / q) + (1.0 - p) * np.log((1.0 - p) / (1.0 - q))
    return float(np.mean(terms))


def mean_abs_error(exact, approx) -> float:
    """Mean absolute difference between two marginal vectors."""
    p, q = _paired(exact, approx)
    return float(np.mean(np.abs(p - q)))


def max_abs_error(exact, approx) -> float:
    """Largest absolute difference between two marginal vectors."""
    p, q = _paired(exact, approx)
    return float(np.max(np.abs(p - q)))
