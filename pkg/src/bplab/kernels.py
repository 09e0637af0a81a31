"""Numeric kernels with a compiled fast path and a pure-Python twin.

Two inner loops dominate every experiment in this package: the pairwise
sum-product message sweep and the brute-force enumeration of the joint
distribution.  Both exist here in pure Python and, when the optional
extension ``bplab._speedups`` compiled, in C.  The twins perform the same
arithmetic in the same order (the extension is compiled with FP
contraction disabled), so the backends return bit-identical results and
the choice is purely a matter of speed.

The compiled backend is used when present; set ``BPLAB_PURE=1`` to force
the pure backend.  ``backend_name()`` reports the active choice.
"""

from __future__ import annotations

import os

import numpy as np

try:  # the extension is optional; the pure twin is always available
    from . import _speedups
except ImportError:  # pragma: no cover - depends on the build environment
    _speedups = None

__all__ = [
    "backend_name",
    "has_compiled",
    "sumproduct",
    "sumproduct_pure",
    "sumproduct_compiled",
    "enumerate_joint",
    "enumerate_joint_pure",
    "enumerate_joint_compiled",
]


def has_compiled() -> bool:
    """True when the compiled extension imported successfully."""
    return _speedups is not None


def _force_pure() -> bool:
    return os.environ.get("BPLAB_PURE", "") not in ("", "0")


def backend_name() -> str:
    """Name of the backend the dispatch functions will use."""
    return "compiled" if has_compiled() and not _force_pure() else "pure"


def _as_kernel_arrays(edge_a, edge_b, tables):
    edge_a = np.ascontiguousarray(edge_a, dtype=np.int32)
    edge_b = np.ascontiguousarray(edge_b, dtype=np.int32)
    tables = np.ascontiguousarray(tables, dtype=np.float64).reshape(-1)
    if tables.shape[0] != 4 * edge_a.shape[0] or edge_b.shape[0] != edge_a.shape[0]:
        raise ValueError("edge arrays and tables disagree on the number of factors")
    return edge_a, edge_b, tables


# ---------------------------------------------------------------------------
# Pairwise sum-product message passing (parallel schedule)
# ---------------------------------------------------------------------------
#
# Message layout: for edge e with endpoints (a, b), side 0 is the a end and
# side 1 is the b end.  ``vf[4*e + 2*s + x]`` is the variable-to-factor
# message from the side-s variable, evaluated at state x; ``fv`` likewise for
# factor-to-variable messages.  All messages start uniform; each sweep first
# recomputes every variable-to-factor message from the previous
# factor-to-variable messages, then every factor-to-variable message from the
# fresh variable-to-factor ones.  Messages are normalised to sum to one, and
# the convergence measure is the largest absolute single-entry change across
# the sweep.


def sumproduct_pure(num_vars, edge_a, edge_b, tables, max_iters, tol, damping):
    """Pure-Python sum-product kernel.

    Returns ``(marginals, iterations, converged, vf, fv)`` where marginals is
    the per-variable probability of state 1 and vf/fv are the flat message
    vectors described above.
    """
    edge_a, edge_b, tables = _as_kernel_arrays(edge_a, edge_b, tables)
    num_vars = int(num_vars)
    m = edge_a.shape[0]
    ea = edge_a.tolist()
    eb = edge_b.tolist()
    tab = tables.tolist()

    # Adjacency: (edge, side) pairs per variable, ordered by edge index.
    adj_edge = [[] for _ in range(num_vars)]
    adj_side = [[] for _ in range(num_vars)]
    for e in range(m):
        adj_edge[ea[e]].append(e)
        adj_side[ea[e]].append(0)
        adj_edge[eb[e]].append(e)
        adj_side[eb[e]].append(1)

    vf = [0.5] * (4 * m)
    fv = [0.5] * (4 * m)
    iterations = 0
    converged = m == 0
    keep = float(damping)
    for it in range(1, int(max_iters) + 1):
        delta = 0.0
        # Variable -> factor half-sweep (reads only fv, so in-place is safe).
        for e in range(m):
            for s in (0, 1):
                v = ea[e] if s == 0 else eb[e]
                p0 = 1.0
                p1 = 1.0
                edges_v = adj_edge[v]
                sides_v = adj_side[v]
                for k in range(len(edges_v)):
                    e2 = edges_v[k]
                    s2 = sides_v[k]
                    if e2 == e and s2 == s:
                        continue
                    p0 *= fv[4 * e2 + 2 * s2]
                    p1 *= fv[4 * e2 + 2 * s2 + 1]
                tot = p0 + p1
                if tot > 0.0:
                    p0 /= tot
                    p1 /= tot
                base = 4 * e + 2 * s
                d = p0 - vf[base]
                if d < 0.0:
                    d = -d
                if d > delta:
                    delta = d
                d = p1 - vf[base + 1]
                if d < 0.0:
                    d = -d
                if d > delta:
                    delta = d
                vf[base] = p0
                vf[base + 1] = p1
        # Factor -> variable half-sweep (reads only the fresh vf).
        for e in range(m):
            t00 = tab[4 * e]
            t01 = tab[4 * e + 1]
            t10 = tab[4 * e + 2]
            t11 = tab[4 * e + 3]
            for s in (0, 1):
                if s == 0:  # message to the a end, marginalising the b end
                    q0 = vf[4 * e + 2]
                    q1 = vf[4 * e + 3]
                    r0 = t00 * q0 + t01 * q1
                    r1 = t10 * q0 + t11 * q1
                else:  # message to the b end, marginalising the a end
                    q0 = vf[4 * e]
                    q1 = vf[4 * e + 1]
                    r0 = t00 * q0 + t10 * q1
                    r1 = t01 * q0 + t11 * q1
                tot = r0 + r1
                if tot > 0.0:
                    r0 /= tot
                    r1 /= tot
                base = 4 * e + 2 * s
                if keep > 0.0:
                    r0 = (1.0 - keep) * r0 + keep * fv[base]
                    r1 = (1.0 - keep) * r1 + keep * fv[base + 1]
                d = r0 - fv[base]
                if d < 0.0:
                    d = -d
                if d > delta:
                    delta = d
                d = r1 - fv[base + 1]
                if d < 0.0:
                    d = -d
                if d > delta:
                    delta = d
                fv[base] = r0
                fv[base + 1] = r1
        iterations = it
        if delta <= tol:
            converged = True
            break

    marginals = [0.5] * num_vars
    for v in range(num_vars):
        p0 = 1.0
        p1 = 1.0
        edges_v = adj_edge[v]
        sides_v = adj_side[v]
        for k in range(len(edges_v)):
            base = 4 * edges_v[k] + 2 * sides_v[k]
            p0 *= fv[base]
            p1 *= fv[base + 1]
        tot = p0 + p1
        if tot > 0.0:
            marginals[v] = p1 / tot

    return (
        np.asarray(marginals, dtype=np.float64),
        iterations,
        bool(converged),
        np.asarray(vf, dtype=np.float64).reshape(m, 2, 2),
        np.asarray(fv, dtype=np.float64).reshape(m, 2, 2),
    )


def sumproduct_compiled(num_vars, edge_a, edge_b, tables, max_iters, tol, damping):
    """Compiled sum-product kernel; bit-identical twin of :func:`sumproduct_pure`."""
    if _speedups is None:
        raise RuntimeError("compiled kernels are not available in this build")
    edge_a, edge_b, tables = _as_kernel_arrays(edge_a, edge_b, tables)
    marginals, iterations, converged, vf, fv = _speedups.sumproduct(
        int(num_vars), edge_a, edge_b, tables, int(max_iters), float(tol), float(damping)
    )
    m = edge_a.shape[0]
    return (
        marginals,
        iterations,
        bool(converged),
        vf.reshape(m, 2, 2),
        fv.reshape(m, 2, 2),
    )


def sumproduct(num_vars, edge_a, edge_b, tables, max_iters, tol, damping):
    """Dispatch the sum-product kernel to the active backend."""
    if backend_name() == "compiled":
        return sumproduct_compiled(num_vars, edge_a, edge_b, tables, max_iters, tol, damping)
    return sumproduct_pure(num_vars, edge_a, edge_b, tables, max_iters, tol, damping)


# ---------------------------------------------------------------------------
# Brute-force enumeration of the joint distribution
# ---------------------------------------------------------------------------


def enumerate_joint_pure(num_vars, edge_a, edge_b, tables):
    """Sum the unnormalised joint over all 2**num_vars assignments.

    Returns ``(acc, z)``: ``acc[v]`` is the total mass of assignments with
    variable v in state 1, and ``z`` is the partition value.  The caller is
    responsible for checking ``z > 0`` and dividing.
    """
    edge_a, edge_b, tables = _as_kernel_arrays(edge_a, edge_b, tables)
    num_vars = int(num_vars)
    m = edge_a.shape[0]
    ea = edge_a.tolist()
    eb = edge_b.tolist()
    tab = tables.tolist()

    z = 0.0
    acc = [0.0] * num_vars
    for assign in range(1 << num_vars):
        w = 1.0
        for e in range(m):
            xa = (assign >> ea[e]) & 1
            xb = (assign >> eb[e]) & 1
            w *= tab[4 * e + 2 * xa + xb]
        z += w
        if w != 0.0:
            for v in range(num_vars):
                if (assign >> v) & 1:
                    acc[v] += w
    return np.asarray(acc, dtype=np.float64), z


def enumerate_joint_compiled(num_vars, edge_a, edge_b, tables):
    """Compiled enumeration kernel; bit-identical twin of the pure version."""
    if _speedups is None:
        raise RuntimeError("compiled kernels are not available in this build")
    edge_a, edge_b, tables = _as_kernel_arrays(edge_a, edge_b, tables)
    acc, z = _speedups.enumerate_joint(int(num_vars), edge_a, edge_b, tables)
    return acc, z


def enumerate_joint(num_vars, edge_a, edge_b, tables):
    """Dispatch the enumeration kernel to the active backend."""
    if backend_name() == "compiled":
        return enumerate_joint_compiled(num_vars, edge_a, edge_b, tables)
    return enumerate_joint_pure(num_vars, edge_a, edge_b, tables)
