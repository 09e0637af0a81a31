# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``bplab.kernels``.

These mirror the pure-Python implementations statement for statement:
same arithmetic, same iteration order, no fused multiply-adds (the build
disables FP contraction), so both backends produce bit-identical floats.
Any change here must be made in the pure twin as well.
"""

import numpy as np


def sumproduct(int num_vars, int[::1] edge_a, int[::1] edge_b, double[::1] tables,
               int max_iters, double tol, double damping):
    cdef int m = edge_a.shape[0]
    cdef int e, s, v, k, e2, s2, it, base, assign_unused
    cdef double p0, p1, q0, q1, r0, r1, tot, d, delta
    cdef double t00, t01, t10, t11
    cdef double keep = damping

    # Adjacency: (edge, side) pairs per variable, ordered by edge index.
    deg = np.zeros(num_vars, dtype=np.int32)
    cdef int[::1] degree = deg
    for e in range(m):
        degree[edge_a[e]] += 1
        degree[edge_b[e]] += 1
    off = np.zeros(num_vars + 1, dtype=np.int32)
    cdef int[::1] offsets = off
    for v in range(num_vars):
        offsets[v + 1] = offsets[v] + degree[v]
    adj_e = np.zeros(2 * m, dtype=np.int32)
    adj_s = np.zeros(2 * m, dtype=np.int32)
    cdef int[::1] adj_edge = adj_e
    cdef int[::1] adj_side = adj_s
    fill = np.zeros(num_vars, dtype=np.int32)
    cdef int[::1] cursor = fill
    for e in range(m):
        v = edge_a[e]
        adj_edge[offsets[v] + cursor[v]] = e
        adj_side[offsets[v] + cursor[v]] = 0
        cursor[v] += 1
        v = edge_b[e]
        adj_edge[offsets[v] + cursor[v]] = e
        adj_side[offsets[v] + cursor[v]] = 1
        cursor[v] += 1

    vf_arr = np.full(4 * m, 0.5, dtype=np.float64)
    fv_arr = np.full(4 * m, 0.5, dtype=np.float64)
    cdef double[::1] vf = vf_arr
    cdef double[::1] fv = fv_arr

    cdef int iterations = 0
    cdef bint converged = m == 0
    for it in range(1, max_iters + 1):
        delta = 0.0
        # Variable -> factor half-sweep (reads only fv, so in-place is safe).
        for e in range(m):
            for s in range(2):
                v = edge_a[e] if s == 0 else edge_b[e]
                p0 = 1.0
                p1 = 1.0
                for k in range(offsets[v], offsets[v + 1]):
                    e2 = adj_edge[k]
                    s2 = adj_side[k]
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
            t00 = tables[4 * e]
            t01 = tables[4 * e + 1]
            t10 = tables[4 * e + 2]
            t11 = tables[4 * e + 3]
            for s in range(2):
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

    marg_arr = np.full(num_vars, 0.5, dtype=np.float64)
    cdef double[::1] marginals = marg_arr
    for v in range(num_vars):
        p0 = 1.0
        p1 = 1.0
        for k in range(offsets[v], offsets[v + 1]):
            base = 4 * adj_edge[k] + 2 * adj_side[k]
            p0 *= fv[base]
            p1 *= fv[base + 1]
        tot = p0 + p1
        if tot > 0.0:
            marginals[v] = p1 / tot

    return marg_arr, iterations, bool(converged), vf_arr, fv_arr


def enumerate_joint(int num_vars, int[::1] edge_a, int[::1] edge_b, double[::1] tables):
    cdef int m = edge_a.shape[0]
    cdef unsigned long long assign, total = 1
    cdef int e, v, xa, xb
    cdef double w, z = 0.0

    total = total << num_vars
    acc_arr = np.zeros(num_vars, dtype=np.float64)
    cdef double[::1] acc = acc_arr
    for assign in range(total):
        w = 1.0
        for e in range(m):
            xa = (assign >> edge_a[e]) & 1
            xb = (assign >> edge_b[e]) & 1
            w *= tables[4 * e + 2 * xa + xb]
        z += w
        if w != 0.0:
            for v in range(num_vars):
                if (assign >> v) & 1:
                    acc[v] += w
    return acc_arr, z
