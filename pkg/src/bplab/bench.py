"""Timing comparison of the compiled kernels against their pure-Python twins.

The two backends compute identical floats (the build disables FP
contraction and the loops mirror each other), so this is purely a speed
report plus a parity check over the benchmark workload.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .graph import LOOPY_SUITE, generate_structure
from .experiments import derive_seed, random_connected_graph

__all__ = ["BenchReport", "run_bench", "format_bench"]


@dataclass(frozen=True)
class BenchReport:
    """Wall-clock seconds per backend and workload, plus bit-parity flags."""

    sumproduct_pure_s: float
    sumproduct_compiled_s: float | None
    enumerate_pure_s: float
    enumerate_compiled_s: float | None
    sumproduct_identical: bool | None
    enumerate_identical: bool | None
    trials: int

    @property
    def sumproduct_speedup(self) -> float | None:
        if self.sumproduct_compiled_s is None or self.sumproduct_compiled_s == 0:
            return None
        return self.sumproduct_pure_s / self.sumproduct_compiled_s

    @property
    def enumerate_speedup(self) -> float | None:
        if self.enumerate_compiled_s is None or self.enumerate_compiled_s == 0:
            return None
        return self.enumerate_pure_s / self.enumerate_compiled_s


def _sumproduct_workload(trials: int, seed: int):
    cases = []
    for t in range(trials):
        rng = np.random.default_rng(derive_seed(seed, 0, t))
        kind = LOOPY_SUITE[t % len(LOOPY_SUITE)]
        graph = generate_structure(kind, rng)
        cases.append((graph.num_vars, *graph.kernel_arrays))
    return cases

def _enumerate_workload(trials: int, seed: int, num_vars: int = 16):
    cases = []
    for t in range(max(1, trials // 10)):
        rng = np.random.default_rng(derive_seed(seed, 1, t))
        graph = random_connected_graph(num_vars, rng, extra_edge_prob=0.1)
        cases.append((graph.num_vars, *graph.kernel_arrays))
    return cases


def _time_sumproduct(fn, cases) -> tuple[float, list]:
    start = time.perf_counter()
    outputs = [fn(n, ea, eb, tb, 1000, 1e-10, 0.0) for n, ea, eb, tb in cases]
    return time.perf_counter() - start, outputs


def _time_enumerate(fn, cases) -> tuple[float, list]:
    start = time.perf_counter()
    outputs = [fn(n, ea, eb, tb) for n, ea, eb, tb in cases]
    return time.perf_counter() - start, outputs


def run_bench(trials: int = 100, seed: int = 0) -> BenchReport:
    """Time both backends on a seeded workload and verify bit parity."""
    sp_cases = _sumproduct_workload(trials, seed)
    en_cases = _enumerate_workload(trials, seed)

    sp_pure_s, sp_pure = _time_sumproduct(kernels.sumproduct_pure, sp_cases)
    en_pure_s, en_pure = _time_enumerate(kernels.enumerate_joint_pure, en_cases)

    if not kernels.has_compiled():
        return BenchReport(sp_pure_s, None, en_pure_s, None, None, None, trials)

    sp_comp_s, sp_comp = _time_sumproduct(kernels.sumproduct_compiled, sp_cases)
    en_comp_s, en_comp = _time_enumerate(kernels.enumerate_joint_compiled, en_cases)

    sp_same = all(
        np.array_equal(a[0], b[0]) and a[1] == b[1] and a[2] == b[2]
        and np.array_equal(a[3], b[3]) and np.array_equal(a[4], b[4])
        for a, b in zip(sp_pure, sp_comp)
    )
    en_same = all(
        np.array_equal(a[0], b[0]) and a[1] == b[1]
        for a, b in zip(en_pure, en_comp)
    )
    return BenchReport(sp_pure_s, sp_comp_s, en_pure_s, en_comp_s,
                       sp_same, en_same, trials)


def format_bench(report: BenchReport) -> str:
    """Human-readable benchmark table."""
    lines = [f"kernel benchmark ({report.trials} message-passing cases)"]
    lines.append(f"  sum-product   pure: {report.sumproduct_pure_s:8.4f} s")
    if report.sumproduct_compiled_s is None:
        lines.append("  sum-product   compiled: not available in this build")
    else:
        lines.append(f"  sum-product   compiled: {report.sumproduct_compiled_s:8.4f} s"
                     f"  (x{report.sumproduct_speedup:.1f}, "
                     f"bit-identical: {report.sumproduct_identical})")
    lines.append(f"  enumeration   pure: {report.enumerate_pure_s:8.4f} s")
    if report.enumerate_compiled_s is None:
        lines.append("  enumeration   compiled: not available in this build")
    else:
        lines.append(f"  enumeration   compiled: {report.enumerate_compiled_s:8.4f} s"
                     f"  (x{report.enumerate_speedup:.1f}, "
                     f"bit-identical: {report.enumerate_identical})")
    return "\n".join(lines) + "\n"
