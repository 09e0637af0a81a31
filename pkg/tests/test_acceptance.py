"""Acceptance gate: the binding end-to-end checks, one per test.

Each test prints a single PASS/FAIL line (run pytest with ``-s`` or read the
captured output) and asserts the same condition, so the gate reads as a
checklist.  Every tolerance here is load-bearing; loosening one weakens the
package's core claims.
"""

import itertools
import math
import time

import numpy as np
import pytest

from bplab.binarize import GateKind, build_combine_plan, limit_and_combine
from bplab.concepts import (
    FsmSpec,
    behavior_class_count,
    enumerate_routing_keys,
    max_behavior_classes,
    routing_key_count,
)
from bplab.core import PROB_EPS, logit, sigmoid, update_belief
from bplab.equivalence import uniqueness_probe
from bplab.experiments import (
    derive_seed,
    loopy_records_csv,
    run_concentration_curve,
    run_equivalence_corpus,
    run_loopy_suite,
    run_tree_suite,
    tree_records_csv,
)

ACCEPTANCE_SEED = 2026


def report(name: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


class TestAcceptance:
    def test_loopy_suite(self):
        """100 trials x 5 loopy structures, tables U[0.1, 1.0]: >= 99%
        convergence per structure, avg KL <= 5e-4, avg MAE <= 1e-2, < 60 s."""
        start = time.perf_counter()
        result = run_loopy_suite(trials=100, seed=ACCEPTANCE_SEED,
                                 low=0.1, high=1.0, jobs=1)
        elapsed = time.perf_counter() - start
        ok = (result.worst_convergence_rate >= 0.99
              and result.worst_avg_kl <= 5e-4
              and result.worst_avg_mae <= 1e-2
              and elapsed < 60.0)
        report("loopy suite", ok,
               f"{result.total_converged}/{result.total_trials} converged, "
               f"worst avg KL {result.worst_avg_kl:.2e} (<=5e-4), "
               f"worst avg MAE {result.worst_avg_mae:.2e} (<=1e-2), "
               f"{elapsed:.1f}s (<60s)")
        assert result.worst_convergence_rate >= 0.99
        assert result.worst_avg_kl <= 5e-4
        assert result.worst_avg_mae <= 1e-2
        assert elapsed < 60.0

    def test_round_equivalence(self):
        """1000 random graphs n in [2, 8]: hard-mode L-infinity deviation
        <= 1e-12 on every instance and soft mode at temperature 64 <= 1e-9,
        together < 30 s."""
        start = time.perf_counter()
        hard = run_equivalence_corpus(count=1000, seed=ACCEPTANCE_SEED,
                                      attention_mode="hard", tol=1e-12)
        soft = run_equivalence_corpus(count=1000, seed=ACCEPTANCE_SEED,
                                      attention_mode="soft", temperature=64.0,
                                      tol=1e-9)
        elapsed = time.perf_counter() - start
        ok = hard.passed and soft.passed and elapsed < 30.0
        report("round equivalence", ok,
               f"hard max {hard.max_deviation:.2e} (<=1e-12 each), "
               f"soft@64 max {soft.max_deviation:.2e} (<=1e-9), "
               f"{elapsed:.1f}s (<30s)")
        assert hard.passed
        assert soft.passed
        assert elapsed < 30.0

    def test_tree_exactness(self):
        """200 random trees n <= 10: sum-product matches the enumeration
        oracle within 1e-9 per variable, converging within diameter + 1
        sweeps, < 10 s."""
        start = time.perf_counter()
        result = run_tree_suite(count=200, seed=ACCEPTANCE_SEED,
                                max_vars=10, tol=1e-9)
        elapsed = time.perf_counter() - start
        ok = result.passed and elapsed < 10.0
        report("tree exactness", ok,
               f"worst marginal error {result.worst_error:.2e} (<=1e-9), "
               f"within diameter+1: {result.all_converged_within_diameter}, "
               f"{elapsed:.1f}s (<10s)")
        assert result.worst_error <= 1e-9
        assert result.all_converged_within_diameter
        assert elapsed < 10.0

    def test_algebra_laws(self):
        """Pairwise combine over 10^4 random samples per law: commutativity,
        identity, and inverse within 1e-12; associativity within 1e-10."""
        rng = np.random.default_rng(derive_seed(ACCEPTANCE_SEED, 0))
        n = 10_000
        a, b, c = rng.uniform(0.01, 0.99, size=(3, n))
        comm = max(abs(update_belief(x, y) - update_belief(y, x))
                   for x, y in zip(a, b))
        ident = max(abs(update_belief(x, 0.5) - x) for x in a)
        inv = max(abs(update_belief(x, 1.0 - x) - 0.5) for x in a)
        assoc = max(abs(update_belief(update_belief(x, y), z)
                        - update_belief(x, update_belief(y, z)))
                    for x, y, z in zip(a, b, c))
        ok = comm <= 1e-12 and ident <= 1e-12 and inv <= 1e-12 and assoc <= 1e-10
        report("algebra laws", ok,
               f"comm {comm:.2e}, identity {ident:.2e}, inverse {inv:.2e} "
               f"(<=1e-12), assoc {assoc:.2e} (<=1e-10), n={n} each")
        assert comm <= 1e-12
        assert ident <= 1e-12
        assert inv <= 1e-12
        assert assoc <= 1e-10

    def test_binarization(self):
        """Balanced OR chains for k <= 6 match the direct logit-sum within
        1e-10 over 10^3 random tuples, at depth ceil(log2 k); the limit-case
        AND chain equals the k-ary conjunction for all 2^k inputs."""
        rng = np.random.default_rng(derive_seed(ACCEPTANCE_SEED, 1))
        worst_or = 0.0
        depths_ok = True
        tuples = 1000
        for _ in range(tuples):
            k = int(rng.integers(1, 7))
            values = rng.uniform(0.05, 0.95, size=k)
            plan = build_combine_plan(k)
            depths_ok = depths_ok and plan.depth == (math.ceil(math.log2(k)) if k > 1 else 0)
            direct = sigmoid(sum(logit(v) for v in values))
            worst_or = max(worst_or, abs(plan.evaluate(values) - direct))
        and_ok = True
        true, false = 1.0 - PROB_EPS, PROB_EPS
        for k in range(1, 7):
            plan = build_combine_plan(k, GateKind.AND)
            for bits in itertools.product((False, True), repeat=k):
                inputs = [true if bit else false for bit in bits]
                expected = true if all(bits) else false
                and_ok = and_ok and plan.evaluate(inputs) == expected
                and_ok = and_ok and limit_and_combine(inputs) == expected
        ok = worst_or <= 1e-10 and depths_ok and and_ok
        report("binarization", ok,
               f"OR worst gap {worst_or:.2e} (<=1e-10, {tuples} tuples), "
               f"depth=ceil(log2 k): {depths_ok}, "
               f"limit AND exact on all 2^k, k<=6: {and_ok}")
        assert worst_or <= 1e-10
        assert depths_ok
        assert and_ok

    def test_uniqueness_probe(self):
        """On the default 27-point parameter grid the combine deviates by
        <= 1e-15 only at (1, 1, 0) and by > 1e-4 at every other point."""
        probe = uniqueness_probe(num_samples=1000, seed=ACCEPTANCE_SEED)
        ok = (probe.deviation_at_exact <= 1e-15
              and probe.min_deviation_elsewhere > 1e-4)
        report("uniqueness probe", ok,
               f"gap at (1,1,0) {probe.deviation_at_exact:.2e} (<=1e-15), "
               f"smallest gap elsewhere {probe.min_deviation_elsewhere:.2e} (>1e-4)")
        assert probe.deviation_at_exact <= 1e-15
        assert probe.min_deviation_elsewhere > 1e-4

    def test_concept_counts(self):
        """routing_key_count equals explicit enumeration for n in [1, 16];
        random FSMs with n <= 4 states and alphabets up to 10^4 symbols never
        exceed n**n behaviour classes."""
        keys_ok = all(routing_key_count(n) == len(enumerate_routing_keys(n))
                      for n in range(1, 17))
        rng = np.random.default_rng(derive_seed(ACCEPTANCE_SEED, 2))
        fsm_ok = True
        for _ in range(30):
            n = int(rng.integers(1, 5))
            num_symbols = int(rng.integers(1, 10_001))
            rows = tuple(tuple(int(t) for t in rng.integers(0, n, size=n))
                         for _ in range(num_symbols))
            spec = FsmSpec(n, tuple(f"s{i}" for i in range(num_symbols)), rows)
            fsm_ok = fsm_ok and behavior_class_count(spec) <= max_behavior_classes(n)
        ok = keys_ok and fsm_ok
        report("concept counts", ok,
               f"routing keys match enumeration n in [1,16]: {keys_ok}, "
               f"FSM classes <= n**n on 30 random machines (alphabet <=1e4): {fsm_ok}")
        assert keys_ok
        assert fsm_ok

    def test_concentration(self):
        """Soft-vs-hard routing error is nonincreasing over temperatures
        {1, 2, 4, 8, 16, 32, 64} and below 1e-9 at 64."""
        result = run_concentration_curve(temperatures=(1.0, 2.0, 4.0, 8.0,
                                                       16.0, 32.0, 64.0),
                                         trials=20, seed=ACCEPTANCE_SEED)
        ok = result.nonincreasing and result.final_error < 1e-9
        report("concentration", ok,
               f"nonincreasing: {result.nonincreasing}, error at 64: "
               f"{result.final_error:.2e} (<1e-9)")
        assert result.nonincreasing
        assert result.final_error < 1e-9

    def test_determinism(self):
        """Re-running a suite with the same seed reproduces its CSV byte for
        byte (shown here on the loopy and tree suites, serial and parallel)."""
        loopy_a = loopy_records_csv(run_loopy_suite(trials=5, seed=ACCEPTANCE_SEED))
        loopy_b = loopy_records_csv(run_loopy_suite(trials=5, seed=ACCEPTANCE_SEED,
                                                    jobs=2))
        tree_a = tree_records_csv(run_tree_suite(count=20, seed=ACCEPTANCE_SEED))
        tree_b = tree_records_csv(run_tree_suite(count=20, seed=ACCEPTANCE_SEED))
        ok = loopy_a == loopy_b and tree_a == tree_b
        report("determinism", ok,
               f"loopy CSV identical across job counts: {loopy_a == loopy_b}, "
               f"tree CSV identical across re-runs: {tree_a == tree_b}")
        assert loopy_a.encode() == loopy_b.encode()
        assert tree_a.encode() == tree_b.encode()
