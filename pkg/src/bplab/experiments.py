"""Seeded experiment suites with deterministic, byte-stable reports.

Every suite derives one child seed per trial from the master seed with a
keyed hash, so trials are independent of execution order and worker count;
records are sorted by trial index before any aggregation, and CSV output
prints floats in shortest round-trip form.  Re-running any suite with the
same seed therefore reproduces its output byte for byte.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
from dataclasses import dataclass

import numpy as np

from .engine import ConvergenceOptions, sumproduct_run
from .equivalence import check_round, check_tree_exactness
from .graph import (
    BeliefState,
    FactorGraph,
    LOOPY_SUITE,
    StructureKind,
    generate_structure,
)
from .oracle import exact_marginals, kl_divergence, mean_abs_error
from .transformer import build_round_weights, decode_state, encode_bp_state, forward_pass

__all__ = [
    "derive_seed",
    "random_connected_graph",
    "LoopyTrialRecord",
    "StructureSummary",
    "LoopySuiteResult",
    "run_loopy_suite",
    "loopy_records_csv",
    "loopy_summary_markdown",
    "TreeTrialRecord",
    "TreeSuiteResult",
    "run_tree_suite",
    "tree_records_csv",
    "EquivalenceRecord",
    "EquivalenceCorpusResult",
    "run_equivalence_corpus",
    "equivalence_records_csv",
    "ConcentrationResult",
    "run_concentration_curve",
    "concentration_csv",
    "training_pairs_csv",
]

#: Column order of the loopy suite CSV.
LOOPY_CSV_HEADER = "structure,seed,converged,iterations,kl,mae"


def derive_seed(master_seed: int, *parts: int) -> int:
    """Derive a stable child seed from a master seed and an index path.

    Uses BLAKE2b over the fixed-width big-endian encoding of all components,
    so the value depends only on the arguments, never on platform, hash
    randomisation, or numpy version.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in (master_seed, *parts):
        h.update(int(part).to_bytes(16, "big", signed=True))
    return int.from_bytes(h.digest(), "big") >> 1  # keep it in the signed range


def random_connected_graph(num_vars: int, rng: np.random.Generator, *,
                           low: float = 0.1, high: float = 1.0,
                           extra_edge_prob: float = 0.3) -> FactorGraph:
    """A random tree plus independent extra chords; always connected.

    Candidate chords are visited in lexicographic pair order and kept with
    probability ``extra_edge_prob``, so one generator state maps to exactly
    one graph.
    """
    tree = [(int(rng.integers(0, v)), v) for v in range(1, num_vars)]
    present = set(tree)
    edges = list(tree)
    for i in range(num_vars):
        for j in range(i + 1, num_vars):
            if (i, j) not in present and rng.random() < extra_edge_prob:
                edges.append((i, j))
                present.add((i, j))
    factors = [(a, b, tuple(rng.uniform(low, high, size=4))) for a, b in edges]
    return FactorGraph.build(num_vars, factors)


# ---------------------------------------------------------------------------
# Loopy benchmark suite
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LoopyTrialRecord:
    """One structure instance: did message passing converge, and how close."""

    structure: str
    seed: int
    converged: bool
    iterations: int
    kl: float
    mae: float


@dataclass(frozen=True)
class StructureSummary:
    """Aggregates over one structure's trials (error means skip non-converged)."""

    structure: str
    num_vars: int
    num_loops: int
    trials: int
    converged: int
    avg_kl: float
    avg_mae: float


@dataclass(frozen=True)
class LoopySuiteResult:
    records: tuple[LoopyTrialRecord, ...]
    summaries: tuple[StructureSummary, ...]
    master_seed: int

    @property
    def total_trials(self) -> int:
        return len(self.records)

    @property
    def total_converged(self) -> int:
        return sum(1 for r in self.records if r.converged)

    @property
    def worst_convergence_rate(self) -> float:
        return min(s.converged / s.trials for s in self.summaries)

    @property
    def worst_avg_kl(self) -> float:
        return max(s.avg_kl for s in self.summaries)

    @property
    def worst_avg_mae(self) -> float:
        return max(s.avg_mae for s in self.summaries)


def _loopy_trial(args) -> LoopyTrialRecord:
    kind_value, trial_seed, low, high, options = args
    kind = StructureKind(kind_value)
    rng = np.random.default_rng(trial_seed)
    graph = generate_structure(kind, rng, low=low, high=high)
    result = sumproduct_run(graph, options)
    exact = exact_marginals(graph).marginals
    return LoopyTrialRecord(
        structure=kind.value,
        seed=trial_seed,
        converged=result.converged,
        iterations=result.iterations,
        kl=kl_divergence(exact, result.marginals),
        mae=mean_abs_error(exact, result.marginals),
    )


def run_loopy_suite(trials: int = 100, seed: int = 0, *,
                    structures: tuple[StructureKind, ...] = LOOPY_SUITE,
                    options: ConvergenceOptions | None = None,
                    low: float = 0.1, high: float = 1.0,
                    jobs: int = 1) -> LoopySuiteResult:
    """Run ``trials`` seeded instances of each structure against the oracle.

    Table entries are drawn uniformly from [low, high].  ``jobs > 1`` fans
    trials out to a process pool; records are keyed by (structure, trial)
    derived seeds and re-sorted, so the output is identical for any job
    count.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    if options is None:
        options = ConvergenceOptions()
    tasks = [
        (kind.value, derive_seed(seed, si, t), low, high, options)
        for si, kind in enumerate(structures)
        for t in range(trials)
    ]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_loopy_trial, tasks, chunksize=16))
    else:
        records = [_loopy_trial(task) for task in tasks]

    summaries = []
    for si, kind in enumerate(structures):
        chunk = records[si * trials:(si + 1) * trials]
        probe = generate_structure(kind, np.random.default_rng(0), low=low, high=high)
        converged = [r for r in chunk if r.converged]
        summaries.append(StructureSummary(
            structure=kind.value,
            num_vars=probe.num_vars,
            num_loops=probe.loop_count(),
            trials=len(chunk),
            converged=len(converged),
            avg_kl=float(np.mean([r.kl for r in converged])) if converged else float("nan"),
            avg_mae=float(np.mean([r.mae for r in converged])) if converged else float("nan"),
        ))
    return LoopySuiteResult(records=tuple(records), summaries=tuple(summaries),
                            master_seed=seed)


def loopy_records_csv(result: LoopySuiteResult) -> str:
    """The per-trial CSV; floats in shortest round-trip form, rows in trial order."""
    lines = [LOOPY_CSV_HEADER]
    for r in result.records:
        lines.append(f"{r.structure},{r.seed},{'true' if r.converged else 'false'},"
                     f"{r.iterations},{r.kl!r},{r.mae!r}")
    return "\n".join(lines) + "\n"


def loopy_summary_markdown(result: LoopySuiteResult) -> str:
    """A per-structure summary table."""
    lines = [
        "| Structure | Vars | Loops | Converged | Avg KL | Avg MAE |",
        "| --- | --- | --- | --- | --- | --- |",
    ]
    for s in result.summaries:
        lines.append(f"| {s.structure} | {s.num_vars} | {s.num_loops} "
                     f"| {s.converged}/{s.trials} | {s.avg_kl:.6f} | {s.avg_mae:.6f} |")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Tree exactness suite
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TreeTrialRecord:
    seed: int
    num_vars: int
    diameter: int
    iterations: int
    max_marginal_error: float
    converged_within_diameter: bool


@dataclass(frozen=True)
class TreeSuiteResult:
    records: tuple[TreeTrialRecord, ...]
    master_seed: int
    tol: float

    @property
    def worst_error(self) -> float:
        return max(r.max_marginal_error for r in self.records)

    @property
    def all_converged_within_diameter(self) -> bool:
        return all(r.converged_within_diameter for r in self.records)

    @property
    def passed(self) -> bool:
        return self.worst_error <= self.tol and self.all_converged_within_diameter


def run_tree_suite(count: int = 200, seed: int = 0, *, max_vars: int = 10,
                   tol: float = 1e-9,
                   options: ConvergenceOptions | None = None) -> TreeSuiteResult:
    """Check sum-product against the oracle on ``count`` random trees."""
    if count < 1 or max_vars < 1:
        raise ValueError("count and max_vars must be positive")
    records = []
    for t in range(count):
        trial_seed = derive_seed(seed, t)
        rng = np.random.default_rng(trial_seed)
        num_vars = int(rng.integers(1, max_vars + 1))
        graph = generate_structure(StructureKind.RANDOM_TREE, rng, num_vars=num_vars)
        check = check_tree_exactness(graph, options, tol=tol)
        records.append(TreeTrialRecord(
            seed=trial_seed,
            num_vars=num_vars,
            diameter=check.diameter,
            iterations=check.iterations,
            max_marginal_error=check.max_marginal_error,
            converged_within_diameter=check.converged_within_diameter,
        ))
    return TreeSuiteResult(records=tuple(records), master_seed=seed, tol=tol)


def tree_records_csv(result: TreeSuiteResult) -> str:
    lines = ["seed,num_vars,diameter,iterations,max_error,within_diameter"]
    for r in result.records:
        lines.append(f"{r.seed},{r.num_vars},{r.diameter},{r.iterations},"
                     f"{r.max_marginal_error!r},"
                     f"{'true' if r.converged_within_diameter else 'false'}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Layer-vs-round equivalence corpus
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EquivalenceRecord:
    seed: int
    num_vars: int
    deviation: float


@dataclass(frozen=True)
class EquivalenceCorpusResult:
    records: tuple[EquivalenceRecord, ...]
    master_seed: int
    attention_mode: str
    temperature: float
    tol: float

    @property
    def max_deviation(self) -> float:
        return max(r.deviation for r in self.records)

    @property
    def passed(self) -> bool:
        return all(r.deviation <= self.tol for r in self.records)

    def tier_counts(self, tiers=(1e-12, 1e-9, 1e-6)) -> dict[float, int]:
        """How many instances meet each deviation tier."""
        return {tier: sum(1 for r in self.records if r.deviation <= tier)
                for tier in tiers}


def run_equivalence_corpus(count: int = 1000, seed: int = 0, *,
                           attention_mode: str = "hard", temperature: float = 1.0,
                           min_vars: int = 2, max_vars: int = 8,
                           tol: float = 1e-12) -> EquivalenceCorpusResult:
    """Compare the layer to the reference round on random graphs and states.

    Each trial draws a connected graph with ``min_vars``..``max_vars``
    variables, random beliefs in (0.01, 0.99), and measures the decoded
    L-infinity gap.
    """
    if count < 1:
        raise ValueError(f"need at least one instance, got {count}")
    if not (1 <= min_vars <= max_vars):
        raise ValueError(f"variable range [{min_vars}, {max_vars}] is invalid")
    records = []
    for t in range(count):
        trial_seed = derive_seed(seed, t)
        rng = np.random.default_rng(trial_seed)
        num_vars = int(rng.integers(min_vars, max_vars + 1))
        graph = random_connected_graph(num_vars, rng)
        state = BeliefState(rng.uniform(0.01, 0.99, size=num_vars))
        check = check_round(graph, state, attention_mode=attention_mode,
                            temperature=temperature, tol=tol)
        records.append(EquivalenceRecord(seed=trial_seed, num_vars=num_vars,
                                         deviation=check.max_abs_deviation))
    return EquivalenceCorpusResult(records=tuple(records), master_seed=seed,
                                   attention_mode=attention_mode,
                                   temperature=temperature, tol=tol)


def equivalence_records_csv(result: EquivalenceCorpusResult) -> str:
    lines = ["seed,num_vars,deviation"]
    for r in result.records:
        lines.append(f"{r.seed},{r.num_vars},{r.deviation!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Soft-attention concentration curve
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConcentrationResult:
    """Worst decoded gap between soft and hard routing, per temperature."""

    temperatures: tuple[float, ...]
    max_errors: tuple[float, ...]
    master_seed: int
    trials: int

    @property
    def nonincreasing(self) -> bool:
        return all(b <= a for a, b in zip(self.max_errors, self.max_errors[1:]))

    @property
    def final_error(self) -> float:
        return self.max_errors[-1]


def run_concentration_curve(temperatures=(1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0),
                            trials: int = 20, seed: int = 0, *,
                            min_vars: int = 2, max_vars: int = 8) -> ConcentrationResult:
    """Measure how soft routing approaches hard routing as the temperature grows.

    For each trial graph/state the hard-mode layer output is the reference;
    the reported value per temperature is the worst decoded belief gap over
    all trials.  The same trials are reused across temperatures so the curve
    is comparable point to point.
    """
    temps = tuple(float(b) for b in temperatures)
    if not temps or any(b <= 0 for b in temps):
        raise ValueError(f"temperatures must be positive, got {temperatures!r}")
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    cases = []
    for t in range(trials):
        trial_seed = derive_seed(seed, t)
        rng = np.random.default_rng(trial_seed)
        num_vars = int(rng.integers(min_vars, max_vars + 1))
        graph = random_connected_graph(num_vars, rng)
        state = BeliefState(rng.uniform(0.01, 0.99, size=num_vars))
        x = encode_bp_state(graph, state)
        hard = build_round_weights(num_vars, attention_mode="hard")
        reference = decode_state(forward_pass(x, hard)).beliefs
        cases.append((num_vars, x, reference))
    max_errors = []
    for beta in temps:
        worst = 0.0
        for num_vars, x, reference in cases:
            soft = build_round_weights(num_vars, attention_mode="soft", temperature=beta)
            decoded = decode_state(forward_pass(x, soft)).beliefs
            worst = max(worst, float(np.max(np.abs(decoded - reference))))
        max_errors.append(worst)
    return ConcentrationResult(temperatures=temps, max_errors=tuple(max_errors),
                               master_seed=seed, trials=trials)


def concentration_csv(result: ConcentrationResult) -> str:
    lines = ["temperature,max_error"]
    for beta, err in zip(result.temperatures, result.max_errors):
        lines.append(f"{beta!r},{err!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Training pairs for downstream regression harnesses
# ---------------------------------------------------------------------------


def training_pairs_csv(count: int, seed: int = 0, *, low: float = 0.05,
                       high: float = 1.0) -> str:
    """Exact (factor table -> posteriors) pairs on the two-variable chain.

    Each row is one instance: the four table entries drawn uniformly from
    [low, high] and the oracle posteriors of both variables.  This is the
    supervised interface downstream learners consume; it exposes only exact
    values, never approximations.
    """
    if count < 1:
        raise ValueError(f"need at least one pair, got {count}")
    lines = ["f00,f01,f10,f11,posterior0,posterior1"]
    for t in range(count):
        rng = np.random.default_rng(derive_seed(seed, t))
        graph = generate_structure(StructureKind.CHAIN2, rng, low=low, high=high)
        exact = exact_marginals(graph).marginals
        table = graph.factors[0].table
        lines.append(f"{table[0]!r},{table[1]!r},{table[2]!r},{table[3]!r},"
                     f"{float(exact[0])!r},{float(exact[1])!r}")
    return "\n".join(lines) + "\n"
