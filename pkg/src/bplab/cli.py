"""Command-line harness for the experiment suites.

Every subcommand is seeded and deterministic: the same seed produces
byte-identical output, whatever the machine or backend.  Exit codes follow
one convention: 0 when the run's checks hold, 1 when a check fails, 2 when
the input (file, graph text, options) is invalid.
"""

from __future__ import annotations

import functools
import sys

import click
import numpy as np

from . import kernels
from .bench import format_bench, run_bench
from .binarize import binarize_graph, parse_annotated
from .concepts import (
    behavior_class_count,
    enumerate_routing_keys,
    max_behavior_classes,
    parse_fsm,
    routing_key_count,
)
from .core import ProbabilityError
from .engine import ConvergenceOptions
from .equivalence import uniqueness_probe
from .experiments import (
    concentration_csv,
    equivalence_records_csv,
    loopy_records_csv,
    loopy_summary_markdown,
    run_concentration_curve,
    run_equivalence_corpus,
    run_loopy_suite,
    run_tree_suite,
    training_pairs_csv,
    tree_records_csv,
)
from .graph import GraphError, LOOPY_SUITE, StructureKind, format_graph, parse_graph
from .oracle import OracleError, exact_marginals

_INPUT_ERRORS = (GraphError, OracleError, ProbabilityError, ValueError)


def _die_on_bad_input(fn):
    """Translate domain validation errors into exit code 2."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _INPUT_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None or out_path == "-":
        click.echo(text, nl=False)
    else:
        with open(out_path, "w") as fh:
            fh.write(text)


def _read_input(path: str | None) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _seed_option(fn):
    return click.option("--seed", type=int, default=0, show_default=True,
                        envvar="BPLAB_SEED",
                        help="Master seed (falls back to $BPLAB_SEED).")(fn)


@click.group()
@click.version_option(package_name="bplab")
def main() -> None:
    """Belief-propagation laboratory: seeded, reproducible experiment suites."""


@main.command()
@click.option("--trials", type=int, default=100, show_default=True,
              help="Instances per structure.")
@_seed_option
@click.option("--structure", "names", multiple=True,
              type=click.Choice([k.value for k in LOOPY_SUITE]),
              help="Restrict to these structures (default: all five).")
@click.option("--max-iters", type=int, default=1000, show_default=True)
@click.option("--tol", type=float, default=1e-10, show_default=True)
@click.option("--damping", type=float, default=0.0, show_default=True)
@click.option("--low", type=float, default=0.1, show_default=True,
              help="Lower bound of the table-entry draw.")
@click.option("--high", type=float, default=1.0, show_default=True,
              help="Upper bound of the table-entry draw.")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Worker processes (output is identical for any value).")
@click.option("--format", "fmt", type=click.Choice(["csv", "md"]), default="md",
              show_default=True, help="csv = per-trial records, md = summary table.")
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None,
              help="Write to this file instead of stdout.")
@click.option("--min-converged-rate", type=float, default=0.99, show_default=True)
@click.option("--max-avg-kl", type=float, default=5e-4, show_default=True)
@click.option("--max-avg-mae", type=float, default=1e-2, show_default=True)
@_die_on_bad_input
def loopy(trials, seed, names, max_iters, tol, damping, low, high, jobs, fmt, out,
          min_converged_rate, max_avg_kl, max_avg_mae) -> None:
    """Benchmark message passing on the five loopy structures vs the oracle."""
    structures = tuple(StructureKind(n) for n in names) if names else LOOPY_SUITE
    options = ConvergenceOptions(max_iters=max_iters, tol=tol, damping=damping)
    result = run_loopy_suite(trials, seed, structures=structures, options=options,
                             low=low, high=high, jobs=jobs)
    _emit(loopy_records_csv(result) if fmt == "csv" else loopy_summary_markdown(result),
          out)
    ok = (result.worst_convergence_rate >= min_converged_rate
          and result.worst_avg_kl <= max_avg_kl
          and result.worst_avg_mae <= max_avg_mae)
    click.echo(f"loopy: {result.total_converged}/{result.total_trials} converged, "
               f"worst avg KL {result.worst_avg_kl:.6f}, "
               f"worst avg MAE {result.worst_avg_mae:.6f} -> "
               f"{'ok' if ok else 'FAILED'}", err=True)
    if not ok:
        sys.exit(1)


@main.command()
@click.option("--count", type=int, default=200, show_default=True)
@_seed_option
@click.option("--max-vars", type=int, default=10, show_default=True)
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None)
@_die_on_bad_input
def tree(count, seed, max_vars, tol, out) -> None:
    """Verify sum-product is exact on random trees."""
    result = run_tree_suite(count, seed, max_vars=max_vars, tol=tol)
    if out is not None:
        _emit(tree_records_csv(result), out)
    click.echo(f"tree: worst marginal error {result.worst_error:.3e} over "
               f"{len(result.records)} trees, all within diameter+1 sweeps: "
               f"{result.all_converged_within_diameter} -> "
               f"{'ok' if result.passed else 'FAILED'}")
    if not result.passed:
        sys.exit(1)


@main.command()
@click.option("--count", type=int, default=1000, show_default=True)
@_seed_option
@click.option("--mode", type=click.Choice(["hard", "soft"]), default="hard",
              show_default=True)
@click.option("--temperature", type=float, default=64.0, show_default=True,
              help="Softmax inverse temperature (soft mode only).")
@click.option("--tol", type=float, default=None,
              help="Deviation bound [default: 1e-12 hard, 1e-9 soft].")
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None)
@_die_on_bad_input
def equiv(count, seed, mode, temperature, tol, out) -> None:
    """Compare the attention layer to the reference round on random graphs."""
    if tol is None:
        tol = 1e-12 if mode == "hard" else 1e-9
    result = run_equivalence_corpus(count, seed, attention_mode=mode,
                                    temperature=temperature, tol=tol)
    if out is not None:
        _emit(equivalence_records_csv(result), out)
    click.echo(f"equiv[{mode}]: max deviation {result.max_deviation:.3e} over "
               f"{len(result.records)} graphs (tol {tol:g}) -> "
               f"{'ok' if result.passed else 'FAILED'}")
    if not result.passed:
        sys.exit(1)


@main.command()
@click.option("--trials", type=int, default=20, show_default=True)
@_seed_option
@click.option("--temperatures", default="1,2,4,8,16,32,64", show_default=True,
              help="Comma-separated softmax temperatures, ascending.")
@click.option("--final-tol", type=float, default=1e-9, show_default=True,
              help="Bound on the error at the last temperature.")
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None)
@_die_on_bad_input
def concentrate(trials, seed, temperatures, final_tol, out) -> None:
    """Trace how soft routing converges to hard routing as temperature grows."""
    temps = tuple(float(tok) for tok in temperatures.split(","))
    result = run_concentration_curve(temps, trials, seed)
    _emit(concentration_csv(result), out)
    ok = result.nonincreasing and result.final_error <= final_tol
    click.echo(f"concentrate: nonincreasing={result.nonincreasing}, "
               f"error at temperature {temps[-1]:g} is {result.final_error:.3e} -> "
               f"{'ok' if ok else 'FAILED'}", err=True)
    if not ok:
        sys.exit(1)


@main.command()
@click.option("--samples", type=int, default=1000, show_default=True)
@_seed_option
@click.option("--tol-exact", type=float, default=1e-15, show_default=True,
              help="Bound on the gap at the exact point (1, 1, 0).")
@click.option("--tol-others", type=float, default=1e-4, show_default=True,
              help="Gap every other grid point must exceed.")
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None)
@_die_on_bad_input
def uniqueness(samples, seed, tol_exact, tol_others, out) -> None:
    """Show that only parameters (1, 1, 0) reproduce the exact combine."""
    report = uniqueness_probe(num_samples=samples, seed=seed)
    lines = ["w0,w1,b,max_deviation"]
    for params, dev in report.entries:
        lines.append(f"{params.w0!r},{params.w1!r},{params.b!r},{dev!r}")
    if out is not None:
        _emit("\n".join(lines) + "\n", out)
    ok = (report.deviation_at_exact <= tol_exact
          and report.min_deviation_elsewhere > tol_others)
    click.echo(f"uniqueness: exact-point gap {report.deviation_at_exact:.3e}, "
               f"smallest gap elsewhere {report.min_deviation_elsewhere:.3e} -> "
               f"{'ok' if ok else 'FAILED'}")
    if not ok:
        sys.exit(1)


@main.command()
@click.option("--max-vars", type=int, default=16, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None)
@_die_on_bad_input
def concepts(max_vars, out) -> None:
    """Tabulate routing-key counts (2*n*n) against explicit enumeration."""
    lines = ["num_vars,routing_keys,enumerated"]
    ok = True
    for n in range(1, max_vars + 1):
        count = routing_key_count(n)
        listed = len(enumerate_routing_keys(n))
        ok = ok and count == listed
        lines.append(f"{n},{count},{listed}")
    _emit("\n".join(lines) + "\n", out)
    if not ok:
        click.echo("concepts: enumeration disagrees with the closed form -> FAILED",
                   err=True)
        sys.exit(1)


@main.command()
@click.argument("path", required=False)
@_die_on_bad_input
def fsm(path) -> None:
    """Count a machine's behaviour classes against the n**n ceiling.

    Reads the transition-table format from PATH (or stdin).
    """
    spec = parse_fsm(_read_input(path))
    classes = behavior_class_count(spec)
    bound = max_behavior_classes(spec.num_states)
    ok = classes <= bound
    click.echo(f"fsm: {spec.num_states} states, {len(spec.symbols)} symbols, "
               f"{classes} behaviour classes (ceiling {bound}) -> "
               f"{'ok' if ok else 'FAILED'}")
    if not ok:
        sys.exit(1)


@main.command()
@click.argument("path", required=False)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None)
@_die_on_bad_input
def binarize(path, out) -> None:
    """Rewrite k-ary nodes (kfactor lines) as balanced pairwise chains.

    Reads the annotated graph format from PATH (or stdin) and emits the
    pairwise graph followed by mapping comments.
    """
    annotated = parse_annotated(_read_input(path))
    graph, mapping = binarize_graph(annotated)
    lines = [format_graph(graph).rstrip("\n")]
    lines.append(f"# originals={mapping.original_vars} total={mapping.total_vars}")
    for exp in mapping.expansions:
        inter = ",".join(str(v) for v in exp.intermediates) or "-"
        lines.append(f"# knode out={exp.knode.output} kind={exp.knode.kind.value} "
                     f"arity={exp.plan.arity} depth={exp.plan.depth} "
                     f"intermediates={inter}")
    _emit("\n".join(lines) + "\n", out)


@main.command()
@click.argument("path", required=False)
@click.option("--batch", type=int, default=None,
              help="Emit this many exact training pairs instead of reading a graph.")
@_seed_option
@click.option("--low", type=float, default=0.05, show_default=True,
              help="Batch mode: lower bound of the table-entry draw.")
@click.option("--high", type=float, default=1.0, show_default=True,
              help="Batch mode: upper bound of the table-entry draw.")
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None)
@_die_on_bad_input
def oracle(path, batch, seed, low, high, out) -> None:
    """Exact marginals by enumeration.

    With PATH (or stdin), prints per-variable marginals of that graph.  With
    --batch N, prints N exact (table -> posteriors) training pairs on the
    two-variable chain.
    """
    if batch is not None:
        _emit(training_pairs_csv(batch, seed, low=low, high=high), out)
        return
    graph = parse_graph(_read_input(path))
    exact = exact_marginals(graph)
    lines = ["var,marginal"]
    for v, p in enumerate(exact.marginals):
        lines.append(f"{v},{float(p)!r}")
    lines.append(f"# partition {exact.partition!r}")
    _emit("\n".join(lines) + "\n", out)


@main.command()
@click.option("--trials", type=int, default=100, show_default=True)
@_seed_option
@_die_on_bad_input
def bench(trials, seed) -> None:
    """Time the compiled kernels against the pure-Python twins."""
    click.echo(f"active backend: {kernels.backend_name()}")
    click.echo(format_bench(run_bench(trials, seed)), nl=False)


if __name__ == "__main__":  # pragma: no cover
    main()
