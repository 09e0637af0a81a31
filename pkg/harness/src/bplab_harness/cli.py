"""Command line for the two training experiments.

Both commands emit JSON lines (one per epoch, one summary) and exit 0 when
the run met its target, 1 when it fell short, 2 on invalid input.
"""

from __future__ import annotations

import sys

import click

from .data import DatasetError, make_dataset
from .models import TrainConfig
from .regressor import TrainingDiverged, train_bp_regressor
from .stepper import MachineError, make_step_dataset, train_tm_stepper

_INPUT_ERRORS = (DatasetError, MachineError, ValueError)


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None or out_path == "-":
        click.echo(text, nl=False)
    else:
        with open(out_path, "w") as fh:
            fh.write(text)


@click.group()
@click.version_option(package_name="bplab-harness")
def main() -> None:
    """Trained-model companion experiments for the bplab package."""


@main.command()
@click.option("--count", type=int, default=20_000, show_default=True,
              help="Oracle instances to fetch (train/val split is 9:1).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--epochs", type=int, default=50, show_default=True)
@click.option("--batch-size", type=int, default=128, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--activation", type=click.Choice(["relu", "gelu", "sigmoid"]),
              default="relu", show_default=True,
              help="Feed-forward nonlinearity of the trained encoder.")
@click.option("--executable", default="bplab", show_default=True,
              help="Companion CLI that serves the oracle batches.")
@click.option("--max-val-mae", type=float, default=5e-3, show_default=True,
              help="Pass/fail bound on the final validation MAE.")
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None,
              help="Write the JSON lines to this file instead of stdout.")
def regress(count, seed, epochs, batch_size, lr, activation, executable,
            max_val_mae, out) -> None:
    """Train the posterior regressor on oracle-labelled factor tables."""
    try:
        cfg = TrainConfig(epochs=epochs, batch_size=batch_size, lr=lr,
                          seed=seed, activation=activation)
        dataset = make_dataset(count, seed, executable=executable)
        metrics = train_bp_regressor(dataset, cfg)
    except TrainingDiverged as exc:
        click.echo(f"error: training diverged: {exc}", err=True)
        sys.exit(1)
    except _INPUT_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    _emit(metrics.json_lines(), out)
    ok = metrics.val_mae <= max_val_mae
    click.echo(f"regress: val MAE {metrics.val_mae:.6f} "
               f"(target <= {max_val_mae:g}) in {metrics.seconds:.0f}s -> "
               f"{'ok' if ok else 'FAILED'}", err=True)
    if not ok:
        sys.exit(1)


@main.command()
@click.option("--trajectories", type=int, default=3000, show_default=True)
@click.option("--tape-len", type=int, default=12, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--epochs", type=int, default=10, show_default=True)
@click.option("--batch-size", type=int, default=128, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--loss", type=click.Choice(["cross_entropy", "mse"]),
              default="cross_entropy", show_default=True)
@click.option("--min-accuracy", type=float, default=0.99, show_default=True,
              help="Pass/fail bound on exact-match validation accuracy.")
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None)
def step(trajectories, tape_len, seed, epochs, batch_size, lr, loss,
         min_accuracy, out) -> None:
    """Train single-step prediction of the binary incrementer."""
    try:
        cfg = TrainConfig(epochs=epochs, batch_size=batch_size, lr=lr, seed=seed,
                          loss=loss)
        dataset = make_step_dataset(trajectories=trajectories, tape_len=tape_len,
                                    seed=seed)
        metrics = train_tm_stepper(dataset, cfg, target_accuracy=min_accuracy)
    except _INPUT_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    _emit(metrics.json_lines(), out)
    ok = metrics.val_accuracy >= min_accuracy
    click.echo(f"step: val accuracy {metrics.val_accuracy:.4f} "
               f"(target >= {min_accuracy:g}, baseline "
               f"{metrics.baseline_accuracy:.4f}) in {metrics.seconds:.0f}s -> "
               f"{'ok' if ok else 'FAILED'}", err=True)
    if not ok:
        sys.exit(1)


if __name__ == "__main__":  # pragma: no cover
    main()
