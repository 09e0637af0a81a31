"""Training a small encoder to regress exact two-variable posteriors.

The model sees each instance as two variable tokens carrying the factor
table and must output both posterior marginals; supervision comes entirely
from the oracle CSV.  The question under test is empirical: does gradient
descent, from random initialisation, find weights that compute what the
companion package constructs by hand?
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass

import numpy as np
import torch

from .data import BpDataset, TOKEN_DIM, encode_chain_tokens
from .models import TinyEncoder, TrainConfig

__all__ = ["RegressorMetrics", "TrainingDiverged", "train_bp_regressor",
           "evaluate_regressor"]


class TrainingDiverged(RuntimeError):
    """The training loss became non-finite."""


@dataclass(frozen=True)
class RegressorMetrics:
    """Outcome of one regressor training run."""

    val_mae: float
    val_max_abs_error: float
    init_val_mae: float
    epochs_run: int
    train_count: int
    val_count: int
    seconds: float
    epoch_val_mae: tuple[float, ...]
    seed: int
    parameter_count: int
    probe_predictions: tuple[tuple[float, float], ...] = ()

    def json_lines(self) -> str:
        """One JSON object per epoch plus a final summary line."""
        lines = [json.dumps({"event": "epoch", "epoch": i + 1, "val_mae": mae})
                 for i, mae in enumerate(self.epoch_val_mae)]
        summary = {
            "event": "summary",
            "experiment": "bp_regressor",
            "val_mae": self.val_mae,
            "val_max_abs_error": self.val_max_abs_error,
            "init_val_mae": self.init_val_mae,
            "epochs": self.epochs_run,
            "train_count": self.train_count,
            "val_count": self.val_count,
            "seconds": round(self.seconds, 3),
            "seed": self.seed,
            "parameters": self.parameter_count,
            "torch": torch.__version__,
        }
        if self.probe_predictions:
            summary["probe_predictions"] = [list(p) for p in self.probe_predictions]
        lines.append(json.dumps(summary))
        return "\n".join(lines) + "\n"


def _as_batches(x: torch.Tensor, y: torch.Tensor, batch_size: int,
                generator: torch.Generator):
    order = torch.randperm(x.shape[0], generator=generator)
    for start in range(0, x.shape[0], batch_size):
        idx = order[start:start + batch_size]
        yield x[idx], y[idx]


def evaluate_regressor(model: TinyEncoder, tables: np.ndarray,
                       posteriors: np.ndarray) -> tuple[float, float]:
    """Mean and max absolute error of the model's posteriors on a split."""
    model.eval()
    with torch.no_grad():
        x = torch.from_numpy(encode_chain_tokens(tables))
        pred = torch.sigmoid(model(x).squeeze(-1))
        err = (pred - torch.from_numpy(posteriors.astype(np.float32))).abs()
    return float(err.mean()), float(err.max())


def train_bp_regressor(dataset: BpDataset, cfg: TrainConfig | None = None, *,
                       probe_tables: np.ndarray | None = None) -> RegressorMetrics:
    """Train on the dataset's train split; report validation MAE.

    Deterministic in ``cfg.seed`` for fixed library versions.  Raises
    :class:`TrainingDiverged` if the loss leaves the reals.  Tables passed
    as ``probe_tables`` are predicted by the trained model and reported in
    the metrics, for spot checks against known posteriors.
    """
    if cfg is None:
        cfg = TrainConfig()
    if cfg.loss != "mse":
        raise ValueError(f"the posterior regression is trained with mean "
                         f"squared error, got loss={cfg.loss!r}")
    torch.manual_seed(cfg.seed)
    model = TinyEncoder(input_dim=TOKEN_DIM, out_dim=1, max_len=2, cfg=cfg)
    optimiser = torch.optim.Adam(model.parameters(), lr=cfg.lr)

    train_tables, train_posteriors = dataset.train
    val_tables, val_posteriors = dataset.val
    x_train = torch.from_numpy(encode_chain_tokens(train_tables))
    y_train = torch.from_numpy(train_posteriors.astype(np.float32))

    init_val_mae, _ = evaluate_regressor(model, val_tables, val_posteriors)
    shuffler = torch.Generator().manual_seed(cfg.seed)
    epoch_val_mae = []
    start = time.perf_counter()
    for _ in range(cfg.epochs):
        model.train()
        for xb, yb in _as_batches(x_train, y_train, cfg.batch_size, shuffler):
            optimiser.zero_grad()
            pred = torch.sigmoid(model(xb).squeeze(-1))
            loss = torch.nn.functional.mse_loss(pred, yb)
            if not math.isfinite(loss.item()):
                raise TrainingDiverged(f"loss became {loss.item()!r}")
            loss.backward()
            optimiser.step()
        val_mae, _ = evaluate_regressor(model, val_tables, val_posteriors)
        epoch_val_mae.append(val_mae)
    seconds = time.perf_counter() - start

    val_mae, val_max = evaluate_regressor(model, val_tables, val_posteriors)
    probe_predictions: tuple[tuple[float, float], ...] = ()
    if probe_tables is not None:
        model.eval()
        with torch.no_grad():
            probe = torch.sigmoid(
                model(torch.from_numpy(encode_chain_tokens(probe_tables)))
            ).squeeze(-1)
        probe_predictions = tuple((float(p[0]), float(p[1])) for p in probe)
    return RegressorMetrics(
        val_mae=val_mae,
        val_max_abs_error=val_max,
        init_val_mae=init_val_mae,
        epochs_run=cfg.epochs,
        train_count=dataset.train_count,
        val_count=dataset.val_count,
        seconds=seconds,
        epoch_val_mae=tuple(epoch_val_mae),
        seed=cfg.seed,
        parameter_count=model.parameter_count(),
        probe_predictions=probe_predictions,
    )
