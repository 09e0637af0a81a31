"""Supervised data sourced from the companion package's oracle CSV.

The only coupling to ``bplab`` is its command-line batch interface::

    bplab oracle --batch N --seed S [--low L --high H]

which prints one exact training pair per row::

    f00,f01,f10,f11,posterior0,posterior1

Each row is a two-variable chain instance: the four factor-table entries
and the enumeration posteriors of both variables.  This module fetches,
parses, validates, and tokenizes those rows; nothing here approximates.
"""

from __future__ import annotations

import subprocess
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ORACLE_HEADER",
    "DatasetError",
    "fetch_oracle_csv",
    "load_oracle_rows",
    "BpDataset",
    "make_dataset",
    "encode_chain_tokens",
]

#: Expected first line of the oracle batch CSV.
ORACLE_HEADER = "f00,f01,f10,f11,posterior0,posterior1"

#: Per-token feature width: belief, four table entries, node type,
#: own index, gathered-neighbour index - the scalar prefix of the
#: companion package's token layout.
TOKEN_DIM = 8


class DatasetError(RuntimeError):
    """The oracle CSV could not be produced, parsed, or validated."""


def fetch_oracle_csv(count: int, seed: int, *, low: float = 0.05,
                     high: float = 1.0, executable: str = "bplab") -> str:
    """Run the companion CLI's batch oracle and return its CSV text."""
    cmd = [executable, "oracle", "--batch", str(count), "--seed", str(seed),
           "--low", repr(low), "--high", repr(high)]
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True, check=False)
    except FileNotFoundError as exc:
        raise DatasetError(
            f"oracle executable {executable!r} not found; install the "
            f"companion package or pass executable=") from exc
    if proc.returncode != 0:
        raise DatasetError(f"oracle batch failed (exit {proc.returncode}): "
                           f"{proc.stderr.strip()}")
    return proc.stdout


def load_oracle_rows(text: str) -> tuple[np.ndarray, np.ndarray]:
    """Parse oracle CSV text into (tables (N, 4), posteriors (N, 2)).

    Validates the header, the field count, and the invariant that
    posteriors lie strictly inside (0, 1).
    """
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise DatasetError("oracle CSV is empty")
    if lines[0] != ORACLE_HEADER:
        raise DatasetError(f"unexpected oracle CSV header {lines[0]!r}; "
                           f"expected {ORACLE_HEADER!r}")
    tables = np.empty((len(lines) - 1, 4))
    posteriors = np.empty((len(lines) - 1, 2))
    for i, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != 6:
            raise DatasetError(f"line {i}: expected 6 fields, got {len(fields)}")
        try:
            values = [float(tok) for tok in fields]
        except ValueError as exc:
            raise DatasetError(f"line {i}: non-numeric field ({exc})") from None
        tables[i - 2] = values[:4]
        posteriors[i - 2] = values[4:]
        if not np.all((posteriors[i - 2] > 0.0) & (posteriors[i - 2] < 1.0)):
            raise DatasetError(f"line {i}: posteriors {values[4:]} outside (0, 1)")
        if not np.all(tables[i - 2] > 0.0):
            raise DatasetError(f"line {i}: non-positive table entry")
    return tables, posteriors


def encode_chain_tokens(tables: np.ndarray) -> np.ndarray:
    """Tokenize instances as two variable tokens of the 8-dim scalar prefix.

    Per token: [belief, f00, f01, f10, f11, node_type, own_index, nbr_index]
    with the initial belief 0.5, node type 0, and indices normalised the way
    the companion layout normalises them (scale 1 for two variables).  Both
    tokens carry the instance's table in the annotation dims; they differ
    only in their index dims, mirroring the companion encoding of the
    two-variable chain.
    """
    tables = np.asarray(tables, dtype=np.float32)
    if tables.ndim != 2 or tables.shape[1] != 4:
        raise DatasetError(f"tables must have shape (N, 4), got {tables.shape}")
    n = tables.shape[0]
    x = np.zeros((n, 2, TOKEN_DIM), dtype=np.float32)
    x[:, :, 0] = 0.5
    x[:, 0, 1:5] = tables
    x[:, 1, 1:5] = tables
    x[:, 0, 6], x[:, 0, 7] = 0.0, 1.0   # variable 0 gathers from 1
    x[:, 1, 6], x[:, 1, 7] = 1.0, 0.0   # variable 1 gathers from 0
    return x


@dataclass(frozen=True)
class BpDataset:
    """Exact (factor table -> posteriors) pairs with a fixed train/val split."""

    tables: np.ndarray      # (N, 4) float64
    posteriors: np.ndarray  # (N, 2) float64
    train_count: int

    def __post_init__(self) -> None:
        n = self.tables.shape[0]
        if self.posteriors.shape != (n, 2) or self.tables.shape != (n, 4):
            raise DatasetError(f"inconsistent dataset shapes {self.tables.shape} "
                               f"and {self.posteriors.shape}")
        if not (0 < self.train_count < n):
            raise DatasetError(f"train split {self.train_count} must leave a "
                               f"non-empty validation part of {n}")

    @property
    def val_count(self) -> int:
        return self.tables.shape[0] - self.train_count

    @property
    def train(self) -> tuple[np.ndarray, np.ndarray]:
        return (self.tables[:self.train_count], self.posteriors[:self.train_count])

    @property
    def val(self) -> tuple[np.ndarray, np.ndarray]:
        return (self.tables[self.train_count:], self.posteriors[self.train_count:])


def make_dataset(count: int = 20_000, seed: int = 0, *, low: float = 0.05,
                 high: float = 1.0, val_fraction: float = 0.1,
                 executable: str = "bplab",
                 csv_text: str | None = None) -> BpDataset:
    """Build the supervised dataset from the oracle batch interface.

    ``count`` instances are fetched (deterministic in ``seed``) and split
    into leading train and trailing validation parts; the default fraction
    reproduces the 18,000 / 2,000 split at ``count=20000``.  Pass
    ``csv_text`` to parse an already-fetched CSV instead of running the
    executable.
    """
    if count < 2:
        raise DatasetError(f"need at least two instances, got {count}")
    if not (0.0 < val_fraction < 1.0):
        raise DatasetError(f"val_fraction must be in (0, 1), got {val_fraction}")
    if csv_text is None:
        csv_text = fetch_oracle_csv(count, seed, low=low, high=high,
                                    executable=executable)
    tables, posteriors = load_oracle_rows(csv_text)
    if tables.shape[0] != count:
        raise DatasetError(f"asked for {count} instances, CSV holds "
                           f"{tables.shape[0]}")
    val_count = max(1, int(round(count * val_fraction)))
    return BpDataset(tables=tables, posteriors=posteriors,
                     train_count=count - val_count)
