"""Training harness probing whether gradient descent finds the computations
that the companion ``bplab`` package builds by hand.

Two experiments:

* :mod:`bplab_harness.regressor` - a two-layer encoder trained to regress
  exact two-variable posteriors from factor tables, supervised purely by
  the ``bplab oracle --batch`` CSV interface.
* :mod:`bplab_harness.stepper` - the same architecture trained to predict
  one step of a binary-incrementer tape machine.

The harness never imports ``bplab``; the oracle CSV is its only coupling
to the companion package.
"""

from .data import (
    BpDataset,
    DatasetError,
    fetch_oracle_csv,
    load_oracle_rows,
    make_dataset,
)
from .models import TrainConfig, TinyEncoder
from .regressor import RegressorMetrics, train_bp_regressor
from .stepper import (
    StepperMetrics,
    TapeMachine,
    binary_incrementer,
    majority_baseline,
    make_step_dataset,
    train_tm_stepper,
)

__version__ = "0.1.0"

__all__ = [
    "BpDataset",
    "DatasetError",
    "fetch_oracle_csv",
    "load_oracle_rows",
    "make_dataset",
    "TrainConfig",
    "TinyEncoder",
    "RegressorMetrics",
    "train_bp_regressor",
    "StepperMetrics",
    "TapeMachine",
    "binary_incrementer",
    "majority_baseline",
    "make_step_dataset",
    "train_tm_stepper",
    "__version__",
]
