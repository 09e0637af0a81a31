"""Single-step prediction of a binary-incrementer tape machine.

The machine is a deterministic transition table over a bounded tape; the
dataset enumerates (configuration -> successor configuration) pairs drawn
from trajectories on random inputs.  A small encoder reads one token per
tape cell and must reproduce the entire successor configuration: every
cell symbol, the head position, and the control state.  A sample counts
as correct only when all of them match.
"""

from __future__ import annotations

import json
import math
import time
from collections import Counter
from dataclasses import dataclass

import numpy as np
import torch

from .models import TinyEncoder, TrainConfig

__all__ = [
    "BLANK",
    "TapeMachine",
    "MachineError",
    "binary_incrementer",
    "Configuration",
    "StepDataset",
    "make_step_dataset",
    "majority_baseline",
    "StepperMetrics",
    "train_tm_stepper",
]

#: Tape symbols: blank, zero, one (also the class indices in the encoding).
BLANK, ZERO, ONE = 0, 1, 2
_SYMBOLS = (BLANK, ZERO, ONE)
_MOVES = {"L": -1, "R": +1, "N": 0}


class MachineError(ValueError):
    """A transition table or configuration is malformed."""


@dataclass(frozen=True)
class TapeMachine:
    """A deterministic tape machine given as a transition table.

    ``transitions[state, symbol] = (write, move, next_state)`` with moves in
    {L, R, N}; states missing a (state, symbol) key halt there.
    """

    states: tuple[str, ...]
    transitions: dict

    def __post_init__(self) -> None:
        if not self.states:
            raise MachineError("a machine needs at least one state")
        if len(set(self.states)) != len(self.states):
            raise MachineError("state names must be distinct")
        for (state, symbol), (write, move, nxt) in self.transitions.items():
            if state not in self.states or nxt not in self.states:
                raise MachineError(f"transition ({state!r}, {symbol}) uses an "
                                   f"undeclared state")
            if symbol not in _SYMBOLS or write not in _SYMBOLS:
                raise MachineError(f"transition ({state!r}, {symbol}) uses an "
                                   f"unknown symbol")
            if move not in _MOVES:
                raise MachineError(f"transition ({state!r}, {symbol}) uses move "
                                   f"{move!r}, expected L, R, or N")

    def halts_in(self, state: str, symbol: int) -> bool:
        return (state, symbol) not in self.transitions


@dataclass(frozen=True)
class Configuration:
    """One machine configuration over a fixed-width tape window."""

    tape: tuple[int, ...]
    head: int
    state: str

    def __post_init__(self) -> None:
        if not (0 <= self.head < len(self.tape)):
            raise MachineError(f"head {self.head} outside the {len(self.tape)}-cell tape")
        if any(s not in _SYMBOLS for s in self.tape):
            raise MachineError("tape holds an unknown symbol")


def binary_incrementer() -> TapeMachine:
    """The classic increment-by-one machine.

    From the left end of a binary number (most significant bit first):
    ``seek`` runs right to the blank past the last bit, then ``carry`` walks
    left turning 1s into 0s until it can turn a 0 (or the blank past the
    top bit) into a 1, entering ``done``.
    """
    return TapeMachine(
        states=("seek", "carry", "done"),
        transitions={
            ("seek", ZERO): (ZERO, "R", "seek"),
            ("seek", ONE): (ONE, "R", "seek"),
            ("seek", BLANK): (BLANK, "L", "carry"),
            ("carry", ONE): (ZERO, "L", "carry"),
            ("carry", ZERO): (ONE, "N", "done"),
            ("carry", BLANK): (ONE, "N", "done"),
        },
    )


def step(machine: TapeMachine, config: Configuration) -> Configuration:
    """Apply one transition; halting configurations are their own successor."""
    symbol = config.tape[config.head]
    if machine.halts_in(config.state, symbol):
        return config
    write, move, next_state = machine.transitions[(config.state, symbol)]
    tape = list(config.tape)
    tape[config.head] = write
    head = config.head + _MOVES[move]
    if not (0 <= head < len(tape)):
        raise MachineError(f"head moved off the {len(tape)}-cell window; "
                           f"widen the tape")
    return Configuration(tape=tuple(tape), head=head, state=next_state)


def run_trajectory(machine: TapeMachine, start: Configuration,
                   max_steps: int = 200) -> list[Configuration]:
    """The configuration sequence from ``start`` until the machine halts."""
    configs = [start]
    for _ in range(max_steps):
        nxt = step(machine, configs[-1])
        if nxt == configs[-1]:
            return configs
        configs.append(nxt)
    raise MachineError(f"no halt within {max_steps} steps")


@dataclass(frozen=True)
class StepDataset:
    """(configuration, successor) pairs over a fixed tape window."""

    machine: TapeMachine
    tape_len: int
    inputs: tuple[Configuration, ...]
    targets: tuple[Configuration, ...]
    train_count: int

    @property
    def val_count(self) -> int:
        return len(self.inputs) - self.train_count

    @property
    def train(self) -> tuple[tuple[Configuration, ...], tuple[Configuration, ...]]:
        return (self.inputs[:self.train_count], self.targets[:self.train_count])

    @property
    def val(self) -> tuple[tuple[Configuration, ...], tuple[Configuration, ...]]:
        return (self.inputs[self.train_count:], self.targets[self.train_count:])


def make_step_dataset(machine: TapeMachine | None = None, *,
                      trajectories: int = 3000, tape_len: int = 12,
                      max_bits: int = 8, seed: int = 0,
                      val_fraction: float = 0.1) -> StepDataset:
    """Sample trajectories on random binary numbers and collect their steps.

    Each trajectory writes a random ``1..max_bits``-bit number at a random
    offset and runs the machine from its left end; every non-halting
    configuration contributes one (config -> successor) pair.  Pairs are
    shuffled before the split so both splits cover all trajectory phases.
    """
    if machine is None:
        machine = binary_incrementer()
    if tape_len < max_bits + 2:
        raise MachineError(f"tape of {tape_len} cells cannot hold {max_bits} bits "
                           f"plus carry room")
    if trajectories < 1:
        raise MachineError(f"need at least one trajectory, got {trajectories}")
    rng = np.random.default_rng(seed)
    inputs: list[Configuration] = []
    targets: list[Configuration] = []
    for _ in range(trajectories):
        bits = int(rng.integers(1, max_bits + 1))
        offset = int(rng.integers(1, tape_len - bits))  # keep carry room at 0
        tape = [BLANK] * tape_len
        for b in range(bits):
            tape[offset + b] = ONE if rng.integers(0, 2) else ZERO
        start = Configuration(tape=tuple(tape), head=offset, state="seek")
        trajectory = run_trajectory(machine, start)
        for config, successor in zip(trajectory, trajectory[1:]):
            inputs.append(config)
            targets.append(successor)
    order = rng.permutation(len(inputs))
    inputs = [inputs[i] for i in order]
    targets = [targets[i] for i in order]
    val_count = max(1, int(round(len(inputs) * val_fraction)))
    if val_count >= len(inputs):
        raise MachineError("dataset too small to split; raise trajectories")
    return StepDataset(machine=machine, tape_len=tape_len,
                       inputs=tuple(inputs), targets=tuple(targets),
                       train_count=len(inputs) - val_count)


def majority_baseline(dataset: StepDataset) -> float:
    """Validation accuracy of always answering the most common train target.

    The reference point a constant-output model attains; single-step
    prediction is only meaningful if training beats this by a wide margin.
    """
    train_targets = dataset.train[1]
    most_common, _ = Counter(train_targets).most_common(1)[0]
    val_targets = dataset.val[1]
    return sum(1 for t in val_targets if t == most_common) / len(val_targets)


# ---------------------------------------------------------------------------
# Tensor encoding: one token per cell; per-token features are the symbol
# one-hot, a head flag, and the state one-hot.  Targets use the same layout.
# ---------------------------------------------------------------------------


def _encode_configs(configs, machine: TapeMachine, tape_len: int) -> torch.Tensor:
    state_index = {s: i for i, s in enumerate(machine.states)}
    width = len(_SYMBOLS) + 1 + len(machine.states)
    out = torch.zeros((len(configs), tape_len, width))
    for i, config in enumerate(configs):
        for cell, symbol in enumerate(config.tape):
            out[i, cell, symbol] = 1.0
        out[i, config.head, len(_SYMBOLS)] = 1.0
        out[i, :, len(_SYMBOLS) + 1 + state_index[config.state]] = 1.0
    return out


def _decode_predictions(raw: torch.Tensor, machine: TapeMachine):
    """Argmax-decode model outputs back into configuration fields."""
    num_symbols = len(_SYMBOLS)
    symbols = raw[:, :, :num_symbols].argmax(dim=2)
    heads = raw[:, :, num_symbols].argmax(dim=1)
    states = raw[:, :, num_symbols + 1:].mean(dim=1).argmax(dim=1)
    return symbols, heads, states


def _target_indices(configs, machine: TapeMachine):
    """Class-index targets (symbols per cell, head cell, state) for a batch."""
    state_index = {s: i for i, s in enumerate(machine.states)}
    symbols = torch.tensor([list(c.tape) for c in configs], dtype=torch.long)
    heads = torch.tensor([c.head for c in configs], dtype=torch.long)
    states = torch.tensor([state_index[c.state] for c in configs], dtype=torch.long)
    return symbols, heads, states


def _batch_loss(raw: torch.Tensor, loss_kind: str, y_encoded: torch.Tensor,
                symbols: torch.Tensor, heads: torch.Tensor,
                states: torch.Tensor) -> torch.Tensor:
    """The step-prediction objective on one batch of raw model outputs.

    Cross-entropy treats the successor configuration as three categorical
    groups (per-cell symbol, head cell, control state); the mean-squared
    alternative scores sigmoid outputs against the 0/1 target encoding.
    """
    if loss_kind == "mse":
        return torch.nn.functional.mse_loss(torch.sigmoid(raw), y_encoded)
    ns = len(_SYMBOLS)
    return (torch.nn.functional.cross_entropy(raw[:, :, :ns].reshape(-1, ns),
                                              symbols.reshape(-1))
            + torch.nn.functional.cross_entropy(raw[:, :, ns], heads)
            + torch.nn.functional.cross_entropy(raw[:, :, ns + 1:].mean(dim=1),
                                                states))


def _exact_match_accuracy(model: TinyEncoder, x: torch.Tensor,
                          targets, machine: TapeMachine) -> float:
    state_index = {s: i for i, s in enumerate(machine.states)}
    model.eval()
    with torch.no_grad():
        symbols, heads, states = _decode_predictions(model(x), machine)
    correct = 0
    for i, target in enumerate(targets):
        ok = (tuple(int(s) for s in symbols[i]) == target.tape
              and int(heads[i]) == target.head
              and int(states[i]) == state_index[target.state])
        correct += ok
    return correct / len(targets)


@dataclass(frozen=True)
class StepperMetrics:
    """Outcome of one stepper training run."""

    val_accuracy: float
    baseline_accuracy: float
    epochs_run: int
    epochs_to_target: int | None
    train_count: int
    val_count: int
    seconds: float
    epoch_val_accuracy: tuple[float, ...]
    seed: int
    parameter_count: int

    def json_lines(self) -> str:
        lines = [json.dumps({"event": "epoch", "epoch": i + 1, "val_accuracy": acc})
                 for i, acc in enumerate(self.epoch_val_accuracy)]
        lines.append(json.dumps({
            "event": "summary",
            "experiment": "tm_stepper",
            "val_accuracy": self.val_accuracy,
            "baseline_accuracy": self.baseline_accuracy,
            "epochs": self.epochs_run,
            "epochs_to_target": self.epochs_to_target,
            "train_count": self.train_count,
            "val_count": self.val_count,
            "seconds": round(self.seconds, 3),
            "seed": self.seed,
            "parameters": self.parameter_count,
            "torch": torch.__version__,
        }))
        return "\n".join(lines) + "\n"


def train_tm_stepper(dataset: StepDataset, cfg: TrainConfig | None = None, *,
                     target_accuracy: float = 0.99) -> StepperMetrics:
    """Train single-step prediction; report exact-match validation accuracy.

    The default objective is cross-entropy over the three categorical parts
    of the successor configuration; ``cfg.loss = "mse"`` selects the
    mean-squared alternative on the 0/1 encoding.  ``epochs_to_target``
    records the first epoch whose validation accuracy reached
    ``target_accuracy`` (None if never).
    """
    if cfg is None:
        cfg = TrainConfig(epochs=10, loss="cross_entropy")
    machine = dataset.machine
    torch.manual_seed(cfg.seed)
    width = len(_SYMBOLS) + 1 + len(machine.states)
    model = TinyEncoder(input_dim=width, out_dim=width,
                        max_len=dataset.tape_len, cfg=cfg)
    optimiser = torch.optim.Adam(model.parameters(), lr=cfg.lr)

    train_inputs, train_targets = dataset.train
    val_inputs, val_targets = dataset.val
    x_train = _encode_configs(train_inputs, machine, dataset.tape_len)
    y_train = _encode_configs(train_targets, machine, dataset.tape_len)
    x_val = _encode_configs(val_inputs, machine, dataset.tape_len)
    sym_t, head_t, state_t = _target_indices(train_targets, machine)

    shuffler = torch.Generator().manual_seed(cfg.seed)
    epoch_val_accuracy = []
    epochs_to_target = None
    start = time.perf_counter()
    for epoch in range(cfg.epochs):
        model.train()
        order = torch.randperm(x_train.shape[0], generator=shuffler)
        for s in range(0, x_train.shape[0], cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            optimiser.zero_grad()
            loss = _batch_loss(model(x_train[idx]), cfg.loss, y_train[idx],
                               sym_t[idx], head_t[idx], state_t[idx])
            if not math.isfinite(loss.item()):
                raise RuntimeError(f"loss became {loss.item()!r}")
            loss.backward()
            optimiser.step()
        accuracy = _exact_match_accuracy(model, x_val, val_targets, machine)
        epoch_val_accuracy.append(accuracy)
        if epochs_to_target is None and accuracy >= target_accuracy:
            epochs_to_target = epoch + 1
    seconds = time.perf_counter() - start

    return StepperMetrics(
        val_accuracy=epoch_val_accuracy[-1],
        baseline_accuracy=majority_baseline(dataset),
        epochs_run=cfg.epochs,
        epochs_to_target=epochs_to_target,
        train_count=dataset.train_count,
        val_count=dataset.val_count,
        seconds=seconds,
        epoch_val_accuracy=tuple(epoch_val_accuracy),
        seed=cfg.seed,
        parameter_count=model.parameter_count(),
    )
