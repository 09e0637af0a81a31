"""The small trained model and its training configuration.

One architecture serves both experiments: a standard two-layer, two-head
transformer encoder at model width 32 producing one output vector per
token.  Experiments differ only in the per-token input features and in how
they read the outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

__all__ = ["TrainConfig", "TinyEncoder"]

_ACTIVATIONS = ("relu", "gelu", "sigmoid")


@dataclass(frozen=True)
class TrainConfig:
    """Shared training setup: two layers, two heads, width 32, Adam at 1e-3,
    mean-squared-error loss.

    ``activation`` selects the encoder's feed-forward nonlinearity: the
    standard rectifier by default, with a sigmoid variant available to probe
    whether the activation that makes the hand construction exact also
    suits gradient descent.  ``loss`` names the training objective; the
    posterior regression uses (and requires) mean squared error, while the
    categorical step prediction defaults to cross-entropy.
    """

    layers: int = 2
    heads: int = 2
    d_model: int = 32
    lr: float = 1e-3
    epochs: int = 50
    batch_size: int = 128
    seed: int = 0
    activation: str = "relu"
    loss: str = "mse"
    dim_feedforward: int = 64

    def __post_init__(self) -> None:
        for name in ("layers", "heads", "d_model", "epochs", "batch_size",
                     "dim_feedforward"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.d_model % self.heads != 0:
            raise ValueError(f"d_model {self.d_model} must divide evenly into "
                             f"{self.heads} heads")
        if not (self.lr > 0):
            raise ValueError(f"lr must be positive, got {self.lr!r}")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {_ACTIVATIONS}, "
                             f"got {self.activation!r}")
        if self.loss not in ("mse", "cross_entropy"):
            raise ValueError(f"loss must be 'mse' or 'cross_entropy', "
                             f"got {self.loss!r}")


class TinyEncoder(nn.Module):
    """Token features -> encoder -> one output vector per token.

    Inputs are embedded linearly, given a learned positional embedding, and
    passed through ``cfg.layers`` standard encoder layers; a linear head
    maps each token to ``out_dim`` raw outputs (callers apply their own
    output nonlinearity).
    """

    def __init__(self, input_dim: int, out_dim: int, max_len: int,
                 cfg: TrainConfig) -> None:
        super().__init__()
        if input_dim < 1 or out_dim < 1 or max_len < 1:
            raise ValueError("input_dim, out_dim, and max_len must be positive")
        self.cfg = cfg
        self.embed = nn.Linear(input_dim, cfg.d_model)
        self.positions = nn.Embedding(max_len, cfg.d_model)
        activation = torch.sigmoid if cfg.activation == "sigmoid" else cfg.activation
        layer = nn.TransformerEncoderLayer(
            d_model=cfg.d_model,
            nhead=cfg.heads,
            dim_feedforward=cfg.dim_feedforward,
            dropout=0.0,
            activation=activation,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=cfg.layers,
                                             enable_nested_tensor=False)
        self.head = nn.Linear(cfg.d_model, out_dim)
        self.max_len = max_len

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 3:
            raise ValueError(f"expected (batch, tokens, features), got {tuple(x.shape)}")
        if x.shape[1] > self.max_len:
            raise ValueError(f"{x.shape[1]} tokens exceed the positional table "
                             f"({self.max_len})")
        pos = torch.arange(x.shape[1], device=x.device)
        h = self.embed(x) + self.positions(pos)
        return self.head(self.encoder(h))

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())
