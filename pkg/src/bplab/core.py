"""Log-odds algebra for combining independent binary evidence.

A belief is a probability in the open interval (0, 1) that a binary
variable is true.  The logit map ``L(p) = ln(p / (1 - p))`` carries
beliefs to the real line, where independent evidence adds; the logistic
sigmoid carries sums back.  The fundamental combination rule is

    combine(m0, m1) = sigmoid(L(m0) + L(m1))
                    = m0*m1 / (m0*m1 + (1-m0)*(1-m1)),

a commutative, associative operation with identity 0.5 and inverse
``1 - p``.  ``weighted_combine`` generalises it to
``sigmoid(w0*L(m0) + w1*L(m1) + b)``; the parameter triple (1, 1, 0) is
the unique member of that family that reduces to the exact rule.

All public entry points clamp probabilities into
``[PROB_EPS, 1 - PROB_EPS]`` so that logits stay finite, and reject
values outside (0, 1) outright.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "PROB_EPS",
    "ProbabilityError",
    "FfnParams",
    "BP_EXACT_PARAMS",
    "clamp_probability",
    "logit",
    "sigmoid",
    "update_belief",
    "update_belief_logit",
    "weighted_update",
]

#: Beliefs are clamped into [PROB_EPS, 1 - PROB_EPS] before any logit is taken.
PROB_EPS = 1e-9


class ProbabilityError(ValueError):
    """A value could not be interpreted as an open-interval probability."""


def clamp_probability(value: float) -> float:
    """Validate ``value`` as a probability and clamp it away from 0 and 1.

    Values outside the open interval (0, 1), and non-finite values, raise
    :class:`ProbabilityError`; values inside it are clamped into
    ``[PROB_EPS, 1 - PROB_EPS]`` so downstream logits are finite.
    """
    if not isinstance(value, (int, float)):
        raise ProbabilityError(f"probability must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or value <= 0.0 or value >= 1.0:
        raise ProbabilityError(f"probability must lie strictly in (0, 1), got {value!r}")
    return min(max(value, PROB_EPS), 1.0 - PROB_EPS)


def logit(p: float) -> float:
    """Log-odds of ``p``: ``ln(p / (1 - p))``.

    The inverse of :func:`sigmoid` up to the clamp; ``logit(0.5) == 0.0``.
    """
    p = clamp_probability(p)
    return math.log(p / (1.0 - p))


def sigmoid(x: float) -> float:
    """Logistic function ``1 / (1 + exp(-x))``, clamped into the belief range.

    Saturated arguments (|x| beyond roughly 20) would round to exactly 0 or 1
    in floating point; the result is clamped into ``[PROB_EPS, 1 - PROB_EPS]``
    so it remains a valid belief.  Non-finite arguments are rejected.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ProbabilityError(f"sigmoid argument must be finite, got {x!r}")
    if x >= 0.0:
        p = 1.0 / (1.0 + math.exp(-x))
    else:
        e = math.exp(x)
        p = e / (1.0 + e)
    return min(max(p, PROB_EPS), 1.0 - PROB_EPS)


def update_belief(m0: float, m1: float) -> float:
    """Combine two independent belief messages into one posterior belief.

    Computed in the ratio form ``m0*m1 / (m0*m1 + (1-m0)*(1-m1))``, which is
    algebraically ``sigmoid(logit(m0) + logit(m1))`` but avoids the round trip
    through ``exp``/``log`` (see :func:`update_belief_logit` for the cross-check
    form).  The operation is commutative and associative, 0.5 is its identity,
    and ``1 - p`` is the inverse of ``p``.
    """
    m0 = clamp_probability(m0)
    m1 = clamp_probability(m1)
    joint_true = m0 * m1
    joint_false = (1.0 - m0) * (1.0 - m1)
    p = joint_true / (joint_true + joint_false)
    return min(max(p, PROB_EPS), 1.0 - PROB_EPS)


def update_belief_logit(m0: float, m1: float) -> float:
    """Combine two messages via the logit-sum form ``sigmoid(L(m0) + L(m1))``.

    Mathematically identical to :func:`update_belief`; kept as an independent
    computation path so the two can be compared in tests.
    """
    return sigmoid(logit(m0) + logit(m1))


@dataclass(frozen=True)
class FfnParams:
    """Parameters (w0, w1, b) of the weighted combination rule.

    ``weighted_update`` interprets them as
    ``sigmoid(w0*logit(m0) + w1*logit(m1) + b)``.  The bias ``b`` is a raw
    log-odds offset and is passed through uninterpreted.
    """

    w0: float = 1.0
    w1: float = 1.0
    b: float = 0.0

    def __post_init__(self) -> None:
        for name in ("w0", "w1", "b"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(float(value)):
                raise ValueError(f"FfnParams.{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))

    @property
    def is_exact(self) -> bool:
        """True when the parameters reduce to the exact combination rule."""
        return self.w0 == 1.0 and self.w1 == 1.0 and self.b == 0.0


#: The unique parameter point at which ``weighted_update`` is the exact rule.
BP_EXACT_PARAMS = FfnParams(1.0, 1.0, 0.0)


def weighted_update(m0: float, m1: float, params: FfnParams) -> float:
    """Combine two messages with per-input log-odds weights and a bias.

    Computes ``sigmoid(w0*logit(m0) + w1*logit(m1) + b)``.  At the exact
    point ``(1, 1, 0)`` this routes through :func:`update_belief` so that the
    weighted and unweighted paths agree bit for bit, not merely to round-off.
    """
    if not isinstance(params, FfnParams):
        params = FfnParams(*params)
    if params.is_exact:
        return update_belief(m0, m1)
    return sigmoid(params.w0 * logit(m0) + params.w1 * logit(m1) + params.b)
