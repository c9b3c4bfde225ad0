"""Multiplicative-weights learner for the resource multipliers.

The domain is {theta : ||theta||_1 <= 1, theta >= 0} in d dimensions,
realized as a probability simplex over d+1 coordinates where the extra
"dummy" coordinate always receives payoff zero.  The learner maximizes the
cumulative linear payoff sum_t theta_t . g_t via exponentiated-gradient
steps, which keeps iterates strictly on the simplex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class DualConfig:
    d: int
    eta: float
    horizon: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"invalid dimension d={self.d}")
        if self.eta <= 0:
            raise ValueError(f"step size must be positive, got {self.eta}")


@dataclass
class DualVector:
    """Point of the learner's domain: d active multipliers plus the dummy mass."""

    active: np.ndarray
    dummy: float

    def as_simplex(self) -> np.ndarray:
        return np.append(self.active, self.dummy)


def default_step_size(d: int, horizon: int) -> float:
    """sqrt(ln(d+1) / T): fixed tuning for a horizon known in advance."""
    return math.sqrt(math.log(d + 1) / horizon)


def init(config: DualConfig) -> DualVector:
    """Uniform start: every coordinate, dummy included, gets 1/(d+1)."""
    w = 1.0 / (config.d + 1)
    return DualVector(active=np.full(config.d, w), dummy=w)


def step(theta: DualVector, payoff: np.ndarray, config: DualConfig) -> DualVector:
    """One exponentiated-gradient ascent step on the clamped payoff.

    Active coordinates are reweighted by exp(eta * payoff), the dummy by
    exp(0), then everything is renormalized to sum one.  Payoffs are clamped
    to [-1, 1]; in-range inputs pass through unchanged.
    """
    payoff = np.clip(np.asarray(payoff, dtype=float), -1.0, 1.0)
    if payoff.shape != (config.d,):
        raise ValueError(f"payoff has shape {payoff.shape}, expected ({config.d},)")
    active = theta.active * np.exp(config.eta * payoff)
    total = float(np.sum(active)) + theta.dummy
    return DualVector(active=active / total, dummy=theta.dummy / total)


def hindsight_best(payoff_history: list[np.ndarray]) -> tuple[DualVector, float]:
    """Best fixed point of the domain against a payoff sequence, with its value.

    The payoffs are linear, so the maximum sits at a vertex: either the zero
    vector (value 0, all mass on the dummy) or the best coordinate vector.
    Intended for regret auditing in tests, not for the online path.
    """
    if not payoff_history:
        raise ValueError("empty payoff history")
    sums = np.sum(np.asarray(payoff_history, dtype=float), axis=0)
    d = sums.shape[0]
    j = int(np.argmax(sums))
    if sums[j] <= 0.0:
        return DualVector(active=np.zeros(d), dummy=1.0), 0.0
    active = np.zeros(d)
    active[j] = 1.0
    return DualVector(active=active, dummy=0.0), float(sums[j])
