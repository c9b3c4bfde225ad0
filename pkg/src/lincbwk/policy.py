"""Per-round optimistic arm selection with dual-priced consumption.

Each round the policy scores every arm by its optimistic reward minus
z times the dual-weighted optimistic consumption, compares against the
always-available no-op (score 0), and plays the argmax.  Outcomes feed the
ridge estimator; the dual learner is advanced with payoff v_t - (B/T) 1.
A hard budget ledger stops the episode before any resource can exceed its
budget: we exit before a round would be played once some coordinate has
consumed more than B - 1, and per-round consumption is at most 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import dual, estimation
from .dual import DualConfig, DualVector
from .envs import LinearEnvironment, realize, sample_slate


@dataclass
class BudgetLedger:
    """Cumulative consumption against a per-resource budget."""

    budget: float
    horizon: int
    consumed: np.ndarray
    rounds_played: int = 0

    def must_stop(self) -> bool:
        """True once another round could overshoot some resource."""
        return bool(np.any(self.consumed > self.budget - 1.0))

    def charge(self, v: np.ndarray) -> None:
        self.consumed = self.consumed + v
        self.rounds_played += 1


@dataclass
class RoundRecord:
    t: int
    arm: int  # 0 = no-op, 1..K = real arms
    reward: float
    consumption: np.ndarray
    theta: DualVector
    adjusted_scores: np.ndarray  # (K+1,), entry 0 is the no-op score
    phase: str  # "explore" | "exploit"


@dataclass
class EpisodeLog:
    records: list[RoundRecord]
    total_reward: float
    stop_round: int
    stop_reason: str  # "horizon" | "budget"
    z_used: float
    budget: float
    horizon: int
    consumed: np.ndarray
    explore_rounds: int = 0
    opt_estimate: Optional[float] = None
    gamma_value: Optional[float] = None
    extra: dict = field(default_factory=dict)


def adjusted_score(
    x: np.ndarray, est: estimation.EstimatorState, theta: DualVector, z: float
) -> float:
    """Optimistic reward of x minus z times the theta-priced optimistic consumption."""
    if z < 0:
        raise ValueError(f"z must be nonnegative, got {z}")
    lcb = estimation.optimistic_consumption(est, x)
    return estimation.optimistic_reward(est, x) - z * float(lcb @ theta.active)


def selection_scores(
    slate: np.ndarray, est: estimation.EstimatorState, theta: DualVector, z: float
) -> np.ndarray:
    """Scores of the no-op (index 0) and every arm of the slate, in one pass."""
    if z < 0:
        raise ValueError(f"z must be nonnegative, got {z}")
    ucb, lcb, _ = estimation.slate_optimism(est, slate)
    scores = np.empty(slate.shape[1] + 1)
    scores[0] = 0.0
    scores[1:] = ucb - z * (lcb @ theta.active)
    return scores


def select_arm(
    slate: np.ndarray, est: estimation.EstimatorState, theta: DualVector, z: float
) -> int:
    """Argmax of the adjusted scores over the no-op and all arms.

    Ties break to the lowest index, so the no-op wins ties at score zero.
    """
    slate = np.asarray(slate, dtype=float)
    if slate.ndim != 2 or slate.shape[1] == 0:
        raise ValueError("empty slate")
    return int(np.argmax(selection_scores(slate, est, theta, z)))


def run_episode(
    env: LinearEnvironment,
    budget: float,
    horizon: int,
    z: float,
    delta: float,
    first_round: int = 1,
) -> EpisodeLog:
    """One full episode of the optimistic primal-dual policy with given z.

    Estimator and dual state start fresh.  No-op rounds observe nothing, so
    the estimator is not updated there, but the dual learner still steps
    (with v = 0).  first_round offsets the context stream, letting a caller
    resume after a warm-up phase without replaying its slates.
    """
    if budget <= 0:
        raise ValueError(f"budget must be positive, got {budget}")
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    est = estimation.init(env.m, env.d, delta)
    cfg = DualConfig(d=env.d, eta=dual.default_step_size(env.d, horizon), horizon=horizon)
    theta = dual.init(cfg)
    ledger = BudgetLedger(budget=float(budget), horizon=horizon, consumed=np.zeros(env.d))
    ratio = budget / horizon

    records: list[RoundRecord] = []
    total = 0.0
    stop_reason = "horizon"
    for i in range(horizon):
        if ledger.must_stop():
            stop_reason = "budget"
            break
        t = first_round + i
        slate = sample_slate(env, t)
        scores = selection_scores(slate, est, theta, z)
        arm = int(np.argmax(scores))
        if arm == 0:
            r, v = 0.0, np.zeros(env.d)
        else:
            x = slate[:, arm - 1]
            r, v = realize(env, x)
        ledger.charge(v)
        total += r
        records.append(
            RoundRecord(
                t=t,
                arm=arm,
                reward=r,
                consumption=v,
                theta=DualVector(active=theta.active.copy(), dummy=theta.dummy),
                adjusted_scores=scores,
                phase="exploit",
            )
        )
        if arm != 0:
            est = estimation.update(est, x, r, v)
        theta = dual.step(theta, v - ratio, cfg)

    if np.any(ledger.consumed > budget):
        raise AssertionError("budget ledger violated hard feasibility")
    return EpisodeLog(
        records=records,
        total_reward=total,
        stop_round=len(records),
        stop_reason=stop_reason,
        z_used=float(z),
        budget=float(budget),
        horizon=horizon,
        consumed=ledger.consumed,
    )
