"""Warm-start pipeline: explore, estimate the optimum, derive z, then exploit.

The first T0 rounds play the arm whose context has the largest Mahalanobis
norm under the inverse Gram, i.e. the direction of maximal estimation
uncertainty.  The per-round parameter estimates snapshotted before each
update value every arm of every observed slate inside a sample-average
packing LP, whose (slack-relaxed) optimum feeds the trade-off scalar z.
The remaining rounds run the core policy with the leftover budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import estimation, packing, policy
from .dual import DualVector
from .envs import LinearEnvironment, realize, sample_slate
from .estimation import EstimatorState
from .policy import EpisodeLog, RoundRecord


@dataclass
class ExplorationSample:
    """One warm-up round: the slate, what was played, and the estimates
    as they stood before this round's update."""

    slate: np.ndarray
    played_arm: int
    played_context: np.ndarray
    reward: float
    consumption: np.ndarray
    mu_hat_snapshot: np.ndarray
    w_hat_snapshot: np.ndarray


def exploration_arm(slate: np.ndarray, est: EstimatorState) -> int:
    """Arm whose context maximizes the inverse-Gram Mahalanobis norm.

    Pure exploration: no-op is never selected.  Ties break to the lowest
    index.  Returns a 1-based arm index.
    """
    slate = np.asarray(slate, dtype=float)
    if slate.ndim != 2 or slate.shape[1] == 0:
        raise ValueError("empty slate")
    norms_sq = np.einsum("mk,mn,nk->k", slate, est.gram_inv, slate)
    return int(np.argmax(norms_sq)) + 1


def gamma(horizon: float, t0: float, m: int, d: int, delta: float) -> float:
    """Slack constant for the sample optimum: (T/T0) * 2m * sqrt(T0 ln(T0) ln(T0 d / delta))."""
    if t0 < 2:
        raise ValueError(f"exploration length must be >= 2, got {t0}")
    return (horizon / t0) * 2.0 * m * math.sqrt(t0 * math.log(t0) * math.log(t0 * d / delta))


def estimate_opt(
    samples: list[ExplorationSample],
    gamma_slack: float,
    budget: float,
    horizon: int,
) -> float:
    """Sample-average estimate of the optimal static policy value.

    Solves, over per-sample arm distributions pi_i on the (K+1)-simplex,

        max (T/T0) sum_i muhat_i . x_i pi_i
        s.t. (T/T0) sum_i What_i^T x_i pi_i <= (budget + gamma_slack) 1,

    with each sample valued by its own snapshot estimates.  Never negative:
    the no-op option keeps zero feasible.
    """
    if not samples:
        raise ValueError("empty sample list")
    if gamma_slack < 0:
        raise ValueError("gamma_slack must be nonnegative")
    t0 = len(samples)
    k = samples[0].slate.shape[1]
    d = samples[0].w_hat_snapshot.shape[1]
    rewards = np.zeros((t0, k + 1))
    consumption = np.zeros((t0, k + 1, d))
    for i, s in enumerate(samples):
        rewards[i, 1:] = s.slate.T @ s.mu_hat_snapshot
        consumption[i, 1:, :] = s.slate.T @ s.w_hat_snapshot
    inst = packing.PackingInstance(
        rewards=rewards,
        consumption=consumption,
        caps=np.full(d, budget + gamma_slack),
        scale=horizon / t0,
    )
    return max(packing.solve(inst).value, 0.0)


def compute_z(opt_hat: float, gamma_slack_base: float, b_prime: float) -> float:
    """Trade-off scalar from the slack-relaxed optimum estimate.

    2 * ((opt_hat + 2 gamma) / B' + 1): the inner expression upper-bounds
    OPT/B' + 1 with high probability, and the doubling keeps it valid for
    the reduced budget B' = B - T0.
    """
    if b_prime <= 0:
        raise ValueError(f"invalid budget: B' must be positive, got {b_prime}")
    return 2.0 * ((opt_hat + 2.0 * gamma_slack_base) / b_prime + 1.0)


def run_full(
    env: LinearEnvironment,
    budget: float,
    horizon: int,
    t0: Optional[int] = None,
    delta: float = 0.05,
) -> EpisodeLog:
    """Both phases end to end; returns the merged episode log.

    Phase 1 plays t0 exploration rounds (default ceil(sqrt(T))), charging
    real consumption against the global budget.  Phase 2 derives z from the
    sample LP with slack 2*gamma and runs the core policy for the remaining
    rounds with budget B' = B - t0, whose context stream continues at round
    t0 + 1.  Requires B > 2 t0 so that B' >= B/2.
    """
    if t0 is None:
        t0 = math.ceil(math.sqrt(horizon))
    if t0 < 2 or t0 >= horizon:
        raise ValueError(f"need 2 <= t0 < horizon, got t0={t0}, horizon={horizon}")
    if budget <= 2 * t0:
        raise ValueError(f"invalid budget: need B > 2*t0, got B={budget}, t0={t0}")

    est = estimation.init(env.m, env.d, delta)
    theta0 = DualVector(active=np.full(env.d, 1.0 / (env.d + 1)), dummy=1.0 / (env.d + 1))
    samples: list[ExplorationSample] = []
    records: list[RoundRecord] = []
    consumed = np.zeros(env.d)
    total = 0.0
    for t in range(1, t0 + 1):
        slate = sample_slate(env, t)
        mu_snap = est.mu_hat.copy()
        w_snap = est.w_hat.copy()
        norms_sq = np.einsum("mk,mn,nk->k", slate, est.gram_inv, slate)
        arm = int(np.argmax(norms_sq)) + 1
        x = slate[:, arm - 1].copy()
        r, v = realize(env, x)
        samples.append(
            ExplorationSample(
                slate=slate,
                played_arm=arm,
                played_context=x,
                reward=r,
                consumption=v,
                mu_hat_snapshot=mu_snap,
                w_hat_snapshot=w_snap,
            )
        )
        records.append(
            RoundRecord(
                t=t,
                arm=arm,
                reward=r,
                consumption=v,
                theta=theta0,
                adjusted_scores=np.concatenate([[0.0], np.sqrt(np.maximum(norms_sq, 0.0))]),
                phase="explore",
            )
        )
        consumed += v
        total += r
        est = estimation.update(est, x, r, v)

    gamma_value = gamma(horizon, t0, env.m, env.d, delta)
    opt_hat = estimate_opt(samples, 2.0 * gamma_value, budget, horizon)
    b_prime = budget - t0
    z = compute_z(opt_hat, gamma_value, b_prime)

    core = policy.run_episode(env, b_prime, horizon - t0, z, delta, first_round=t0 + 1)
    return EpisodeLog(
        records=records + core.records,
        total_reward=total + core.total_reward,
        stop_round=t0 + core.stop_round,
        stop_reason=core.stop_reason,
        z_used=z,
        budget=float(budget),
        horizon=horizon,
        consumed=consumed + core.consumed,
        explore_rounds=t0,
        opt_estimate=opt_hat,
        gamma_value=gamma_value,
    )
