"""Regularized least-squares estimation with confidence ellipsoids.

Maintains ridge estimates of the reward vector and of every column of the
consumption weight matrix from the stream of (context, reward, consumption)
observations, together with the Gram matrix that shapes the confidence
ellipsoids around them.  Optimistic values (upper bound for reward, lower
bound for consumption) have closed forms: point estimate plus/minus
radius times the Mahalanobis norm of the context under the inverse Gram.

The ridge penalty is fixed at 1 and the radius expression hard-codes a
noise half-range of 1/2, matching the outcome ranges handled here
(rewards and consumptions in [0, 1]).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

# Rank-one inverse updates accumulate roundoff; refresh from scratch this often.
_REINVERT_EVERY = 512


@dataclass
class EstimatorState:
    """Sufficient statistics for the ridge estimates at some round.

    gram is I + sum of x x^T over observed contexts; gram_inv tracks its
    inverse incrementally.  mu_hat and w_hat are the ridge estimates of the
    reward vector and the m x d consumption weight matrix.
    """

    m: int
    d: int
    delta: float
    gram: np.ndarray
    gram_inv: np.ndarray
    reward_moment: np.ndarray
    consumption_moment: np.ndarray
    mu_hat: np.ndarray
    w_hat: np.ndarray
    rounds_seen: int
    updates_since_invert: int = 0


def init(m: int, d: int, delta: float) -> EstimatorState:
    """Fresh estimator: identity Gram, zero moments and estimates."""
    if m < 1 or d < 1:
        raise ValueError(f"invalid dimension: m={m}, d={d} (both must be >= 1)")
    if not (0.0 < delta < 1.0):
        raise ValueError(f"invalid confidence parameter delta={delta}, need 0 < delta < 1")
    return EstimatorState(
        m=m,
        d=d,
        delta=float(delta),
        gram=np.eye(m),
        gram_inv=np.eye(m),
        reward_moment=np.zeros(m),
        consumption_moment=np.zeros((m, d)),
        mu_hat=np.zeros(m),
        w_hat=np.zeros((m, d)),
        rounds_seen=0,
    )


def _check_context(state: EstimatorState, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (state.m,):
        raise ValueError(f"context has shape {x.shape}, expected ({state.m},)")
    if float(np.linalg.norm(x)) > math.sqrt(state.m) + 1e-9:
        raise ValueError(
            f"context out of range: ||x||_2={np.linalg.norm(x):.6g} exceeds sqrt(m)={math.sqrt(state.m):.6g}"
        )
    return x


def update(state: EstimatorState, x: np.ndarray, r: float, v: np.ndarray) -> EstimatorState:
    """Absorb one observation and return the new state.

    The Gram inverse is advanced by the Sherman-Morrison identity and
    re-inverted from scratch every _REINVERT_EVERY updates to cap drift.
    """
    x = _check_context(state, x)
    v = np.asarray(v, dtype=float)
    if v.shape != (state.d,):
        raise ValueError(f"consumption has shape {v.shape}, expected ({state.d},)")
    if not (-1e-9 <= r <= 1 + 1e-9) or np.any(v < -1e-9) or np.any(v > 1 + 1e-9):
        raise ValueError(f"outcome out of range: r={r}, v={v} (all must lie in [0, 1])")

    gram = state.gram + np.outer(x, x)
    count = state.updates_since_invert + 1
    if count >= _REINVERT_EVERY:
        gram_inv = np.linalg.inv(gram)
        count = 0
    else:
        u = state.gram_inv @ x
        gram_inv = state.gram_inv - np.outer(u, u) / (1.0 + float(x @ u))

    reward_moment = state.reward_moment + x * float(r)
    consumption_moment = state.consumption_moment + np.outer(x, v)
    return replace(
        state,
        gram=gram,
        gram_inv=gram_inv,
        reward_moment=reward_moment,
        consumption_moment=consumption_moment,
        mu_hat=gram_inv @ reward_moment,
        w_hat=gram_inv @ consumption_moment,
        rounds_seen=state.rounds_seen + 1,
        updates_since_invert=count,
    )


def radius(state: EstimatorState) -> float:
    """Confidence-ellipsoid radius shared by the reward and consumption estimates.

    sqrt(m * ln((d + t*m*d) / delta)) + sqrt(m), with t the number of
    observations absorbed so far.  Nondecreasing in t.
    """
    t = state.rounds_seen
    arg = (state.d + t * state.m * state.d) / state.delta
    return math.sqrt(state.m * math.log(arg)) + math.sqrt(state.m)


def mahalanobis_inv_norm(state: EstimatorState, x: np.ndarray) -> float:
    """sqrt(x^T gram_inv x): estimation uncertainty along direction x."""
    x = np.asarray(x, dtype=float)
    return math.sqrt(max(float(x @ state.gram_inv @ x), 0.0))


def optimistic_reward(state: EstimatorState, x: np.ndarray) -> float:
    """Upper confidence bound on the expected reward of context x.

    Closed-form maximum of x^T mu over the confidence ellipsoid; not
    clipped to [0, 1].
    """
    x = _check_context(state, x)
    return float(x @ state.mu_hat) + radius(state) * mahalanobis_inv_norm(state, x)


def optimistic_consumption(state: EstimatorState, x: np.ndarray) -> np.ndarray:
    """Lower confidence bound on the expected consumption vector of context x.

    Column-wise minimum over the per-column ellipsoids; for any nonnegative
    weighting theta this dot product equals the joint minimum of
    x^T W theta over the product of column ellipsoids.  Entries are not
    clipped to [0, 1].
    """
    x = _check_context(state, x)
    bonus = radius(state) * mahalanobis_inv_norm(state, x)
    return x @ state.w_hat - bonus


def slate_optimism(
    state: EstimatorState, slate: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized optimistic estimates for every column of an m x K slate.

    Returns (reward UCBs (K,), consumption LCBs (K, d), Mahalanobis norms (K,)).
    Single pass over the slate; used by the per-round policies.
    """
    slate = np.asarray(slate, dtype=float)
    if slate.ndim != 2 or slate.shape[0] != state.m:
        raise ValueError(f"slate has shape {slate.shape}, expected ({state.m}, K)")
    norms_sq = np.einsum("mk,mn,nk->k", slate, state.gram_inv, slate)
    norms = np.sqrt(np.maximum(norms_sq, 0.0))
    rho = radius(state)
    ucb_reward = slate.T @ state.mu_hat + rho * norms
    lcb_consumption = slate.T @ state.w_hat - rho * norms[:, None]
    return ucb_reward, lcb_consumption, norms
