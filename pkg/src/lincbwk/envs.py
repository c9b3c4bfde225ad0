"""Synthetic linear contextual bandit instances with resource consumption.

Every environment carries ground-truth parameters (reward vector mu_star and
consumption weight matrix w_star), a named context law, and a bounded noise
law.  Expected outcomes are linear in the per-arm context and realized
outcomes always land in [0, 1] by construction, never by clamping, so the
conditional means stay exactly linear.

Three instance families are provided:

* ``make_uniform``  - contexts with i.i.d. entries uniform on [0, 1/sqrt(m)],
  parameters drawn once from a seeded law and frozen;
* ``make_bwk``      - fixed arms, identity context matrix every round;
* ``make_ospp``     - the context of an option IS its (reward, consumption)
  vector, recovered exactly by selector parameters with zero noise.

RNG discipline: independent named streams for contexts, reward noise and
consumption noise, so ablations can perturb one without touching the others.
Slates are a pure function of (seed, round); noise streams are sequential.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# Stream tags mixed into the seed material, one per role.
_CTX_STREAM = 1
_REWARD_STREAM = 2
_CONS_STREAM = 3

_LAW_UNIFORM_BOX = "uniform_box"
_LAW_IDENTITY = "identity"
_LAW_OPTION_SET = "option_set"


@dataclass
class LinearEnvironment:
    m: int
    d: int
    K: int
    mu_star: np.ndarray
    w_star: np.ndarray
    context_law: str
    rng_seed: int
    noise_scale: float = 1.0
    box_high: float = 0.0
    options: Optional[np.ndarray] = None  # (n_options, m) rows, option-set law only
    _reward_rng: np.random.Generator = field(init=False, repr=False)
    _cons_rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.mu_star = np.asarray(self.mu_star, dtype=float)
        self.w_star = np.asarray(self.w_star, dtype=float)
        if self.mu_star.shape != (self.m,):
            raise ValueError("mu_star shape mismatch")
        if self.w_star.shape != (self.m, self.d):
            raise ValueError("w_star shape mismatch")
        if not (0.0 <= self.noise_scale <= 1.0):
            raise ValueError("noise_scale must lie in [0, 1]")
        root_m = math.sqrt(self.m)
        if np.linalg.norm(self.mu_star) > root_m + 1e-9:
            raise ValueError("||mu_star||_2 exceeds sqrt(m)")
        if np.any(np.linalg.norm(self.w_star, axis=0) > root_m + 1e-9):
            raise ValueError("a column of w_star exceeds sqrt(m) in 2-norm")
        self._check_mean_ranges()
        self._reward_rng = np.random.default_rng([self.rng_seed, _REWARD_STREAM])
        self._cons_rng = np.random.default_rng([self.rng_seed, _CONS_STREAM])

    def _support_range(self, w: np.ndarray) -> tuple[float, float]:
        """Interval-arithmetic range of w . x over the context law's support."""
        if self.context_law == _LAW_UNIFORM_BOX:
            contrib = w * self.box_high
            return float(np.minimum(contrib, 0.0).sum()), float(np.maximum(contrib, 0.0).sum())
        if self.context_law == _LAW_IDENTITY:
            return float(np.min(w)), float(np.max(w))
        if self.context_law == _LAW_OPTION_SET:
            vals = self.options @ w
            return float(np.min(vals)), float(np.max(vals))
        raise ValueError(f"unknown context law {self.context_law!r}")

    def _check_mean_ranges(self) -> None:
        if self.context_law == _LAW_OPTION_SET and self.options is None:
            raise ValueError("option-set law requires options")
        tol = 1e-9
        lo, hi = self._support_range(self.mu_star)
        if lo < -tol or hi > 1 + tol:
            raise ValueError(f"mu_star . x ranges over [{lo:.4g}, {hi:.4g}], outside [0, 1]")
        for j in range(self.d):
            lo, hi = self._support_range(self.w_star[:, j])
            if lo < -tol or hi > 1 + tol:
                raise ValueError(
                    f"consumption mean {j} ranges over [{lo:.4g}, {hi:.4g}], outside [0, 1]"
                )
        if self.context_law == _LAW_OPTION_SET:
            root_m = math.sqrt(self.m)
            if np.any(np.linalg.norm(self.options, axis=1) > root_m + 1e-9):
                raise ValueError("an option vector exceeds sqrt(m) in 2-norm")

    def clone(self, seed: int) -> "LinearEnvironment":
        """Same ground truth and laws, fresh independent streams."""
        return LinearEnvironment(
            m=self.m,
            d=self.d,
            K=self.K,
            mu_star=self.mu_star.copy(),
            w_star=self.w_star.copy(),
            context_law=self.context_law,
            rng_seed=int(seed),
            noise_scale=self.noise_scale,
            box_high=self.box_high,
            options=None if self.options is None else self.options.copy(),
        )


def sample_slate(env: LinearEnvironment, t: int) -> np.ndarray:
    """The m x K context matrix of round t; a pure function of (seed, t)."""
    if env.context_law == _LAW_IDENTITY:
        return np.eye(env.m)
    rng = np.random.default_rng([env.rng_seed, _CTX_STREAM, int(t)])
    if env.context_law == _LAW_UNIFORM_BOX:
        return rng.random((env.m, env.K)) * env.box_high
    # option set: fixed when the pool matches K, otherwise drawn with replacement
    pool = env.options
    if pool.shape[0] == env.K:
        return pool.T.copy()
    idx = rng.integers(0, pool.shape[0], size=env.K)
    return pool[idx].T.copy()


def sample_slate_batch(env: LinearEnvironment, rng: np.random.Generator, n: int) -> np.ndarray:
    """n i.i.d. slates (n, m, K) from the context law using the given stream.

    Bulk sampler for Monte Carlo consumers (the static-policy oracle); the
    per-round path goes through sample_slate.
    """
    if env.context_law == _LAW_UNIFORM_BOX:
        return rng.random((n, env.m, env.K)) * env.box_high
    if env.context_law == _LAW_IDENTITY:
        return np.broadcast_to(np.eye(env.m), (n, env.m, env.m)).copy()
    pool = env.options
    if pool.shape[0] == env.K:
        return np.broadcast_to(pool.T, (n, env.m, env.K)).copy()
    idx = rng.integers(0, pool.shape[0], size=(n, env.K))
    return pool[idx].transpose(0, 2, 1).copy()


def _two_point(rng: np.random.Generator, means: np.ndarray, scale: float) -> np.ndarray:
    """Centered two-point noise around each mean, magnitude scaled per point.

    outcome = p + scale * (Bernoulli(p) - p): conditionally mean p, support
    {p - scale*p, p + scale*(1-p)} which stays inside [0, 1] for scale <= 1.
    """
    b = (rng.random(means.shape) < means).astype(float)
    return means + scale * (b - means)


def realize(env: LinearEnvironment, x: np.ndarray) -> tuple[float, np.ndarray]:
    """Draw the (reward, consumption) outcome of playing context x.

    The zero context is the no-op and returns (0, 0) without consuming
    randomness.  Otherwise outcomes are conditionally mean mu_star . x and
    w_star^T x given x, independent across rounds.
    """
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        return 0.0, np.zeros(env.d)
    mean_r = float(env.mu_star @ x)
    mean_v = env.w_star.T @ x
    if env.noise_scale == 0.0:
        return mean_r, mean_v
    r = float(_two_point(env._reward_rng, np.array([mean_r]), env.noise_scale)[0])
    v = _two_point(env._cons_rng, mean_v, env.noise_scale)
    return r, v


def _draw_scaled_l1(rng: np.random.Generator, m: int, scale: float) -> np.ndarray:
    """Nonnegative vector with ||.||_1 = scale * sqrt(m); keeps w . x inside
    [0, scale] when context entries are bounded by 1/sqrt(m)."""
    u = rng.random(m) + 1e-3
    return scale * math.sqrt(m) * u / u.sum()


# Mean per-resource consumption of the default law is consumption_scale / 2
# per round; 0.35 keeps the dual transient short at desk-scale horizons
# while the multipliers still see steady negative payoff pressure.
_DEFAULT_CONSUMPTION_SCALE = 0.35


def make_uniform(
    m: int,
    d: int,
    K: int,
    param_seed: int,
    seed: int,
    noise_scale: float = 1.0,
    consumption_scale: float = _DEFAULT_CONSUMPTION_SCALE,
) -> LinearEnvironment:
    """Instance with box-uniform contexts and frozen seeded parameters.

    Rewards are scaled so the best possible context is worth 1; consumption
    columns are scaled down by consumption_scale.
    """
    prng = np.random.default_rng([int(param_seed), 0xA11CE])
    mu = _draw_scaled_l1(prng, m, 1.0)
    w = np.column_stack([_draw_scaled_l1(prng, m, consumption_scale) for _ in range(d)])
    return LinearEnvironment(
        m=m,
        d=d,
        K=K,
        mu_star=mu,
        w_star=w,
        context_law=_LAW_UNIFORM_BOX,
        rng_seed=int(seed),
        noise_scale=noise_scale,
        box_high=1.0 / math.sqrt(m),
    )


def make_bwk(
    K: int,
    reward_means: np.ndarray,
    consumption_means: np.ndarray,
    seed: int = 0,
    noise_scale: float = 1.0,
) -> LinearEnvironment:
    """Fixed-arm knapsack instance: m = K and the slate is the identity.

    reward_means is a K-vector, consumption_means a d x K matrix; both must
    lie in [0, 1].  Playing arm a reveals outcomes with means
    reward_means[a] and consumption_means[:, a].
    """
    reward_means = np.asarray(reward_means, dtype=float)
    consumption_means = np.atleast_2d(np.asarray(consumption_means, dtype=float))
    if reward_means.shape != (K,) or consumption_means.shape[1] != K:
        raise ValueError("invalid means: need K reward means and a d x K consumption matrix")
    if (
        np.any(reward_means < 0)
        or np.any(reward_means > 1)
        or np.any(consumption_means < 0)
        or np.any(consumption_means > 1)
    ):
        raise ValueError("invalid means: entries must lie in [0, 1]")
    return LinearEnvironment(
        m=K,
        d=consumption_means.shape[0],
        K=K,
        mu_star=reward_means.copy(),
        w_star=consumption_means.T.copy(),
        context_law=_LAW_IDENTITY,
        rng_seed=int(seed),
        noise_scale=noise_scale,
    )


def make_ospp(
    options: np.ndarray,
    K: Optional[int] = None,
    seed: int = 0,
) -> LinearEnvironment:
    """Online stochastic packing instance: the context is the outcome itself.

    Each option is a (1+d)-vector (reward, consumption...) in [0, 1]^{1+d}.
    With m = d+1, mu_star = e_1 and w_star selecting the remaining rows,
    realize() reproduces the chosen option exactly (zero noise).  When K is
    omitted the whole pool is offered every round.
    """
    options = np.atleast_2d(np.asarray(options, dtype=float))
    if np.any(options < 0) or np.any(options > 1):
        raise ValueError("invalid options: entries must lie in [0, 1]")
    m = options.shape[1]
    d = m - 1
    if d < 1:
        raise ValueError("options need at least one consumption coordinate")
    mu = np.zeros(m)
    mu[0] = 1.0
    w = np.zeros((m, d))
    w[1:, :] = np.eye(d)
    return LinearEnvironment(
        m=m,
        d=d,
        K=options.shape[0] if K is None else K,
        mu_star=mu,
        w_star=w,
        context_law=_LAW_OPTION_SET,
        rng_seed=int(seed),
        noise_scale=0.0,
        options=options.copy(),
    )


def export_params_text(env: LinearEnvironment) -> str:
    """Plain-text sidecar with the ground truth, for offline audit."""
    buf = io.StringIO()
    buf.write(f"context_law {env.context_law}\n")
    buf.write(f"m {env.m}\nd {env.d}\nK {env.K}\n")
    buf.write(f"noise_scale {env.noise_scale:.9g}\n")
    buf.write(f"rng_seed {env.rng_seed}\n")
    if env.context_law == _LAW_UNIFORM_BOX:
        buf.write(f"box_high {env.box_high:.9g}\n")
    buf.write("mu_star " + " ".join(f"{v:.9g}" for v in env.mu_star) + "\n")
    for j in range(env.d):
        buf.write(f"w_star_col{j + 1} " + " ".join(f"{v:.9g}" for v in env.w_star[:, j]) + "\n")
    if env.options is not None:
        for row in env.options:
            buf.write("option " + " ".join(f"{v:.9g}" for v in row) + "\n")
    return buf.getvalue()
