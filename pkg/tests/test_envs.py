import math

import numpy as np
import pytest

from lincbwk import packing
from lincbwk.envs import (
    make_bwk,
    make_ospp,
    make_uniform,
    realize,
    sample_slate,
    sample_slate_batch,
    export_params_text,
)

from _oracles import simplex_grid


def test_uniform_slate_bounds_and_determinism():
    env = make_uniform(1, 1, 1, param_seed=0, seed=5)
    slate = sample_slate(env, 3)
    assert slate.shape == (1, 1)
    assert 0.0 <= slate[0, 0] <= 1.0
    again = sample_slate(env, 3)
    assert np.array_equal(slate, again)
    assert not np.array_equal(slate, sample_slate(env, 4))


def test_uniform_slate_empirical_mean():
    env = make_uniform(3, 1, 2, param_seed=1, seed=9)
    n = 100_000
    rng = np.random.default_rng(0)
    slates = sample_slate_batch(env, rng, n)
    half_box = env.box_high / 2.0
    sd = env.box_high / math.sqrt(12.0)
    assert np.abs(slates.mean(axis=0) - half_box).max() <= 3.0 * sd / math.sqrt(n) * 3
    assert float(slates.max()) <= env.box_high and float(slates.min()) >= 0.0


def test_realize_no_op_contract():
    env = make_uniform(2, 2, 3, param_seed=1, seed=2)
    r, v = realize(env, np.zeros(2))
    assert r == 0.0 and np.array_equal(v, np.zeros(2))


def test_realize_zero_noise_returns_exact_means():
    env = make_uniform(3, 2, 4, param_seed=7, seed=1, noise_scale=0.0)
    x = sample_slate(env, 1)[:, 0]
    r, v = realize(env, x)
    assert r == pytest.approx(float(env.mu_star @ x))
    assert v == pytest.approx(env.w_star.T @ x)


def test_realize_means_match_linear_model():
    env = make_uniform(2, 2, 3, param_seed=4, seed=11)
    x = sample_slate(env, 1)[:, 1]
    n = 100_000
    rewards = np.empty(n)
    cons = np.empty((n, 2))
    for i in range(n):
        rewards[i], cons[i] = realize(env, x)
    mean_r = float(env.mu_star @ x)
    mean_v = env.w_star.T @ x
    tol_r = 4.0 * math.sqrt(max(mean_r * (1 - mean_r), 1e-4) / n)
    assert abs(rewards.mean() - mean_r) <= tol_r
    for j in range(2):
        tol_v = 4.0 * math.sqrt(max(mean_v[j] * (1 - mean_v[j]), 1e-4) / n)
        assert abs(cons[:, j].mean() - mean_v[j]) <= tol_v


def test_realized_outcomes_stay_in_unit_interval():
    env = make_uniform(3, 2, 5, param_seed=2, seed=3)
    lo_r, hi_r = math.inf, -math.inf
    lo_v, hi_v = math.inf, -math.inf
    for t in range(1, 101):
        slate = sample_slate(env, t)
        for a in range(slate.shape[1]):
            r, v = realize(env, slate[:, a])
            lo_r, hi_r = min(lo_r, r), max(hi_r, r)
            lo_v, hi_v = min(lo_v, float(v.min())), max(hi_v, float(v.max()))
    assert 0.0 <= lo_r and hi_r <= 1.0
    assert 0.0 <= lo_v and hi_v <= 1.0


def test_realized_outcomes_range_bulk():
    # exercise the noise kernel at volume through one fixed context
    env = make_uniform(3, 2, 5, param_seed=2, seed=3)
    x = sample_slate(env, 1)[:, 0]
    n = 1_000_000
    means_r = np.full(n, float(env.mu_star @ x))
    from lincbwk.envs import _two_point

    rng = np.random.default_rng(0)
    draws = _two_point(rng, means_r, env.noise_scale)
    assert draws.min() >= 0.0 and draws.max() <= 1.0
    for j in range(2):
        draws = _two_point(rng, np.full(n, env.w_star[:, j] @ x), env.noise_scale)
        assert draws.min() >= 0.0 and draws.max() <= 1.0


def test_reward_independence_across_rounds():
    env = make_uniform(2, 1, 1, param_seed=5, seed=13)
    x = sample_slate(env, 1)[:, 0]
    n = 20_000
    draws = np.array([realize(env, x)[0] for _ in range(n)])
    centered = draws - draws.mean()
    lag1 = float(centered[:-1] @ centered[1:]) / max(float(centered @ centered), 1e-12)
    assert abs(lag1) <= 4.0 / math.sqrt(n)


def test_ridge_regression_recovers_parameters():
    env = make_uniform(3, 2, 1, param_seed=9, seed=21)
    n = 100_000
    rng = np.random.default_rng(1)
    xs = sample_slate_batch(env, rng, n)[:, :, 0]
    rewards = np.empty(n)
    cons = np.empty((n, 2))
    for i in range(n):
        rewards[i], cons[i] = realize(env, xs[i])
    gram = np.eye(3) + xs.T @ xs
    mu_fit = np.linalg.solve(gram, xs.T @ rewards)
    assert np.linalg.norm(mu_fit - env.mu_star) <= 5.0 * math.sqrt(3 / n)
    for j in range(2):
        w_fit = np.linalg.solve(gram, xs.T @ cons[:, j])
        assert np.linalg.norm(w_fit - env.w_star[:, j]) <= 5.0 * math.sqrt(3 / n)


def test_bwk_identity_slates_and_means():
    env = make_bwk(2, np.array([1.0, 0.0]), np.zeros((1, 2)), seed=3)
    assert np.array_equal(sample_slate(env, 1), np.eye(2))
    assert np.array_equal(sample_slate(env, 99), np.eye(2))
    value = packing.opt_oracle(env, budget=50.0, horizon=200, n_samples=400, seed=0)
    assert value == pytest.approx(200.0)


def test_bwk_rejects_bad_means():
    with pytest.raises(ValueError, match="means"):
        make_bwk(2, np.array([1.5, 0.0]), np.zeros((1, 2)))
    with pytest.raises(ValueError, match="means"):
        make_bwk(2, np.array([0.5, 0.0]), np.full((1, 2), -0.1))


def test_bwk_oracle_matches_static_rate_lp():
    # hand LP over the three static arm rates, solved by fine grid enumeration
    reward = np.array([0.9, 0.5, 0.2])
    cons = np.array([[0.8, 0.3, 0.1]])
    horizon, budget = 1000, 300.0
    env = make_bwk(3, reward, cons, seed=1)
    oracle = packing.opt_oracle(env, budget, horizon, n_samples=100, seed=0)

    grid = simplex_grid(4, 0.005)[:, :3]  # rates over 3 arms plus implicit no-op
    feasible = (grid @ cons[0]) * horizon <= budget + 1e-12
    hand = horizon * float(np.max(grid[feasible] @ reward))
    assert oracle >= hand - 1e-6
    assert oracle <= hand + 0.01 * horizon


def test_ospp_reproduces_options_exactly():
    options = np.array([[0.7, 0.2, 0.4], [0.1, 0.9, 0.3]])
    env = make_ospp(options, seed=4)
    slate = sample_slate(env, 17)
    assert slate.shape == (3, 2)
    for a in range(2):
        r, v = realize(env, slate[:, a])
        assert r == pytest.approx(slate[0, a])
        assert v == pytest.approx(slate[1:, a])
        assert float(env.mu_star @ slate[:, a]) == pytest.approx(slate[0, a])


def test_ospp_oracle_matches_grid():
    options = np.array([[0.8, 0.6], [0.3, 0.1]])
    env = make_ospp(options, seed=2)
    horizon, budget = 600, 200.0
    oracle = packing.opt_oracle(env, budget, horizon, n_samples=50, seed=0)
    grid = simplex_grid(3, 0.005)[:, :2]  # mass on the two options
    feasible = (grid @ options[:, 1]) * horizon <= budget + 1e-12
    hand = horizon * float(np.max(grid[feasible] @ options[:, 0]))
    assert abs(oracle - hand) <= 0.01 * horizon


def test_clone_gives_fresh_identical_law():
    env = make_uniform(2, 1, 3, param_seed=6, seed=1)
    other = env.clone(seed=2)
    assert np.array_equal(env.mu_star, other.mu_star)
    assert not np.array_equal(sample_slate(env, 1), sample_slate(other, 1))


def test_params_export_mentions_ground_truth():
    env = make_uniform(2, 1, 3, param_seed=6, seed=1)
    text = export_params_text(env)
    assert "mu_star" in text and "w_star_col1" in text and "uniform_box" in text
