import math

import numpy as np
import pytest

from lincbwk import estimation

from _oracles import random_estimator_state, sample_in_ellipsoid


def test_init_empty_history():
    st = estimation.init(2, 1, 0.05)
    assert np.array_equal(st.gram, np.eye(2))
    assert np.array_equal(st.gram_inv, np.eye(2))
    assert np.array_equal(st.mu_hat, np.zeros(2))
    assert st.rounds_seen == 0


def test_init_zero_w_hat():
    st = estimation.init(1, 3, 0.1)
    assert st.w_hat.shape == (1, 3)
    assert np.array_equal(st.w_hat, np.zeros((1, 3)))


def test_init_rejects_bad_dimensions_and_delta():
    with pytest.raises(ValueError, match="dimension"):
        estimation.init(0, 1, 0.1)
    with pytest.raises(ValueError, match="dimension"):
        estimation.init(1, 0, 0.1)
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError, match="confidence"):
            estimation.init(1, 1, bad)


def test_update_rank_one_on_identity():
    st = estimation.init(2, 1, 0.05)
    st = estimation.update(st, np.array([1.0, 0.0]), 0.3, np.array([0.7]))
    assert np.allclose(st.gram, np.diag([2.0, 1.0]))
    assert np.allclose(st.gram_inv, np.diag([0.5, 1.0]))
    assert st.rounds_seen == 1


def test_update_scalar_ridge_estimate():
    # one observation x=1, r=0.5: M = 2, moment = 0.5, so mu_hat = 0.25
    st = estimation.init(1, 1, 0.1)
    st = estimation.update(st, np.array([1.0]), 0.5, np.array([0.5]))
    assert st.mu_hat == pytest.approx([0.25])
    assert st.w_hat.ravel() == pytest.approx([0.25])


def test_update_rejects_out_of_range_inputs():
    st = estimation.init(2, 1, 0.1)
    with pytest.raises(ValueError, match="out of range"):
        estimation.update(st, np.array([2.0, 2.0]), 0.5, np.array([0.5]))  # norm > sqrt(2)
    with pytest.raises(ValueError, match="out of range"):
        estimation.update(st, np.array([1.0, 0.0]), 1.5, np.array([0.5]))
    with pytest.raises(ValueError, match="out of range"):
        estimation.update(st, np.array([1.0, 0.0]), 0.5, np.array([-0.5]))


def test_incremental_inverse_matches_direct_inversion():
    rng = np.random.default_rng(7)
    st = estimation.init(3, 2, 0.05)
    for _ in range(50):
        x = rng.normal(size=3)
        x *= rng.random() * math.sqrt(3) / np.linalg.norm(x)
        st = estimation.update(st, x, rng.random(), rng.random(2))
    assert np.linalg.norm(st.gram_inv - np.linalg.inv(st.gram)) <= 1e-6


def test_gram_matches_from_scratch_recomputation():
    rng = np.random.default_rng(11)
    st = estimation.init(3, 1, 0.05)
    xs = []
    for _ in range(40):
        x = rng.normal(size=3)
        x *= rng.random() * math.sqrt(3) / np.linalg.norm(x)
        xs.append(x)
        st = estimation.update(st, x, rng.random(), rng.random(1))
    direct = np.eye(3) + sum(np.outer(x, x) for x in xs)
    assert np.abs(st.gram - direct).max() <= 1e-8
    assert np.allclose(st.mu_hat, st.gram_inv @ st.reward_moment)


def test_inverse_stays_consistent_through_reinversion():
    # more than 512 updates so the periodic from-scratch refresh is exercised
    st = random_estimator_state(3, 2, 0.05, n_updates=700, seed=3)
    assert np.linalg.norm(st.gram_inv @ st.gram - np.eye(3)) <= 1e-6


def test_radius_values():
    st = estimation.init(1, 1, 0.5)
    st = estimation.update(st, np.array([1.0]), 0.0, np.array([0.0]))
    # sqrt(ln((1 + 1*1*1) / 0.5)) + 1 = sqrt(ln 4) + 1
    assert estimation.radius(st) == pytest.approx(math.sqrt(math.log(4.0)) + 1.0)
    assert estimation.radius(st) == pytest.approx(2.17741, abs=1e-5)

    st = estimation.init(4, 1, 1.0 / math.e)
    # t=0: sqrt(4 * ln(1 * e)) + 2 = 4
    assert estimation.radius(st) == pytest.approx(4.0)


def test_radius_nondecreasing_in_rounds():
    st = estimation.init(2, 3, 0.05)
    values = [estimation.radius(st)]
    for _ in range(20):
        st = estimation.update(st, np.array([0.5, 0.1]), 0.2, np.full(3, 0.3))
        values.append(estimation.radius(st))
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_mahalanobis_inv_norm_basics():
    st = estimation.init(2, 1, 0.1)
    assert estimation.mahalanobis_inv_norm(st, np.array([1.0, 0.0])) == pytest.approx(1.0)
    assert estimation.mahalanobis_inv_norm(st, np.array([3.0, 4.0])) == pytest.approx(5.0)
    # gram = diag(4, 1): norm of e1 under the inverse is 1/2
    st = estimation.update(
        estimation.update(st, np.array([1.0, 0.0]), 0.0, np.array([0.0])),
        np.array([1.0, 0.0]),
        0.0,
        np.array([0.0]),
    )
    st.gram[:] = np.diag([4.0, 1.0])
    st.gram_inv[:] = np.diag([0.25, 1.0])
    assert estimation.mahalanobis_inv_norm(st, np.array([1.0, 0.0])) == pytest.approx(0.5)


def test_optimistic_reward_closed_form_cases():
    st = estimation.init(2, 1, 0.1)
    st.mu_hat = np.array([0.5, 0.0])
    rho = estimation.radius(st)
    assert estimation.optimistic_reward(st, np.array([1.0, 0.0])) == pytest.approx(0.5 + rho)
    assert estimation.optimistic_reward(st, np.zeros(2)) == 0.0


def test_optimistic_reward_dominates_ellipsoid_sampling():
    st = random_estimator_state(3, 2, 0.1, n_updates=25, seed=5)
    rng = np.random.default_rng(99)
    x = np.array([0.4, -0.2, 0.9])
    points = sample_in_ellipsoid(st.mu_hat, st.gram, estimation.radius(st), 1_000_000, rng)
    sampled_best = float(np.max(points @ x))
    ucb = estimation.optimistic_reward(st, x)
    assert ucb >= sampled_best
    assert ucb - sampled_best <= 1e-3 * (1.0 + abs(ucb))  # sampler nearly attains the max


def test_optimistic_consumption_closed_form_cases():
    st = estimation.init(1, 1, 0.1)
    st.w_hat = np.array([[0.5]])
    rho = estimation.radius(st)
    got = estimation.optimistic_consumption(st, np.array([1.0]))
    assert got == pytest.approx([0.5 - rho])
    assert np.array_equal(estimation.optimistic_consumption(st, np.zeros(1)), np.zeros(1))


def test_optimistic_consumption_theta_weighted_minimum():
    st = random_estimator_state(2, 2, 0.1, n_updates=30, seed=8)
    rng = np.random.default_rng(123)
    x = np.array([0.8, 0.3])
    theta = np.array([0.6, 0.4])
    rho = estimation.radius(st)
    lcb = estimation.optimistic_consumption(st, x)
    # sample each column's ellipsoid; the product set contains the true weight box
    cols = [
        sample_in_ellipsoid(st.w_hat[:, j], st.gram, rho, 500_000, rng) for j in range(2)
    ]
    weighted = sum(theta[j] * (cols[j] @ x) for j in range(2))
    assert float(lcb @ theta) <= float(np.min(weighted)) + 1e-12


def test_matrix_cauchy_schwarz_property():
    rng = np.random.default_rng(17)
    violations = 0
    for _ in range(200):
        m = int(rng.integers(1, 6))
        a = rng.normal(size=(500, m))
        b = rng.normal(size=(500, m))
        basis = rng.normal(size=(m, m))
        mat = basis @ basis.T + 0.1 * np.eye(m)
        mat_inv = np.linalg.inv(mat)
        lhs = np.abs(np.sum(a * b, axis=1))
        rhs = np.sqrt(np.einsum("ij,jk,ik->i", a, mat, a)) * np.sqrt(
            np.einsum("ij,jk,ik->i", b, mat_inv, b)
        )
        violations += int(np.sum(lhs > rhs + 1e-9))
    assert violations == 0


def test_elliptical_potential_bound():
    rng = np.random.default_rng(23)
    for _ in range(30):
        m = int(rng.choice([1, 2, 5]))
        horizon = int(rng.choice([10, 100]))
        st = estimation.init(m, 1, 0.1)
        total = 0.0
        for _ in range(horizon):
            x = rng.normal(size=m)
            x *= rng.random() * math.sqrt(m) / max(np.linalg.norm(x), 1e-12)
            total += estimation.mahalanobis_inv_norm(st, x)
            st = estimation.update(st, x, 0.0, np.zeros(1))
        assert total <= 2.0 * math.sqrt(m * horizon * math.log(horizon))
