"""Tests for the censored-move regime model: emission law, forward-backward
smoother, EM updates, decoding, and model-choice scores.

The core oracle is brute-force enumeration of all regime paths on short
windows, against which the recursive smoother and decoder must agree to
near machine precision.
"""

import itertools
import math

import numpy as np
import pytest
import scipy.linalg

from artifact import (
    Dataset,
    EMParams,
    JumpModelCalibrator,
    backward_pass,
    bic,
    default_init,
    em_fit,
    em_step,
    emission_prob,
    forward_backward,
    forward_filter_probs,
    forward_pass,
    generator_from_transition,
    icl,
    n_free_params,
    simulate_dataset,
    viterbi,
)

B, DT = 0.01, 1.0


def random_params(rng, n_states):
    pi0 = rng.dirichlet(np.full(n_states, 2.0))
    P = rng.dirichlet(np.full(n_states, 2.0), size=n_states)
    return EMParams(pi0=pi0, P=P,
                    mu=rng.uniform(0.05, 0.6, n_states),
                    kappa=rng.uniform(0.0, 0.5, n_states),
                    theta=rng.uniform(-0.03, 0.03, n_states))


def random_walk(rng, n_obs):
    steps = rng.integers(-1, 2, size=n_obs - 1)
    return np.concatenate([[0.0], np.cumsum(steps) * B])


def enumerate_joint(F, params):
    """Joint probability of every regime path: the brute-force smoother."""
    K, J = F.size, params.n_states
    f = np.stack([emission_prob(F[1:], F[:-1], params.mu[j], params.kappa[j],
                                params.theta[j], B, DT)
                  for j in range(J)], axis=-1)          # (K-1, J)
    gamma = np.zeros((K, J))
    xi = np.zeros((K - 1, J, J))
    total = 0.0
    best, best_path = -1.0, None
    for z in itertools.product(range(J), repeat=K):
        p = params.pi0[z[0]]
        for k in range(K - 1):
            p *= f[k, z[k]] * params.P[z[k], z[k + 1]]
        total += p
        for k in range(K):
            gamma[k, z[k]] += p
        for k in range(K - 1):
            xi[k, z[k], z[k + 1]] += p
        if p > best:
            best, best_path = p, np.array(z)
    return gamma / total, xi / total, math.log(total), best_path


# ---------------------------------------------------------------------------
# emission law
# ---------------------------------------------------------------------------

def test_emission_matches_hand_computation():
    mu, kappa, theta = 0.3, 0.8, 0.02
    F_prev = 0.0                      # gap = 0.02 > 0: up rate boosted
    lam_p, lam_m = mu + kappa * 0.02, mu
    p_up = (1 - math.exp(-lam_p * DT)) * math.exp(-lam_m * DT)
    p_dn = (1 - math.exp(-lam_m * DT)) * math.exp(-lam_p * DT)
    assert emission_prob(B, F_prev, mu, kappa, theta, B, DT) == pytest.approx(p_up, rel=1e-14)
    assert emission_prob(-B, F_prev, mu, kappa, theta, B, DT) == pytest.approx(p_dn, rel=1e-14)
    assert emission_prob(0.0, F_prev, mu, kappa, theta, B, DT) == \
        pytest.approx(1.0 - p_up - p_dn, rel=1e-13)


def test_emission_sums_to_one_and_tilts_toward_level():
    rng = np.random.default_rng(0)
    for _ in range(20):
        mu, kappa, theta = rng.uniform(0.01, 1.0), rng.uniform(0, 2), rng.normal(0, 0.05)
        F_prev = rng.normal(0, 0.05)
        probs = [emission_prob(F_prev + m * B, F_prev, mu, kappa, theta, B, DT)
                 for m in (-1, 0, 1)]
        assert sum(probs) == pytest.approx(1.0, abs=1e-14)
    up_from_below = emission_prob(-0.05 + B, -0.05, 0.2, 1.0, 0.0, B, DT)
    dn_from_below = emission_prob(-0.05 - B, -0.05, 0.2, 1.0, 0.0, B, DT)
    assert up_from_below > dn_from_below


def test_emission_rejects_off_grid_moves():
    with pytest.raises(ValueError, match="grid"):
        emission_prob(0.015, 0.0, 0.3, 0.5, 0.0, B, DT)
    with pytest.raises(ValueError, match="grid"):
        emission_prob(0.02, 0.0, 0.3, 0.5, 0.0, B, DT)   # two ticks at once


# ---------------------------------------------------------------------------
# forward-backward versus enumeration
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n_states", [1, 2, 3])
def test_smoother_matches_enumeration(n_states):
    rng = np.random.default_rng(10 + n_states)
    for _ in range(12):
        K = int(rng.integers(3, 7))
        params = random_params(rng, n_states)
        F = random_walk(rng, K)
        fb = forward_backward(F, params, B, DT)
        gamma, xi, loglik, _ = enumerate_joint(F, params)
        np.testing.assert_allclose(fb.gamma, gamma, atol=1e-12)
        np.testing.assert_allclose(fb.xi, xi, atol=1e-12)
        assert fb.loglik == pytest.approx(loglik, abs=1e-12)


def test_smoother_identities():
    rng = np.random.default_rng(20)
    params = random_params(rng, 3)
    F = random_walk(rng, 40)
    fb = forward_backward(F, params, B, DT)
    np.testing.assert_allclose(fb.gamma.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(fb.alpha.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(fb.xi.sum(axis=(1, 2)), 1.0, atol=1e-12)
    np.testing.assert_allclose(fb.xi.sum(axis=2), fb.gamma[:-1], atol=1e-12)
    np.testing.assert_allclose(fb.xi.sum(axis=1), fb.gamma[1:], atol=1e-12)
    assert fb.c[0] == 1.0
    assert fb.loglik == pytest.approx(np.log(fb.c[1:]).sum(), abs=1e-12)
    np.testing.assert_array_equal(fb.beta[-1], 1.0)
    # the two passes agree with their single-path wrappers
    alpha, c = forward_pass(F, params, B, DT)
    np.testing.assert_allclose(alpha, fb.alpha, atol=1e-14)
    np.testing.assert_allclose(backward_pass(F, params, B, DT, alpha), fb.beta,
                               atol=1e-14)


def test_forward_filter_probs_broadcasts_scalars():
    rng = np.random.default_rng(21)
    F = random_walk(rng, 15)
    P = np.array([[0.95, 0.05], [0.10, 0.90]])
    probs = forward_filter_probs(F, [0.5, 0.5], P, 0.3, 0.4, [0.01, -0.01], B, DT)
    params = EMParams(pi0=[0.5, 0.5], P=P, mu=[0.3, 0.3], kappa=[0.4, 0.4],
                      theta=[0.01, -0.01])
    alpha, _ = forward_pass(F, params, B, DT)
    np.testing.assert_allclose(probs, alpha, atol=1e-14)


# ---------------------------------------------------------------------------
# data simulation
# ---------------------------------------------------------------------------

def test_simulate_dataset_shapes_and_grid():
    params = EMParams(pi0=[0.6, 0.4], P=[[0.99, 0.01], [0.02, 0.98]],
                      mu=[0.3, 0.1], kappa=[0.5, 0.2], theta=[0.02, -0.02])
    data = simulate_dataset(params, n_days=5, n_obs=300, dt=DT, b=B, F0=0.0,
                            rng=np.random.default_rng(2))
    assert data.F.shape == (5, 300)
    np.testing.assert_array_equal(data.F[:, 0], 0.0)
    moves = np.diff(data.F, axis=1) / B
    assert set(np.unique(np.rint(moves))) <= {-1.0, 0.0, 1.0}
    with pytest.raises(ValueError, match="at least one day"):
        simulate_dataset(params, 0, 300, DT, B, 0.0, np.random.default_rng(3))


def test_simulate_dataset_move_frequency_matches_emission_law():
    # single state pinned at its level: moves are iid with the closed-form
    # one-step probabilities
    mu = 0.25
    params = EMParams(pi0=[1.0], P=[[1.0]], mu=[mu], kappa=[0.0], theta=[0.0])
    data = simulate_dataset(params, n_days=4, n_obs=5000, dt=DT, b=B, F0=0.0,
                            rng=np.random.default_rng(4))
    move = np.diff(data.F, axis=1)
    p_up = (1 - math.exp(-mu * DT)) * math.exp(-mu * DT)
    n = move.size
    freq = float(np.mean(move > 0))
    assert abs(freq - p_up) < 4 * math.sqrt(p_up * (1 - p_up) / n)
    freq_dn = float(np.mean(move < 0))
    assert abs(freq_dn - p_up) < 4 * math.sqrt(p_up * (1 - p_up) / n)


def test_dataset_and_params_validation():
    with pytest.raises(ValueError, match="positive"):
        Dataset(F=np.zeros((2, 10)), dt=0.0, b=B)
    with pytest.raises(ValueError, match="two observations"):
        Dataset(F=np.zeros((2, 1)), dt=DT, b=B)
    good = dict(pi0=[0.5, 0.5], P=[[0.9, 0.1], [0.1, 0.9]], mu=[0.1, 0.2],
                kappa=[0.1, 0.2], theta=[0.0, 0.01])
    EMParams(**good)
    with pytest.raises(ValueError, match="P shape"):
        EMParams(**{**good, "P": [[1.0]]})
    with pytest.raises(ValueError, match="mu shape"):
        EMParams(**{**good, "mu": [0.1]})
    with pytest.raises(ValueError, match="probability vector"):
        EMParams(**{**good, "pi0": [0.7, 0.5]})
    with pytest.raises(ValueError, match="rows"):
        EMParams(**{**good, "P": [[0.9, 0.2], [0.1, 0.9]]})
    with pytest.raises(ValueError, match="nonnegative"):
        EMParams(**{**good, "kappa": [-0.1, 0.2]})


# ---------------------------------------------------------------------------
# EM
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_synth():
    params = EMParams(pi0=[0.7, 0.3], P=[[0.995, 0.005], [0.01, 0.99]],
                      mu=[0.30, 0.08], kappa=[0.6, 0.1], theta=[0.02, -0.02])
    data = simulate_dataset(params, n_days=4, n_obs=600, dt=DT, b=B, F0=0.0,
                            rng=np.random.default_rng(5))
    return params, data


def test_em_loglik_is_monotone(small_synth):
    _, data = small_synth
    fit = em_fit(data, 2, tol=1e-10, max_iter=25)
    diffs = np.diff(fit.loglik_path)
    assert diffs.min() > -1e-9
    assert fit.loglik == fit.loglik_path[-1]
    assert fit.n_iter == fit.loglik_path.size - 1
    assert fit.params.mu[0] >= fit.params.mu[-1]   # reported sorted


def test_em_step_matches_fit_start(small_synth):
    _, data = small_synth
    init = default_init(data, 2, seed=1)
    new, ll0 = em_step(data, init)
    _, ll1 = em_step(data, new)
    assert ll1 >= ll0 - 1e-9
    assert new.P.shape == (2, 2)
    np.testing.assert_allclose(new.P.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(new.pi0.sum(), 1.0, atol=1e-12)


def test_em_accepts_params_or_state_count(small_synth):
    truth, data = small_synth
    fit = em_fit(data, truth, tol=1e-6, max_iter=10)
    assert fit.loglik_path.size >= 2
    fit2 = em_fit(data, 1, tol=1e-8, max_iter=40)
    assert fit2.params.n_states == 1
    assert fit2.converged


def test_default_init_is_valid_and_seeded(small_synth):
    _, data = small_synth
    a = default_init(data, 3, seed=7)
    b2 = default_init(data, 3, seed=7)
    np.testing.assert_array_equal(a.mu, b2.mu)
    assert a.n_states == 3
    np.testing.assert_allclose(a.P.sum(axis=1), 1.0, atol=1e-12)


# ---------------------------------------------------------------------------
# decoding and scores
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n_states", [2, 3])
def test_viterbi_matches_enumeration(n_states):
    rng = np.random.default_rng(30 + n_states)
    for _ in range(10):
        K = int(rng.integers(3, 7))
        params = random_params(rng, n_states)
        F = random_walk(rng, K)
        z = viterbi(F, params, B, DT)
        _, _, _, z_star = enumerate_joint(F, params)
        np.testing.assert_array_equal(z, z_star)


def test_viterbi_breaks_ties_toward_lower_index():
    # two indistinguishable states: every path ties, the decoder must
    # return the all-zeros path
    params = EMParams(pi0=[0.5, 0.5], P=[[0.5, 0.5], [0.5, 0.5]],
                      mu=[0.3, 0.3], kappa=[0.2, 0.2], theta=[0.0, 0.0])
    F = random_walk(np.random.default_rng(31), 12)
    np.testing.assert_array_equal(viterbi(F, params, B, DT), 0)


def test_n_free_params_counts():
    assert n_free_params(1) == 3
    assert n_free_params(2) == 9
    assert n_free_params(3) == 17


def test_bic_penalises_parameters():
    assert bic(-100.0, 3, 100, 2) > bic(-100.0, 9, 100, 2)
    assert bic(-100.0, 3, 100, 2) == pytest.approx(-100.0 - 1.5 * math.log(200))


def test_icl_equals_bic_for_single_state(small_synth):
    _, data = small_synth
    fit = em_fit(data, 1, tol=1e-8, max_iter=40)
    ll = fit.loglik
    assert icl(data, fit.params) == pytest.approx(
        bic(ll, n_free_params(1), data.n_obs, data.n_days), abs=1e-9)


def test_scores_are_label_permutation_invariant(small_synth):
    truth, data = small_synth
    perm = [1, 0]
    swapped = EMParams(pi0=truth.pi0[perm], P=truth.P[np.ix_(perm, perm)],
                       mu=truth.mu[perm], kappa=truth.kappa[perm],
                       theta=truth.theta[perm])
    a = forward_backward(data.F[0], truth, B, DT).loglik
    b2 = forward_backward(data.F[0], swapped, B, DT).loglik
    assert a == pytest.approx(b2, abs=1e-10)
    assert icl(data, truth) == pytest.approx(icl(data, swapped), abs=1e-8)


def test_generator_roundtrip():
    C = np.array([[-0.008, 0.008], [0.0025, -0.0025]])
    P = scipy.linalg.expm(C * DT)
    C_hat = generator_from_transition(P, DT)
    np.testing.assert_allclose(C_hat, C, atol=1e-12)
    np.testing.assert_allclose(C_hat.sum(axis=1), 0.0, atol=1e-14)
    np.testing.assert_array_equal(generator_from_transition(np.eye(3), DT), 0.0)


# ---------------------------------------------------------------------------
# estimator front-end
# ---------------------------------------------------------------------------

def test_calibrator_end_to_end(small_synth):
    truth, data = small_synth
    est = JumpModelCalibrator(n_states=2, b=B, dt=DT, tol=1e-7, max_iter=60)
    est.fit(data, init=truth)
    assert est.mu_.shape == (2,) and est.kappa_.shape == (2,)
    assert est.generator_.shape == (2, 2)
    z = est.predict(data)
    assert z.shape == data.F.shape and set(np.unique(z)) <= {0, 1}
    proba = est.predict_proba(data)
    assert proba.shape == (data.n_days, data.n_obs, 2)
    np.testing.assert_allclose(proba.sum(axis=2), 1.0, atol=1e-10)
    assert est.score(data) == pytest.approx(est.loglik_, abs=1e-8)
    assert est.bic_ == pytest.approx(
        bic(est.loglik_, n_free_params(2), data.n_obs, data.n_days))
    # recovers the generating regimes reasonably on easy data
    assert abs(est.mu_[0] - truth.mu[0]) / truth.mu[0] < 0.5


def test_calibrator_accepts_raw_arrays(small_synth):
    _, data = small_synth
    est = JumpModelCalibrator(n_states=1, b=B, dt=DT, max_iter=30)
    est.fit(data.F)
    assert est.icl_ == est.bic_
    assert est.predict(data.F[:1]).shape == (1, data.n_obs)


def test_calibrator_param_plumbing():
    est = JumpModelCalibrator(n_states=2)
    got = est.get_params()
    assert got["n_states"] == 2 and "tol" in got
    est.set_params(n_states=3, seed=5)
    assert est.n_states == 3 and est.seed == 5
    with pytest.raises(ValueError, match="unknown parameter"):
        est.set_params(bogus=1)
