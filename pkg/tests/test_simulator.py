"""Tests for the market simulators, strategy accounting and the paired
Monte Carlo studies.

Oracles: deterministic limits (zero volatility, zero reversion), exact
discrete moments of the Euler recursion, Poisson counts, the explicit
baseline inventory curve, and full replay of study sample paths through the
single-path runner built from the public control/filter functions.
"""

import math

import numpy as np
import pytest

from artifact import (
    CostParams,
    JumpModel,
    LatentChainSpec,
    MarketPath,
    OUModel,
    StudyConfig,
    TrajectoryRecord,
    ac_speed,
    control_constants,
    excess_return,
    h0_estimate,
    h1_jump,
    h1_ou,
    jump_filter_stepper,
    monte_carlo_study,
    optimal_speed,
    ou_filter_stepper,
    run_strategy,
    simulate_jump_path,
    simulate_ou_path,
    twap_speed,
)

OU_CHAIN = LatentChainSpec(theta=[4.85, 5.15], generator=np.zeros((2, 2)),
                           prior=[0.5, 0.5])
JUMP_CHAIN = LatentChainSpec(theta=[4.9, 5.1],
                             generator=[[-10.0, 10.0], [10.0, -10.0]],
                             prior=[0.5, 0.5])


def ou_cost(**kw):
    base = dict(a=1e-5, b=0.0, beta=1e-3, phi=2e-5, alpha=math.inf, T=1.0,
                N_init=1e4)
    base.update(kw)
    return CostParams(**base)


def jump_cost(**kw):
    base = dict(a=1e-5, b=0.01, beta=1e-3, phi=3e-6, alpha=math.inf, T=1.0,
                N_init=0.0)
    base.update(kw)
    return CostParams(**base)


# ---------------------------------------------------------------------------
# diffusive price paths
# ---------------------------------------------------------------------------

def test_ou_path_zero_volatility_decays_exactly():
    kappa, dt, F0, theta = 2.0, 1e-3, 5.0, 5.15
    rng = np.random.default_rng(0)
    path = simulate_ou_path(theta, kappa, 0.0, F0, 0.1, dt, rng)
    rho = 1.0 - kappa * dt
    k = np.arange(path.n_steps + 1)
    expected = theta + (F0 - theta) * rho ** k
    np.testing.assert_allclose(path.F, expected, rtol=0, atol=1e-12)
    assert path.dt == pytest.approx(dt)
    np.testing.assert_array_equal(path.levels, np.full(k.size, theta))


def test_ou_path_zero_reversion_variance():
    # kappa = 0: F_T - F0 is a sum of n Gaussian shocks with variance
    # sigma^2 T exactly
    sigma, T, dt, n_paths = 0.15, 1.0, 1e-2, 4000
    rng = np.random.default_rng(1)
    ends = np.array([simulate_ou_path(5.0, 0.0, sigma, 5.0, T, dt, rng).F[-1]
                     for _ in range(n_paths)])
    var = sigma ** 2 * T
    se = var * math.sqrt(2.0 / (n_paths - 1))
    assert abs(ends.var(ddof=1) - var) < 4 * se
    assert abs(ends.mean() - 5.0) < 4 * math.sqrt(var / n_paths)


def test_ou_path_piecewise_levels_and_validation():
    rng = np.random.default_rng(2)
    levels = np.array([5.1] * 5 + [4.9] * 5)
    path = simulate_ou_path(levels, 5.0, 0.0, 5.0, 1.0, 0.1, rng)
    assert path.levels[0] == 5.1 and path.levels[-1] == 4.9
    with pytest.raises(ValueError, match="multiple"):
        simulate_ou_path(5.0, 2.0, 0.1, 5.0, 1.0, 0.3, rng)
    with pytest.raises(ValueError, match="unstable"):
        simulate_ou_path(5.0, 20.0, 0.1, 5.0, 1.0, 0.1, rng)
    with pytest.raises(ValueError, match="nonnegative"):
        simulate_ou_path(5.0, -1.0, 0.1, 5.0, 1.0, 0.01, rng)
    with pytest.raises(ValueError, match="per step"):
        simulate_ou_path(np.array([5.0, 5.1, 5.2]), 2.0, 0.1, 5.0, 1.0, 0.1, rng)


# ---------------------------------------------------------------------------
# jump price paths
# ---------------------------------------------------------------------------

def test_jump_path_increments_match_counts():
    rng = np.random.default_rng(3)
    path = simulate_jump_path(5.1, 481.0, 1077.0, 0.01, 5.0, 0.1, 1.0 / 360, rng)
    dF = np.diff(path.F)
    np.testing.assert_allclose(dF, 0.01 * (path.dn_plus - path.dn_minus),
                               atol=1e-12)


def test_jump_path_zero_reversion_poisson_counts():
    # kappa = 0: up and down jumps are independent Poisson(mu T)
    mu, T, n_paths = 30.0, 1.0, 800
    rng = np.random.default_rng(4)
    ups = np.empty(n_paths)
    downs = np.empty(n_paths)
    for i in range(n_paths):
        path = simulate_jump_path(5.0, mu, 0.0, 0.01, 5.0, T, 1.0 / 16, rng,
                                  method="exact")
        ups[i] = path.dn_plus.sum()
        downs[i] = path.dn_minus.sum()
    se = math.sqrt(mu * T / n_paths)
    assert abs(ups.mean() - mu * T) < 4 * se
    assert abs(downs.mean() - mu * T) < 4 * se
    assert abs((ups - downs).mean()) < 4 * math.sqrt(2 * mu * T / n_paths)


def test_jump_path_bernoulli_matches_rate():
    mu, T, dt = 10.0, 1.0, 1e-3   # lambda dt = 0.01, thinning regime
    rng = np.random.default_rng(5)
    total = sum(simulate_jump_path(5.0, mu, 0.0, 0.01, 5.0, T, dt, rng,
                                   method="bernoulli").dn_plus.sum()
                for _ in range(300))
    expected = 300 * mu * T
    assert abs(total - expected) < 4 * math.sqrt(expected)


def test_jump_path_method_validation():
    rng = np.random.default_rng(6)
    with pytest.raises(ValueError, match="unknown method"):
        simulate_jump_path(5.0, 10.0, 0.0, 0.01, 5.0, 1.0, 0.1, rng,
                           method="euler")
    with pytest.raises(ValueError, match="thinning invalid"):
        simulate_jump_path(5.0, 20.0, 0.0, 0.01, 5.0, 1.0, 0.1, rng,
                           method="bernoulli")
    with pytest.raises(ValueError, match="positive"):
        simulate_jump_path(5.0, 10.0, 0.0, 0.0, 5.0, 1.0, 0.1, rng)


def test_jump_path_auto_prefers_exact_for_large_rates():
    # mu dt = 0.5: auto must take the exact branch and agree with it draw
    # for draw
    a = simulate_jump_path(5.0, 50.0, 0.0, 0.01, 5.0, 1.0, 0.01,
                           np.random.default_rng(7), method="auto")
    b = simulate_jump_path(5.0, 50.0, 0.0, 0.01, 5.0, 1.0, 0.01,
                           np.random.default_rng(7), method="exact")
    np.testing.assert_array_equal(a.F, b.F)
    np.testing.assert_array_equal(a.dn_plus, b.dn_plus)


def test_jump_path_reversion_pulls_toward_level():
    # strong reversion keeps the price near the regime level
    rng = np.random.default_rng(8)
    path = simulate_jump_path(5.1, 100.0, 5000.0, 0.01, 5.0, 1.0, 1.0 / 720, rng)
    assert abs(path.F[-1] - 5.1) < 0.05
    assert np.mean(np.abs(path.F[360:] - 5.1)) < 0.02


# ---------------------------------------------------------------------------
# strategy accounting
# ---------------------------------------------------------------------------

def test_idle_strategy_keeps_inventory_and_banks_terminal_value():
    rng = np.random.default_rng(9)
    market = simulate_ou_path(5.15, 2.0, 0.15, 5.0, 1.0, 1e-2, rng)
    p = ou_cost()
    rec = run_strategy(market, lambda t, st, pi: 0.0, p)
    np.testing.assert_array_equal(rec.X[:-1], 0.0)
    np.testing.assert_array_equal(rec.Q, p.N_init)
    # alpha = inf: the residual is lumped at S_T = F_T (Q = N cancels beta)
    assert rec.terminal_value == pytest.approx(p.N_init * market.F[-1], rel=1e-12)
    assert rec.Q_T == 0.0
    assert rec.residual_before_liquidation == p.N_init


def test_cash_inventory_identity_holds_pathwise():
    rng = np.random.default_rng(10)
    market = simulate_ou_path(5.15, 2.0, 0.15, 5.0, 1.0, 1e-2, rng)
    p = ou_cost()

    def speed(t, st, pi):
        return ac_speed(t, st.Q, p)

    rec = run_strategy(market, speed, p)
    dt = market.dt
    for k in range(market.n_steps):
        dx = -rec.nu[k] * (rec.F[k] + p.beta * (rec.Q[k] - p.N_init)
                           + p.a * rec.nu[k]) * dt
        assert rec.X[k + 1] - rec.X[k] == pytest.approx(dx, abs=1e-9)
        assert rec.Q[k + 1] - rec.Q[k] == pytest.approx(rec.nu[k] * dt, abs=1e-12)
    np.testing.assert_allclose(rec.S, rec.F + p.beta * (rec.Q - p.N_init),
                               atol=1e-12)


def test_uniform_liquidation_recovers_face_value_without_frictions():
    # no impact, no volatility: selling N at constant price banks N * F0
    n = 200
    F0, N = 5.0, 1e4
    market = simulate_ou_path(F0, 0.0, 0.0, F0, 1.0, 1.0 / n,
                              np.random.default_rng(11))
    p = CostParams(a=1e-12, b=0.0, beta=0.0, phi=0.0, alpha=math.inf, T=1.0,
                   N_init=N)
    rec = run_strategy(market, lambda t, st, pi: twap_speed(t, st.Q, p.T), p)
    # Euler telescopes exactly: Q(t_k) = N (T - t_k) / T
    np.testing.assert_allclose(rec.Q, N * (1.0 - market.times), atol=1e-8)
    assert rec.terminal_value == pytest.approx(N * F0, rel=1e-6)


def test_baseline_inventory_follows_sinh_curve():
    n = 2000
    p = ou_cost()
    g = control_constants(p).gamma
    market = simulate_ou_path(5.0, 0.0, 0.0, 5.0, 1.0, 1.0 / n,
                              np.random.default_rng(12))
    rec = run_strategy(market, lambda t, st, pi: ac_speed(t, st.Q, p), p)
    t = market.times[:-1]
    expected = p.N_init * np.sinh(g * (p.T - t)) / np.sinh(g * p.T)
    np.testing.assert_allclose(rec.Q[:-1], expected, atol=p.N_init * 2e-3)
    assert abs(rec.residual_before_liquidation) < p.N_init * 2e-3
    assert rec.Q_T == 0.0


def test_finite_terminal_penalty_accounting():
    market = simulate_ou_path(5.0, 0.0, 0.0, 5.0, 1.0, 0.01,
                              np.random.default_rng(13))
    p = ou_cost(alpha=0.05)
    rec = run_strategy(market, lambda t, st, pi: 0.0, p)
    q = p.N_init
    s_T = rec.S[-1]
    assert rec.Q_T == q
    assert rec.terminal_value == pytest.approx(q * (s_T - p.alpha * q), rel=1e-12)


def test_filter_requires_prior():
    market = simulate_ou_path(5.0, 2.0, 0.15, 5.0, 0.1, 0.01,
                              np.random.default_rng(14))
    step = ou_filter_stepper(OU_CHAIN, 2.0, 0.15)
    with pytest.raises(ValueError, match="pi0"):
        run_strategy(market, lambda t, st, pi: 0.0, ou_cost(), filter_fn=step)


def test_excess_return_examples():
    def rec_with(value):
        z = np.zeros(2)
        return TrajectoryRecord(times=z, F=z, S=z, Q=z, X=z, nu=z[:1], pi=None,
                                terminal_value=value, Q_T=0.0,
                                residual_before_liquidation=0.0,
                                liquidation_price=0.0)

    assert excess_return(rec_with(202.0), rec_with(200.0)) == pytest.approx(100.0)
    with pytest.raises(ValueError, match="zero"):
        excess_return(rec_with(1.0), rec_with(0.0))


# ---------------------------------------------------------------------------
# paired Monte Carlo studies
# ---------------------------------------------------------------------------

def ou_config(**kw):
    base = dict(model=OUModel(chain=OU_CHAIN, kappa=2.0, sigma=0.15),
                cost=ou_cost(), F0=5.0, n_steps=600, n_paths=64, seed=123,
                theta_true=5.15, n_slices=13, n_bins=11, n_sample_paths=2)
    base.update(kw)
    return StudyConfig(**base)


def jump_config(**kw):
    base = dict(model=JumpModel(chain=JUMP_CHAIN, mu=481.0, kappa=1077.0, b=0.01),
                cost=jump_cost(), F0=5.0, n_steps=360, n_paths=40, seed=321,
                theta_path=((0.0, 5.1), (0.5, 4.9)), n_slices=13, n_bins=11,
                n_sample_paths=2)
    base.update(kw)
    return StudyConfig(**base)


def test_ou_study_summary_structure():
    res = monte_carlo_study(ou_config())
    assert res.model == "ou" and res.n_paths == 64 and res.seed == 123
    for key in ("fraction_beats_baseline", "fraction_excess_positive",
                "mean_excess_bps", "median_excess_bps",
                "mean_cash_gain_vs_baseline", "mean_terminal_posterior_true",
                "mean_terminal_cash_optimal", "mean_terminal_cash_baseline",
                "max_abs_terminal_inventory",
                "max_abs_residual_before_liquidation"):
        assert key in res.metrics
    assert res.hist_name == "excess_return_bps"
    assert res.hist_counts.sum() == 64
    assert [g.name for g in res.grids] == ["speed", "inventory", "posterior"]
    for g in res.grids:
        np.testing.assert_array_equal(g.counts.sum(axis=1), 64)
        assert g.counts.shape == (g.times.size, 11)
    post = res.grids[2]
    assert post.edges[0] == 0.0 and post.edges[-1] == 1.0
    assert len(res.sample_paths) == 2
    assert res.metrics["max_abs_terminal_inventory"] == 0.0
    assert res.metrics["max_abs_residual_before_liquidation"] < 1e-2 * 1e4
    # with a strong signal and full-length paths the filter should learn
    assert res.metrics["mean_terminal_posterior_true"] > 0.8


def test_ou_study_is_deterministic_and_chunk_stable():
    a = monte_carlo_study(ou_config(n_paths=530))   # spans two path chunks
    b = monte_carlo_study(ou_config(n_paths=530))
    assert a.metrics == b.metrics
    np.testing.assert_array_equal(a.hist_counts, b.hist_counts)
    np.testing.assert_array_equal(a.hist_edges, b.hist_edges)
    for ga, gb in zip(a.grids, b.grids):
        np.testing.assert_array_equal(ga.counts, gb.counts)
    # per-path streams: the first paths do not depend on how many follow
    small = monte_carlo_study(ou_config(n_paths=3, n_sample_paths=3))
    big = monte_carlo_study(ou_config(n_paths=200, n_sample_paths=3))
    for rs, rb in zip(small.sample_paths, big.sample_paths):
        np.testing.assert_array_equal(rs.F, rb.F)
        np.testing.assert_allclose(rs.nu, rb.nu, rtol=1e-12)


def test_ou_study_validation():
    with pytest.raises(ValueError, match="zero generator"):
        chain = LatentChainSpec(theta=[4.85, 5.15],
                                generator=[[-1.0, 1.0], [1.0, -1.0]],
                                prior=[0.5, 0.5])
        monte_carlo_study(ou_config(model=OUModel(chain, 2.0, 0.15)))
    with pytest.raises(ValueError, match="theta_true"):
        monte_carlo_study(ou_config(theta_true=None))
    with pytest.raises(ValueError, match="exactly one"):
        monte_carlo_study(ou_config(theta_true=5.0))
    with pytest.raises(ValueError, match="n_paths"):
        monte_carlo_study(ou_config(), n_paths=0)
    with pytest.raises(TypeError):
        monte_carlo_study(ou_config(model="nope"))


def test_ou_sample_paths_replay_through_single_path_runner():
    cfg = ou_config()
    res = monte_carlo_study(cfg)
    p = cfg.cost
    model = cfg.model
    step = ou_filter_stepper(model.chain, model.kappa, model.sigma)

    for rec in res.sample_paths:
        market = MarketPath(times=rec.times, F=rec.F, dn_plus=rec.dn_plus,
                            dn_minus=rec.dn_minus, levels=rec.levels)

        def speed(t, st, pi):
            h1 = h1_ou(t, st.F, pi, model.chain.theta, model.kappa, p)
            return optimal_speed(t, st.Q, h1, p)

        replay = run_strategy(market, speed, p, filter_fn=step,
                              pi0=model.chain.prior)
        np.testing.assert_allclose(replay.pi, rec.pi, atol=1e-10)
        np.testing.assert_allclose(replay.nu, rec.nu, rtol=1e-8, atol=1e-8)
        np.testing.assert_allclose(replay.Q, rec.Q, rtol=1e-9, atol=1e-7)
        np.testing.assert_allclose(replay.X, rec.X, rtol=1e-9, atol=1e-6)
        assert replay.terminal_value == pytest.approx(rec.terminal_value,
                                                      rel=1e-9, abs=1e-6)


def test_jump_study_summary_structure():
    res = monte_carlo_study(jump_config())
    assert res.model == "jump"
    for key in ("fraction_profit_positive", "mean_profit", "median_profit",
                "mean_terminal_posterior_true", "max_abs_terminal_inventory",
                "max_abs_residual_before_liquidation"):
        assert key in res.metrics
    assert res.hist_name == "terminal_profit"
    assert res.hist_counts.sum() == 40
    for g in res.grids:
        np.testing.assert_array_equal(g.counts.sum(axis=1), 40)
    assert res.metrics["max_abs_terminal_inventory"] == 0.0
    assert len(res.sample_paths) == 2
    assert res.sample_paths[0].pi.shape == (361, 2)


def test_jump_study_deterministic():
    a = monte_carlo_study(jump_config())
    b = monte_carlo_study(jump_config())
    assert a.metrics == b.metrics
    np.testing.assert_array_equal(a.hist_counts, b.hist_counts)


def test_jump_study_validation():
    with pytest.raises(ValueError, match="theta_path"):
        monte_carlo_study(jump_config(theta_path=None))
    with pytest.raises(ValueError, match="start at time 0"):
        monte_carlo_study(jump_config(theta_path=((0.3, 5.1),)))
    with pytest.raises(ValueError, match="match one chain level"):
        monte_carlo_study(jump_config(theta_path=((0.0, 5.0),)))


def test_jump_sample_paths_replay_through_single_path_runner():
    cfg = jump_config()
    res = monte_carlo_study(cfg)
    p = cfg.cost
    model = cfg.model
    step = jump_filter_stepper(model.chain, model.mu, model.kappa, model.b)

    for rec in res.sample_paths:
        market = MarketPath(times=rec.times, F=rec.F, dn_plus=rec.dn_plus,
                            dn_minus=rec.dn_minus, levels=rec.levels)

        def speed(t, st, pi):
            h1 = h1_jump(t, st.F, pi, model.chain.theta, model.mu, model.kappa,
                         model.b, model.chain.generator, p)
            return optimal_speed(t, st.Q, h1, p)

        replay = run_strategy(market, speed, p, filter_fn=step,
                              pi0=model.chain.prior)
        np.testing.assert_allclose(replay.pi, rec.pi, atol=1e-8)
        np.testing.assert_allclose(replay.nu, rec.nu, rtol=1e-7, atol=1e-7)
        np.testing.assert_allclose(replay.X, rec.X, rtol=1e-8, atol=1e-6)
        assert replay.terminal_value == pytest.approx(rec.terminal_value,
                                                      rel=1e-8, abs=1e-6)


def test_study_with_single_path_and_degenerate_grids():
    res = monte_carlo_study(ou_config(n_paths=1, n_sample_paths=1))
    for g in res.grids:
        np.testing.assert_array_equal(g.counts.sum(axis=1), 1)
    assert res.hist_counts.sum() == 1


# ---------------------------------------------------------------------------
# Monte Carlo estimate of the constant value term
# ---------------------------------------------------------------------------

def test_h0_estimate_zero_without_signal():
    model = OUModel(chain=OU_CHAIN, kappa=0.0, sigma=0.15)
    rng = np.random.default_rng(15)
    assert h0_estimate(0.0, 5.0, [0.5, 0.5], model, ou_cost(), 50, rng) == 0.0


def test_h0_estimate_positive_with_signal():
    model = OUModel(chain=OU_CHAIN, kappa=2.0, sigma=0.15)
    rng = np.random.default_rng(16)
    val = h0_estimate(0.0, 5.0, [0.5, 0.5], model, ou_cost(), 100, rng)
    assert np.isfinite(val) and val > 0.0
