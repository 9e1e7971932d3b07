"""Market simulators, strategy accounting and Monte Carlo studies.

Two price models are supported on a uniform grid of ``n_steps`` over
``[0, T]``:

* mean-reverting diffusion ``dF = kappa (theta_Z - F) dt + sigma dW``;
* censored jump prices ``dF = b (dN+ - dN-)`` with intensities
  ``lambda+/- = mu + kappa (theta_Z - F)^{+/-}``.

``run_strategy`` applies a trading-rate rule with predictable information
(the rate at ``t_k`` sees the filter state built from observations up to
``t_k``), accumulating cash at ``dX = -nu (F + beta (Q - N) + a nu) dt``.
``monte_carlo_study`` runs paired optimal-vs-baseline strategies over many
paths with common random numbers and collects summary metrics, occupancy
grids and sample trajectories.  Sub-streams are derived from the master
seed with ``SeedSequence`` spawn keys (per path for the diffusive study,
per fixed 512-path chunk for the jump study where event rounds are
vectorised across the chunk), so results are reproducible bit-for-bit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .control import CostParams, control_constants, decay_weight_integral, h2, \
    psi1_matrix, psi1_scalar, psi2_matrix, psi2_scalar, _ramp_integral_matrix, \
    _ramp_integral_scalar
from .filtering import FilterState, ObservationStep, normalize
from .latent_chain import LatentChainSpec, matrix_exponential

_CHUNK = 512


# ---------------------------------------------------------------------------
# model bundles and containers
# ---------------------------------------------------------------------------

@dataclass
class OUModel:
    """Mean-reverting diffusive price over a latent regime chain."""

    chain: LatentChainSpec
    kappa: float
    sigma: float


@dataclass
class JumpModel:
    """Censored jump price over a latent regime chain."""

    chain: LatentChainSpec
    mu: float
    kappa: float
    b: float


@dataclass
class MarketPath:
    """Exogenous market data on a uniform grid (``K`` steps)."""

    times: np.ndarray            # (K+1,)
    F: np.ndarray                # (K+1,)
    dn_plus: np.ndarray          # (K,) int
    dn_minus: np.ndarray         # (K,) int
    levels: np.ndarray | None = None   # (K+1,) true alpha level, if known

    @property
    def n_steps(self) -> int:
        return self.times.size - 1

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass
class TraderState:
    """Trader's information at a grid point (left limit)."""

    t: float
    F: float
    Q: float
    X: float
    n_plus: int = 0
    n_minus: int = 0


@dataclass
class TrajectoryRecord:
    """One controlled trajectory plus terminal accounting.

    ``terminal_value`` is the cash after terminal liquidation (``alpha =
    inf``) or the penalised terminal objective ``X_T + Q_T (S_T - alpha
    Q_T)`` otherwise.  ``residual_before_liquidation`` records the
    inventory carried into the terminal block trade.
    """

    times: np.ndarray
    F: np.ndarray
    S: np.ndarray
    Q: np.ndarray
    X: np.ndarray
    nu: np.ndarray
    pi: np.ndarray | None
    terminal_value: float
    Q_T: float
    residual_before_liquidation: float
    liquidation_price: float
    levels: np.ndarray | None = None
    dn_plus: np.ndarray | None = None
    dn_minus: np.ndarray | None = None


def _grid(T: float, dt: float):
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError("T must be an integer multiple of dt")
    return n


def _level_array(levels, n: int) -> np.ndarray:
    arr = np.asarray(levels, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.size == n + 1:
        return arr[:n].copy()
    if arr.size != n:
        raise ValueError("levels must be scalar or one value per step")
    return arr.copy()


# ---------------------------------------------------------------------------
# single-path simulators
# ---------------------------------------------------------------------------

def simulate_ou_path(theta_true, kappa: float, sigma: float, F0: float,
                     T: float, dt: float, rng) -> MarketPath:
    """Euler path of the mean-reverting diffusion.

    ``theta_true`` is the level pulling the price: a scalar or one value
    per step (left endpoints).  The recursion ``F_{k+1} = rho F_k + u_k``
    with ``rho = 1 - kappa dt`` is evaluated with a linear filter.
    """
    n = _grid(T, dt)
    if kappa < 0 or sigma < 0:
        raise ValueError("kappa and sigma must be nonnegative")
    if kappa * dt >= 1.0:
        raise ValueError("unstable discretisation: kappa * dt must be < 1")
    levels = _level_array(theta_true, n)
    shocks = sigma * np.sqrt(dt) * rng.standard_normal(n)
    u = kappa * levels * dt + shocks
    rho = 1.0 - kappa * dt
    F = np.empty(n + 1)
    F[0] = F0
    F[1:] = scipy.signal.lfilter([1.0], [1.0, -rho], u, zi=np.array([rho * F0]))[0]
    times = np.arange(n + 1) * dt
    zeros = np.zeros(n, dtype=np.int32)
    return MarketPath(times=times, F=F, dn_plus=zeros, dn_minus=zeros.copy(),
                      levels=np.append(levels, levels[-1]))


def _jump_market_step(F, theta_k, mu, kappa, b, dt, rng, method="auto"):
    """Advance all paths one step of the censored jump price.

    ``F`` is modified in place; returns ``(dn_plus, dn_minus)`` int arrays.
    ``method``: "bernoulli" (one draw per direction, valid for small
    ``lambda dt``; raises if ``lambda dt >= 1``), "exact" (memoryless
    exponential racing within the step, the regime level frozen at the
    step's left endpoint) or "auto" (exact as soon as any ``lambda dt``
    reaches 0.1).
    """
    P = F.shape[0]
    gap = theta_k - F
    lam_p = mu + kappa * np.maximum(gap, 0.0)
    lam_m = mu + kappa * np.maximum(-gap, 0.0)
    if method not in ("auto", "bernoulli", "exact"):
        raise ValueError(f"unknown method {method!r}")
    if method != "exact":
        lmax = max(lam_p.max(initial=0.0), lam_m.max(initial=0.0)) * dt
        if method == "bernoulli" and lmax >= 1.0:
            raise ValueError("lambda * dt >= 1: Bernoulli thinning invalid")
        if method == "bernoulli" or lmax < 0.1:
            dn_p = (rng.random(P) < lam_p * dt).astype(np.int32)
            dn_m = (rng.random(P) < lam_m * dt).astype(np.int32)
            F += b * (dn_p - dn_m)
            return dn_p, dn_m
    dn_p = np.zeros(P, dtype=np.int32)
    dn_m = np.zeros(P, dtype=np.int32)
    remaining = np.full(P, dt)
    active = np.ones(P, dtype=bool)
    while np.any(active):
        gap = theta_k - F
        lam_p = mu + kappa * np.maximum(gap, 0.0)
        lam_m = mu + kappa * np.maximum(-gap, 0.0)
        with np.errstate(divide="ignore"):
            e_p = rng.standard_exponential(P) / lam_p
            e_m = rng.standard_exponential(P) / lam_m
        t_min = np.minimum(e_p, e_m)
        fire = active & (t_min < remaining)
        remaining = np.where(fire, remaining - t_min, remaining)
        up = fire & (e_p <= e_m)
        down = fire & ~(e_p <= e_m)
        F += b * (up.astype(float) - down.astype(float))
        dn_p += up
        dn_m += down
        active = fire
    return dn_p, dn_m


def simulate_jump_path(theta_true, mu: float, kappa: float, b: float, F0: float,
                       T: float, dt: float, rng, method: str = "auto") -> MarketPath:
    """One path of the censored jump price (see :func:`_jump_market_step`)."""
    n = _grid(T, dt)
    if mu < 0 or kappa < 0 or b <= 0:
        raise ValueError("mu, kappa must be nonnegative and b positive")
    levels = _level_array(theta_true, n)
    F = np.empty(n + 1)
    F[0] = F0
    dn_p = np.empty(n, dtype=np.int32)
    dn_m = np.empty(n, dtype=np.int32)
    cur = np.array([F0])
    for k in range(n):
        p, m = _jump_market_step(cur, levels[k], mu, kappa, b, dt, rng, method)
        dn_p[k], dn_m[k] = p[0], m[0]
        F[k + 1] = cur[0]
    times = np.arange(n + 1) * dt
    return MarketPath(times=times, F=F, dn_plus=dn_p, dn_minus=dn_m,
                      levels=np.append(levels, levels[-1]))


# ---------------------------------------------------------------------------
# strategy accounting
# ---------------------------------------------------------------------------

def run_strategy(market: MarketPath, speed_fn, params: CostParams,
                 filter_fn=None, pi0=None) -> TrajectoryRecord:
    """Run a trading-rate rule over one market path.

    Parameters
    ----------
    speed_fn : callable ``(t, TraderState, pi) -> float``
        Trading rate at each grid point; receives the current posterior
        (``None`` when no filter is attached).
    filter_fn : callable ``(FilterState, ObservationStep, F_prev) -> FilterState``
        Posterior update applied after each observation step.
    pi0 : array_like
        Prior regime distribution (required with ``filter_fn``).
    """
    n = market.n_steps
    dt = market.dt
    F = market.F
    state = None
    if filter_fn is not None:
        if pi0 is None:
            raise ValueError("pi0 is required when a filter is attached")
        state = FilterState.from_prior(pi0)
    n_levels = state.log_lambda.size if state is not None else 0
    Q = np.empty(n + 1)
    X = np.empty(n + 1)
    nu = np.empty(n)
    pi_traj = np.empty((n + 1, n_levels)) if state is not None else None
    Q[0] = params.N_init
    X[0] = 0.0
    n_up = 0
    n_dn = 0
    for k in range(n):
        t_k = market.times[k]
        pi_k = normalize(state) if state is not None else None
        if pi_traj is not None:
            pi_traj[k] = pi_k
        trader = TraderState(t=t_k, F=F[k], Q=Q[k], X=X[k], n_plus=n_up, n_minus=n_dn)
        rate = float(speed_fn(t_k, trader, pi_k))
        X[k + 1] = X[k] - rate * (F[k] + params.beta * (Q[k] - params.N_init)
                                  + params.a * rate) * dt
        Q[k + 1] = Q[k] + rate * dt
        nu[k] = rate
        n_up += int(market.dn_plus[k])
        n_dn += int(market.dn_minus[k])
        if state is not None:
            obs = ObservationStep(dt=dt, dF=float(F[k + 1] - F[k]),
                                  dn_plus=int(market.dn_plus[k]),
                                  dn_minus=int(market.dn_minus[k]))
            state = filter_fn(state, obs, float(F[k]))
    if pi_traj is not None:
        pi_traj[n] = normalize(state)
    S = F + params.beta * (Q - params.N_init)
    residual = Q[n]
    liq_price = float(S[n])
    if params.terminal_liquidation:
        terminal_value = float(X[n] + residual * liq_price)
        q_final = 0.0
    else:
        terminal_value = float(X[n] + residual * (liq_price - params.alpha * residual))
        q_final = float(residual)
    return TrajectoryRecord(times=market.times.copy(), F=F.copy(), S=S, Q=Q, X=X,
                            nu=nu, pi=pi_traj, terminal_value=terminal_value,
                            Q_T=q_final,
                            residual_before_liquidation=float(residual),
                            liquidation_price=liq_price,
                            levels=None if market.levels is None else market.levels.copy(),
                            dn_plus=market.dn_plus.copy(),
                            dn_minus=market.dn_minus.copy())


def excess_return(record_star: TrajectoryRecord, record_ac: TrajectoryRecord) -> float:
    """Relative outperformance in basis points:
    ``(X*_T - X^AC_T) / X^AC_T * 1e4``.  Raises when the baseline terminal
    cash is zero (the ratio is undefined; report absolute profit instead).
    """
    base = record_ac.terminal_value
    if base == 0.0:
        raise ValueError("baseline terminal cash is zero; excess return undefined")
    return (record_star.terminal_value - base) / base * 1e4


# ---------------------------------------------------------------------------
# study configuration and summaries
# ---------------------------------------------------------------------------

@dataclass
class Grid:
    """Occupancy counts of one path variable over (time slice, value bin)."""

    name: str
    times: np.ndarray       # (S,)
    edges: np.ndarray       # (B+1,)
    counts: np.ndarray      # (S, B) int


@dataclass
class StudyConfig:
    """Everything a Monte Carlo study needs."""

    model: OUModel | JumpModel
    cost: CostParams
    F0: float
    n_steps: int
    n_paths: int = 5000
    seed: int = 0
    theta_true: float | None = None          # diffusive study: fixed level
    theta_path: tuple | None = None          # jump study: ((time, level), ...)
    n_slices: int = 61
    n_bins: int = 41
    n_sample_paths: int = 3


@dataclass
class StudySummary:
    """Aggregated study output (everything the CSV writers need)."""

    model: str
    n_paths: int
    seed: int
    metrics: dict
    hist_name: str
    hist_edges: np.ndarray
    hist_counts: np.ndarray
    grids: list[Grid]
    sample_paths: list[TrajectoryRecord]
    elapsed_seconds: float = field(default=0.0, compare=False)


def _spawned_rng(seed: int, key: int):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(key,)))


def _count_log_term(counts, lam):
    """``counts * log(lam)`` with the convention ``0 * log(0) = 0``."""
    with np.errstate(divide="ignore"):
        log_lam = np.log(lam)
    return np.where(counts[:, None] > 0, counts[:, None] * log_lam, 0.0)


def _slice_indices(n_steps: int, n_slices: int) -> np.ndarray:
    return np.unique(np.linspace(0, n_steps - 1, min(n_slices, n_steps)).round().astype(int))


def _make_grids(times, collected, n_paths, n_bins) -> list[Grid]:
    grids = []
    for name, vals, fixed in collected:
        # vals: (S, n_paths)
        if fixed is not None:
            edges = np.linspace(fixed[0], fixed[1], n_bins + 1)
        else:
            lo, hi = float(vals.min()), float(vals.max())
            if lo == hi:
                lo, hi = lo - 0.5, hi + 0.5
            edges = np.linspace(lo, hi, n_bins + 1)
        counts = np.stack([np.histogram(row, bins=edges)[0] for row in vals])
        grids.append(Grid(name=name, times=times, edges=edges, counts=counts))
    return grids


def _sample_record(times, F, S, Q, X, nu, pi, params: CostParams,
                   levels=None, dn_plus=None, dn_minus=None) -> TrajectoryRecord:
    residual = float(Q[-1])
    liq = float(S[-1])
    if params.terminal_liquidation:
        tv = float(X[-1] + residual * liq)
        qf = 0.0
    else:
        tv = float(X[-1] + residual * (liq - params.alpha * residual))
        qf = residual
    return TrajectoryRecord(times=times, F=F, S=S, Q=Q, X=X, nu=nu, pi=pi,
                            terminal_value=tv, Q_T=qf,
                            residual_before_liquidation=residual,
                            liquidation_price=liq, levels=levels,
                            dn_plus=dn_plus, dn_minus=dn_minus)


# ---------------------------------------------------------------------------
# the diffusive-price study
# ---------------------------------------------------------------------------

def _study_ou(cfg: StudyConfig, n_paths: int, seed: int) -> StudySummary:
    model: OUModel = cfg.model
    chain = model.chain
    params = cfg.cost
    if np.max(np.abs(chain.generator)) > 0:
        raise ValueError("the diffusive study assumes a frozen regime (zero generator)")
    if cfg.theta_true is None:
        raise ValueError("theta_true is required for the diffusive study")
    matches = np.nonzero(np.abs(chain.theta - cfg.theta_true) < 1e-12)[0]
    if matches.size != 1:
        raise ValueError("theta_true must match exactly one chain level")
    j_true = int(matches[0])
    j_high = int(np.argmax(chain.theta))

    t0 = time.perf_counter()
    n = cfg.n_steps
    dt = params.T / n
    theta = chain.theta
    J = theta.size
    kappa, sigma = model.kappa, model.sigma
    inv_var = sigma ** -2
    two_a = 2.0 * params.a
    times_k = np.arange(n) * dt
    fb = np.array([(2.0 * h2(t, params) + params.beta) / two_a for t in times_k])
    iw = np.array([decay_weight_integral(t, kappa, params) for t in times_k])
    with np.errstate(divide="ignore"):
        log_prior = np.log(chain.prior)

    slice_idx = _slice_indices(n, cfg.n_slices)
    n_slices = slice_idx.size
    slice_pos = {int(k): s for s, k in enumerate(slice_idx)}
    speed_sl = np.empty((n_slices, n_paths))
    inv_sl = np.empty((n_slices, n_paths))
    post_sl = np.empty((n_slices, n_paths))

    excess = np.empty(n_paths)
    x_star = np.empty(n_paths)
    x_ac = np.empty(n_paths)
    post_true_T = np.empty(n_paths)
    resid = np.empty(n_paths)

    n_sample = min(cfg.n_sample_paths, n_paths)
    samples = []

    for c0 in range(0, n_paths, _CHUNK):
        c1 = min(c0 + _CHUNK, n_paths)
        P = c1 - c0
        shocks = np.empty((P, n))
        for i in range(P):
            shocks[i] = _spawned_rng(seed, c0 + i).standard_normal(n)
        u = kappa * cfg.theta_true * dt + sigma * np.sqrt(dt) * shocks
        rho = 1.0 - kappa * dt
        F = np.empty((P, n + 1))
        F[:, 0] = cfg.F0
        zi = np.full((P, 1), rho * cfg.F0)
        F[:, 1:] = scipy.signal.lfilter([1.0], [1.0, -rho], u, axis=1, zi=zi)[0]

        gap = theta[None, None, :] - F[:, :n, None]            # (P, n, J)
        incr = inv_var * (kappa * gap * np.diff(F, axis=1)[:, :, None]
                          - 0.5 * (kappa * gap) ** 2 * dt)
        log_w = np.concatenate([np.zeros((P, 1, J)), np.cumsum(incr, axis=1)],
                               axis=1) + log_prior
        log_w -= log_w.max(axis=2, keepdims=True)
        pi = np.exp(log_w)
        pi /= pi.sum(axis=2, keepdims=True)

        h1 = kappa * np.einsum("pkj,pkj->pk", pi[:, :n, :], gap) * iw[None, :]

        q_star = np.full(P, params.N_init)
        q_ac = np.full(P, params.N_init)
        xs = np.zeros(P)
        xa = np.zeros(P)
        want_samples = c0 == 0 and n_sample > 0
        if want_samples:
            sQ = np.empty((n_sample, n + 1)); sX = np.empty((n_sample, n + 1))
            sNu = np.empty((n_sample, n))
            sQ[:, 0] = params.N_init; sX[:, 0] = 0.0
        for k in range(n):
            nu_s = fb[k] * q_star + h1[:, k] / two_a
            nu_a = fb[k] * q_ac
            xs -= nu_s * (F[:, k] + params.beta * (q_star - params.N_init)
                          + params.a * nu_s) * dt
            xa -= nu_a * (F[:, k] + params.beta * (q_ac - params.N_init)
                          + params.a * nu_a) * dt
            q_star = q_star + nu_s * dt
            q_ac = q_ac + nu_a * dt
            if want_samples:
                sNu[:, k] = nu_s[:n_sample]
                sQ[:, k + 1] = q_star[:n_sample]
                sX[:, k + 1] = xs[:n_sample]
            s = slice_pos.get(k)
            if s is not None:
                speed_sl[s, c0:c1] = nu_s
                inv_sl[s, c0:c1] = q_star
                post_sl[s, c0:c1] = pi[:, k, j_high]
        s_star = F[:, n] + params.beta * (q_star - params.N_init)
        s_ac = F[:, n] + params.beta * (q_ac - params.N_init)
        resid[c0:c1] = np.abs(q_star)
        if params.terminal_liquidation:
            xs = xs + q_star * s_star
            xa = xa + q_ac * s_ac
        else:
            xs = xs + q_star * (s_star - params.alpha * q_star)
            xa = xa + q_ac * (s_ac - params.alpha * q_ac)
        if np.any(xa == 0.0):
            raise ValueError("baseline terminal cash hit zero; excess return undefined")
        x_star[c0:c1] = xs
        x_ac[c0:c1] = xa
        excess[c0:c1] = (xs - xa) / xa * 1e4
        post_true_T[c0:c1] = pi[:, n, j_true]
        if want_samples:
            times = np.arange(n + 1) * dt
            lev_full = np.full(n + 1, cfg.theta_true)
            for i in range(n_sample):
                Fi = F[i].copy()
                Qi = sQ[i].copy()
                Si = Fi + params.beta * (Qi - params.N_init)
                samples.append(_sample_record(times, Fi, Si, Qi, sX[i].copy(),
                                              sNu[i].copy(), pi[i].copy(), params,
                                              levels=lev_full,
                                              dn_plus=np.zeros(n, np.int32),
                                              dn_minus=np.zeros(n, np.int32)))

    metrics = {
        # "beats" is cash dominance on the paired path; the excess-return
        # ratio reverses orientation whenever the baseline cash is negative.
        "fraction_beats_baseline": float(np.mean(x_star > x_ac)),
        "fraction_excess_positive": float(np.mean(excess > 0)),
        "mean_excess_bps": float(np.mean(excess)),
        "median_excess_bps": float(np.median(excess)),
        "mean_cash_gain_vs_baseline": float(np.mean(x_star - x_ac)),
        "mean_terminal_posterior_true": float(np.mean(post_true_T)),
        "mean_terminal_cash_optimal": float(np.mean(x_star)),
        "mean_terminal_cash_baseline": float(np.mean(x_ac)),
        "max_abs_terminal_inventory": 0.0 if params.terminal_liquidation
                                      else float(resid.max()),
        "max_abs_residual_before_liquidation": float(resid.max()),
    }
    edges = np.histogram_bin_edges(excess, bins=cfg.n_bins)
    counts, _ = np.histogram(excess, bins=edges)
    grids = _make_grids(slice_idx * dt,
                        [("speed", speed_sl, None), ("inventory", inv_sl, None),
                         ("posterior", post_sl, (0.0, 1.0))],
                        n_paths, cfg.n_bins)
    return StudySummary(model="ou", n_paths=n_paths, seed=seed, metrics=metrics,
                        hist_name="excess_return_bps", hist_edges=edges,
                        hist_counts=counts, grids=grids, sample_paths=samples,
                        elapsed_seconds=time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# the jump-price study
# ---------------------------------------------------------------------------

def _h1_jump_tables(times, theta, kappa, b, C, params: CostParams):
    """Per-time constants for the jump-model drift term: ``h1 = ks * (-F *
    s_phi + pi . table)`` with ``table = v - ks * w`` (see
    :func:`artifact.control.h1_jump`)."""
    ks = b * kappa
    J = theta.size
    eye = np.eye(J)
    c = control_constants(params)
    s_phi = np.empty(times.size)
    table = np.empty((times.size, J))
    for idx, t in enumerate(times):
        tau = params.T - t
        if tau == 0.0 or ks == 0.0:
            s_phi[idx] = 0.0
            table[idx] = 0.0
            continue
        if c.case == "ii":
            sp = psi2_scalar(tau, -ks - c.gamma)
            bp = psi2_matrix(tau, C - c.gamma * eye)
        elif c.gamma * tau < 1e-8:
            if params.terminal_liquidation:
                sp = psi1_scalar(tau, -ks, 0.0)
                bp = psi1_matrix(tau, C, 0.0)
            else:
                m = params.a / (params.alpha - params.beta / 2.0)
                sp = (_ramp_integral_scalar(tau, -ks) + m * psi2_scalar(tau, -ks)) / (tau + m)
                bp = (_ramp_integral_matrix(tau, C) + m * psi2_matrix(tau, C)) / (tau + m)
        else:
            sp = psi1_scalar(tau, -ks, c.gamma, c.zeta)
            bp = psi1_matrix(tau, C, c.gamma, c.zeta)
        v = bp @ theta
        w = np.linalg.solve(C + ks * eye, v - sp * theta)
        s_phi[idx] = sp
        table[idx] = v - ks * w
    return ks, s_phi, table


def _theta_path_levels(theta_path, theta, n, dt):
    """Expand ((time, level), ...) into per-step levels and true indices."""
    segs = sorted((float(t), float(v)) for t, v in theta_path)
    if not segs or segs[0][0] > 0.0:
        raise ValueError("theta_path must start at time 0")
    times_k = np.arange(n) * dt
    bounds = np.array([s[0] for s in segs])
    vals = np.array([s[1] for s in segs])
    idx = np.searchsorted(bounds, times_k, side="right") - 1
    levels = vals[idx]
    j_true = np.empty(n, dtype=int)
    for v in np.unique(vals):
        match = np.nonzero(np.abs(theta - v) < 1e-12)[0]
        if match.size != 1:
            raise ValueError("every theta_path level must match one chain level")
        j_true[levels == v] = match[0]
    return levels, j_true


def _study_jump(cfg: StudyConfig, n_paths: int, seed: int) -> StudySummary:
    model: JumpModel = cfg.model
    chain = model.chain
    params = cfg.cost
    if cfg.theta_path is None:
        raise ValueError("theta_path is required for the jump study")
    t0 = time.perf_counter()
    n = cfg.n_steps
    dt = params.T / n
    theta = chain.theta
    J = theta.size
    mu, kappa, b = model.mu, model.kappa, model.b
    C = chain.generator
    two_a = 2.0 * params.a
    times_k = np.arange(n) * dt
    levels, j_true = _theta_path_levels(cfg.theta_path, theta, n, dt)
    j_high = int(np.argmax(theta))
    fb = np.array([(2.0 * h2(t, params) + params.beta) / two_a for t in times_k])
    ks, s_phi, h1_table = _h1_jump_tables(times_k, theta, kappa, b, C, params)
    log_prior = np.log(chain.prior)
    couple = np.max(np.abs(C)) > 0

    slice_idx = _slice_indices(n, cfg.n_slices)
    n_slices = slice_idx.size
    slice_pos = {int(k): s for s, k in enumerate(slice_idx)}
    speed_sl = np.empty((n_slices, n_paths))
    inv_sl = np.empty((n_slices, n_paths))
    post_sl = np.empty((n_slices, n_paths))

    profit = np.empty(n_paths)
    post_true_T = np.empty(n_paths)
    resid = np.empty(n_paths)
    n_sample = min(cfg.n_sample_paths, n_paths)
    samples = []

    n_chunks = (n_paths + _CHUNK - 1) // _CHUNK
    for c in range(n_chunks):
        c0, c1 = c * _CHUNK, min((c + 1) * _CHUNK, n_paths)
        P = c1 - c0
        rng = _spawned_rng(seed, c)
        F_cur = np.full(P, cfg.F0)
        log_w = np.tile(log_prior, (P, 1))
        q_star = np.full(P, params.N_init)
        xs = np.zeros(P)
        want_samples = c == 0 and n_sample > 0
        if want_samples:
            sF = np.empty((n_sample, n + 1)); sQ = np.empty((n_sample, n + 1))
            sX = np.empty((n_sample, n + 1)); sNu = np.empty((n_sample, n))
            sPi = np.empty((n_sample, n + 1, J))
            sDp = np.empty((n_sample, n), dtype=np.int32)
            sDm = np.empty((n_sample, n), dtype=np.int32)
            sF[:, 0] = cfg.F0; sQ[:, 0] = params.N_init; sX[:, 0] = 0.0
        for k in range(n):
            pi = np.exp(log_w - log_w.max(axis=1, keepdims=True))
            pi /= pi.sum(axis=1, keepdims=True)
            if want_samples:
                sPi[:, k] = pi[:n_sample]
            h1 = ks * (-F_cur * s_phi[k] + pi @ h1_table[k])
            nu_s = fb[k] * q_star + h1 / two_a
            xs -= nu_s * (F_cur + params.beta * (q_star - params.N_init)
                          + params.a * nu_s) * dt
            q_star = q_star + nu_s * dt
            s = slice_pos.get(k)
            if s is not None:
                speed_sl[s, c0:c1] = nu_s
                inv_sl[s, c0:c1] = q_star
                post_sl[s, c0:c1] = pi[:, j_high]
            F_prev = F_cur.copy()
            dn_p, dn_m = _jump_market_step(F_cur, levels[k], mu, kappa, b, dt, rng,
                                           method="auto")
            # filter update (log-domain, regime level frozen at left endpoint)
            gap = theta[None, :] - F_prev[:, None]
            lam_p = mu + kappa * np.maximum(gap, 0.0)
            lam_m = mu + kappa * np.maximum(-gap, 0.0)
            incr = -(lam_p + lam_m - 2.0) * dt \
                + _count_log_term(dn_p, lam_p) + _count_log_term(dn_m, lam_m)
            if couple:
                incr = incr + ((pi @ C.T) / pi) * dt
            log_w += incr
            if want_samples:
                sNu[:, k] = nu_s[:n_sample]
                sF[:, k + 1] = F_cur[:n_sample]
                sQ[:, k + 1] = q_star[:n_sample]
                sX[:, k + 1] = xs[:n_sample]
                sDp[:, k] = dn_p[:n_sample]
                sDm[:, k] = dn_m[:n_sample]
        pi = np.exp(log_w - log_w.max(axis=1, keepdims=True))
        pi /= pi.sum(axis=1, keepdims=True)
        s_term = F_cur + params.beta * (q_star - params.N_init)
        resid[c0:c1] = np.abs(q_star)
        if params.terminal_liquidation:
            xs = xs + q_star * s_term
        else:
            xs = xs + q_star * (s_term - params.alpha * q_star)
        profit[c0:c1] = xs
        post_true_T[c0:c1] = pi[:, j_true[-1]]
        if want_samples:
            times = np.arange(n + 1) * dt
            lev_full = np.append(levels, levels[-1])
            for i in range(n_sample):
                sPi[i, n] = pi[i]
                Si = sF[i] + params.beta * (sQ[i] - params.N_init)
                rec = _sample_record(times, sF[i].copy(), Si, sQ[i].copy(),
                                     sX[i].copy(), sNu[i].copy(), sPi[i].copy(),
                                     params, levels=lev_full,
                                     dn_plus=sDp[i].copy(), dn_minus=sDm[i].copy())
                samples.append(rec)

    metrics = {
        "fraction_profit_positive": float(np.mean(profit > 0)),
        "mean_profit": float(np.mean(profit)),
        "median_profit": float(np.median(profit)),
        "mean_terminal_posterior_true": float(np.mean(post_true_T)),
        "max_abs_terminal_inventory": 0.0 if params.terminal_liquidation
                                      else float(resid.max()),
        "max_abs_residual_before_liquidation": float(resid.max()),
    }
    edges = np.histogram_bin_edges(profit, bins=cfg.n_bins)
    counts, _ = np.histogram(profit, bins=edges)
    grids = _make_grids(slice_idx * dt,
                        [("speed", speed_sl, None), ("inventory", inv_sl, None),
                         ("posterior", post_sl, (0.0, 1.0))],
                        n_paths, cfg.n_bins)
    return StudySummary(model="jump", n_paths=n_paths, seed=seed, metrics=metrics,
                        hist_name="terminal_profit", hist_edges=edges,
                        hist_counts=counts, grids=grids, sample_paths=samples,
                        elapsed_seconds=time.perf_counter() - t0)


def monte_carlo_study(cfg: StudyConfig, n_paths: int | None = None,
                      seed: int | None = None) -> StudySummary:
    """Run the paired optimal-vs-baseline study described by ``cfg``.

    ``n_paths``/``seed`` override the config values.  The same draws drive
    both strategies (common random numbers), so per-path comparisons are
    exact; results are bit-reproducible for a given seed.
    """
    n_paths = cfg.n_paths if n_paths is None else int(n_paths)
    seed = cfg.seed if seed is None else int(seed)
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    if isinstance(cfg.model, OUModel):
        return _study_ou(cfg, n_paths, seed)
    if isinstance(cfg.model, JumpModel):
        return _study_jump(cfg, n_paths, seed)
    raise TypeError("cfg.model must be an OUModel or a JumpModel")


# ---------------------------------------------------------------------------
# Monte Carlo estimate of the constant value term
# ---------------------------------------------------------------------------

def h0_estimate(t: float, F: float, pi, model, params: CostParams,
                n_paths: int, rng, n_steps: int = 200) -> float:
    """Monte Carlo estimate of ``h0(t) = E[ int_t^T h1(u)^2 du ] / (4a)``.

    Simulates the filtered state ``(F_u, pi_u)`` forward from ``(t, F,
    pi)`` (the true regime is drawn from ``pi`` and then follows the
    chain), evaluates the drift term ``h1`` along the way and averages the
    trapezoid rule value of its squared integral.
    """
    pi = np.atleast_1d(np.asarray(pi, float))
    if t >= params.T:
        return 0.0
    chain = model.chain
    theta = chain.theta
    J = theta.size
    dt = (params.T - t) / n_steps
    times = t + np.arange(n_steps) * dt
    P_step = matrix_exponential(chain.generator, dt)
    cum_P = np.cumsum(P_step, axis=1)
    z = np.searchsorted(np.cumsum(pi), rng.random(n_paths) * pi.sum())
    z = np.minimum(z, J - 1)
    F_cur = np.full(n_paths, float(F))
    log_w = np.tile(np.log(np.maximum(pi, 1e-300)), (n_paths, 1))
    couple = np.max(np.abs(chain.generator)) > 0
    is_ou = isinstance(model, OUModel)
    if is_ou:
        iw = np.array([decay_weight_integral(u, model.kappa, params) for u in times])
    else:
        ks, s_phi, h1_table = _h1_jump_tables(times, theta, model.kappa, model.b,
                                              chain.generator, params)
    acc = np.zeros(n_paths)
    prev_sq = None
    for k in range(n_steps):
        pi_k = np.exp(log_w - log_w.max(axis=1, keepdims=True))
        pi_k /= pi_k.sum(axis=1, keepdims=True)
        if is_ou:
            gap = theta[None, :] - F_cur[:, None]
            h1 = model.kappa * np.einsum("pj,pj->p", pi_k, gap) * iw[k]
        else:
            h1 = ks * (-F_cur * s_phi[k] + pi_k @ h1_table[k])
        sq = h1 ** 2
        if prev_sq is not None:
            acc += 0.5 * (prev_sq + sq) * dt
        prev_sq = sq
        lev = theta[z]
        F_prev = F_cur.copy()
        if is_ou:
            F_cur = F_cur + model.kappa * (lev - F_cur) * dt \
                + model.sigma * np.sqrt(dt) * rng.standard_normal(n_paths)
            drift = model.kappa * (theta[None, :] - F_prev[:, None])
            incr = (model.sigma ** -2) * (drift * (F_cur - F_prev)[:, None]
                                          - 0.5 * drift ** 2 * dt)
        else:
            dn_p, dn_m = _jump_market_step(F_cur, lev, model.mu, model.kappa,
                                           model.b, dt, rng, method="auto")
            gap = theta[None, :] - F_prev[:, None]
            lam_p = model.mu + model.kappa * np.maximum(gap, 0.0)
            lam_m = model.mu + model.kappa * np.maximum(-gap, 0.0)
            incr = -(lam_p + lam_m - 2.0) * dt \
                + _count_log_term(dn_p, lam_p) + _count_log_term(dn_m, lam_m)
        if couple:
            incr = incr + ((pi_k @ chain.generator.T) / pi_k) * dt
        log_w += incr
        if couple:
            u = rng.random(n_paths)
            z = (u[:, None] > cum_P[z]).sum(axis=1)
    # last interval [T - dt, T]: h1(T) = 0 (the weighted integral is empty)
    acc += 0.5 * prev_sq * dt
    return float(np.mean(acc) / (4.0 * params.a))
