"""EM calibration of the censored-move regime-switching jump model.

Observed data are price paths sampled on a uniform grid with step ``dt``:
between consecutive samples the price either stays flat or moves by exactly
one tick ``+/- b`` (larger moves are censored to one tick upstream).  Given
the regime ``Z_n = i`` at the start of a step, up/down moves arrive with
intensities ``lambda+/- = mu_i + kappa_i (theta_i - F_n)^{+/-}``, and the
recorded move is the sign of the net count, censored to one tick:

* up    with probability ``e^{-dt lam-} (1 - e^{-dt lam+})``
* down  with probability ``e^{-dt lam+} (1 - e^{-dt lam-})``
* flat  with the remaining mass
  ``e^{-dt(lam+ + lam-)} + (1 - e^{-dt lam+})(1 - e^{-dt lam-})``

The regime itself moves as a discrete-time chain with transition matrix
``P = e^{dt C}``.  Note the non-standard dependence: the emission for the
step ``n -> n+1`` conditions on the *source* state ``Z_n`` (and on ``F_n``),
so the forward/backward recursions below differ slightly from the textbook
HMM ones.  Estimation is EM with closed-form updates for the initial law and
transition matrix and a Nelder-Mead M-step for the per-state intensity
parameters; model order is scored by BIC/ICL.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize


# ---------------------------------------------------------------------------
# parameter and data containers
# ---------------------------------------------------------------------------

@dataclass
class EMParams:
    """Parameters of the discretely observed regime-switching jump model."""

    pi0: np.ndarray     # (J,) initial regime law
    P: np.ndarray       # (J, J) one-step transition matrix
    mu: np.ndarray      # (J,) base intensities
    kappa: np.ndarray   # (J,) reversion intensities
    theta: np.ndarray   # (J,) regime levels

    def __post_init__(self):
        self.pi0 = np.atleast_1d(np.asarray(self.pi0, float))
        self.P = np.atleast_2d(np.asarray(self.P, float))
        self.mu = np.atleast_1d(np.asarray(self.mu, float))
        self.kappa = np.atleast_1d(np.asarray(self.kappa, float))
        self.theta = np.atleast_1d(np.asarray(self.theta, float))
        j = self.pi0.size
        if self.P.shape != (j, j):
            raise ValueError("P shape does not match pi0")
        for name in ("mu", "kappa", "theta"):
            if getattr(self, name).shape != (j,):
                raise ValueError(f"{name} shape does not match pi0")
        if np.any(self.pi0 < 0) or abs(self.pi0.sum() - 1) > 1e-8:
            raise ValueError("pi0 must be a probability vector")
        if np.any(self.P < 0) or np.max(np.abs(self.P.sum(axis=1) - 1)) > 1e-8:
            raise ValueError("P rows must be probability vectors")
        if np.any(self.mu < 0) or np.any(self.kappa < 0):
            raise ValueError("mu and kappa must be nonnegative")

    @property
    def n_states(self) -> int:
        return self.pi0.size


@dataclass
class Dataset:
    """``D`` price paths observed on a common uniform grid.

    ``F`` has shape ``(D, K)``; increments must be 0 or ``+/- b``.
    """

    F: np.ndarray
    dt: float
    b: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.F = np.atleast_2d(np.asarray(self.F, float))
        if self.dt <= 0 or self.b <= 0:
            raise ValueError("dt and b must be positive")
        if self.F.shape[1] < 2:
            raise ValueError("paths need at least two observations")

    @property
    def n_days(self) -> int:
        return self.F.shape[0]

    @property
    def n_obs(self) -> int:
        return self.F.shape[1]


@dataclass
class FBResult:
    """Forward-backward output for one path."""

    alpha: np.ndarray   # (K, J) filtered probabilities
    c: np.ndarray       # (K,) normalisers, c[0] == 1
    beta: np.ndarray    # (K, J) normalised backward variables
    gamma: np.ndarray   # (K, J) smoothed probabilities
    xi: np.ndarray      # (K-1, J, J) smoothed two-slice probabilities
    loglik: float


def simulate_dataset(params: EMParams, n_days: int, n_obs: int, dt: float,
                     b: float, F0: float, rng) -> Dataset:
    """Draw synthetic censored-move data from the discrete model.

    Each day starts a fresh regime from ``pi0`` at price ``F0``; within a
    day the regime follows the transition matrix ``P`` and the recorded
    move over each step is up when only up-jumps arrived, down when only
    down-jumps arrived and flat otherwise — exactly the censoring that
    :func:`emission_prob` describes, so the likelihood is exact for this
    generator.
    """
    if n_days < 1 or n_obs < 2:
        raise ValueError("need at least one day of at least two observations")
    J = params.theta.size
    cum_pi0 = np.cumsum(params.pi0)
    cum_P = np.cumsum(params.P, axis=1)
    u0 = rng.random(n_days) * cum_pi0[-1]
    z = np.minimum(np.searchsorted(cum_pi0, u0), J - 1)
    F = np.empty((n_days, n_obs))
    F[:, 0] = F0
    f = np.full(n_days, float(F0))
    for k in range(n_obs - 1):
        gap = params.theta[z] - f
        lam_p = params.mu[z] + params.kappa[z] * np.maximum(gap, 0.0)
        lam_m = params.mu[z] + params.kappa[z] * np.maximum(-gap, 0.0)
        n_p = rng.poisson(lam_p * dt)
        n_m = rng.poisson(lam_m * dt)
        f = f + b * ((n_p >= 1) & (n_m == 0)) - b * ((n_m >= 1) & (n_p == 0))
        F[:, k + 1] = f
        u = rng.random(n_days)
        z = np.minimum((u[:, None] > cum_P[z]).sum(axis=1), J - 1)
    return Dataset(F=F, dt=dt, b=b, meta={"source": "synthetic"})


# ---------------------------------------------------------------------------
# emission model
# ---------------------------------------------------------------------------

def _classify_moves(F: np.ndarray, b: float) -> np.ndarray:
    """Map increments to moves in {-1, 0, +1}; reject off-grid increments."""
    dF = np.diff(F, axis=-1)
    move = np.rint(dF / b)
    if np.max(np.abs(dF - move * b), initial=0.0) > 1e-9 * max(1.0, b) or \
            np.max(np.abs(move), initial=0.0) > 1:
        raise ValueError("price increments must be 0 or +/-b on the model grid")
    return move.astype(np.int8)


def _move_log_probs(F_prev, move, mu, kappa, theta, dt):
    """Log-probability of the observed moves for one state's parameters.

    ``F_prev`` and ``move`` broadcast together; ``mu/kappa/theta`` are
    scalars.  Returns an array shaped like ``move``.
    """
    gap = theta - F_prev
    lam_p = mu + kappa * np.maximum(gap, 0.0)
    lam_m = mu + kappa * np.maximum(-gap, 0.0)
    ep = np.exp(-dt * lam_p)       # P(no up arrival)
    em = np.exp(-dt * lam_m)
    with np.errstate(divide="ignore"):
        log_up = np.log1p(-ep) - dt * lam_m
        log_dn = np.log1p(-em) - dt * lam_p
        log_flat = np.log(ep * em + (1.0 - ep) * (1.0 - em))
    return np.where(move > 0, log_up, np.where(move < 0, log_dn, log_flat))


def emission_prob(F_next, F_prev, mu, kappa, theta, b, dt):
    """Probability of observing ``F_prev -> F_next`` from one regime.

    The three cases (up/down/flat one-tick moves) sum to one for any
    intensities.  Scalar or broadcastable array arguments.
    """
    F_next = np.asarray(F_next, float)
    F_prev = np.asarray(F_prev, float)
    dF = F_next - F_prev
    move = np.rint(dF / b)
    if np.max(np.abs(dF - move * b), initial=0.0) > 1e-9 * max(1.0, b) or \
            np.max(np.abs(move), initial=0.0) > 1:
        raise ValueError("price increments must be 0 or +/-b on the model grid")
    out = np.exp(_move_log_probs(F_prev, move, mu, kappa, theta, dt))
    return float(out) if out.ndim == 0 else out


def _emission_matrix(F: np.ndarray, params: EMParams, b: float, dt: float) -> np.ndarray:
    """Emission probabilities for every step and state: shape (..., K-1, J)."""
    move = _classify_moves(F, b)
    cols = [np.exp(_move_log_probs(F[..., :-1], move, params.mu[j],
                                   params.kappa[j], params.theta[j], dt))
            for j in range(params.n_states)]
    return np.stack(cols, axis=-1)


# ---------------------------------------------------------------------------
# forward / backward recursions
# ---------------------------------------------------------------------------

def _forward_batch(f: np.ndarray, pi0: np.ndarray, P: np.ndarray):
    """Batched normalised forward pass.

    ``f`` holds per-step source-state emissions, shape (D, K-1, J).
    Returns ``alpha`` (D, K, J), ``c`` (D, K) with ``c[:, 0] = 1``.
    """
    D, Km1, J = f.shape
    alpha = np.empty((D, Km1 + 1, J))
    c = np.empty((D, Km1 + 1))
    alpha[:, 0] = pi0
    c[:, 0] = 1.0
    for n in range(Km1):
        a_hat = (alpha[:, n] * f[:, n]) @ P
        cn = a_hat.sum(axis=1)
        if np.any(cn <= 0):
            raise ValueError("forward pass died: observation has zero likelihood")
        alpha[:, n + 1] = a_hat / cn[:, None]
        c[:, n + 1] = cn
    return alpha, c


def _backward_batch(f: np.ndarray, P: np.ndarray, alpha: np.ndarray):
    """Batched backward pass, normalised so that ``sum_i beta_hat alpha = 1``.

    Returns ``beta`` (D, K, J) and ``d`` (D, K-1), where ``d[:, n]`` is the
    raw normaliser (mathematically equal to ``c[:, n+1]``).
    """
    D, Km1, J = f.shape
    beta = np.empty((D, Km1 + 1, J))
    d = np.empty((D, Km1))
    beta[:, Km1] = 1.0
    for n in range(Km1 - 1, -1, -1):
        b_hat = f[:, n] * (beta[:, n + 1] @ P.T)
        dn = np.einsum("dj,dj->d", b_hat, alpha[:, n])
        if np.any(dn <= 0):
            raise ValueError("backward pass died: observation has zero likelihood")
        beta[:, n] = b_hat / dn[:, None]
        d[:, n] = dn
    return beta, d


def forward_pass(F, params: EMParams, b: float, dt: float):
    """Normalised forward recursion for one path.

    Returns ``(alpha, c)`` with ``alpha[0] = pi0`` and ``c[0] = 1``; the
    log-likelihood of the path is ``sum(log c[1:])``.
    """
    f = _emission_matrix(np.atleast_2d(F), params, b, dt)
    alpha, c = _forward_batch(f, params.pi0, params.P)
    return alpha[0], c[0]


def backward_pass(F, params: EMParams, b: float, dt: float, alpha):
    """Normalised backward recursion for one path (terminal condition 1)."""
    f = _emission_matrix(np.atleast_2d(F), params, b, dt)
    beta, _ = _backward_batch(f, params.P, np.asarray(alpha, float)[None, ...])
    return beta[0]


def smoother_and_two_slice(alpha, beta, c, F, params: EMParams, b: float, dt: float):
    """Smoothed one- and two-slice probabilities for one path.

    ``gamma[n] = alpha[n] * beta[n]`` and
    ``xi[n, i, j] = alpha[n, i] f_n(i) P[i, j] beta[n+1, j] / c[n+1]``.
    """
    alpha = np.asarray(alpha, float)
    beta = np.asarray(beta, float)
    c = np.asarray(c, float)
    f = _emission_matrix(np.atleast_2d(F), params, b, dt)[0]
    gamma = alpha * beta
    xi = (alpha[:-1, :, None] * f[:, :, None] * params.P[None, :, :]
          * beta[1:, None, :]) / c[1:, None, None]
    return gamma, xi


def forward_backward(F, params: EMParams, b: float, dt: float) -> FBResult:
    """Full smoother for one path; ``loglik = sum(log c[1:])``."""
    F = np.asarray(F, float)
    f = _emission_matrix(np.atleast_2d(F), params, b, dt)
    alpha, c = _forward_batch(f, params.pi0, params.P)
    beta, d = _backward_batch(f, params.P, alpha)
    alpha, c, beta, d, f1 = alpha[0], c[0], beta[0], d[0], f[0]
    gamma = alpha * beta
    xi = (alpha[:-1, :, None] * f1[:, :, None] * params.P[None, :, :]
          * beta[1:, None, :]) / d[:, None, None]
    return FBResult(alpha=alpha, c=c, beta=beta, gamma=gamma, xi=xi,
                    loglik=float(np.log(c[1:]).sum()))


def forward_filter_probs(F, pi0, P, mu, kappa, theta, b, dt) -> np.ndarray:
    """Filtered regime probabilities ``P(Z_n | F_0..F_n)`` for one path."""
    pi0 = np.atleast_1d(np.asarray(pi0, float))
    params = EMParams(pi0=pi0, P=P,
                      mu=np.broadcast_to(np.asarray(mu, float), pi0.shape).copy(),
                      kappa=np.broadcast_to(np.asarray(kappa, float), pi0.shape).copy(),
                      theta=np.broadcast_to(np.asarray(theta, float), pi0.shape).copy())
    alpha, _ = forward_pass(F, params, b, dt)
    return alpha


# ---------------------------------------------------------------------------
# EM
# ---------------------------------------------------------------------------

def _e_step(data: Dataset, params: EMParams):
    """Batched E-step: returns loglik, gamma (D,K,J), xi_sum (J,J), gamma0 (J,)."""
    f = _emission_matrix(data.F, params, data.b, data.dt)
    alpha, c = _forward_batch(f, params.pi0, params.P)
    beta, d = _backward_batch(f, params.P, alpha)
    gamma = alpha * beta
    # xi summed over days and steps; accumulate stepwise to bound memory
    xi_sum = np.zeros((params.n_states,) * 2)
    Km1 = f.shape[1]
    for n in range(Km1):
        w = (alpha[:, n] * f[:, n]) / d[:, n, None]   # (D, J)
        xi_sum += np.einsum("di,dj->ij", w, beta[:, n + 1]) * params.P
    loglik = float(np.log(c[:, 1:]).sum())
    return loglik, gamma, xi_sum, gamma[:, 0].mean(axis=0)


def _psi_objective(x, F_prev, move, weights, dt):
    """Negative expected complete-data log-likelihood for one state."""
    mu, kappa, theta = np.exp(x[0]), np.exp(x[1]), x[2]
    lp = _move_log_probs(F_prev, move, mu, kappa, theta, dt)
    if not np.all(np.isfinite(lp[weights > 0])):
        return np.inf
    return -float(np.sum(weights * lp))


def _m_step_psi(data: Dataset, gamma: np.ndarray, params: EMParams):
    """Per-state Nelder-Mead update of (mu, kappa, theta), warm-started.

    Candidates are only accepted when they improve the expected objective,
    so the overall EM iteration never decreases the likelihood.
    """
    move = _classify_moves(data.F, data.b)
    F_prev = data.F[:, :-1]
    mu, kappa, theta = params.mu.copy(), params.kappa.copy(), params.theta.copy()
    improved = np.ones(params.n_states, dtype=bool)
    for j in range(params.n_states):
        w = gamma[:, :-1, j]
        if w.sum() <= 0:
            improved[j] = False
            continue
        x0 = np.array([np.log(max(mu[j], 1e-12)), np.log(max(kappa[j], 1e-12)),
                       theta[j]])
        base = _psi_objective(x0, F_prev, move, w, data.dt)
        res = scipy.optimize.minimize(
            _psi_objective, x0, args=(F_prev, move, w, data.dt),
            method="Nelder-Mead",
            options={"maxiter": 400, "xatol": 1e-8, "fatol": 1e-10})
        if res.fun < base:
            mu[j], kappa[j], theta[j] = np.exp(res.x[0]), np.exp(res.x[1]), res.x[2]
        else:
            improved[j] = False
    return mu, kappa, theta, improved


def em_step(data: Dataset, params: EMParams):
    """One EM iteration.

    Returns ``(new_params, loglik)`` where ``loglik`` is evaluated at the
    *input* parameters (the E-step likelihood).
    """
    loglik, gamma, xi_sum, gamma0 = _e_step(data, params)
    row = xi_sum.sum(axis=1)
    P_new = params.P.copy()
    ok = row > 0
    P_new[ok] = xi_sum[ok] / row[ok, None]
    if not np.all(ok):
        warnings.warn("state with zero expected occupancy; its transition row kept")
    mu, kappa, theta, improved = _m_step_psi(data, gamma, params)
    if not np.all(improved):
        warnings.warn("M-step kept previous intensity parameters for some state")
    new = EMParams(pi0=gamma0 / gamma0.sum(), P=P_new, mu=mu, kappa=kappa, theta=theta)
    return new, loglik


@dataclass
class EMFit:
    params: EMParams
    loglik: float
    loglik_path: np.ndarray
    n_iter: int
    converged: bool


def default_init(data: Dataset, n_states: int, seed: int = 0) -> EMParams:
    """Moment-based deterministic initialiser with seeded jitter."""
    rng = np.random.default_rng(seed)
    move = _classify_moves(data.F, data.b)
    p_move = max(float(np.mean(move != 0)), 1e-4)
    # P(any move) ~= 1 - e^{-2 mu dt}  when kappa is small
    mu0 = -np.log1p(-min(p_move, 0.999)) / (2.0 * data.dt)
    spread = float(np.std(data.F)) + 1e-6
    qs = (np.arange(n_states) + 0.5) / n_states
    theta0 = np.quantile(data.F, qs)
    mu = mu0 * rng.uniform(0.6, 1.4, n_states)
    kappa = (mu0 / spread) * rng.uniform(0.3, 1.0, n_states)
    P = np.full((n_states, n_states), 0.02 / max(n_states - 1, 1))
    np.fill_diagonal(P, 0.98)
    if n_states == 1:
        P = np.ones((1, 1))
    return EMParams(pi0=np.full(n_states, 1.0 / n_states), P=P, mu=mu,
                    kappa=kappa, theta=theta0 + rng.normal(0, 0.1 * spread, n_states))


def em_fit(data: Dataset, init, tol: float = 1e-8, max_iter: int = 500,
           sort_states: bool = True) -> EMFit:
    """Run EM to convergence from ``init`` (an :class:`EMParams` or a state
    count, in which case :func:`default_init` is used).

    Stops when the relative log-likelihood improvement drops below ``tol``
    or after ``max_iter`` iterations.  The fitted states are reported
    sorted by ``mu`` descending.
    """
    params = default_init(data, init) if isinstance(init, (int, np.integer)) else init
    path = []
    prev = -np.inf
    converged = False
    for it in range(max_iter):
        params, loglik = em_step(data, params)
        path.append(loglik)
        if np.isfinite(prev) and loglik - prev < tol * max(1.0, abs(prev)):
            converged = True
            break
        prev = loglik
    # likelihood at the final parameters (one more E evaluation)
    final_ll = float(sum(np.log(forward_pass(data.F[d], params, data.b, data.dt)[1][1:]).sum()
                         for d in range(data.n_days)))
    path.append(final_ll)
    if sort_states:
        params = sort_states_by_mu(params)
    return EMFit(params=params, loglik=final_ll, loglik_path=np.array(path),
                 n_iter=len(path) - 1, converged=converged)


def sort_states_by_mu(params: EMParams) -> EMParams:
    """Relabel states so that ``mu`` is descending (report convention)."""
    order = np.argsort(-params.mu, kind="stable")
    return EMParams(pi0=params.pi0[order], P=params.P[np.ix_(order, order)],
                    mu=params.mu[order], kappa=params.kappa[order],
                    theta=params.theta[order])


# ---------------------------------------------------------------------------
# decoding and model scores
# ---------------------------------------------------------------------------

def viterbi(F, params: EMParams, b: float, dt: float) -> np.ndarray:
    """Most probable regime path (log-domain max-product; ties -> lower index)."""
    f = _emission_matrix(np.atleast_2d(F), params, b, dt)[0]   # (K-1, J)
    with np.errstate(divide="ignore"):
        log_f = np.log(f)
        log_P = np.log(params.P)
        delta = np.log(params.pi0)
    K = f.shape[0] + 1
    J = params.n_states
    back = np.zeros((K - 1, J), dtype=int)
    for n in range(K - 1):
        cand = delta[:, None] + log_f[n][:, None] + log_P    # (i, j)
        back[n] = np.argmax(cand, axis=0)
        delta = cand[back[n], np.arange(J)]
    states = np.empty(K, dtype=int)
    states[-1] = int(np.argmax(delta))
    for n in range(K - 2, -1, -1):
        states[n] = back[n, states[n + 1]]
    return states


def n_free_params(n_states: int) -> int:
    """Free parameters: initial law (J-1), transitions J(J-1), psi 3J."""
    j = n_states
    return (j - 1) + j * (j - 1) + 3 * j


def bic(loglik: float, n_params: int, n_obs: int, n_days: int) -> float:
    """BIC score (larger is better): ``loglik - (nu/2) log(K D)``."""
    return loglik - 0.5 * n_params * np.log(n_obs * n_days)


def icl(data: Dataset, params: EMParams) -> float:
    """ICL score: emission log-densities summed along the Viterbi paths,
    minus the same penalty as :func:`bic`.

    This hard-assignment approximation scores each step's move density at
    the decoded regime only; the chain's prior and transition factors are
    not included, so the score is *not* bounded by the BIC (their logs are
    negative and dropped).  For a single regime the Viterbi path is trivial
    and the value coincides with the BIC exactly.
    """
    total = 0.0
    for d in range(data.n_days):
        F = data.F[d]
        z = viterbi(F, params, data.b, data.dt)
        f = _emission_matrix(F[None, :], params, data.b, data.dt)[0]
        probs = f[np.arange(f.shape[0]), z[:-1]]
        with np.errstate(divide="ignore"):
            total += float(np.log(probs).sum())
    return total - 0.5 * n_free_params(params.n_states) * np.log(data.n_obs * data.n_days)


def generator_from_transition(P, dt: float) -> np.ndarray:
    """Continuous-time generator implied by a one-step matrix: ``log(P)/dt``.

    Small negative off-diagonal entries (matrix-log noise) are clamped to
    zero and the diagonal is rebalanced; a warning reports the clamping
    when it exceeds the 1e-10 tolerance.
    """
    P = np.asarray(P, float)
    L = scipy.linalg.logm(P)
    if np.max(np.abs(L.imag)) > 1e-8:
        warnings.warn("matrix logarithm has a nontrivial imaginary part")
    C = L.real / dt
    off = ~np.eye(C.shape[0], dtype=bool)
    neg = np.minimum(C[off], 0.0)
    if neg.size and neg.min() < -1e-10:
        warnings.warn("negative off-diagonal intensities clamped to zero")
    C_off = np.where(off, np.maximum(C, 0.0), 0.0)
    np.fill_diagonal(C_off, -C_off.sum(axis=1))
    return C_off


# ---------------------------------------------------------------------------
# estimator front-end
# ---------------------------------------------------------------------------

class JumpModelCalibrator:
    """Estimator-style front end for the EM calibration.

    Parameters
    ----------
    n_states : int
        Number of hidden regimes to fit.
    b : float
        Tick size of the censored price moves.
    dt : float
        Sampling step of the observations.
    tol, max_iter : float, int
        EM stopping rule (relative log-likelihood improvement / cap).
    seed : int
        Seed for the moment-based initialiser's jitter.

    After ``fit`` the instance exposes ``pi0_``, ``transition_``,
    ``generator_``, ``mu_``, ``kappa_``, ``theta_``, ``loglik_``, ``bic_``,
    ``icl_``, ``n_iter_`` and ``converged_`` (states sorted by ``mu``
    descending).
    """

    def __init__(self, n_states=2, b=0.01, dt=1.0, tol=1e-8, max_iter=500, seed=0):
        self.n_states = n_states
        self.b = b
        self.dt = dt
        self.tol = tol
        self.max_iter = max_iter
        self.seed = seed

    # -- sklearn-style plumbing (no sklearn dependency) --
    def get_params(self, deep=True):
        return {k: getattr(self, k)
                for k in ("n_states", "b", "dt", "tol", "max_iter", "seed")}

    def set_params(self, **kwargs):
        for k, v in kwargs.items():
            if k not in self.get_params():
                raise ValueError(f"unknown parameter {k!r}")
            setattr(self, k, v)
        return self

    def _as_dataset(self, X) -> Dataset:
        if isinstance(X, Dataset):
            return X
        return Dataset(F=np.atleast_2d(np.asarray(X, float)), dt=self.dt, b=self.b)

    def fit(self, X, init: EMParams | None = None):
        data = self._as_dataset(X)
        start = init if init is not None else default_init(data, self.n_states, self.seed)
        fit = em_fit(data, start, tol=self.tol, max_iter=self.max_iter)
        p = fit.params
        self.pi0_, self.transition_ = p.pi0, p.P
        self.mu_, self.kappa_, self.theta_ = p.mu, p.kappa, p.theta
        self.generator_ = generator_from_transition(p.P, data.dt)
        self.params_ = p
        self.loglik_ = fit.loglik
        self.loglik_path_ = fit.loglik_path
        self.n_iter_ = fit.n_iter
        self.converged_ = fit.converged
        self.n_params_ = n_free_params(p.n_states)
        self.bic_ = bic(fit.loglik, self.n_params_, data.n_obs, data.n_days)
        self.icl_ = icl(data, p) if p.n_states > 1 else self.bic_
        return self

    def predict(self, X) -> np.ndarray:
        """Viterbi regime paths, shape (D, K)."""
        data = self._as_dataset(X)
        return np.stack([viterbi(data.F[d], self.params_, data.b, data.dt)
                         for d in range(data.n_days)])

    def predict_proba(self, X) -> np.ndarray:
        """Smoothed regime probabilities, shape (D, K, J)."""
        data = self._as_dataset(X)
        out = []
        for d in range(data.n_days):
            fb = forward_backward(data.F[d], self.params_, data.b, data.dt)
            out.append(fb.gamma)
        return np.stack(out)

    def score(self, X) -> float:
        """Total log-likelihood of ``X`` under the fitted parameters."""
        data = self._as_dataset(X)
        return float(sum(np.log(forward_pass(data.F[d], self.params_,
                                             data.b, data.dt)[1][1:]).sum()
                         for d in range(data.n_days)))
