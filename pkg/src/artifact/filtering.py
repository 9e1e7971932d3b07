"""Regime filters: posterior inference for the hidden alpha state.

The filters track unnormalised log-weights ``log Lambda_j`` per regime and
expose the posterior ``pi_j = Lambda_j / sum_i Lambda_i``.  Two observation
models are supported:

* diffusive prices ``dF = A dt + sigma dW`` with ``A = kappa (theta_Z - F)``,
  where the weight dynamics are driven by ``sigma^{-2} A_j dF``;
* pure-jump prices ``dF = b (dN+ - dN-)`` with censored unit moves at
  intensities ``lambda+/- = mu + kappa (theta_Z - F)^{+/-}``, where each
  observed move multiplies the weights by the corresponding intensity.

Both are Euler discretisations of the same continuous-time weight SDE; the
log-domain step keeps the Ito correction so that, for a diffusive model with
decoupled regimes, it reproduces the exact pathwise closed form on the same
grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import forward_filter_probs


@dataclass
class ObservationStep:
    """One observation increment over ``dt``: price move and jump counts."""

    dt: float
    dF: float = 0.0
    dn_plus: int = 0
    dn_minus: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.dn_plus < 0 or self.dn_minus < 0:
            raise ValueError("jump counts must be nonnegative")


@dataclass
class FilterState:
    """Unnormalised log-weights of the regimes at time ``t``."""

    log_lambda: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.log_lambda = np.atleast_1d(np.asarray(self.log_lambda, dtype=float))

    @classmethod
    def from_prior(cls, prior, t=0.0):
        prior = np.atleast_1d(np.asarray(prior, dtype=float))
        if np.any(prior < 0) or prior.sum() <= 0:
            raise ValueError("prior must be nonnegative with positive mass")
        with np.errstate(divide="ignore"):
            return cls(np.log(prior), t)

    def probabilities(self) -> np.ndarray:
        return normalize(self)


def normalize(state) -> np.ndarray:
    """Posterior probabilities from log-weights (max-subtraction softmax).

    Accepts a :class:`FilterState` or a bare array of log-weights.  Raises
    if every weight is ``-inf`` (the filter has died on an impossible
    observation sequence).
    """
    log_w = state.log_lambda if isinstance(state, FilterState) else np.asarray(state, dtype=float)
    m = np.max(log_w)
    if not np.isfinite(m):
        raise ValueError("all log-weights are -inf; posterior undefined")
    w = np.exp(log_w - m)
    return w / w.sum()


def _coupling_rate(pi: np.ndarray, C) -> np.ndarray:
    # Sum_i (Lambda_i / Lambda_j) C[j, i] evaluated with normalised weights:
    # the ratio is scale-invariant, so pi can stand in for Lambda.
    if C is None:
        return 0.0
    C = np.asarray(C, dtype=float)
    return (C @ pi) / pi


def generic_filter_step(state: FilterState, obs: ObservationStep, drift,
                        lam_plus, lam_minus, b: float, sigma: float,
                        C=None) -> FilterState:
    """One Euler step of the log-weight SDE under the full observation model.

    Parameters
    ----------
    drift : (J,) array_like
        Model drift ``A_j`` evaluated at the step's left endpoint.
    lam_plus, lam_minus : (J,) array_like
        Up/down jump intensities at the left endpoint.
    b : float
        Jump size of the observed price.
    sigma : float
        Diffusive volatility; ``sigma = 0`` drops the continuous
        observation term (pure-jump filtering).

    A zero intensity against an observed jump sends that regime's
    log-weight to ``-inf`` rather than raising.
    """
    drift = np.atleast_1d(np.asarray(drift, dtype=float))
    lam_p = np.atleast_1d(np.asarray(lam_plus, dtype=float))
    lam_m = np.atleast_1d(np.asarray(lam_minus, dtype=float))
    if np.any(lam_p < 0) or np.any(lam_m < 0):
        raise ValueError("intensities must be nonnegative")
    dt = obs.dt
    incr = -(lam_p + lam_m - 2.0) * dt
    if sigma > 0:
        inv_var = sigma ** -2
        dw_obs = obs.dF - b * (obs.dn_plus - obs.dn_minus)
        incr = incr + inv_var * drift * dw_obs - 0.5 * inv_var * drift ** 2 * dt
    with np.errstate(divide="ignore"):
        if obs.dn_plus:
            incr = incr + obs.dn_plus * np.log(lam_p)
        if obs.dn_minus:
            incr = incr + obs.dn_minus * np.log(lam_m)
    if C is not None:
        incr = incr + _coupling_rate(normalize(state), C) * dt
    return FilterState(state.log_lambda + incr, state.t + dt)


def jump_filter_step(state: FilterState, obs: ObservationStep, theta, mu: float,
                     kappa: float, b: float, F_prev: float, C=None) -> FilterState:
    """One step of the pure-jump regime filter.

    Multiplies each regime's weight by
    ``exp{2(1 - mu - (kappa/2)|theta_j - F|) dt}`` times the observed-move
    intensities ``(mu + kappa (theta_j - F)^+)^{dN+}`` and
    ``(mu + kappa (theta_j - F)^-)^{dN-}``, plus the regime-coupling rate
    when ``C`` is given.  Works from the jump counts; ``obs.dF`` is ignored
    (on the model grid it is ``b (dN+ - dN-)`` by construction).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    gap = theta - F_prev
    lam_p = mu + kappa * np.maximum(gap, 0.0)
    lam_m = mu + kappa * np.maximum(-gap, 0.0)
    dt = obs.dt
    # 2(1 - mu - (kappa/2)|theta_j - F|) == -(lam+ + lam- - 2) identically.
    incr = 2.0 * (1.0 - mu - 0.5 * kappa * np.abs(gap)) * dt
    with np.errstate(divide="ignore"):
        if obs.dn_plus:
            incr = incr + obs.dn_plus * np.log(lam_p)
        if obs.dn_minus:
            incr = incr + obs.dn_minus * np.log(lam_m)
    if C is not None:
        incr = incr + _coupling_rate(normalize(state), C) * dt
    return FilterState(state.log_lambda + incr, state.t + dt)


def ou_filter_from_path(spec, kappa: float, sigma: float, F, dt: float) -> np.ndarray:
    """Exact pathwise filter for a mean-reverting diffusive price.

    For decoupled regimes (any generator on ``spec`` is ignored) the
    log-weights have the closed form

    ``log Lambda_j(t) = log pi0_j + sigma^{-2} [ int kappa (theta_j - F) dF
    - (1/2) int kappa^2 (theta_j - F)^2 du ]``,

    evaluated here with left-endpoint sums on the uniform grid carrying
    ``F``.  Returns the posterior trajectory, shape ``(K + 1, J)``.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if dt <= 0:
        raise ValueError("dt must be positive")
    F = np.asarray(F, dtype=float)
    if F.ndim != 1 or F.size < 1:
        raise ValueError("F must be a 1-d path")
    theta = spec.theta
    prior = spec.prior
    if np.any(prior <= 0):
        # -inf log-weights stay -inf under the closed form; keep them.
        with np.errstate(divide="ignore"):
            log0 = np.log(prior)
    else:
        log0 = np.log(prior)
    A = kappa * (theta[None, :] - F[:-1, None])          # (K, J) left endpoints
    dF = np.diff(F)[:, None]
    incr = (sigma ** -2) * (A * dF - 0.5 * A ** 2 * dt)
    log_traj = np.vstack([np.zeros((1, theta.size)), np.cumsum(incr, axis=0)]) + log0
    m = log_traj.max(axis=1, keepdims=True)
    if not np.all(np.isfinite(m)):
        raise ValueError("all log-weights are -inf; posterior undefined")
    w = np.exp(log_traj - m)
    return w / w.sum(axis=1, keepdims=True)


def forward_filter_as_continuous_check(F, pi0, P, mu, kappa, theta, b: float,
                                       dt: float) -> np.ndarray:
    """Discrete-observation forward filter, for convergence checks.

    Runs the censored-move hidden-Markov forward pass on a price path
    sampled at step ``dt`` and returns the filtered regime probabilities,
    shape ``(K, J)``.  As ``dt -> 0`` these converge to the continuous-time
    jump filter run on the same data.
    """
    return forward_filter_probs(np.asarray(F, dtype=float), np.asarray(pi0, float),
                                np.asarray(P, float), np.asarray(mu, float),
                                np.asarray(kappa, float), np.asarray(theta, float),
                                b, dt)


def ou_filter_stepper(spec, kappa: float, sigma: float):
    """Build a ``(state, obs, F_prev) -> state`` updater for the diffusive
    model; regime coupling is included when the chain generator is nonzero."""
    theta = spec.theta
    C = spec.generator if np.max(np.abs(spec.generator)) > 0 else None
    ones = np.ones_like(theta)

    def step(state, obs, F_prev):
        drift = kappa * (theta - F_prev)
        return generic_filter_step(state, obs, drift, ones, ones, 0.0, sigma, C=C)

    return step


def jump_filter_stepper(spec, mu: float, kappa: float, b: float):
    """Build a ``(state, obs, F_prev) -> state`` updater for the censored
    jump model."""
    C = spec.generator if np.max(np.abs(spec.generator)) > 0 else None

    def step(state, obs, F_prev):
        return jump_filter_step(state, obs, spec.theta, mu, kappa, b, F_prev, C=C)

    return step
