"""Closed-form trading controls for linear-quadratic execution with a
filtered alpha signal.

The trader pays temporary impact ``a nu^2``, moves the price permanently by
``beta`` per share, runs an inventory penalty ``phi Q^2`` and a terminal
penalty ``alpha Q_T^2`` (``alpha = inf`` enforces full liquidation).  The
value function is quadratic in inventory, ``h0 + h1 Q + h2 Q^2``, giving the
feedback rate

    nu*(t) = [(2 h2(t) + beta) Q + h1(t, state)] / (2a).

``h2`` solves a Riccati equation with explicit solution in terms of
``gamma = sqrt(phi/a)`` and ``zeta = (alpha - beta/2 + a gamma) /
(alpha - beta/2 - a gamma)``; the linear term ``h1`` integrates the
expected alpha against the deterministic weight

    w(t, u) = (zeta e^{gamma(T-u)} - e^{-gamma(T-u)})
            / (zeta e^{gamma(T-t)} - e^{-gamma(T-t)}),

which has closed forms for both observation models used here: exponential
decay of the conditional mean under the mean-reverting diffusion, and
matrix-exponential moments under the regime-switching jump model (the
``psi`` kernels below).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .latent_chain import matrix_exponential

#: boundary-regime detection tolerance for |alpha - beta/2 - sqrt(a phi)|
_CASE_TOL = 1e-12
#: below this value of gamma * tau the zero-gamma limits are used
_SMALL_GAMMA_TAU = 1e-8
#: quadrature fallback threshold for the resonant decay integral
_RESONANCE_TOL = 1e-8


@dataclass
class CostParams:
    """Execution-cost and horizon parameters.

    ``alpha = math.inf`` selects the terminal-liquidation regime; then the
    feedback is singular at ``t = T`` and callers must stop one step short
    and liquidate the residual at the terminal price.
    """

    a: float            # temporary impact
    b: float            # tick size of the jump price (0 for diffusive)
    beta: float         # permanent impact
    phi: float          # running inventory penalty
    alpha: float        # terminal inventory penalty, may be math.inf
    T: float            # horizon
    N_init: float = 0.0  # initial inventory

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("a must be positive")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.phi < 0 or self.beta < 0 or self.b < 0:
            raise ValueError("phi, beta and b must be nonnegative")
        if not (self.alpha >= 0):
            raise ValueError("alpha must be nonnegative (math.inf allowed)")

    @property
    def terminal_liquidation(self) -> bool:
        return math.isinf(self.alpha)


@dataclass
class ControlConstants:
    """Derived constants: ``gamma``, ``zeta`` and the solution regime.

    ``case`` is ``"i"`` generically and ``"ii"`` on the boundary
    ``alpha - beta/2 = sqrt(a phi)`` (where ``zeta`` diverges and the
    solution degenerates to a constant ``h2``).
    """

    gamma: float
    zeta: float
    case: str


def control_constants(params: CostParams) -> ControlConstants:
    gamma = math.sqrt(params.phi / params.a)
    if params.terminal_liquidation:
        return ControlConstants(gamma=gamma, zeta=1.0, case="i")
    edge = params.alpha - params.beta / 2.0 - math.sqrt(params.a * params.phi)
    if abs(edge) < _CASE_TOL * max(1.0, abs(params.alpha)):
        return ControlConstants(gamma=gamma, zeta=math.inf, case="ii")
    num = params.alpha - params.beta / 2.0 + params.a * gamma
    return ControlConstants(gamma=gamma, zeta=num / edge, case="i")


def _check_time(t: float, params: CostParams):
    if not (0.0 <= t <= params.T):
        raise ValueError(f"t = {t} outside [0, {params.T}]")


def h2(t: float, params: CostParams) -> float:
    """Quadratic value coefficient; satisfies ``h2(T) = -alpha``.

    In the terminal-liquidation regime ``h2`` is singular at ``t = T``.
    """
    _check_time(t, params)
    c = control_constants(params)
    tau = params.T - t
    if c.case == "ii":
        return -params.a * c.gamma - params.beta / 2.0
    if c.gamma == 0.0:
        if params.terminal_liquidation:
            if tau == 0.0:
                raise ValueError("h2 is singular at the horizon when alpha = inf")
            return -params.a / tau - params.beta / 2.0
        m = params.a / (params.alpha - params.beta / 2.0)
        return -params.a / (tau + m) - params.beta / 2.0
    q = math.exp(-2.0 * c.gamma * tau)
    den = c.zeta - q
    if den == 0.0:
        raise ValueError("h2 is singular at the horizon when alpha = inf")
    return -params.a * c.gamma * (c.zeta + q) / den - params.beta / 2.0


def riccati_residual(t: float, params: CostParams, step: float = 1e-5) -> float:
    """Residual ``dh2/dt - phi + (beta + 2 h2)^2 / (4a)`` by central difference.

    ``t`` must be interior so that ``t +/- step`` stay inside ``[0, T]``.
    """
    dh = (h2(t + step, params) - h2(t - step, params)) / (2.0 * step)
    g = params.beta + 2.0 * h2(t, params)
    return dh - params.phi + g * g / (4.0 * params.a)


def h1_weight(t: float, u: float, params: CostParams) -> float:
    """Deterministic discount ``w(t, u)`` applied to the expected alpha at
    time ``u >= t``; ``w(t, t) = 1`` and, under terminal liquidation,
    ``w(t, T) = 0``."""
    _check_time(t, params)
    if not (t <= u <= params.T):
        raise ValueError("need t <= u <= T")
    c = control_constants(params)
    if c.case == "ii":
        return math.exp(-c.gamma * (u - t))
    tau_t, tau_u = params.T - t, params.T - u
    if c.gamma == 0.0:
        if params.terminal_liquidation:
            if tau_t == 0.0:
                raise ValueError("weight is singular at the horizon when alpha = inf")
            return tau_u / tau_t
        m = params.a / (params.alpha - params.beta / 2.0)
        return (tau_u + m) / (tau_t + m)
    den = c.zeta - math.exp(-2.0 * c.gamma * tau_t)
    if den == 0.0:
        raise ValueError("weight is singular at the horizon when alpha = inf")
    num = c.zeta - math.exp(-2.0 * c.gamma * tau_u)
    return math.exp(-c.gamma * (u - t)) * num / den


def _g_exp(x: float, tau: float) -> float:
    """``int_0^tau e^{-x s} ds = (1 - e^{-x tau}) / x`` (``tau`` at x = 0)."""
    if x == 0.0:
        return tau
    return -math.expm1(-x * tau) / x


def decay_weight_integral(t: float, decay: float, params: CostParams) -> float:
    """``int_t^T e^{-decay (u - t)} w(t, u) du`` in closed form.

    Falls back to adaptive quadrature near the resonance ``decay = gamma``
    and for near-zero decay in the zero-gamma regime.
    """
    _check_time(t, params)
    if decay < 0:
        raise ValueError("decay must be nonnegative")
    c = control_constants(params)
    tau = params.T - t
    if tau == 0.0:
        return 0.0
    if c.case == "ii":
        return _g_exp(decay + c.gamma, tau)
    if c.gamma > 0.0 and abs(decay - c.gamma) < _RESONANCE_TOL:
        val, _ = scipy.integrate.quad(
            lambda u: math.exp(-decay * (u - t)) * h1_weight(t, u, params),
            t, params.T, limit=200)
        return val
    if c.gamma == 0.0:
        if decay < 1e-6:
            val, _ = scipy.integrate.quad(
                lambda u: math.exp(-decay * (u - t)) * h1_weight(t, u, params),
                t, params.T, limit=200)
            return val
        ramp = (1.0 - math.exp(-decay * tau) * (1.0 + decay * tau)) / decay ** 2
        if params.terminal_liquidation:
            return _g_exp(decay, tau) - ramp / tau
        m = params.a / (params.alpha - params.beta / 2.0)
        return ((tau + m) * _g_exp(decay, tau) - ramp) / (tau + m)
    q = math.exp(-2.0 * c.gamma * tau)
    den = c.zeta - q
    if den == 0.0:
        raise ValueError("weight is singular at the horizon when alpha = inf")
    return (c.zeta * _g_exp(decay + c.gamma, tau)
            - q * _g_exp(decay - c.gamma, tau)) / den


def h1_ou(t: float, F: float, pi, theta, kappa: float, params: CostParams) -> float:
    """Linear value coefficient under the mean-reverting diffusive price.

    The conditional mean alpha decays exponentially,
    ``E[A_u | regime j] = kappa (theta_j - F) e^{-kappa (u - t)}``, so the
    weighted integral reduces to :func:`decay_weight_integral`:

        h1 = sum_j pi_j  kappa (theta_j - F)  int_t^T e^{-kappa(u-t)} w(t,u) du.
    """
    pi = np.atleast_1d(np.asarray(pi, float))
    theta = np.atleast_1d(np.asarray(theta, float))
    if pi.shape != theta.shape:
        raise ValueError("pi and theta must have the same length")
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if kappa == 0.0:
        return 0.0
    iw = decay_weight_integral(t, kappa, params)
    return float(np.dot(pi, kappa * (theta - F)) * iw)


# ---------------------------------------------------------------------------
# psi kernels (matrix-exponential integrals for the jump model)
# ---------------------------------------------------------------------------

def psi2_scalar(tau: float, y: float) -> float:
    """``int_0^tau e^{s y} ds``; equals ``tau`` at ``y = 0``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if y == 0.0:
        return tau
    return math.expm1(tau * y) / y


def psi2_matrix(tau: float, Y) -> np.ndarray:
    """``int_0^tau e^{s Y} ds`` via a block matrix exponential.

    Handles singular ``Y`` (the generator of a chain always is): the
    integral is the upper-right block of ``expm(tau [[Y, I], [0, 0]])``.
    """
    Y = np.atleast_2d(np.asarray(Y, float))
    if Y.shape[0] != Y.shape[1]:
        raise ValueError("Y must be square")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    j = Y.shape[0]
    M = np.zeros((2 * j, 2 * j))
    M[:j, :j] = Y
    M[:j, j:] = np.eye(j)
    return matrix_exponential(M, tau)[:j, j:]


def _ramp_integral_scalar(tau: float, y: float) -> float:
    """``int_0^tau (tau - s) e^{s y} ds`` with a stable small-``y`` series."""
    x = tau * y
    if abs(x) < 1e-4:
        return tau * tau * (0.5 + x / 6.0 + x * x / 24.0)
    return (math.expm1(x) - x) / (y * y)


def _ramp_integral_matrix(tau: float, Y: np.ndarray) -> np.ndarray:
    """``int_0^tau (tau - s) e^{s Y} ds`` via a 3x3 block exponential."""
    j = Y.shape[0]
    M = np.zeros((3 * j, 3 * j))
    M[:j, :j] = Y
    M[:j, j:2 * j] = np.eye(j)
    M[j:2 * j, 2 * j:] = np.eye(j)
    return matrix_exponential(M, tau)[:j, 2 * j:]


def psi1_scalar(tau: float, y: float, gamma: float, zeta: float = 1.0) -> float:
    """Weighted kernel ``int_0^tau w_tau(s) e^{s y} ds`` with
    ``w_tau(s) = (zeta e^{gamma(tau-s)} - e^{-gamma(tau-s)}) /
    (zeta e^{gamma tau} - e^{-gamma tau})`` (``zeta = 1`` gives the
    sinh weight of the terminal-liquidation regime)."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if tau == 0.0:
        return 0.0
    if gamma * tau < _SMALL_GAMMA_TAU:
        if zeta != 1.0:
            raise ValueError("zero-gamma limit implemented for zeta = 1 only")
        return _ramp_integral_scalar(tau, y) / tau
    q = math.exp(-2.0 * gamma * tau)
    den = zeta - q
    if den == 0.0:
        raise ValueError("kernel is singular (zeta e^{gamma tau} = e^{-gamma tau})")
    return (zeta * psi2_scalar(tau, y - gamma)
            - q * psi2_scalar(tau, y + gamma)) / den


def psi1_matrix(tau: float, Y, gamma: float, zeta: float = 1.0) -> np.ndarray:
    """Matrix version of :func:`psi1_scalar`; coincides with it for 1x1 ``Y``."""
    Y = np.atleast_2d(np.asarray(Y, float))
    if Y.shape[0] != Y.shape[1]:
        raise ValueError("Y must be square")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    j = Y.shape[0]
    if tau == 0.0:
        return np.zeros((j, j))
    if gamma * tau < _SMALL_GAMMA_TAU:
        if zeta != 1.0:
            raise ValueError("zero-gamma limit implemented for zeta = 1 only")
        return _ramp_integral_matrix(tau, Y) / tau
    q = math.exp(-2.0 * gamma * tau)
    den = zeta - q
    if den == 0.0:
        raise ValueError("kernel is singular (zeta e^{gamma tau} = e^{-gamma tau})")
    eye = np.eye(j)
    return (zeta * psi2_matrix(tau, Y - gamma * eye)
            - q * psi2_matrix(tau, Y + gamma * eye)) / den


def h1_jump(t: float, F: float, pi, theta, mu: float, kappa: float, b: float,
            C, params: CostParams) -> float:
    """Linear value coefficient under the regime-switching jump price.

    With ``kappa* = b kappa`` the conditional expected alpha is
    ``E[b(lam+ - lam-) | regime j] = kappa* E[Theta_u - F_u | ...]`` (the
    symmetric base intensity ``mu`` cancels), whose regime-conditional mean
    follows the linear system solved by matrix exponentials:

        E_j[Theta_u - F_u] = [e^{sC} theta - F e^{-kappa* s} 1
                              - kappa* (C + kappa* I)^{-1}
                                (e^{sC} - e^{-kappa* s} I) theta]_j,  s = u - t.

    Integrating against ``w(t, u)`` yields psi-kernel expressions; the
    returned value is ``h1`` itself (``optimal_speed`` applies ``1/(2a)``).
    """
    del mu  # cancels from the up/down intensity difference
    _check_time(t, params)
    pi = np.atleast_1d(np.asarray(pi, float))
    theta = np.atleast_1d(np.asarray(theta, float))
    C = np.atleast_2d(np.asarray(C, float))
    j = theta.size
    if pi.shape != (j,) or C.shape != (j, j):
        raise ValueError("pi, theta and C must agree in size")
    ks = b * kappa
    if ks == 0.0:
        return 0.0
    tau = params.T - t
    if tau == 0.0:
        return 0.0
    c = control_constants(params)
    eye = np.eye(j)
    if c.case == "ii":
        s_phi = psi2_scalar(tau, -ks - c.gamma)
        big_phi = psi2_matrix(tau, C - c.gamma * eye)
    elif c.gamma * tau < _SMALL_GAMMA_TAU:
        if params.terminal_liquidation:
            s_phi = psi1_scalar(tau, -ks, 0.0)
            big_phi = psi1_matrix(tau, C, 0.0)
        else:
            m = params.a / (params.alpha - params.beta / 2.0)
            s_phi = (_ramp_integral_scalar(tau, -ks)
                     + m * psi2_scalar(tau, -ks)) / (tau + m)
            big_phi = (_ramp_integral_matrix(tau, C)
                       + m * psi2_matrix(tau, C)) / (tau + m)
    else:
        s_phi = psi1_scalar(tau, -ks, c.gamma, c.zeta)
        big_phi = psi1_matrix(tau, C, c.gamma, c.zeta)
    v = big_phi @ theta
    w = np.linalg.solve(C + ks * eye, v - s_phi * theta)
    return float(ks * (-F * s_phi + pi @ v - ks * (pi @ w)))


# ---------------------------------------------------------------------------
# trading rates
# ---------------------------------------------------------------------------

def optimal_speed(t: float, Q: float, h1_value: float, params: CostParams) -> float:
    """Feedback trading rate ``[(2 h2 + beta) Q + h1] / (2a)``.

    Under terminal liquidation the rate is singular at ``t = T``; callers
    stop at the last grid point before ``T`` and liquidate the remainder.
    """
    g = 2.0 * h2(t, params) + params.beta
    return (g * Q + h1_value) / (2.0 * params.a)


def ac_speed(t: float, Q: float, params: CostParams) -> float:
    """Alpha-blind baseline: the same feedback with ``h1 = 0``."""
    return optimal_speed(t, Q, 0.0, params)


def twap_speed(t: float, Q: float, T: float) -> float:
    """Uniform liquidation rate ``-Q / (T - t)``."""
    if not (0.0 <= t < T):
        raise ValueError("need 0 <= t < T")
    return -Q / (T - t)
