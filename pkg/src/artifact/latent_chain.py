"""Finite-state continuous-time Markov chains: generators, sampling, lookup.

The hidden alpha regime is modelled as a continuous-time Markov chain on a
finite set of levels ``theta_1, ..., theta_J`` with intensity matrix ``C``
(rows sum to zero, off-diagonal entries are the jump intensities).  The
transition law over a horizon ``t`` is the matrix exponential ``e^{tC}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass
class LatentChainSpec:
    """Specification of the hidden regime chain.

    Parameters
    ----------
    theta : (J,) array_like
        Alpha level of each regime.
    generator : (J, J) array_like
        Intensity matrix. Rows must sum to zero and off-diagonal entries
        must be nonnegative.
    prior : (J,) array_like
        Initial distribution of the regime.
    """

    theta: np.ndarray
    generator: np.ndarray
    prior: np.ndarray

    def __post_init__(self):
        self.theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        self.generator = np.asarray(self.generator, dtype=float)
        self.prior = np.atleast_1d(np.asarray(self.prior, dtype=float))
        j = self.theta.size
        if self.generator.shape != (j, j):
            raise ValueError(
                f"generator must be ({j}, {j}) to match theta, got {self.generator.shape}")
        if self.prior.shape != (j,):
            raise ValueError(f"prior must have shape ({j},), got {self.prior.shape}")
        off_diag = self.generator[~np.eye(j, dtype=bool)]
        if off_diag.size and off_diag.min() < 0:
            raise ValueError("off-diagonal generator entries must be nonnegative")
        row_sums = np.abs(self.generator.sum(axis=1))
        if row_sums.size and row_sums.max() > 1e-10:
            raise ValueError("generator rows must sum to zero")
        if np.any(self.prior < 0) or abs(self.prior.sum() - 1.0) > 1e-10:
            raise ValueError("prior must be a probability vector")

    @property
    def n_states(self) -> int:
        return self.theta.size


def matrix_exponential(M, t=1.0):
    """Return ``e^{tM}`` for a square matrix ``M``.

    Uses scaling-and-squaring with Pade approximants (scipy.linalg.expm).
    ``t = 0`` returns the identity.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"M must be square, got shape {M.shape}")
    if t == 0.0:
        return np.eye(M.shape[0])
    return scipy.linalg.expm(M * t)


def transition_matrix(spec: LatentChainSpec, t: float) -> np.ndarray:
    """Transition law ``P(Z_t = j | Z_0 = i) = (e^{tC})_{i,j}``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return matrix_exponential(spec.generator, t)


@dataclass
class ChainPath:
    """A right-continuous piecewise-constant chain trajectory on ``[0, T]``.

    ``states[k]`` holds on ``[jump_times[k-1], jump_times[k])`` (with
    ``jump_times[-1]`` read as 0 and ``jump_times[m]`` as ``T``); consecutive
    states differ.
    """

    jump_times: np.ndarray  # (m,) strictly increasing, inside (0, T)
    states: np.ndarray      # (m + 1,) integer state indices
    T: float

    def __post_init__(self):
        self.jump_times = np.asarray(self.jump_times, dtype=float)
        self.states = np.asarray(self.states, dtype=int)
        if self.states.size != self.jump_times.size + 1:
            raise ValueError("states must have one more entry than jump_times")
        if self.jump_times.size:
            if np.any(np.diff(self.jump_times) <= 0):
                raise ValueError("jump_times must be strictly increasing")
            if self.jump_times[0] <= 0 or self.jump_times[-1] >= self.T:
                raise ValueError("jump_times must lie strictly inside (0, T)")
            if np.any(self.states[1:] == self.states[:-1]):
                raise ValueError("consecutive states must differ")

    @property
    def n_jumps(self) -> int:
        return self.jump_times.size

    def state_at(self, t):
        """State index at time ``t`` (right-continuous); scalar or array ``t``."""
        return state_at(self, t)


def state_at(path: ChainPath, t):
    """Right-continuous state lookup on a :class:`ChainPath`.

    Accepts a scalar or an array of times; raises for times outside
    ``[0, T]``.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > path.T):
        raise ValueError("t outside [0, T]")
    idx = np.searchsorted(path.jump_times, t_arr, side="right")
    out = path.states[idx]
    if np.isscalar(t) or t_arr.ndim == 0:
        return int(out)
    return out


def sample_chain_path(spec: LatentChainSpec, T: float, rng) -> ChainPath:
    """Draw one chain trajectory on ``[0, T]`` by Gillespie simulation.

    The initial state is drawn from ``spec.prior``; holding times are
    exponential with rate ``-C[j, j]`` and the next state is chosen with
    probabilities proportional to the off-diagonal intensities.  A zero
    row (absorbing state) ends the jumping.
    """
    if T < 0:
        raise ValueError("T must be nonnegative")
    C = spec.generator
    j = int(np.searchsorted(np.cumsum(spec.prior), rng.random() * spec.prior.sum()))
    j = min(j, spec.n_states - 1)
    times, states = [], [j]
    t = 0.0
    while True:
        rate = -C[j, j]
        if rate <= 0.0:
            break
        t += rng.exponential(1.0 / rate)
        if t >= T:
            break
        row = C[j].copy()
        row[j] = 0.0
        j = int(np.searchsorted(np.cumsum(row), rng.random() * rate))
        j = min(j, spec.n_states - 1)
        times.append(t)
        states.append(j)
    return ChainPath(np.array(times), np.array(states, dtype=int), T)


def levels_on_grid(path: ChainPath, spec: LatentChainSpec, times) -> np.ndarray:
    """Alpha levels ``theta[Z_t]`` evaluated on an array of times."""
    return spec.theta[state_at(path, np.asarray(times, dtype=float))]
