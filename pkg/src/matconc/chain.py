"""Finite-state Markov chains.

Validation, stationary distribution, the absolute spectral gap in the
pi-weighted geometry, Leon-Perron surrogate kernels, the two-state
envelope chain used by the Hoeffding analysis, and seeded trajectory
sampling.

The gap parameter is

    lambda(P) = ||P - Pi||_pi   with   Pi = 1 pi^T,

computed as the largest singular value of D^{1/2} (P - Pi) D^{-1/2}
where D = diag(pi).  This equals the operator norm on mean-zero
functions of ell_2(pi) and is valid for nonreversible kernels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_ROW_SUM_TOL = 1e-12
_STATIONARY_TOL = 1e-10
_UNIT_EIG_TOL = 1e-9


def rng_for(seed, *key):
    """Deterministic generator for (seed, key...).

    Batch work derives one generator per chunk as rng_for(seed, k), so
    results do not depend on scheduling order.
    """
    seed = int(seed)
    if seed < 0:
        raise ValidationError("seed must be a nonnegative 64-bit integer")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


@dataclass(frozen=True, eq=False)
class FiniteChain:
    """Validated transition kernel with stationary law and gap parameter."""

    m: int
    P: np.ndarray       # (m, m) row-stochastic
    pi: np.ndarray      # (m,) strictly positive, sums to 1
    lam: float          # lambda(P) in [0, 1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    states: np.ndarray  # (n,) int indices
    seed: int
    initial: str        # "stationary" or "custom"


def _check_stochastic(p):
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValidationError(f"transition matrix must be square, got {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValidationError("transition matrix has non-finite entries")
    if p.min() < -1e-15:
        raise ValidationError(f"transition matrix has negative entry {p.min():.3e}")
    rows = p.sum(axis=1)
    worst = np.abs(rows - 1.0).max()
    if worst > _ROW_SUM_TOL:
        raise ValidationError(f"rows must sum to 1 (residual {worst:.3e})")
    return np.clip(p, 0.0, None)


def _power_iteration_pi(p, iters=1_000_000, tol=1e-14):
    m = p.shape[0]
    x = np.full(m, 1.0 / m)
    for _ in range(iters):
        y = x @ p
        y /= y.sum()
        if np.abs(y - x).max() < tol:
            return y
        x = y
    return x


def stationary_distribution(p):
    """Unique positive stationary vector of a row-stochastic matrix.

    Solved by eigendecomposition of P^T with a power-iteration fallback.
    A unit eigenvalue that is not simple (within 1e-9), or a stationary
    vector with a nonpositive entry, is rejected: the pi-weighted inner
    product needs full support.
    """
    p = _check_stochastic(p)
    m = p.shape[0]
    if m == 1:
        return np.array([1.0])
    try:
        w, v = np.linalg.eig(p.T)
        unit = np.flatnonzero(np.abs(w - 1.0) < _UNIT_EIG_TOL)
        if len(unit) != 1:
            raise ValidationError(
                f"no unique stationary distribution: {len(unit)} unit eigenvalues"
            )
        vec = v[:, unit[0]]
        # rotate away a global complex phase, then require real content
        k = np.argmax(np.abs(vec))
        vec = vec * np.exp(-1j * np.angle(vec[k])) if np.iscomplexobj(vec) else vec
        if np.abs(np.imag(vec)).max() > 1e-10:
            raise ValidationError("stationary eigenvector is not real")
        pi = np.real(vec)
        pi = pi / pi.sum()
    except np.linalg.LinAlgError:
        pi = _power_iteration_pi(p)
    if pi.min() <= 1e-12:
        raise ValidationError(f"stationary distribution not strictly positive (min {pi.min():.3e})")
    resid = np.abs(pi @ p - pi).max()
    if resid > _STATIONARY_TOL:
        raise ValidationError(f"stationary residual {resid:.3e} exceeds tolerance")
    return pi


def absolute_spectral_gap(p, pi):
    """Gap parameter lambda(P) = ||P - 1 pi^T||_pi.

    Largest singular value of D^{1/2} (P - 1 pi^T) D^{-1/2}; correct for
    nonreversible kernels, where eigenvalue moduli would understate the
    norm.
    """
    p = np.asarray(p, dtype=float)
    pi = np.asarray(pi, dtype=float)
    dev = p - np.outer(np.ones(p.shape[0]), pi)
    root = np.sqrt(pi)
    weighted = (root[:, None] * dev) / root[None, :]
    if weighted.shape[0] == 1:
        return 0.0
    return float(np.linalg.svd(weighted, compute_uv=False)[0])


def validate_chain(p):
    """Validate a transition matrix and package it with pi and lambda."""
    p = _check_stochastic(p)
    pi = stationary_distribution(p)
    lam = absolute_spectral_gap(p, pi)
    if lam >= 1.0 - 1e-10:
        raise ValidationError(f"chain has no spectral gap (lambda = {lam:.12g})")
    return FiniteChain(m=p.shape[0], P=p, pi=pi, lam=lam)


def _check_probability_vector(v, name="distribution", positive=False):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValidationError(f"{name} must be a vector")
    if not np.all(np.isfinite(v)) or v.min() < -1e-15:
        raise ValidationError(f"{name} must be nonnegative and finite")
    if abs(v.sum() - 1.0) > 1e-9:
        raise ValidationError(f"{name} must sum to 1 (got {v.sum():.12g})")
    v = np.clip(v, 0.0, None)
    if positive and v.min() <= 0.0:
        raise ValidationError(f"{name} must be strictly positive")
    return v / v.sum()


def leon_perron(pi, c):
    """Chain that holds with probability c and resamples from pi otherwise.

    P = c I + (1 - c) 1 pi^T.  Its gap parameter equals c.
    """
    pi = _check_probability_vector(pi, "pi", positive=True)
    if not (0.0 <= c < 1.0):
        raise ValidationError(f"hold probability must be in [0, 1), got {c}")
    m = len(pi)
    p = c * np.eye(m) + (1.0 - c) * np.outer(np.ones(m), pi)
    return FiniteChain(m=m, P=p, pi=pi, lam=absolute_spectral_gap(p, pi))


def two_state_hoeffding_chain(a, b, lam):
    """Two-state envelope chain for matrices squeezed between aI and bI.

    State 0 carries the value a, state 1 the value b.  The stationary
    law mu = (b/(b-a), -a/(b-a)) makes the carried value mean zero, and
    Q = lam I + (1-lam) 1 mu^T.  Requires a < 0 < b so mu is strictly
    positive (a mean-zero nonzero observable forces this anyway).
    """
    if not (a < 0.0 < b):
        raise ValidationError(f"need a < 0 < b for a mean-zero envelope, got a={a}, b={b}")
    if not (0.0 <= lam < 1.0):
        raise ValidationError(f"lambda must be in [0, 1), got {lam}")
    mu = np.array([b / (b - a), -a / (b - a)])
    return leon_perron(mu, lam), mu


def _resolve_initial(chain, initial):
    if isinstance(initial, str):
        if initial != "stationary":
            raise ValidationError(f"unknown initial distribution tag {initial!r}")
        return chain.pi, "stationary"
    nu = _check_probability_vector(initial, "initial distribution")
    if len(nu) != chain.m:
        raise ValidationError(f"initial distribution has length {len(nu)}, chain has {chain.m} states")
    return nu, "custom"


def _cumulative(p):
    cum = np.cumsum(p, axis=-1)
    cum[..., -1] = 1.0
    return cum


def sample_trajectory(chain, n, seed, initial="stationary"):
    """One seeded path: s_1 ~ initial, s_{k+1} ~ P(s_k, .)."""
    if n < 1:
        raise ValidationError("trajectory length must be >= 1")
    nu, tag = _resolve_initial(chain, initial)
    rng = rng_for(seed)
    cum_p = _cumulative(chain.P)
    cum_nu = _cumulative(nu[None, :])[0]
    states = np.empty(n, dtype=np.int64)
    states[0] = np.searchsorted(cum_nu, rng.random(), side="right")
    for k in range(1, n):
        states[k] = np.searchsorted(cum_p[states[k - 1]], rng.random(), side="right")
    np.clip(states, 0, chain.m - 1, out=states)
    return Trajectory(states=states, seed=int(seed), initial=tag)


def sample_trajectory_batch(chain, n, trials, seed, initial="stationary"):
    """(trials, n) matrix of paths from a single derived generator.

    All randomness for the batch is drawn up front in a fixed order, so
    the result depends only on (chain, n, trials, seed, initial).
    """
    nu, _ = _resolve_initial(chain, initial)
    rng = rng_for(seed)
    cum_p = _cumulative(chain.P)
    cum_nu = _cumulative(nu[None, :])[0]
    u = rng.random((trials, n))
    states = np.empty((trials, n), dtype=np.int64)
    states[:, 0] = np.searchsorted(cum_nu, u[:, 0], side="right")
    for k in range(1, n):
        rows = cum_p[states[:, k - 1]]
        states[:, k] = (u[:, k][:, None] >= rows).sum(axis=1)
    np.clip(states, 0, chain.m - 1, out=states)
    return states


def leon_perron_coupled_batch(pi, lam, n, trials, seed):
    """Renewal representation of Leon-Perron paths.

    Draws indicators I_1 = 1, I_j ~ Bernoulli(1 - lam) and fresh states
    Z_j ~ pi, and sets s_k = Z_j for the most recent j <= k with I_j = 1.
    Returns (indicators, draws, renewal_index, states); the indicators
    are reusable for coupling a second chain on the same renewals.
    """
    pi = _check_probability_vector(pi, "pi", positive=True)
    if not (0.0 <= lam < 1.0):
        raise ValidationError(f"lambda must be in [0, 1), got {lam}")
    rng = rng_for(seed)
    ind = np.empty((trials, n), dtype=bool)
    ind[:, 0] = True
    if n > 1:
        ind[:, 1:] = rng.random((trials, n - 1)) < (1.0 - lam)
    cum = _cumulative(pi[None, :])[0]
    draws = np.searchsorted(cum, rng.random((trials, n)), side="right")
    np.clip(draws, 0, len(pi) - 1, out=draws)
    steps = np.arange(n, dtype=np.int64)[None, :]
    renewal = np.maximum.accumulate(np.where(ind, steps, -1), axis=1)
    states = np.take_along_axis(draws, renewal, axis=1)
    return ind, draws, renewal, states


def leon_perron_coupled_sample(pi, lam, n, seed):
    """Single path via the renewal construction; distributionally equal
    to sample_trajectory on leon_perron(pi, lam)."""
    _, _, _, states = leon_perron_coupled_batch(pi, lam, n, 1, seed)
    return Trajectory(states=states[0], seed=int(seed), initial="stationary")


def radon_nikodym_norm(nu, pi, p):
    """(sum_x pi_x |nu_x / pi_x|^p)^(1/p), the pi-weighted p-norm of dnu/dpi."""
    if p < 1:
        raise ValidationError(f"order p must be >= 1, got {p}")
    nu = _check_probability_vector(nu, "nu")
    pi = _check_probability_vector(pi, "pi", positive=True)
    if len(nu) != len(pi):
        raise ValidationError("nu and pi must have equal length")
    ratio = nu / pi
    return float(np.sum(pi * np.abs(ratio) ** p) ** (1.0 / p))
