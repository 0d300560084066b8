"""Randomized problem instances for verification suites and tests.

Instances stay within the exact-oracle comfort zone (small m, d, n) and
always carry tight declared envelopes: the Hoeffding ranges are the
actual eigenvalue extremes of the centered observable, the Bernstein
proxies the actual second-moment norm and uniform norm cap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import FiniteChain, leon_perron, validate_chain
from .lift import ObservableSequence, make_observable


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    chain: FiniteChain
    obs: ObservableSequence
    kind: str  # "hoeffding" or "bernstein"


def random_chain(rng, m=None, m_max=4):
    """Irreducible aperiodic chain with entries bounded away from zero."""
    if m is None:
        m = int(rng.integers(2, m_max + 1))
    p = rng.uniform(0.05, 1.0, size=(m, m))
    p /= p.sum(axis=1, keepdims=True)
    return validate_chain(p)


def random_leon_perron(rng, m=None, m_max=4, lam=None, lam_max=0.85):
    if m is None:
        m = int(rng.integers(2, m_max + 1))
    pi = rng.uniform(0.2, 1.0, size=m)
    pi /= pi.sum()
    if lam is None:
        lam = float(rng.uniform(0.0, lam_max))
    return leon_perron(pi, lam)


def centered_blocks(rng, pi, d, scale=1.0):
    """Per-state symmetric matrices with exact pi-mean zero and top
    absolute eigenvalue equal to ``scale``."""
    m = len(pi)
    while True:
        raw = rng.normal(size=(m, d, d))
        blocks = 0.5 * (raw + raw.transpose(0, 2, 1))
        blocks -= np.einsum("x,xij->ij", pi, blocks)
        top = np.abs(np.linalg.eigvalsh(blocks)).max()
        if top > 1e-8:
            return blocks * (scale / top)


def _tight_range(blocks):
    eigs = np.linalg.eigvalsh(blocks)
    return float(eigs.min()), float(eigs.max())


def _tight_bernstein(pi, blocks):
    sq = np.einsum("x,xij,xjk->ik", pi, blocks, blocks)
    v = float(np.linalg.eigvalsh(sq)[-1])
    m_cap = float(np.abs(np.linalg.eigvalsh(blocks)).max())
    return v, m_cap


def random_hoeffding_instance(rng, m_max=4, d_max=3, n_max=8,
                              time_dependent=None, leon_perron_only=False):
    """Chain plus mean-zero observable with tight (a_j, b_j) ranges."""
    chn = random_leon_perron(rng, m_max=m_max) if leon_perron_only else random_chain(rng, m_max=m_max)
    d = int(rng.integers(1, d_max + 1))
    n = int(rng.integers(2, n_max + 1))
    if time_dependent is None:
        time_dependent = bool(rng.integers(0, 2))
    if time_dependent:
        values = np.stack([
            centered_blocks(rng, chn.pi, d, scale=float(rng.uniform(0.3, 1.5)))
            for _ in range(n)
        ])
        ranges = [_tight_range(values[j]) for j in range(n)]
    else:
        values = centered_blocks(rng, chn.pi, d, scale=float(rng.uniform(0.3, 1.5)))
        ranges = [_tight_range(values)] * n
    obs = make_observable(values, n=n, hoeffding_bounds=ranges)
    return ProblemInstance(chain=chn, obs=obs, kind="hoeffding")


def random_bernstein_instance(rng, m_max=4, d_max=3, n_max=8,
                              time_dependent=None, leon_perron_only=False):
    """Chain plus mean-zero observable with tight (V_j, M) proxies."""
    chn = random_leon_perron(rng, m_max=m_max) if leon_perron_only else random_chain(rng, m_max=m_max)
    d = int(rng.integers(1, d_max + 1))
    n = int(rng.integers(2, n_max + 1))
    if time_dependent is None:
        time_dependent = bool(rng.integers(0, 2))
    if time_dependent:
        values = np.stack([
            centered_blocks(rng, chn.pi, d, scale=float(rng.uniform(0.3, 1.5)))
            for _ in range(n)
        ])
        per = [_tight_bernstein(chn.pi, values[j]) for j in range(n)]
        variances = [v for v, _ in per]
        m_cap = max(mc for _, mc in per)
    else:
        values = centered_blocks(rng, chn.pi, d, scale=float(rng.uniform(0.3, 1.5)))
        v, m_cap = _tight_bernstein(chn.pi, values)
        variances = [v] * n
    obs = make_observable(values, n=n, bernstein_variances=variances,
                          bernstein_norm_bound=m_cap)
    return ProblemInstance(chain=chn, obs=obs, kind="bernstein")


def tiny_instance(rng, kind="hoeffding"):
    """Instance small enough for full path enumeration (m<=3, d<=2, n<=6)."""
    maker = random_hoeffding_instance if kind == "hoeffding" else random_bernstein_instance
    return maker(rng, m_max=3, d_max=2, n_max=6)
