"""Lifted transfer-operator calculus on finite chains.

For an m-state chain and d x d symmetric observables, vector-valued
functions h: states -> C^(d^2) are stacked state-major into vectors of
length m*d^2, with the weighted inner product

    <f, g>_pi = sum_x pi_x <f(x), g(x)>.

Operators are explicit (m d^2) x (m d^2) matrices:

    P~  = P kron I_(d^2)            lifted kernel
    Pi~ = (1 pi^T) kron I_(d^2)     lifted stationary projector
    P^  = lam I + (1 - lam) Pi~     lifted Leon-Perron surrogate
    E_G = blockdiag(G(x))           multiplication (block-diagonal) operator

The per-state blocks used throughout are built from an observable F via

    H(x) = (e^(i phi)/2) F(x) kron I + (e^(-i phi)/2) I kron F(x)
    T(x) = (cos(phi)/2) (F(x) kron I + I kron F(x))

and exponentials of both factor through d x d spectral exponentials:
exp(theta T) = exp((theta cos phi / 2) F) kron itself, and
exp(theta H) = exp((theta e^(i phi)/2) F) kron its conjugate.

The noncommutative MGF

    E_pi || prod_j exp((theta e^(i phi) / 2) F_j(s_j)) ||_F^2

equals <1 kron vec(I), E_1 P~ E_2 P~ ... P~ E_n (1 kron vec(I))>_pi with
E_j multiplication by exp(theta H_j(x)); exact_mgf evaluates it by
applying the alternating block-diagonal and kernel factors to the
vector right to left, never forming the n-fold operator product.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import matcore
from .bounds import alpha
from .errors import NumericError, ValidationError

DEFAULT_SIZE_CAP = 4096
_MEAN_ZERO_TOL = 1e-10


# ---------------------------------------------------------------------------
# observables


@dataclass(frozen=True, eq=False)
class ObservableSequence:
    """Per-state symmetric matrices, optionally varying with time.

    ``values`` has shape (m, d, d) in time-independent mode or
    (n, m, d, d) in time-dependent mode.  Hoeffding ranges are pairs
    (a_j, b_j) with a_j I <= F_j(x) <= b_j I; Bernstein proxies are the
    per-step variance caps V_j >= ||E_pi[F_j^2]|| plus the uniform norm
    cap M >= ||F_j(x)||.
    """

    d: int
    n: int
    values: np.ndarray
    time_dependent: bool
    hoeffding_bounds: tuple | None = None     # ((a_1, b_1), ...) length n
    bernstein_variances: tuple | None = None  # (V_1, ...) length n
    bernstein_norm_bound: float | None = None

    @property
    def m(self):
        return self.values.shape[1] if self.time_dependent else self.values.shape[0]

    def at(self, j):
        """The (m, d, d) stack of matrices in effect at step j (0-based)."""
        return self.values[j] if self.time_dependent else self.values


def make_observable(values, n=None, hoeffding_bounds=None,
                    bernstein_variances=None, bernstein_norm_bound=None):
    """Build an ObservableSequence from an (m,d,d) or (n,m,d,d) array."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 3:
        if n is None:
            raise ValidationError("horizon n is required for a time-independent observable")
        time_dependent = False
        m, d, d2 = values.shape
    elif values.ndim == 4:
        time_dependent = True
        n_arr, m, d, d2 = values.shape
        if n is not None and n != n_arr:
            raise ValidationError(f"n = {n} disagrees with values horizon {n_arr}")
        n = n_arr
    else:
        raise ValidationError(f"observable values must be (m,d,d) or (n,m,d,d), got {values.shape}")
    if d != d2:
        raise ValidationError("observable matrices must be square")
    for idx in np.ndindex(values.shape[:-2]):
        values[idx] = matcore.check_symmetric(values[idx], name=f"observable{idx}")
    if hoeffding_bounds is not None:
        hoeffding_bounds = tuple((float(a), float(b)) for a, b in hoeffding_bounds)
        if len(hoeffding_bounds) != n:
            raise ValidationError("need one (a_j, b_j) pair per step")
    if bernstein_variances is not None:
        bernstein_variances = tuple(float(v) for v in bernstein_variances)
        if len(bernstein_variances) != n:
            raise ValidationError("need one variance proxy per step")
        if bernstein_norm_bound is None:
            raise ValidationError("variance proxies require the uniform norm bound M")
    return ObservableSequence(
        d=int(d), n=int(n), values=values, time_dependent=time_dependent,
        hoeffding_bounds=hoeffding_bounds,
        bernstein_variances=bernstein_variances,
        bernstein_norm_bound=None if bernstein_norm_bound is None else float(bernstein_norm_bound),
    )


def validate_observable(obs, pi):
    """Re-check the declared invariants of an observable against pi.

    Mean zero per step, declared eigenvalue ranges (by eigenvalue scan),
    and declared variance/norm proxies.  Raises ValidationError with the
    failing step and margin.
    """
    pi = np.asarray(pi, dtype=float)
    if len(pi) != obs.m:
        raise ValidationError(f"observable has {obs.m} states, pi has {len(pi)}")
    steps = range(obs.n) if obs.time_dependent else [0]
    for j in steps:
        blocks = obs.at(j)
        mean = np.einsum("x,xij->ij", pi, blocks)
        resid = np.abs(mean).max()
        if resid > _MEAN_ZERO_TOL:
            raise ValidationError(f"step {j}: observable is not mean zero (residual {resid:.3e})")
        eigs = np.linalg.eigvalsh(blocks)
        if obs.hoeffding_bounds is not None:
            a, b = obs.hoeffding_bounds[j if obs.time_dependent else 0]
            for jj in (range(obs.n) if not obs.time_dependent else [j]):
                a, b = obs.hoeffding_bounds[jj]
                lo, hi = eigs.min(), eigs.max()
                if lo < a - 1e-10 or hi > b + 1e-10:
                    raise ValidationError(
                        f"step {jj}: eigenvalues [{lo:.6g}, {hi:.6g}] escape declared range ({a}, {b})"
                    )
        if obs.bernstein_variances is not None:
            m_cap = obs.bernstein_norm_bound
            sq = np.einsum("x,xij,xjk->ik", pi, blocks, blocks)
            vnorm = float(np.linalg.eigvalsh(sq)[-1])
            for jj in (range(obs.n) if not obs.time_dependent else [j]):
                if vnorm > obs.bernstein_variances[jj] * (1.0 + 1e-10) + 1e-14:
                    raise ValidationError(
                        f"step {jj}: ||E[F^2]|| = {vnorm:.6g} exceeds proxy {obs.bernstein_variances[jj]}"
                    )
            norm_cap = float(np.abs(eigs).max())
            if norm_cap > m_cap * (1.0 + 1e-10):
                raise ValidationError(
                    f"step {j}: ||F(x)|| = {norm_cap:.6g} exceeds declared M = {m_cap}"
                )
    return obs


# ---------------------------------------------------------------------------
# per-state blocks


def build_H(f, phi):
    """(e^(i phi)/2) F kron I + (e^(-i phi)/2) I kron F, a d^2 x d^2
    complex matrix whose real and imaginary parts are each symmetric."""
    if not (-math.pi / 2 <= phi <= math.pi / 2):
        raise ValidationError("phi must lie in [-pi/2, pi/2]")
    f = matcore.check_symmetric(f)
    d = f.shape[0]
    eye = np.eye(d)
    zp = np.exp(1j * phi) / 2.0
    return zp * np.kron(f, eye) + np.conj(zp) * np.kron(eye, f)


def build_T(f, phi):
    """(cos(phi)/2) (F kron I + I kron F), real symmetric d^2 x d^2."""
    if not (-math.pi / 2 <= phi <= math.pi / 2):
        raise ValidationError("phi must lie in [-pi/2, pi/2]")
    f = matcore.check_symmetric(f)
    d = f.shape[0]
    eye = np.eye(d)
    return 0.5 * math.cos(phi) * (np.kron(f, eye) + np.kron(eye, f))


def t_blocks(values, phi):
    """Stack build_T over the (m, d, d) state axis -> (m, d^2, d^2)."""
    return np.stack([build_T(f, phi) for f in values])


def exp_T_blocks(values, theta, phi, half=False):
    """exp(theta T(x)) per state, via the d x d identity
    exp(A kron I + I kron A) = exp(A) kron exp(A)."""
    scale = 0.5 * theta * math.cos(phi) * (0.5 if half else 1.0)
    out = []
    for f in values:
        e = matcore.matrix_exp_sym(f, scale)
        out.append(np.kron(e, e))
    return np.stack(out)


def exp_H_blocks(values, theta, phi, half=False):
    """exp(theta H(x)) per state: exp(z F) kron exp(conj(z) F) with
    z = theta e^(i phi) / 2, through the real eigendecomposition of F."""
    z = 0.5 * theta * np.exp(1j * phi) * (0.5 if half else 1.0)
    out = []
    for f in values:
        e = matcore.matrix_exp_sym(f, z)
        out.append(np.kron(e, np.conj(e)))
    return np.stack(out)


@dataclass(frozen=True)
class TPropertyReport:
    """Margins for the inherited moment properties of T."""

    mean_norm: float          # ||E_pi[T]||, should be ~0
    bound_margin: float       # min over the two sides of the range transfer
    variance_margin: float    # cos^2(phi) V - ||E_pi[T^2]||
    passed: bool


def check_T_properties(values, pi, phi, a=None, b=None, v=None, tol=1e-10):
    """Verify E[T] = 0, the range transfer a cos(phi) I <= T <= b cos(phi) I,
    and ||E[T^2]|| <= cos^2(phi) V, reporting margins."""
    pi = np.asarray(pi, dtype=float)
    blocks = t_blocks(values, phi)
    c = math.cos(phi)
    mean = np.einsum("x,xij->ij", pi, blocks)
    mean_norm = float(np.abs(np.linalg.eigvalsh(0.5 * (mean + mean.T))).max())
    eigs = np.linalg.eigvalsh(blocks)
    if a is None or b is None:
        f_eigs = np.linalg.eigvalsh(np.asarray(values))
        a = float(f_eigs.min()) if a is None else a
        b = float(f_eigs.max()) if b is None else b
    bound_margin = float(min(eigs.min() - a * c, b * c - eigs.max()))
    if v is None:
        f_sq = np.einsum("x,xij,xjk->ik", pi, np.asarray(values), np.asarray(values))
        v = float(np.linalg.eigvalsh(f_sq)[-1])
    t_sq = np.einsum("x,xij,xjk->ik", pi, blocks, blocks)
    t_sq_norm = float(np.abs(np.linalg.eigvalsh(0.5 * (t_sq + t_sq.T))).max())
    variance_margin = float(c * c * v - t_sq_norm)
    passed = mean_norm <= tol and bound_margin >= -tol and variance_margin >= -tol
    return TPropertyReport(mean_norm, bound_margin, variance_margin, passed)


# ---------------------------------------------------------------------------
# lifted operators


@dataclass(frozen=True, eq=False)
class LiftedOperator:
    """Explicit matrix on the state-major lifted space of size m*d^2."""

    m: int
    d: int
    entries: np.ndarray


def _check_cap(m, d, cap):
    size = m * d * d
    if size > cap:
        raise ValidationError(
            f"lifted size m*d^2 = {size} exceeds cap {cap}; reduce the instance"
        )
    return size


def block_diag_operator(blocks):
    """Block-diagonal LiftedOperator from an (m, d^2, d^2) stack."""
    blocks = np.asarray(blocks)
    m, dd, _ = blocks.shape
    d = int(round(math.sqrt(dd)))
    if d * d != dd:
        raise ValidationError(f"blocks must be d^2 x d^2, got {dd}")
    out = np.zeros((m * dd, m * dd), dtype=blocks.dtype)
    for x in range(m):
        out[x * dd:(x + 1) * dd, x * dd:(x + 1) * dd] = blocks[x]
    return LiftedOperator(m=m, d=d, entries=out)


def lift_kernel(chn, d, cap=DEFAULT_SIZE_CAP):
    """P~ = P kron I_(d^2) and Pi~ = (1 pi^T) kron I_(d^2)."""
    _check_cap(chn.m, d, cap)
    eye = np.eye(d * d)
    p_t = LiftedOperator(chn.m, d, np.kron(chn.P, eye))
    pi_t = LiftedOperator(chn.m, d, np.kron(np.outer(np.ones(chn.m), chn.pi), eye))
    return p_t, pi_t


def leon_perron_lift(pi, lam, d, cap=DEFAULT_SIZE_CAP):
    """P^ = lam I + (1 - lam) Pi~ as an explicit lifted matrix."""
    pi = np.asarray(pi, dtype=float)
    m = len(pi)
    _check_cap(m, d, cap)
    eye = np.eye(d * d)
    pi_t = np.kron(np.outer(np.ones(m), pi), eye)
    return LiftedOperator(m, d, lam * np.eye(m * d * d) + (1.0 - lam) * pi_t)


def mult_operator(blocks, theta):
    """Block-diagonal operator with blocks exp(theta * T(x)).

    ``blocks`` is the (m, d^2, d^2) stack of symmetric exponents; each
    block is exponentiated spectrally via matrix_exp_sym.
    """
    blocks = np.asarray(blocks)
    exp_blocks = np.stack([matcore.matrix_exp_sym(t, theta) for t in blocks])
    return block_diag_operator(exp_blocks)


def sandwich(e_half, p_hat):
    """E^(theta/2) P^ E^(theta/2)* as a matrix product.

    The adjoint of a block-diagonal multiplication operator in the
    pi-weighted geometry is its blockwise conjugate transpose, which for
    a block-diagonal matrix coincides with the plain conjugate
    transpose.
    """
    if e_half.entries.shape != p_hat.entries.shape:
        raise ValidationError("sandwich operands must act on the same lifted space")
    ent = e_half.entries @ p_hat.entries @ e_half.entries.conj().T
    return LiftedOperator(e_half.m, e_half.d, ent)


def _weight_vector(pi, d):
    return np.repeat(np.sqrt(np.asarray(pi, dtype=float)), d * d)


def pi_weighted_matrix(op, pi):
    """Similarity D^(1/2) L D^(-1/2) that turns <.,.>_pi into the
    Euclidean inner product."""
    w = _weight_vector(pi, op.d)
    return (op.entries * w[:, None]) / w[None, :]


def pi_operator_norm(op, pi):
    """Operator norm on ell_2(pi kron 1): top singular value of the
    weighted similarity."""
    return float(np.linalg.svd(pi_weighted_matrix(op, pi), compute_uv=False)[0])


# ---------------------------------------------------------------------------
# exact MGF and spectral objects


def _apply_blocks(blocks, w):
    """w(x) <- block(x) @ w(x) for a state-major (m, d^2) array w."""
    return np.einsum("xij,xj->xi", blocks, w)


def exact_mgf(chn, obs, theta, phi=0.0, cap=DEFAULT_SIZE_CAP):
    """Exact value of E_pi ||prod_j exp((theta e^(i phi)/2) F_j(s_j))||_F^2.

    Applies E_n, then alternately P~ and E_j, to 1 kron vec(I), and
    closes with the pi-weighted inner product.  Cost O(n (m d^2)^2); the
    imaginary residue must stay below 1e-10 relative or a NumericError
    is raised.
    """
    if theta < 0.0:
        raise ValidationError("theta must be >= 0")
    if chn.m != obs.m:
        raise ValidationError(f"chain has {chn.m} states, observable {obs.m}")
    _check_cap(chn.m, obs.d, cap)
    d = obs.d
    if theta == 0.0:
        return float(d)  # every factor is the identity, ||I||_F^2 = d
    v0 = np.tile(matcore.vec(np.eye(d)), (chn.m, 1))  # (m, d^2), 1 kron vec(I)

    complex_path = phi != 0.0
    maker = exp_H_blocks if complex_path else exp_T_blocks

    if obs.time_dependent:
        blocks_at = [maker(obs.at(j), theta, phi) for j in range(obs.n)]
    else:
        shared = maker(obs.at(0), theta, phi)
        blocks_at = [shared] * obs.n

    w = _apply_blocks(blocks_at[obs.n - 1], v0.astype(blocks_at[0].dtype))
    for j in range(obs.n - 2, -1, -1):
        w = chn.P @ w                      # (P~ w)(x) = sum_y P[x, y] w(y)
        w = _apply_blocks(blocks_at[j], w)
        if not np.all(np.isfinite(w)):
            raise NumericError(f"exact MGF overflow at step {j} (theta = {theta})")
    val = np.einsum("x,xi,xi->", chn.pi, v0, w)
    if complex_path:
        scale = max(1.0, abs(val.real))
        if abs(val.imag) > 1e-10 * scale:
            raise NumericError(f"imaginary residual {val.imag:.3e} exceeds tolerance")
        return float(val.real)
    return float(val)


@dataclass(frozen=True)
class SpectralReport:
    """Leading eigenvalue of a sandwich with its essential-radius floor."""

    leading_eigenvalue: float
    essential_radius_bound: float
    eigenfunction: np.ndarray | None = None


def leading_eigenvalue_sandwich(chn, blocks, theta, cap=DEFAULT_SIZE_CAP):
    """Top eigenvalue of E_T^(theta/2) P^ E_T^(theta/2).

    P^ is the lifted Leon-Perron surrogate built from (pi, lambda) of
    the chain; ``blocks`` is the (m, d^2, d^2) stack of symmetric
    exponents T(x).  The pi-weighted similarity of the sandwich must be
    symmetric to roundoff; its top eigenpair is returned along with the
    block-diagonal part's norm lam * exp(theta * max_x lmax(T(x))),
    below which the leading eigenvalue cannot sink.
    """
    blocks = np.asarray(blocks)
    m, dd, _ = blocks.shape
    d = int(round(math.sqrt(dd)))
    _check_cap(m, d, cap)
    p_hat = leon_perron_lift(chn.pi, chn.lam, d, cap=cap)
    e_half = mult_operator(blocks, theta / 2.0)
    s = sandwich(e_half, p_hat)
    sym = pi_weighted_matrix(s, chn.pi)
    scale = max(1.0, np.abs(sym).max())
    resid = np.abs(sym - sym.T).max()
    if resid > 1e-8 * scale:
        raise NumericError(f"sandwich symmetrization residual {resid:.3e}")
    sym = 0.5 * (sym + sym.T)
    w, v = np.linalg.eigh(sym)
    rho = float(w[-1])
    top_t = float(np.linalg.eigvalsh(blocks)[:, -1].max())
    ess = chn.lam * math.exp(theta * top_t)
    weight = _weight_vector(chn.pi, d)
    eigenfunction = v[:, -1] / weight
    return SpectralReport(rho, ess, eigenfunction)


def f_of_r(r, pi, lam, blocks, theta):
    """Fixed-point matrix of the resolvent characterization.

    F(r) = sum_x pi_x (1-lam) e^(theta T(x)/2) (r I - lam e^(theta T(x)))^(-1)
           e^(theta T(x)/2),

    assembled per state from the eigendecomposition of T(x); requires
    r > lam * exp(theta * lmax(T(x))) for every x.
    """
    pi = np.asarray(pi, dtype=float)
    blocks = np.asarray(blocks)
    dd = blocks.shape[1]
    out = np.zeros((dd, dd))
    for x, t in enumerate(blocks):
        w, u = np.linalg.eigh(0.5 * (t + t.T))
        e = np.exp(theta * w)
        gaps = r - lam * e
        if np.any(gaps <= 0.0):
            raise ValidationError(
                f"r = {r} does not dominate lam*exp(theta T) at state {x}"
            )
        out += pi[x] * (u * ((1.0 - lam) * e / gaps)) @ u.T
    return 0.5 * (out + out.T)


def root_rstar(pi, lam, blocks, theta, tol=1e-10, cap=DEFAULT_SIZE_CAP):
    """Largest r with lmax(F(r)) = 1, by bisection.

    lmax(F(r)) decreases strictly in r (every summand is matrix
    decreasing), so the root is unique in (lam e^(theta b), e^(theta b)]
    with b = max_x lmax(T(x)).  At lam = 0 the root is available in
    closed form as lmax(E_pi[e^(theta T)]).
    """
    pi = np.asarray(pi, dtype=float)
    blocks = np.asarray(blocks)
    m, dd, _ = blocks.shape
    _check_cap(m, int(round(math.sqrt(dd))), cap)
    top_t = float(np.linalg.eigvalsh(blocks)[:, -1].max())
    if theta * top_t > matcore.EXP_LIMIT:
        raise NumericError(f"resolvent overflow: exponent {theta * top_t:.6g}")
    if lam == 0.0:
        mean = np.einsum("x,xij->ij", pi, np.stack(
            [matcore.matrix_exp_sym(t, theta) for t in blocks]))
        return float(np.linalg.eigvalsh(0.5 * (mean + mean.T))[-1])

    def g(r):
        return float(np.linalg.eigvalsh(f_of_r(r, pi, lam, blocks, theta))[-1]) - 1.0

    lo = lam * math.exp(theta * top_t) * (1.0 + 1e-9)
    hi = math.exp(theta * top_t) * 10.0
    if g(lo) <= 0.0 or g(hi) >= 0.0:
        raise NumericError(
            f"no sign change bracketed for the fixed-point root on ({lo:.6g}, {hi:.6g}]"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# two-state objects


def k_theta(a, b, lam, theta, phi=0.0):
    """Weighted two-state matrix K^theta and its top eigenvalue eta.

    K^theta = D Q D with D = diag(e^(theta a'/2), e^(theta b'/2)),
    a' = a cos(phi), b' = b cos(phi), and Q the envelope chain
    lam I + (1-lam) 1 mu^T, mu = (b/(b-a), -a/(b-a)).  eta is the larger
    root of

        eta^2 - (1+lam) [(1-p) e^(theta a') + p e^(theta b')] eta
              + lam e^(theta (a'+b')) = 0,
        p = (lam + (1-lam) mu_1) / (1+lam),

    evaluated in the cancellation-free form (tr + sqrt(tr^2 - 4 det))/2.
    """
    if not (a <= 0.0 <= b) or not (a < b):
        raise ValidationError(f"need a <= 0 <= b with a < b, got ({a}, {b})")
    if not (0.0 <= lam < 1.0):
        raise ValidationError(f"lambda must be in [0, 1), got {lam}")
    c = math.cos(phi)
    ac, bc = a * c, b * c
    mu = np.array([b / (b - a), -a / (b - a)])
    q = lam * np.eye(2) + (1.0 - lam) * np.outer(np.ones(2), mu)
    dg = np.diag([math.exp(0.5 * theta * ac), math.exp(0.5 * theta * bc)])
    k = dg @ q @ dg
    p = (lam + (1.0 - lam) * mu[1]) / (1.0 + lam)
    tr = (1.0 + lam) * ((1.0 - p) * math.exp(theta * ac) + p * math.exp(theta * bc))
    det = lam * math.exp(theta * (ac + bc))
    disc = max(tr * tr - 4.0 * det, 0.0)
    eta = 0.5 * (tr + math.sqrt(disc))
    return k, eta


def eta_tilde(a, b, lam, theta, phi=0.0):
    """Sub-Gaussian envelope exp(alpha(lam) theta^2 cos^2(phi) (b-a)^2 / 8)
    dominating the two-state eigenvalue eta."""
    c = math.cos(phi)
    return math.exp(alpha(lam) * (theta * c * (b - a)) ** 2 / 8.0)
