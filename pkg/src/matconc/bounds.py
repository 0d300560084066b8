"""Closed-form moment-generating-function and tail bounds.

Implements the bound family for the largest eigenvalue of a sum of
mean-zero matrix-valued functions along a chain with gap parameter
lambda, together with the Chernoff pipeline that converts any MGF
envelope into a tail bound:

    Pr(lmax >= t) <= inf_theta d^(1-pi/4) exp(-theta t) M(4 theta / pi).

Formula ids used in reports:

    alpha                 (1+lam)/(1-lam)
    beta                  4/(3 pi) at lam=0, else (8/pi)/(1-lam)
    hoeffding-mgf         d exp(theta^2 alpha sum (b_j-a_j)^2 / 8)
    hoeffding-tail        d^(2-pi/4) exp(-t^2 / (8 alpha S / pi^2))
    bernstein-mgf         d exp((s2/M^2)(e^(Mt)-Mt-1) + (s2/M^2) lam (e^(Mt)-1)^2/(1-lam e^(Mt)))
    bernstein-tail        d^(2-pi/4) exp(-(t^2 pi^2/32) / (alpha s2 + beta M t))
    chernoff-pipeline     numeric infimum of the display above
    complex-embedding     multiply by 2 (Hermitian input, real 2d embedding)
    nonstationary-factor  multiply by ||dnu/dpi||_{pi,p}

Two domain notes that surface as warnings wherever the code paths run:
the Bernstein MGF bound needs lam * exp(M theta) < 1, i.e.
theta < log(1/lam)/M (a domain printed as log(1-lam)/M elsewhere is
negative and cannot be meant); and the Bernstein tail exponent must be
negative, since it comes from exp(-theta t) times an MGF envelope.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .chain import radon_nikodym_norm
from .errors import NumericError, ValidationError

_PI = math.pi
_L = 4.0 / _PI  # exponent rescale constant of the Chernoff pipeline

WARN_BERNSTEIN_DOMAIN = (
    "bernstein-domain: MGF bound requires lam*exp(M*theta) < 1, i.e. "
    "theta < log(1/lam)/M; the variant domain log(1-lam)/M is negative "
    "and is rejected as a misprint"
)
WARN_BERNSTEIN_SIGN = (
    "bernstein-tail-sign: exponent implemented as negative; a positive "
    "exponent would exceed probability 1 and contradict the Chernoff "
    "derivation"
)
WARN_ALPHA1_FORM = (
    "bernstein-alpha1: parallel coefficient uses 1 + V*(exp(M*theta)-M*theta-1)/M^2; "
    "the variant expression exp(M*theta)-M-theta-1 is dimensionally "
    "inconsistent and is rejected as a misprint"
)
WARN_NONSTATIONARY_HOELDER = (
    "nonstationary-factor: applied as a plain multiplicative factor "
    "||dnu/dpi||_{pi,p}; the underlying Hoelder step actually yields "
    "||dnu/dpi||_{pi,p} * E_pi[H^q]^(1/q) with q = p/(p-1), which "
    "rescales theta inside the MGF bound"
)
WARN_BETA_BRANCH = (
    "beta-branch: beta(lam) is discontinuous at lam = 0 "
    "(4/(3 pi) at lam=0 versus (8/pi)/(1-lam) for lam>0)"
)


@dataclass(frozen=True)
class HoeffdingParams:
    """Dimension, gap parameter, and per-step eigenvalue ranges (a_j, b_j)."""

    d: int
    lam: float
    ranges: tuple  # ((a_1, b_1), ..., (a_n, b_n))

    def __post_init__(self):
        if self.d < 1:
            raise ValidationError("dimension must be >= 1")
        if not (0.0 <= self.lam < 1.0):
            raise ValidationError(f"lambda must be in [0, 1), got {self.lam}")
        for j, (a, b) in enumerate(self.ranges):
            if not (a <= 0.0 <= b) or not (a < b):
                raise ValidationError(
                    f"range {j}: need a <= 0 <= b with a < b, got ({a}, {b})"
                )

    @property
    def sum_sq_widths(self):
        return float(sum((b - a) ** 2 for a, b in self.ranges))


@dataclass(frozen=True)
class BernsteinParams:
    """Dimension, gap parameter, per-step variance proxies, and norm cap M."""

    d: int
    lam: float
    variances: tuple
    M: float
    sigma_sq: float = field(init=False)

    def __post_init__(self):
        if self.d < 1:
            raise ValidationError("dimension must be >= 1")
        if not (0.0 <= self.lam < 1.0):
            raise ValidationError(f"lambda must be in [0, 1), got {self.lam}")
        if self.M <= 0.0:
            raise ValidationError("norm bound M must be positive")
        for j, v in enumerate(self.variances):
            if v < 0.0:
                raise ValidationError(f"variance proxy {j} is negative")
            if v > self.M**2 * (1.0 + 1e-12):
                raise ValidationError(
                    f"variance proxy {j} = {v} exceeds M^2 = {self.M**2}"
                )
        object.__setattr__(self, "sigma_sq", float(sum(self.variances)))


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound with its Chernoff parameter and provenance."""

    value: float
    theta_used: float
    theta_domain: tuple  # (low, high)
    formula_id: str
    multiplicative_corrections: tuple = ()
    warnings: tuple = ()


def alpha(lam):
    """(1 + lam) / (1 - lam): variance inflation of the chain."""
    if not (0.0 <= lam < 1.0):
        raise ValidationError(f"lambda must be in [0, 1), got {lam}")
    return (1.0 + lam) / (1.0 - lam)


def beta(lam):
    """Linear-term coefficient of the Bernstein tail denominator.

    4/(3 pi) in the independent case lam = 0, else (8/pi)/(1 - lam);
    the two branches do not meet at lam -> 0+.
    """
    if not (0.0 <= lam < 1.0):
        raise ValidationError(f"lambda must be in [0, 1), got {lam}")
    if lam == 0.0:
        return 4.0 / (3.0 * _PI)
    return (8.0 / _PI) / (1.0 - lam)


def hoeffding_mgf_bound(p: HoeffdingParams, theta):
    """d * exp((theta^2/2) * alpha(lam) * sum (b_j - a_j)^2 / 4)."""
    expo = 0.5 * theta**2 * alpha(p.lam) * p.sum_sq_widths / 4.0
    if expo > 700.0 + math.log(max(p.d, 1)):
        raise NumericError(f"hoeffding MGF bound overflow: exponent {expo:.6g}")
    return p.d * math.exp(expo)


def hoeffding_tail_bound(p: HoeffdingParams, t):
    """Closed-form tail bound d^(2-pi/4) exp(-t^2 / (8 alpha(lam) S / pi^2)).

    theta_used is the optimizer of the underlying quadratic exponent,
    t pi^2 / (4 alpha(lam) S) with S = sum (b_j - a_j)^2.
    """
    prefactor = p.d ** (2.0 - _PI / 4.0)
    s = p.sum_sq_widths
    if t <= 0.0:
        return BoundReport(prefactor, 0.0, (0.0, math.inf), "hoeffding-tail")
    if s == 0.0:
        return BoundReport(0.0, math.inf, (0.0, math.inf), "hoeffding-tail")
    a = alpha(p.lam)
    value = prefactor * math.exp(-(t**2) / (8.0 * a * s / _PI**2))
    theta_star = t * _PI**2 / (4.0 * a * s)
    return BoundReport(value, theta_star, (0.0, math.inf), "hoeffding-tail")


def bernstein_theta_max(lam, M):
    """Upper end of the admissible theta domain, log(1/lam)/M (inf at lam=0)."""
    if lam == 0.0:
        return math.inf
    return math.log(1.0 / lam) / M


def bernstein_mgf_bound(p: BernsteinParams, theta):
    """MGF envelope under variance proxies.

    d * exp((s2/M^2) (e^(M theta) - M theta - 1)
            + (s2/M^2) lam (e^(M theta) - 1)^2 / (1 - lam e^(M theta)))

    valid for 0 < theta < log(1/lam)/M.
    """
    tmax = bernstein_theta_max(p.lam, p.M)
    if not (0.0 <= theta < tmax):
        raise ValidationError(
            f"theta = {theta} outside admissible domain [0, {tmax}) = [0, log(1/lam)/M)"
        )
    mt = p.M * theta
    emt = math.exp(mt)
    base = emt - mt - 1.0
    markov = p.lam * (emt - 1.0) ** 2 / (1.0 - p.lam * emt)
    expo = (p.sigma_sq / p.M**2) * (base + markov)
    if expo > 700.0 + math.log(max(p.d, 1)):
        raise NumericError(f"bernstein MGF bound overflow: exponent {expo:.6g}")
    return p.d * math.exp(expo)


def bernstein_tail_bound(p: BernsteinParams, t):
    """Closed-form tail bound
    d^(2-pi/4) exp(-(t^2 pi^2 / 32) / (alpha(lam) s2 + beta(lam) M t)).

    The implied Chernoff parameter t / (L^2 (alpha s2 + beta M t)) with
    L = 4/pi always lies inside the admissible window
    theta < (1 - lam) / (2 L M).
    """
    prefactor = p.d ** (2.0 - _PI / 4.0)
    warnings = (WARN_BERNSTEIN_SIGN,) + ((WARN_BETA_BRANCH,) if p.lam == 0.0 else ())
    theta_hi = (1.0 - p.lam) / (2.0 * _L * p.M)
    if t <= 0.0:
        return BoundReport(prefactor, 0.0, (0.0, theta_hi), "bernstein-tail", warnings=warnings)
    denom = alpha(p.lam) * p.sigma_sq + beta(p.lam) * p.M * t
    if denom == 0.0:
        return BoundReport(0.0, theta_hi, (0.0, theta_hi), "bernstein-tail", warnings=warnings)
    value = prefactor * math.exp(-(t**2) / (2.0 * _L**2 * denom))
    theta_star = t / (_L**2 * denom)
    return BoundReport(value, theta_star, (0.0, theta_hi), "bernstein-tail", warnings=warnings)


def bernstein_alphas(v, m, theta):
    """Step coefficients of the recursive norm bound.

    alpha1 = 1 + v (e^(m theta) - m theta - 1) / m^2   (parallel -> parallel)
    alpha2 = sqrt(v) (e^(m theta) - 1) / m             (cross terms)
    alpha3 = e^(m theta)                               (perp -> perp)
    """
    if theta < 0.0:
        raise ValidationError("theta must be >= 0")
    if m <= 0.0:
        raise ValidationError("norm bound M must be positive")
    if v < 0.0:
        raise ValidationError("variance proxy must be >= 0")
    emt = math.exp(m * theta)
    a1 = 1.0 + v * (emt - m * theta - 1.0) / m**2
    a2 = math.sqrt(v) * (emt - 1.0) / m
    a3 = emt
    return a1, a2, a3


def recursive_norm_bound(v, m, lam, theta, n):
    """(alpha1 + lam alpha2^2 / (1 - lam alpha3))^n.

    Bounds the pi-norm of the projected n-step evolution
    Pi~ (P^ E_T^theta)^n Pi~; requires lam * alpha3 < 1.
    """
    a1, a2, a3 = bernstein_alphas(v, m, theta)
    if lam * a3 >= 1.0:
        raise ValidationError(
            f"lam * exp(M theta) = {lam * a3:.6g} >= 1: theta outside log(1/lam)/M domain"
        )
    return (a1 + lam * a2**2 / (1.0 - lam * a3)) ** n


def conjugate_h1(x):
    """(1 + x) log(1 + x) - x, the Bennett conjugate."""
    if x < 0.0:
        raise ValidationError("h1 domain is x >= 0")
    if x == 0.0:
        return 0.0
    return (1.0 + x) * math.log1p(x) - x


def conjugate_h2(x):
    """1 / (sqrt(1 + x) + x/2 + 1), the Markov-term conjugate factor."""
    if x < 0.0:
        raise ValidationError("h2 domain is x >= 0")
    return 1.0 / (math.sqrt(1.0 + x) + 0.5 * x + 1.0)


def conjugate_bound(sigma_sq, lam, L, t):
    """Lower bound on the combined convex conjugate at t.

    t^2 / (2 L^2 (alpha(lam) sigma^2 + 2 L t / (1 - lam)))  for lam > 0,
    t^2 / (2 L^2 (sigma^2 + L t / 3))                       for lam = 0.
    """
    if t < 0.0 or L <= 0.0:
        raise ValidationError("need t >= 0 and L > 0")
    if not (0.0 <= lam < 1.0):
        raise ValidationError(f"lambda must be in [0, 1), got {lam}")
    if t == 0.0:
        return 0.0
    if lam == 0.0:
        return t**2 / (2.0 * L**2 * (sigma_sq + L * t / 3.0))
    return t**2 / (2.0 * L**2 * (alpha(lam) * sigma_sq + 2.0 * L * t / (1.0 - lam)))


def _golden_section_min(f, lo, hi, tol=1e-10, maxiter=200):
    """Golden-section minimum of a unimodal f on [lo, hi]."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if b - a < tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    x = c if fc <= fd else d
    return x, min(fc, fd)


def gt_tail_pipeline(mgf_bound_fn, d, t, theta_max=None):
    """Numeric Chernoff bound from any phi-independent MGF envelope.

    Returns inf over admissible theta of

        d^(1 - pi/4) * exp(-theta t) * M(4 theta / pi),

    where mgf_bound_fn(theta') evaluates the envelope M (including its
    own dimensional factor).  theta_max, when given, restricts theta so
    that 4 theta / pi stays inside the envelope's domain.
    """
    if theta_max is not None and theta_max <= 0.0:
        raise ValidationError("empty admissible theta interval")
    prefactor = (1.0 - _PI / 4.0) * math.log(max(d, 1))

    def objective(theta):
        try:
            val = mgf_bound_fn(_L * theta)
        except (NumericError, ValidationError, OverflowError):
            return math.inf
        if not np.isfinite(val) or val <= 0.0:
            return math.inf
        return prefactor - theta * t + math.log(val)

    if t <= 0.0:
        return BoundReport(
            math.exp(objective(0.0)), 0.0,
            (0.0, theta_max if theta_max is not None else math.inf),
            "chernoff-pipeline",
        )

    if theta_max is not None:
        hi = theta_max * (1.0 - 1e-9)
    else:
        hi = 1.0
        while hi < 1e8 and objective(2.0 * hi) < objective(hi):
            hi *= 2.0
    theta_star, log_val = _golden_section_min(objective, 0.0, hi)
    # theta = 0 is always admissible; never return worse than the boundary
    at_zero = objective(0.0)
    if at_zero < log_val:
        theta_star, log_val = 0.0, at_zero
    return BoundReport(
        math.exp(log_val), theta_star,
        (0.0, theta_max if theta_max is not None else math.inf),
        "chernoff-pipeline",
    )


def complex_correction(report: BoundReport):
    """Double a bound computed through the real 2d x 2d embedding of
    Hermitian inputs.  Refuses to apply twice."""
    for name, _ in report.multiplicative_corrections:
        if name == "complex-embedding":
            raise ValidationError("complex-embedding correction already applied")
    return replace(
        report,
        value=2.0 * report.value,
        multiplicative_corrections=report.multiplicative_corrections
        + (("complex-embedding", 2.0),),
    )


def nonstationary_correction(report: BoundReport, nu, pi, p):
    """Multiply by ||dnu/dpi||_{pi,p} for a chain started at nu.

    Recorded together with the conjugate exponent q = p/(p-1) and a
    warning that the plain factor understates the Hoelder step (see
    WARN_NONSTATIONARY_HOELDER).  p = 1 is degenerate: the factor is
    identically 1.
    """
    if p < 1.0:
        raise ValidationError(f"order p must be >= 1, got {p}")
    factor = radon_nikodym_norm(nu, pi, p)
    q = math.inf if p == 1.0 else p / (p - 1.0)
    warnings = report.warnings + (WARN_NONSTATIONARY_HOELDER,)
    if p == 1.0:
        warnings = warnings + (
            "nonstationary-factor: p = 1 gives factor 1 identically (degenerate)",
        )
    return replace(
        report,
        value=factor * report.value,
        multiplicative_corrections=report.multiplicative_corrections
        + (("nonstationary-factor", factor), ("nonstationary-conjugate-q", q)),
        warnings=warnings,
    )
