"""Dense symmetric/Hermitian matrix kernels.

Everything operates on plain numpy arrays and is pure.  Matrix
exponentials go through the real eigendecomposition, so a complex scalar
multiple of a real symmetric matrix (z * S) can be exponentiated in the
spectral sense without a general expm:

    exp(z * S) = V diag(exp(z * w_i)) V^T,   S = V diag(w) V^T.

The vectorization convention is column-major, so that

    kron(B^T, A) @ vec(X) == vec(A @ X @ B).
"""
from __future__ import annotations

import numpy as np

from .errors import NumericError, ValidationError

# exp() of a float64 overflows a little above this
EXP_LIMIT = 709.0


def _require_finite(a, name="matrix"):
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def check_symmetric(s, tol=1e-12, name="matrix"):
    """Validate a real square symmetric matrix and return it symmetrized.

    Asymmetry beyond ``tol`` relative to the largest entry is an error;
    below it, the matrix is replaced by (S + S^T)/2 so downstream code
    sees an exactly symmetric array.
    """
    s = _require_finite(s, name)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {s.shape}")
    if np.iscomplexobj(s):
        if np.abs(s.imag).max() > tol * max(1.0, np.abs(s).max()):
            raise ValidationError(f"{name} must be real symmetric")
        s = s.real
    s = s.astype(float, copy=False)
    scale = max(1.0, np.abs(s).max())
    asym = np.abs(s - s.T).max()
    if asym > tol * scale:
        raise ValidationError(f"{name} is not symmetric (residual {asym:.3e})")
    return 0.5 * (s + s.T)


def check_hermitian(z, tol=1e-12, name="matrix"):
    """Validate a complex square Hermitian matrix; returns (Z + Z^H)/2."""
    z = _require_finite(z, name)
    if z.ndim != 2 or z.shape[0] != z.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {z.shape}")
    z = z.astype(complex, copy=False)
    scale = max(1.0, np.abs(z).max())
    if np.abs(z - z.conj().T).max() > tol * scale:
        raise ValidationError(f"{name} is not Hermitian")
    return 0.5 * (z + z.conj().T)


def sym_eig(s):
    """Eigendecomposition of a symmetric matrix.

    Returns (w, V) with eigenvalues w sorted descending and orthonormal
    eigenvectors in the columns of V, so S == V @ diag(w) @ V.T.
    """
    s = check_symmetric(s)
    w, v = np.linalg.eigh(s)
    return w[::-1].copy(), v[:, ::-1].copy()


def lambda_max(s):
    """Largest eigenvalue of a symmetric matrix."""
    s = check_symmetric(s)
    return float(np.linalg.eigvalsh(s)[-1])


def matrix_exp_sym(s, scale=1.0):
    """exp(scale * S) for real symmetric S, computed spectrally.

    ``scale`` may be complex; the result is then complex symmetric.  For
    real ``scale`` the result is symmetric positive definite.  Raises
    NumericError if any exponent exceeds the float64 range.
    """
    w, v = sym_eig(s)
    expo = np.asarray(scale) * w
    peak = float(np.max(expo.real)) if expo.size else 0.0
    if peak > EXP_LIMIT:
        raise NumericError(f"matrix exponential overflow: exponent {peak:.6g}")
    return (v * np.exp(expo)) @ v.T


def kron(a, b):
    """Kronecker product (thin wrapper, kept for a uniform call surface)."""
    return np.kron(_require_finite(a, "kron lhs"), _require_finite(b, "kron rhs"))


def vec(x):
    """Column-major flattening of a matrix into a vector."""
    return np.asarray(_require_finite(x, "vec input")).reshape(-1, order="F")


def trace_pairing(a, b):
    """tr[A B] for square matrices of equal size."""
    a = _require_finite(a, "trace_pairing lhs")
    b = _require_finite(b, "trace_pairing rhs")
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise ValidationError(
            f"trace_pairing needs equal square shapes, got {a.shape} and {b.shape}"
        )
    out = np.einsum("ij,ji->", a, b)
    return complex(out) if np.iscomplexobj(out) else float(out)


def embed_complex(z):
    """Real symmetric 2d x 2d embedding of a Hermitian Z = X + iY.

    Returns [[X, Y], [-Y, X]], whose spectrum is the spectrum of Z with
    every multiplicity doubled.
    """
    z = check_hermitian(z, name="embed_complex input")
    x, y = z.real, z.imag
    return np.block([[x, y], [-y, x]])


def frob_norm_sq(a):
    """Squared Frobenius norm, sum of |a_ij|^2."""
    a = _require_finite(a, "frob_norm_sq input")
    return float(np.vdot(a, a).real)
