"""Dense complex / Hermitian matrix helpers.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  The validating
constructors (:func:`as_matrix`, :func:`as_hermitian`) are the only places
where shape and symmetry are checked; everything downstream trusts them.
"""

import numpy as np

from .config import DEFAULT
from .errors import NotHermitian, NotPSD, ShapeMismatch


def as_matrix(M):
    """Coerce ``M`` to a square complex128 array."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ShapeMismatch(f"expected a nonempty square matrix, got shape {A.shape}")
    return A


def hermitian_defect(M):
    A = as_matrix(M)
    return float(np.max(np.abs(A - A.conj().T)))


def is_hermitian(M, tol=DEFAULT.hermitian_tol):
    A = as_matrix(M)
    scale = max(1.0, float(np.linalg.norm(A, "fro")))
    return hermitian_defect(A) <= tol * scale


def as_hermitian(M, tol=DEFAULT.hermitian_tol):
    """Validate ``M`` as Hermitian and return its exact Hermitian part."""
    A = as_matrix(M)
    defect = hermitian_defect(A)
    if defect > tol * max(1.0, float(np.linalg.norm(A, "fro"))):
        raise NotHermitian("matrix is not Hermitian within tolerance", defect=defect)
    return 0.5 * (A + A.conj().T)


def eigenvalues(M, tol=DEFAULT.hermitian_tol):
    """Eigenvalues of a Hermitian matrix, descending."""
    A = as_hermitian(M, tol)
    return np.linalg.eigvalsh(A)[::-1].copy()


def spectral_norm(M):
    """Largest singular value."""
    A = as_matrix(M)
    if not np.any(A):
        return 0.0
    return float(np.linalg.norm(A, 2))


def hermitian_norm(H):
    """Spectral norm of an already-Hermitian matrix (no validation)."""
    w = np.linalg.eigvalsh(H)
    return float(max(abs(w[0]), abs(w[-1])))


def char_poly(M, tol=DEFAULT.hermitian_tol):
    """Characteristic polynomial det(zI - M), expanded from the eigenvalues."""
    from .unipoly import RealPoly

    lam = eigenvalues(M, tol)
    return RealPoly.from_roots(lam)


def is_psd(M, tol=DEFAULT.psd_clamp_tol):
    if not is_hermitian(M):
        return False
    w = np.linalg.eigvalsh(as_hermitian(M))
    return bool(w[0] >= -tol * max(1.0, abs(w[-1])))


def is_projection(M, tol=1e-8):
    """Orthogonal projection test: Hermitian and idempotent."""
    if not is_hermitian(M, tol):
        return False
    A = as_hermitian(M, tol)
    return bool(np.max(np.abs(A @ A - A), initial=0.0) <= tol)


def numeric_rank(M, tol=1e-9):
    """Number of singular values above ``tol * max(1, ||M||)``."""
    A = as_matrix(M)
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > tol * max(1.0, s[0])))


def diag_vector(M):
    return np.diag(as_matrix(M)).copy()


def sqrt_psd(M, clamp_tol=DEFAULT.psd_clamp_tol):
    """Hermitian PSD square root.

    Eigenvalues in ``[-clamp_tol * max(1, ||M||), 0)`` are clamped to zero;
    anything more negative raises :class:`NotPSD`.
    """
    A = as_hermitian(M)
    w, V = np.linalg.eigh(A)
    scale = max(1.0, float(np.max(np.abs(w))))
    if w[0] < -clamp_tol * scale:
        raise NotPSD("matrix has a negative eigenvalue", min_eigenvalue=float(w[0]))
    w = np.clip(w, 0.0, None)
    S = (V * np.sqrt(w)) @ V.conj().T
    return 0.5 * (S + S.conj().T)


def random_unitary(d, rng):
    """Haar-ish unitary from the QR of a complex Gaussian matrix."""
    Z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def random_hermitian(d, rng, scale=1.0):
    Z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * 0.5 * (Z + Z.conj().T)


def random_psd(d, rng, rank=None):
    rank = d if rank is None else rank
    G = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    return G @ G.conj().T
