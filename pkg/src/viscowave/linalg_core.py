"""Small dense complex matrix kernel.

Everything here works on ``d x d`` arrays with ``d`` in {1, 2, 3, 6}. Two
independent routes to the principal square root are provided: a spectral one
(eigendecomposition, with a Schur recurrence fallback) and an integral one
based on the Stieltjes-type representation

    B^{1/2} = (1/pi) * int_0^inf B (sI + B)^{-1} s^{-1/2} ds.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import BranchCutError, RangeError, ViscowaveError
from .quadrature import QuadratureSpec, integrate

#: eigenvector condition number above which the Schur recurrence is used
SCHUR_FALLBACK_COND = 1e8
#: half-width of the band around ]-inf, 0] treated as the branch cut
BRANCH_CUT_TOL = 1e-12


def as_cmat(M) -> np.ndarray:
    """Return ``M`` as a finite square complex array."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def hermitian_part(M) -> np.ndarray:
    A = np.asarray(M)
    return 0.5 * (A + A.conj().T)


def imag_part(M) -> np.ndarray:
    """Hermitian imaginary part ``(M - M^dagger) / (2i)``.

    The result is symmetrised, so it is Hermitian to the last bit.
    """
    A = as_cmat(M)
    H = (A - A.conj().T) / 2j
    return 0.5 * (H + H.conj().T)


def real_part(M) -> np.ndarray:
    """Hermitian real part ``(M + M^dagger) / 2``."""
    return hermitian_part(as_cmat(M))


def min_eigenvalue(H) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    try:
        return float(np.linalg.eigvalsh(hermitian_part(H))[0])
    except np.linalg.LinAlgError as exc:
        raise ViscowaveError(f"Hermitian eigen-solver failed: {exc}") from exc


def is_psd(H, tol: float = 0.0) -> bool:
    """True iff the smallest eigenvalue of ``H`` is at least ``-tol``."""
    return min_eigenvalue(H) >= -tol


def spectral_norm(M) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(as_cmat(M), 2))


def _check_branch(w: np.ndarray) -> None:
    on_cut = (np.abs(w.imag) <= BRANCH_CUT_TOL * (1.0 + np.abs(w))) & (
        w.real <= BRANCH_CUT_TOL
    )
    if np.any(on_cut):
        bad = w[on_cut][0]
        raise BranchCutError(
            f"eigenvalue {bad:.6g} lies on ]-inf, 0]; principal square root undefined"
        )


def _sqrt_upper_triangular(T: np.ndarray) -> np.ndarray:
    # Bjorck-Hammarling substitution on a complex upper triangular factor.
    n = T.shape[0]
    R = np.zeros_like(T)
    for j in range(n):
        R[j, j] = np.sqrt(T[j, j])
        for i in range(j - 1, -1, -1):
            s = T[i, j] - R[i, i + 1:j] @ R[i + 1:j, j]
            R[i, j] = s / (R[i, i] + R[j, j])
    return R


def sqrt_schur(B) -> np.ndarray:
    """Principal square root through the complex Schur form."""
    A = as_cmat(B)
    T, Z = scipy.linalg.schur(A, output="complex")
    _check_branch(np.diag(T))
    R = _sqrt_upper_triangular(T)
    return Z @ R @ Z.conj().T


def principal_sqrt_eig(B) -> np.ndarray:
    """Principal square root from the eigendecomposition ``B = V diag(w) V^-1``.

    Raises :class:`BranchCutError` if an eigenvalue sits on ]-inf, 0]. Nearly
    defective inputs (eigenvector condition number above 1e8) are routed to
    :func:`sqrt_schur`.
    """
    A = as_cmat(B)
    w, V = np.linalg.eig(A)
    _check_branch(w)
    if np.linalg.cond(V) > SCHUR_FALLBACK_COND:
        return sqrt_schur(A)
    return V @ (np.sqrt(w)[:, None] * np.linalg.inv(V))


def principal_inv_sqrt_eig(B) -> np.ndarray:
    """``B^{-1/2}`` on the principal branch."""
    A = as_cmat(B)
    w, V = np.linalg.eig(A)
    _check_branch(w)
    if np.linalg.cond(V) > SCHUR_FALLBACK_COND:
        return np.linalg.inv(sqrt_schur(A))
    return V @ ((1.0 / np.sqrt(w))[:, None] * np.linalg.inv(V))


def principal_sqrt_integral(B, quad: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """Principal square root from the integral representation.

    With ``s = u^2 / (1 - u)^2`` the integrand becomes
    ``(2/pi) B (u^2 I + (1 - u)^2 B)^{-1}`` on ``u in (0, 1)``, which is
    bounded at both ends (``2I/pi`` at ``u = 0`` and ``2B/pi`` at ``u = 1``).
    Raises :class:`AccuracyError` when the adaptive rule cannot reach
    ``quad.abs_tol``.
    """
    A = as_cmat(B)
    _check_branch(np.linalg.eigvals(A))
    eye = np.eye(A.shape[0])

    def integrand(u):
        M = (u**2)[:, None, None] * eye + ((1.0 - u) ** 2)[:, None, None] * A
        # B commutes with M, so B M^{-1} = M^{-1} B
        return np.linalg.solve(M, np.broadcast_to(A, M.shape))

    res = integrate(integrand, 0.0, 1.0, quad)
    return (2.0 / np.pi) * res.value


def matrix_exp(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring (Pade)."""
    A = as_cmat(M)
    with np.errstate(over="ignore", invalid="ignore"):
        E = scipy.linalg.expm(A)
    if not np.all(np.isfinite(E)):
        raise RangeError(f"matrix exponential overflowed (norm {np.linalg.norm(A, 2):.3g})")
    return E


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from the QR factorisation of a Ginibre matrix."""
    Z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph[None, :]
