"""Dense complex-matrix foundation shared by every other module.

Operators are plain ``numpy`` arrays of dtype ``complex128`` and shape
``(n, n)``.  The ``as_*`` helpers validate an array against an escalating
set of invariants (Hermitian, positive semidefinite, unit trace) and return
a fresh, read-only copy, so validated values can be shared freely.

Conventions
-----------
- Inner product on the state space is linear in the first slot:
  ``<x, y> = sum_i x_i conj(y_i)``.  The covariance of a zero-mean field is
  therefore the second-moment matrix ``B = E[phi phi^dagger]`` and
  ``E <A phi, phi> = Tr(B A)``.
- Hilbert-Schmidt pairing is ``<X, Y>_HS = Tr(X^dagger Y)``.
"""
from __future__ import annotations

import numpy as np

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-14
DENSITY_TRACE_TOL = 1e-10


class OperatorError(ValueError):
    """An operator violates the invariants required by an operation."""


class DimensionError(OperatorError):
    pass


class NotHermitianError(OperatorError):
    pass


class NotPositiveError(OperatorError):
    pass


class DegenerateTraceError(OperatorError):
    pass


def max_abs(M) -> float:
    M = np.asarray(M)
    return float(np.max(np.abs(M))) if M.size else 0.0


def _frozen(M: np.ndarray) -> np.ndarray:
    M = np.array(M, dtype=np.complex128, copy=True)
    M.setflags(write=False)
    return M


def as_matrix(M, dim: int | None = None) -> np.ndarray:
    """Validate a square, finite complex matrix (optionally of size ``dim``)."""
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    if dim is not None and M.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {M.shape[0]}")
    if not np.all(np.isfinite(M)):
        raise OperatorError("matrix has non-finite entries")
    return _frozen(M)


def is_hermitian(M, tol: float = HERMITIAN_TOL) -> bool:
    M = np.asarray(M)
    return max_abs(M - M.conj().T) <= tol * (1.0 + max_abs(M))


def as_hermitian(M, dim: int | None = None, tol: float = HERMITIAN_TOL) -> np.ndarray:
    M = as_matrix(M, dim)
    if not is_hermitian(M, tol):
        raise NotHermitianError(
            f"matrix is not Hermitian (deviation {max_abs(M - M.conj().T):.3g})")
    return M


def is_positive(M, tol: float = PSD_TOL) -> tuple[bool, float]:
    """Return ``(ok, lambda_min)`` for a Hermitian matrix.

    ``ok`` is true iff the smallest eigenvalue is at least
    ``-tol * (1 + max|M_ij|)``.  Non-Hermitian input raises
    :class:`NotHermitianError`.
    """
    M = as_hermitian(M)
    lam_min = float(np.linalg.eigvalsh(M)[0])
    return lam_min >= -tol * (1.0 + max_abs(M)), lam_min


def as_positive(M, dim: int | None = None, tol: float = PSD_TOL) -> np.ndarray:
    M = as_hermitian(M, dim)
    ok, lam = is_positive(M, tol)
    if not ok:
        raise NotPositiveError(f"matrix is not positive semidefinite (lambda_min={lam:.3g})")
    return M


def as_density(M, dim: int | None = None) -> np.ndarray:
    M = as_positive(M, dim)
    tr = np.trace(M).real
    if abs(tr - 1.0) > DENSITY_TRACE_TOL:
        raise OperatorError(f"density operator must have unit trace, got {tr!r}")
    return M


def hs_inner(X, Y) -> complex:
    """Hilbert-Schmidt inner product ``Tr(X^dagger Y)``."""
    X = np.asarray(X, dtype=np.complex128)
    Y = np.asarray(Y, dtype=np.complex128)
    if X.shape != Y.shape:
        raise DimensionError(f"shape mismatch {X.shape} vs {Y.shape}")
    return complex(np.vdot(X, Y))


def normalize_trace(B) -> tuple[np.ndarray, float]:
    """Scale a positive operator to unit trace.

    Returns
    -------
    rho : ndarray
        ``B / Tr B``.
    trace : float
        ``Tr B``; for a covariance this is the dispersion ``E||phi||^2``.
    """
    B = as_positive(B)
    tr = float(np.trace(B).real)
    if tr <= TRACE_TOL:
        raise DegenerateTraceError(f"trace {tr!r} too small to normalize")
    return _frozen(B / tr), tr


def sqrt_psd(B, tol: float = PSD_TOL) -> np.ndarray:
    """Hermitian PSD square root; eigenvalues within tolerance of 0 are clamped."""
    B = as_hermitian(B)
    w, V = np.linalg.eigh(B)
    if w[0] < -tol * (1.0 + max_abs(B)):
        raise NotPositiveError(f"matrix is not positive semidefinite (lambda_min={w[0]:.3g})")
    s = np.sqrt(np.clip(w, 0.0, None))
    S = (V * s) @ V.conj().T
    return _frozen(0.5 * (S + S.conj().T))


def matrix_unit(n: int, a: int, b: int) -> np.ndarray:
    """``|e_a><e_b|`` in the standard basis."""
    E = np.zeros((n, n), dtype=np.complex128)
    E[a, b] = 1.0
    return E


# shared JSON format: row-major nested arrays of [re, im] pairs

def matrix_to_json(M) -> list:
    M = np.asarray(M, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def matrix_from_json(data) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise OperatorError(f"malformed matrix: {exc}") from None
    if arr.ndim != 3 or arr.shape[-1] != 2 or arr.shape[0] != arr.shape[1]:
        raise OperatorError(
            f"matrix must be an n x n nested array of [re, im] pairs, got shape {arr.shape}")
    return as_matrix(arr[..., 0] + 1j * arr[..., 1])
