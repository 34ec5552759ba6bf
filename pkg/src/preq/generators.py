"""Superoperator generators in column-stacked vectorized form.

``vec(X)`` stacks the columns of ``X``; the map ``X -> A X B`` is the
matrix ``kron(B.T, A)`` acting on ``vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .operators import (
    DimensionError,
    OperatorError,
    as_hermitian,
    as_matrix,
    as_positive,
    max_abs,
)

ORTHONORMAL_TOL = 1e-10


def vec(X) -> np.ndarray:
    return np.asarray(X, dtype=np.complex128).reshape(-1, order="F")


def unvec(v, n: int) -> np.ndarray:
    return np.asarray(v, dtype=np.complex128).reshape((n, n), order="F")


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Linear map on ``n x n`` matrices stored as an ``n^2 x n^2`` matrix."""

    dim: int
    matrix: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        d = self.dim * self.dim
        if m.shape != (d, d):
            raise DimensionError(f"superoperator for n={self.dim} must be {d}x{d}, got {m.shape}")
        object.__setattr__(self, "matrix", _freeze(m))

    def __call__(self, M) -> np.ndarray:
        return apply(self, M)


@dataclass(frozen=True, eq=False)
class AffineGenerator:
    """``B -> linear(B) + inhomogeneity``; with a PSD inhomogeneity this is the
    covariance flow of a linear SDE with additive noise."""

    linear: Superoperator
    inhomogeneity: np.ndarray
    label: str = "affine"

    @property
    def dim(self) -> int:
        return self.linear.dim

    def __call__(self, M) -> np.ndarray:
        return evaluate(self, M)


@dataclass(frozen=True)
class GKSLSpec:
    hamiltonian: np.ndarray
    jumps: tuple = ()  # (operator, rate) pairs

    def __post_init__(self):
        H = as_hermitian(self.hamiltonian)
        n = H.shape[0]
        jumps = []
        for op, rate in self.jumps:
            rate = float(rate)
            if not np.isfinite(rate) or rate < 0:
                raise OperatorError(f"jump rate must be a nonnegative real, got {rate!r}")
            jumps.append((as_matrix(op, n), rate))
        object.__setattr__(self, "hamiltonian", H)
        object.__setattr__(self, "jumps", tuple(jumps))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


@dataclass(frozen=True, eq=False)
class CoefficientTensor:
    """``values[k, m, i, j] = <E_ij, L(E_km)>_HS`` with ``E_km = |e_k><e_m|``.

    Contracting with the second moments ``M_km = <e_k|B|e_m>`` gives the
    ``(i, j)`` element of ``L(B)``; see :meth:`contract`.
    """

    dim: int
    values: np.ndarray
    basis: np.ndarray

    def contract(self, B) -> np.ndarray:
        """Rebuild ``<e_i|L(B)|e_j>`` from the moments of ``B`` in this basis."""
        E = self.basis
        moments = E.conj().T @ np.asarray(B, dtype=np.complex128) @ E
        return np.einsum("km,kmij->ij", moments, self.values)


@dataclass(frozen=True)
class DriftSchedule:
    """Piecewise-constant ``A_t``: list of ``(duration, A)``; the last segment
    extends to infinity."""

    segments: tuple

    def __post_init__(self):
        if not self.segments:
            raise OperatorError("drift schedule needs at least one segment")
        segs = []
        n = None
        for duration, A in self.segments:
            duration = float(duration)
            if not duration > 0:
                raise OperatorError(f"segment duration must be positive, got {duration!r}")
            A = as_matrix(A, n)
            n = A.shape[0]
            segs.append((duration, A))
        object.__setattr__(self, "segments", tuple(segs))

    @classmethod
    def constant(cls, A) -> DriftSchedule:
        return cls(((np.inf, A),))

    @property
    def dim(self) -> int:
        return self.segments[0][1].shape[0]

    @property
    def breakpoints(self) -> np.ndarray:
        """Segment start times relative to the schedule origin."""
        durations = np.array([d for d, _ in self.segments[:-1]])
        return np.concatenate([[0.0], np.cumsum(durations)])

    def index_at(self, t: float) -> int:
        return int(np.searchsorted(self.breakpoints, t, side="right") - 1) if t >= 0 else 0

    def at(self, t: float) -> np.ndarray:
        return self.segments[self.index_at(t)][1]


def zero_superoperator(n: int) -> Superoperator:
    return Superoperator(n, np.zeros((n * n, n * n)), "zero")


def identity_superoperator(n: int) -> Superoperator:
    return Superoperator(n, np.eye(n * n), "identity")


def scalar_generator(a: float) -> Superoperator:
    """One-dimensional generator ``B -> a B``."""
    return Superoperator(1, np.array([[a]]), "scalar")


def build_commutator(H) -> Superoperator:
    """``B -> -i [H, B]``."""
    H = as_hermitian(H)
    n = H.shape[0]
    eye = np.eye(n)
    L = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    return Superoperator(n, L, "commutator")


def build_similarity(A) -> Superoperator:
    """``B -> A B + B A^dagger``."""
    A = as_matrix(A)
    n = A.shape[0]
    eye = np.eye(n)
    L = np.kron(eye, A) + np.kron(A.conj(), eye)
    return Superoperator(n, L, "similarity")


def build_gksl(spec: GKSLSpec) -> Superoperator:
    """Lindblad generator ``-i[H, B] + sum_k g_k (L_k B L_k^+ - {L_k^+ L_k, B}/2)``."""
    n = spec.dim
    eye = np.eye(n)
    L = build_commutator(spec.hamiltonian).matrix.copy()
    for op, rate in spec.jumps:
        if rate == 0.0:
            continue
        LdL = op.conj().T @ op
        L += rate * (np.kron(op.conj(), op)
                     - 0.5 * np.kron(eye, LdL)
                     - 0.5 * np.kron(LdL.T, eye))
    return Superoperator(n, L, "gksl")


def build_affine(linear: Superoperator, sigma, diffusion: bool = False) -> AffineGenerator:
    """Affine generator ``B -> linear(B) + sigma``.

    With ``diffusion=True`` sigma must be PSD (it is a noise covariance).
    """
    sigma = as_positive(sigma, linear.dim) if diffusion else as_hermitian(sigma, linear.dim)
    return AffineGenerator(linear, sigma)


def apply(L: Superoperator, M) -> np.ndarray:
    M = np.asarray(M, dtype=np.complex128)
    if M.shape != (L.dim, L.dim):
        raise DimensionError(f"operator shape {M.shape} does not match generator dim {L.dim}")
    return unvec(L.matrix @ vec(M), L.dim)


def evaluate(G: Superoperator | AffineGenerator, M) -> np.ndarray:
    """Right-hand side of ``dB/dt = G(B)`` for linear or affine generators."""
    if isinstance(G, AffineGenerator):
        return apply(G.linear, M) + G.inhomogeneity
    return apply(G, M)


def standard_basis(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.complex128)


def coefficient_tensor(L: Superoperator, basis=None) -> CoefficientTensor:
    """Hilbert-Schmidt matrix elements of ``L`` on matrix units of ``basis``.

    ``basis`` holds the orthonormal vectors ``e_k`` as columns.
    """
    n = L.dim
    E = standard_basis(n) if basis is None else np.asarray(basis, dtype=np.complex128)
    if E.shape != (n, n):
        raise DimensionError(f"basis must be {n}x{n}, got {E.shape}")
    gram_dev = max_abs(E.conj().T @ E - np.eye(n))
    if gram_dev > ORTHONORMAL_TOL:
        raise OperatorError(f"basis is not orthonormal (Gram deviation {gram_dev:.3g})")
    # units[k, m] = |e_k><e_m|
    units = np.einsum("ak,bm->kmab", E, E.conj())
    images = np.empty_like(units)
    for k in range(n):
        for m in range(n):
            images[k, m] = apply(L, units[k, m])
    # <E_ij, X>_HS = Tr(E_ij^+ X) = <e_i| X |e_j>
    values = np.einsum("ai,kmab,bj->kmij", E.conj(), images, E)
    return CoefficientTensor(n, _freeze(values), _freeze(E))


def trace_functional(n: int) -> np.ndarray:
    """Row vector ``t`` with ``t @ vec(X) == Tr X``."""
    return vec(np.eye(n))


def propagator(L: Superoperator, t: float) -> np.ndarray:
    """``exp(t L)`` as an ``n^2 x n^2`` matrix (scaling and squaring, Pade)."""
    return scipy.linalg.expm(t * L.matrix)


def affine_propagator(G: AffineGenerator, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact flow of ``dx/dt = L x + c`` over time ``t`` as ``x -> P x + q``.

    Uses the homogeneous embedding ``[[L, c], [0, 0]]`` of size ``n^2 + 1``.
    """
    d = G.dim * G.dim
    big = np.zeros((d + 1, d + 1), dtype=np.complex128)
    big[:d, :d] = G.linear.matrix
    big[:d, d] = vec(G.inhomogeneity)
    E = scipy.linalg.expm(t * big)
    return E[:d, :d], E[:d, d]


def choi_matrix(channel: np.ndarray, n: int) -> np.ndarray:
    """Choi matrix ``sum_ab E_ab (x) Phi(E_ab)`` of a vectorized map."""
    C = np.zeros((n * n, n * n), dtype=np.complex128)
    for a in range(n):
        for b in range(n):
            E = np.zeros((n, n), dtype=np.complex128)
            E[a, b] = 1.0
            C += np.kron(E, unvec(channel @ vec(E), n))
    return C


def is_completely_positive(L: Superoperator, times=(0.1, 1.0), tol: float = 1e-10) -> bool:
    """Sampled check: Choi matrix of ``exp(t L)`` is PSD for each ``t``."""
    for t in times:
        C = choi_matrix(propagator(L, t), L.dim)
        C = 0.5 * (C + C.conj().T)
        if np.linalg.eigvalsh(C)[0] < -tol * (1.0 + max_abs(C)):
            return False
    return True


def check_trace_preserving(L: Superoperator, tol: float = 1e-12) -> bool:
    return max_trace_defect(L) <= tol


def max_trace_defect(L: Superoperator) -> float:
    """``max_ab |Tr L(E_ab)|`` over the matrix-unit basis."""
    return float(np.max(np.abs(trace_functional(L.dim) @ L.matrix)))
