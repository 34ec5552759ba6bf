"""Gaussian random fields whose covariance is a given positive operator.

A zero-mean circularly-symmetric complex Gaussian vector ``phi`` with
``E[phi phi^dagger] = B`` is the classical counterpart of the density
operator ``B / Tr B``.  Averages of quadratic forms ``f_A(phi) = <A phi, phi>``
reproduce ``Tr(B A)``; dividing by the dispersion ``E||phi||^2 = Tr B`` gives
the quantum average.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import streams
from .generators import AffineGenerator, Superoperator, coefficient_tensor, evaluate
from .operators import (
    DimensionError,
    OperatorError,
    as_hermitian,
    as_positive,
    max_abs,
    normalize_trace,
    sqrt_psd,
)

REALNESS_TOL = 1e-10


class EstimateWithError(NamedTuple):
    value: float
    std_error: float
    N: int


@dataclass(frozen=True, eq=False)
class GaussianEnsemble:
    covariance: np.ndarray
    samples: np.ndarray  # (N, n)
    seed: int

    @property
    def dim(self) -> int:
        return self.covariance.shape[0]

    @property
    def N(self) -> int:
        return self.samples.shape[0]


def sample_gaussian(B, N: int, seed: int, workers: int = 1) -> GaussianEnsemble:
    """Draw ``N`` samples ``phi = sqrt(B) z`` with ``z`` standard complex normal."""
    B = as_positive(B)
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    seed = streams.check_seed(seed)
    n = B.shape[0]
    S = sqrt_psd(B)

    def draw(k, m):
        z = streams.complex_normal(streams.substream(seed, streams.SAMPLES, k), (m, n))
        return z @ S.T

    chunks = streams.map_chunks(draw, streams.chunk_sizes(int(N)), workers)
    samples = np.concatenate(chunks, axis=0)
    samples.setflags(write=False)
    return GaussianEnsemble(B, samples, seed)


def _estimate(values: np.ndarray) -> EstimateWithError:
    N = values.shape[0]
    se = float(np.std(values, ddof=1) / math.sqrt(N)) if N > 1 else 0.0
    return EstimateWithError(float(np.mean(values)), se, N)


def quadratic_form_values(ens: GaussianEnsemble, A) -> np.ndarray:
    """``f_A(phi_k) = <A phi_k, phi_k>`` for every sample, as reals."""
    A = as_hermitian(A)
    if A.shape[0] != ens.dim:
        raise DimensionError(f"observable dim {A.shape[0]} != ensemble dim {ens.dim}")
    phi = ens.samples
    f = np.einsum("pi,ij,pj->p", phi.conj(), A, phi)
    if np.any(np.abs(f.imag) > REALNESS_TOL * (1.0 + np.abs(f.real))):
        raise OperatorError("quadratic form produced non-real values")
    return f.real


def classical_average(ens: GaussianEnsemble, A) -> EstimateWithError:
    """Monte Carlo estimate of ``E f_A(phi)``; the exact value is ``Tr(B A)``."""
    return _estimate(quadratic_form_values(ens, A))


def quantum_average(rho, A) -> float:
    """``Tr(rho A)``."""
    rho = np.asarray(rho, dtype=np.complex128)
    A = as_hermitian(A)
    if rho.shape != A.shape:
        raise DimensionError(f"shape mismatch {rho.shape} vs {A.shape}")
    return float(np.einsum("ij,ji->", rho, A).real)


def dispersion(ens: GaussianEnsemble) -> EstimateWithError:
    """Estimate of ``E||phi||^2 = Tr B``."""
    return _estimate(np.sum(np.abs(ens.samples) ** 2, axis=1))


def scaling_bridge(ens: GaussianEnsemble, A) -> tuple[EstimateWithError, float]:
    """Compare the amplified classical signal with the quantum average.

    Returns ``(classical, quantum)`` where ``classical`` estimates
    ``E f_A / E||phi||^2`` (ratio estimator, delta-method standard error) and
    ``quantum`` is ``Tr(rho A)`` for ``rho = B / Tr B``.
    """
    rho, _ = normalize_trace(ens.covariance)
    f = quadratic_form_values(ens, A)
    g = np.sum(np.abs(ens.samples) ** 2, axis=1)
    g_mean = float(np.mean(g))
    if g_mean <= 0:
        raise OperatorError("sample dispersion is zero")
    ratio = float(np.mean(f)) / g_mean
    N = f.shape[0]
    resid = f - ratio * g
    se = float(np.std(resid, ddof=1) / (g_mean * math.sqrt(N))) if N > 1 else 0.0
    return EstimateWithError(ratio, se, N), quantum_average(rho, A)


def empirical_covariance(ens: GaussianEnsemble) -> np.ndarray:
    """``(1/N) sum_k phi_k phi_k^dagger`` (zero mean is assumed, not estimated)."""
    phi = ens.samples
    C = phi.T @ phi.conj() / phi.shape[0]
    return 0.5 * (C + C.conj().T)


def moment_evolution_residual(G: Superoperator | AffineGenerator, B, basis=None) -> float:
    """Largest mismatch between the moment-contracted coefficient tensor and ``G(B)``.

    With ``M_km = <e_k|B|e_m>`` (the Gaussian second moments) the time
    derivative of ``<e_i|B|e_j>`` predicted by the coefficient tensor is
    ``sum_km M_km L_kmij`` (plus ``<e_i|Sigma|e_j>`` for affine generators).
    The reference is the generator applied directly to ``B``.
    """
    B = as_positive(B, G.dim)
    linear = G.linear if isinstance(G, AffineGenerator) else G
    T = coefficient_tensor(linear, basis)
    E = T.basis
    predicted = T.contract(B)
    if isinstance(G, AffineGenerator):
        predicted = predicted + E.conj().T @ G.inhomogeneity @ E
    direct = E.conj().T @ evaluate(G, B) @ E
    return max_abs(predicted - direct)


def _gaussian_1d(x: np.ndarray, var: float) -> np.ndarray:
    return np.exp(-x * x / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)


def density_pde_residual_1d(a: float, b0: float, t: float, xgrid) -> float:
    """Residual of the real one-dimensional Gaussian density equation.

    For ``B_t = b0 exp(a t)`` and ``p_t = N(0, B_t)``, compares
    ``dp/dt = (dB/dt)/2 (x^2/B^2 - 1/B) p`` against ``(a/2) B_t p''``
    pointwise and returns the largest absolute difference.
    """
    if not b0 > 0:
        raise ValueError(f"b0 must be positive, got {b0}")
    x = np.asarray(xgrid, dtype=np.float64)
    B = b0 * math.exp(a * t)
    dB = a * B
    p = _gaussian_1d(x, B)
    dp_dt = 0.5 * dB * (x * x / (B * B) - 1.0 / B) * p
    # p' = -(x/B) p, p'' = -p/B - (x/B) p'
    dp_dx = -(x / B) * p
    d2p = -p / B - (x / B) * dp_dx
    rhs = 0.5 * a * B * d2p
    return float(np.max(np.abs(dp_dt - rhs))) if x.size else 0.0
