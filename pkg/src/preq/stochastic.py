"""Path simulation of Brownian motion and linear SDEs with additive noise.

Paths solve ``d phi = A_t phi dt + sqrt(Sigma) dw`` with ``phi_0 = xi0`` drawn
from the complex Gaussian ``N(0, B0)`` independently of the noise.  The
covariance ``E[phi_t phi_t^dagger]`` then follows the affine flow
``dB/dt = A_t B + B A_t^dagger + Sigma`` (see :func:`ou_covariance_ode`).

Second moments are accumulated at every grid point while paths are
generated, so full paths are kept only on request.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels, streams
from .dynamics import OperatorTrajectory, TimeGrid, propagate_piecewise
from .generators import DriftSchedule, build_affine, build_similarity
from .operators import as_positive, sqrt_psd

BLOCK = 64  # EM steps per random-number draw


@dataclass(frozen=True, eq=False)
class SDESpec:
    drift: DriftSchedule
    diffusion: np.ndarray
    initial_covariance: np.ndarray

    def __post_init__(self):
        drift = self.drift
        if not isinstance(drift, DriftSchedule):
            drift = DriftSchedule.constant(drift)
        n = drift.dim
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "diffusion", as_positive(self.diffusion, n))
        object.__setattr__(self, "initial_covariance", as_positive(self.initial_covariance, n))

    @property
    def dim(self) -> int:
        return self.drift.dim


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    spec: SDESpec
    grid: TimeGrid
    N: int
    seed: int
    second_moments: np.ndarray  # (steps + 1, n, n), (1/N) sum phi phi^dagger per grid point
    initial_noise_cross: np.ndarray  # (1/N) sum xi0 z_0^dagger, z_0 the first standardized increment
    paths: np.ndarray | None = None  # (N, steps + 1, n) when recorded


def _simulate_chunk(spec: SDESpec, grid: TimeGrid, seed: int, k: int, m: int,
                    record: bool):
    n = spec.dim
    steps = grid.steps
    dt = grid.dt
    rel_times = grid.times - grid.t0
    rng = streams.substream(seed, streams.PATHS, k)
    S0 = sqrt_psd(spec.initial_covariance)
    # the 1/sqrt(2) of a standard complex normal is folded into S
    S = math.sqrt(0.5 * dt) * sqrt_psd(spec.diffusion)
    eye = np.eye(n, dtype=np.complex128)

    phi = np.ascontiguousarray(streams.complex_normal(rng, (m, n)) @ S0.T)
    moments = np.zeros((steps + 1, n, n), dtype=np.complex128)
    moments[0] = phi.T @ phi.conj()
    paths = None
    if record:
        paths = np.empty((steps + 1, m, n), dtype=np.complex128)
        paths[0] = phi
    cross = None
    for start in range(0, steps, BLOCK):
        s = min(BLOCK, steps - start)
        z = streams.normal_pairs(rng, (s, m, n))
        if cross is None:
            cross = phi.T @ z[0].conj() / math.sqrt(2.0)
        F = np.array([eye + dt * spec.drift.at(rel_times[start + j]) for j in range(s)])
        rec = paths[start + 1:start + 1 + s] if record else None
        kernels.em_block(phi, F, S, z, moments[start + 1:start + 1 + s], rec)
    return moments, cross, paths


def simulate_linear_sde(spec: SDESpec, grid: TimeGrid, N: int, seed: int,
                        workers: int = 1, record_paths: bool = False) -> PathEnsemble:
    """Euler-Maruyama: ``phi_{k+1} = phi_k + A(t_k) phi_k dt + sqrt(Sigma) sqrt(dt) z_k``."""
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    seed = streams.check_seed(seed)
    N = int(N)

    def run(k, m):
        return _simulate_chunk(spec, grid, seed, k, m, record_paths)

    results = streams.map_chunks(run, streams.chunk_sizes(N), workers)
    moments = np.zeros_like(results[0][0])
    cross = np.zeros_like(results[0][1])
    for mom, cr, _ in results:  # fixed reduction order
        moments += mom
        cross += cr
    moments /= N
    moments = 0.5 * (moments + np.conj(np.swapaxes(moments, 1, 2)))
    paths = None
    if record_paths:
        paths = np.concatenate([p for _, _, p in results], axis=1).transpose(1, 0, 2)
    return PathEnsemble(spec, grid, N, seed, moments, cross / N, paths)


def simulate_brownian(Sigma, B0, grid: TimeGrid, N: int, seed: int, workers: int = 1,
                      record_paths: bool = False) -> PathEnsemble:
    """Paths ``xi0 + sqrt(Sigma) w(t)`` with ``E[w(t) w(t)^dagger] = t I``."""
    B0 = as_positive(B0)
    n = B0.shape[0]
    spec = SDESpec(DriftSchedule.constant(np.zeros((n, n))), Sigma, B0)
    return simulate_linear_sde(spec, grid, N, seed, workers, record_paths)


def ou_covariance_ode(spec: SDESpec, grid: TimeGrid, method: str = "exact") -> OperatorTrajectory:
    """Covariance flow ``dB/dt = A_t B + B A_t^dagger + Sigma`` from ``B0``."""
    schedule = [(d, build_affine(build_similarity(A), spec.diffusion, diffusion=True))
                for d, A in spec.drift.segments]
    return propagate_piecewise(schedule, spec.initial_covariance, grid, method)


def empirical_covariance_at(ens: PathEnsemble, t_index: int) -> np.ndarray:
    if not 0 <= t_index <= ens.grid.steps:
        raise IndexError(f"t_index {t_index} outside [0, {ens.grid.steps}]")
    return ens.second_moments[t_index]


def path_norms(ens: PathEnsemble) -> np.ndarray:
    """``||phi_k(t)||`` for recorded paths, shape (N, steps + 1)."""
    if ens.paths is None:
        raise ValueError("paths were not recorded; pass record_paths=True")
    return np.linalg.norm(ens.paths, axis=2)


def covariance_bound(B, N: int, dt: float) -> float:
    """Entrywise tolerance ``5 max|B| / sqrt(N) + 10 dt`` for ensemble vs ODE."""
    return 5.0 * float(np.max(np.abs(B))) / math.sqrt(N) + 10.0 * dt

