"""Propagation of covariance operators and their trace-normalized densities.

Covariances follow ``dB/dt = G(B)`` for a linear or affine generator ``G``;
densities ``rho = B / Tr B`` follow the quadratic flow
``d rho/dt = L rho - rho Tr(L rho)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

from . import kernels
from .generators import (
    AffineGenerator,
    Superoperator,
    affine_propagator,
    check_trace_preserving,
    max_trace_defect,
    propagator,
    unvec,
    vec,
)
from .operators import (
    DimensionError,
    as_density,
    as_matrix,
    as_positive,
    normalize_trace,
)

__all__ = [
    "TimeGrid", "OperatorTrajectory", "TrajectoryWarning", "StepSizeError",
    "propagate_covariance", "propagate_piecewise", "propagate_density_nonlinear",
    "closed_form_similarity", "brownian_density", "brownian_density_rate",
    "check_trace_preserving", "max_trace_defect",
]

DEFAULT_DT = 1e-3
POSITIVITY_WARN_TOL = 1e-8
TRACE_DRIFT_WARN = 1e-8
TRACE_DRIFT_MAX = 1e-6


class StepSizeError(RuntimeError):
    """Integrator drift exceeded the hard limit; retry with a smaller dt."""


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    t1: float
    steps: int

    def __post_init__(self):
        if not (math.isfinite(self.t0) and math.isfinite(self.t1)) or self.t1 <= self.t0:
            raise ValueError(f"time grid needs finite t1 > t0, got [{self.t0}, {self.t1}]")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps!r}")
        object.__setattr__(self, "steps", int(self.steps))

    @classmethod
    def with_step(cls, t0: float, t1: float, dt: float = DEFAULT_DT) -> TimeGrid:
        return cls(t0, t1, max(1, int(round((t1 - t0) / dt))))

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.steps

    @property
    def times(self) -> np.ndarray:
        return self.t0 + (self.t1 - self.t0) * np.arange(self.steps + 1) / self.steps

    def index_of(self, t: float) -> int:
        """Grid index nearest to ``t``."""
        k = int(round((t - self.t0) / self.dt))
        if not 0 <= k <= self.steps:
            raise IndexError(f"time {t} outside grid [{self.t0}, {self.t1}]")
        return k


class TrajectoryWarning(NamedTuple):
    kind: str  # "positivity" or "trace-drift"
    t: float
    value: float


@dataclass(frozen=True, eq=False)
class OperatorTrajectory:
    grid: TimeGrid
    values: np.ndarray  # (steps + 1, n, n)
    kind: str  # "covariance" or "density"
    warnings: tuple = field(default=())

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def traces(self) -> np.ndarray:
        return np.real(np.trace(self.values, axis1=1, axis2=2))

    def min_eigenvalues(self) -> np.ndarray:
        herm = 0.5 * (self.values + np.conj(np.swapaxes(self.values, 1, 2)))
        return np.linalg.eigvalsh(herm)[:, 0]

    def eigenvalues(self) -> np.ndarray:
        herm = 0.5 * (self.values + np.conj(np.swapaxes(self.values, 1, 2)))
        return np.linalg.eigvalsh(herm)

    def at(self, t: float) -> np.ndarray:
        return self.values[self.grid.index_of(t)]

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]


def _check_method(method: str) -> None:
    if method not in ("exact", "rk4"):
        raise ValueError(f"method must be 'exact' or 'rk4', got {method!r}")


def _split(G: Superoperator | AffineGenerator) -> tuple[Superoperator, np.ndarray]:
    if isinstance(G, AffineGenerator):
        return G.linear, vec(G.inhomogeneity)
    if isinstance(G, Superoperator):
        return G, np.zeros(G.dim * G.dim, dtype=np.complex128)
    raise TypeError(f"expected Superoperator or AffineGenerator, got {type(G).__name__}")


def _advance(G, x0: np.ndarray, dt: float, steps: int, method: str, cache: dict) -> np.ndarray:
    """Run ``steps`` uniform steps from ``x0``; returns ``steps + 1`` states."""
    L, c = _split(G)
    if method == "rk4":
        return kernels.rk4_affine(L.matrix, c, x0, dt, steps)
    key = (id(G), dt)
    if key not in cache:
        if isinstance(G, AffineGenerator):
            cache[key] = affine_propagator(G, dt)
        else:
            cache[key] = (propagator(L, dt), c)
    P, q = cache[key]
    return kernels.iterate_affine(P, q, x0, steps)


def _positivity_warnings(times, values, tol=POSITIVITY_WARN_TOL) -> list:
    herm = 0.5 * (values + np.conj(np.swapaxes(values, 1, 2)))
    lam = np.linalg.eigvalsh(herm)[:, 0]
    scale = 1.0 + np.max(np.abs(values), axis=(1, 2))
    bad = np.nonzero(lam < -tol * scale)[0]
    return [TrajectoryWarning("positivity", float(times[k]), float(lam[k])) for k in bad]


def propagate_piecewise(schedule, B0, grid: TimeGrid, method: str = "exact") -> OperatorTrajectory:
    """Covariance flow under a piecewise-constant generator schedule.

    ``schedule`` is a sequence of ``(duration, generator)`` measured from
    ``grid.t0``; the last generator stays active past its duration.  Grid
    steps that straddle a switch are split at the switching time.
    """
    _check_method(method)
    schedule = list(schedule)
    if not schedule:
        raise ValueError("empty generator schedule")
    n = schedule[0][1].dim
    for _, G in schedule:
        if G.dim != n:
            raise DimensionError("all generators in a schedule must share one dimension")
    B0 = as_positive(B0, n)
    starts = np.concatenate([[0.0], np.cumsum([float(d) for d, _ in schedule[:-1]])])
    times = grid.times
    rel = times - grid.t0
    dt = grid.dt
    cache: dict = {}

    def seg_index(t: float) -> int:
        return int(np.searchsorted(starts, t, side="right") - 1)

    out = np.empty((grid.steps + 1, n * n), dtype=np.complex128)
    out[0] = vec(B0)
    k = 0
    while k < grid.steps:
        s = seg_index(rel[k])
        seg_end = starts[s + 1] if s + 1 < len(starts) else np.inf
        # steps [k, j) lie fully inside segment s
        j = k
        while j < grid.steps and rel[j + 1] <= seg_end * (1 + 1e-14) + 1e-14:
            j += 1
        if j > k:
            out[k:j + 1] = _advance(schedule[s][1], out[k], dt, j - k, method, cache)
            k = j
            continue
        # step k straddles one or more switches
        x = out[k]
        t = rel[k]
        while t < rel[k + 1]:
            s = seg_index(t)
            seg_end = starts[s + 1] if s + 1 < len(starts) else np.inf
            h = min(seg_end, rel[k + 1]) - t
            G = schedule[s][1]
            if method == "rk4":
                x = _advance(G, x, h, 1, method, cache)[-1]
            elif isinstance(G, AffineGenerator):
                P, q = affine_propagator(G, h)
                x = P @ x + q
            else:
                x = propagator(G, h) @ x
            t += h
        out[k + 1] = x
        k += 1

    values = out.reshape(grid.steps + 1, n, n).transpose(0, 2, 1).copy()  # un-vec (column-major)
    warns = _positivity_warnings(times, values)
    return OperatorTrajectory(grid, values, "covariance", tuple(warns))


def propagate_covariance(G: Superoperator | AffineGenerator, B0, grid: TimeGrid,
                         method: str = "exact") -> OperatorTrajectory:
    """Solve ``dB/dt = G(B)``, ``B(t0) = B0`` on ``grid``.

    ``method="exact"`` applies the matrix exponential of the vectorized
    generator (affine generators through the homogeneous embedding);
    ``method="rk4"`` integrates with classical fixed-step Runge-Kutta.
    Eigenvalues of ``B_t`` dipping below ``-1e-8 (1 + max|B_t|)`` are
    reported in ``warnings`` rather than raised.
    """
    return propagate_piecewise([(np.inf, G)], B0, grid, method)


def propagate_density_nonlinear(L: Superoperator, rho0, grid: TimeGrid) -> OperatorTrajectory:
    """RK4 on ``d rho/dt = L rho - rho Tr(L rho)``.

    The trace is monitored, never projected back to 1: drift above 1e-8 is
    recorded as a warning, drift above 1e-6 raises :class:`StepSizeError`.
    """
    if not isinstance(L, Superoperator):
        raise TypeError("nonlinear density flow needs a linear Superoperator")
    rho0 = as_density(rho0, L.dim)
    n = L.dim
    states = kernels.rk4_normalized(L.matrix, vec(rho0), grid.dt, grid.steps, n)
    values = states.reshape(grid.steps + 1, n, n).transpose(0, 2, 1).copy()
    if not np.all(np.isfinite(values)):
        raise StepSizeError("nonlinear density flow diverged; reduce dt")
    drift = np.abs(np.trace(values, axis1=1, axis2=2) - 1.0)
    worst = int(np.argmax(drift))
    times = grid.times
    if drift[worst] > TRACE_DRIFT_MAX:
        raise StepSizeError(
            f"trace drift {drift[worst]:.3g} at t={times[worst]:.6g} exceeds {TRACE_DRIFT_MAX}; "
            f"reduce dt (currently {grid.dt:.3g})")
    warns = _positivity_warnings(times, values)
    if drift[worst] > TRACE_DRIFT_WARN:
        warns.append(TrajectoryWarning("trace-drift", float(times[worst]), float(drift[worst])))
    return OperatorTrajectory(grid, values, "density", tuple(warns))


def closed_form_similarity(A, B0, t: float) -> np.ndarray:
    """``exp(A t) B0 exp(A t)^dagger``."""
    A = as_matrix(A)
    B0 = as_positive(B0, A.shape[0])
    U = scipy.linalg.expm(A * t)
    B = U @ B0 @ U.conj().T
    return 0.5 * (B + B.conj().T)


def brownian_density(B0, Sigma, t: float) -> np.ndarray:
    """Normalized covariance ``(B0 + Sigma t) / Tr(B0 + Sigma t)`` of ``xi0 + sqrt(Sigma) w(t)``."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    B0 = as_positive(B0)
    Sigma = as_positive(Sigma, B0.shape[0])
    rho, _ = normalize_trace(B0 + Sigma * t)
    return rho


def brownian_density_rate(B0, Sigma, t: float) -> tuple[np.ndarray, float]:
    """``d rho/dt`` of the normalized Brownian covariance and its coefficient.

    ``d rho/dt = (Sigma - rho Tr Sigma) / Tr(B0 + Sigma t)``: the prefactor
    depends explicitly on ``t``, so the flow is not generated by a fixed
    superoperator.  Returns ``(d rho/dt, 1 / Tr(B0 + Sigma t))``.
    """
    rho = brownian_density(B0, Sigma, t)
    Sigma = np.asarray(Sigma, dtype=np.complex128)
    coef = 1.0 / float(np.trace(np.asarray(B0) + Sigma * t).real)
    return coef * (Sigma - rho * np.trace(Sigma).real), coef


def linear_flow(L: Superoperator, rho0, grid: TimeGrid) -> OperatorTrajectory:
    """``exp(t L) rho0`` evaluated independently at every grid time."""
    rho0 = np.asarray(rho0, dtype=np.complex128)
    vals = np.array([unvec(propagator(L, t - grid.t0) @ vec(rho0), L.dim) for t in grid.times])
    return OperatorTrajectory(grid, vals, "covariance")
