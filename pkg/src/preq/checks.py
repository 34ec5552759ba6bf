"""Verification suites shared by the CLI and the acceptance tests.

Each check returns :class:`CheckResult` records; a record passes when
``|value - reference| <= tolerance``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    TimeGrid,
    closed_form_similarity,
    linear_flow,
    propagate_covariance,
    propagate_density_nonlinear,
)
from .generators import (
    AffineGenerator,
    Superoperator,
    is_completely_positive,
    max_trace_defect,
    scalar_generator,
)
from .operators import max_abs, normalize_trace
from .prequantum import (
    classical_average,
    density_pde_residual_1d,
    dispersion,
    empirical_covariance,
    moment_evolution_residual,
    sample_gaussian,
    scaling_bridge,
)
from .stochastic import SDESpec, covariance_bound, ou_covariance_ode, simulate_linear_sde

SIGMA_FACTOR = 4.0


@dataclass(frozen=True)
class CheckResult:
    check: str
    value: float
    reference: float
    tolerance: float
    generator_kind: str | None = None
    n: int | None = None
    N: int | None = None
    seed: int | None = None
    std_error: float | None = None
    detail: str | None = None

    @property
    def passed(self) -> bool:
        return bool(abs(self.value - self.reference) <= self.tolerance)

    def to_json(self) -> dict:
        out = {
            "check": self.check,
            "generator_kind": self.generator_kind,
            "n": self.n,
            "N": self.N,
            "seed": self.seed,
            "value": self.value,
            "reference": self.reference,
            "std_error": self.std_error,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }
        if self.detail is not None:
            out["detail"] = self.detail
        return out


def _kind(G) -> str | None:
    return getattr(G, "label", None)


def check_bridge(B, A, N: int, seed: int, workers: int = 1) -> CheckResult:
    """Monte Carlo ``E f_A`` against ``Tr(B A)`` at 4 standard errors."""
    ens = sample_gaussian(B, N, seed, workers)
    est = classical_average(ens, A)
    ref = float(np.einsum("ij,ji->", np.asarray(B), np.asarray(A)).real)
    return CheckResult("bridge", est.value, ref, SIGMA_FACTOR * est.std_error,
                       n=ens.dim, N=N, seed=seed, std_error=est.std_error)


def check_dispersion(B, N: int, seed: int, workers: int = 1) -> CheckResult:
    ens = sample_gaussian(B, N, seed, workers)
    est = dispersion(ens)
    ref = float(np.trace(np.asarray(B)).real)
    return CheckResult("dispersion", est.value, ref, SIGMA_FACTOR * est.std_error,
                       n=ens.dim, N=N, seed=seed, std_error=est.std_error)


def check_scaling(B, A, N: int, seed: int, workers: int = 1) -> CheckResult:
    ens = sample_gaussian(B, N, seed, workers)
    est, quantum = scaling_bridge(ens, A)
    return CheckResult("scaling", est.value, quantum, SIGMA_FACTOR * est.std_error,
                       n=ens.dim, N=N, seed=seed, std_error=est.std_error)


def check_covariance_recovery(B, N: int, seed: int, workers: int = 1) -> CheckResult:
    ens = sample_gaussian(B, N, seed, workers)
    err = max_abs(empirical_covariance(ens) - np.asarray(B))
    return CheckResult("covariance-recovery", err, 0.0, 5.0 * max_abs(B) / math.sqrt(N),
                       n=ens.dim, N=N, seed=seed)


def check_moment(G, B, basis=None, tol: float = 1e-10) -> CheckResult:
    res = moment_evolution_residual(G, B, basis)
    return CheckResult("moment", res, 0.0, tol, generator_kind=_kind(G), n=G.dim)


def _linear_part(G) -> Superoperator:
    if isinstance(G, AffineGenerator):
        raise ValueError("this check needs a linear generator, not an affine one")
    return G


def check_nonlinear_vs_normalized(G, B0, grid: TimeGrid, tol: float = 1e-6,
                                  similarity_matrix=None) -> CheckResult:
    """Nonlinear density flow against the trace-normalized covariance flow.

    The reference uses the closed form ``exp(A t) B0 exp(A t)^dagger`` when
    ``similarity_matrix`` is given, exact exponentials otherwise.
    """
    L = _linear_part(G)
    rho0, _ = normalize_trace(B0)
    nl = propagate_density_nonlinear(L, rho0, grid)
    if similarity_matrix is not None:
        covs = [closed_form_similarity(similarity_matrix, B0, t - grid.t0) for t in grid.times]
    else:
        covs = linear_flow(L, B0, grid).values
    err = max(max_abs(nl.values[k] - C / np.trace(C).real) for k, C in enumerate(covs))
    return CheckResult("nonlinear-vs-normalized", err, 0.0, tol, generator_kind=_kind(G), n=L.dim)


def check_trace_preserving_reduction(G, rho0, grid: TimeGrid, tol: float = 1e-8,
                                     trace_tol: float = 1e-12) -> list[CheckResult]:
    L = _linear_part(G)
    rho0, _ = normalize_trace(rho0)
    nl = propagate_density_nonlinear(L, rho0, grid)
    lin = linear_flow(L, rho0, grid)
    err = max_abs(nl.values - lin.values)
    return [
        CheckResult("trace-defect", max_trace_defect(L), 0.0, trace_tol,
                    generator_kind=_kind(G), n=L.dim),
        CheckResult("trace-preserving-reduction", err, 0.0, tol,
                    generator_kind=_kind(G), n=L.dim),
    ]


def check_complete_positivity(G) -> CheckResult:
    L = _linear_part(G)
    ok = is_completely_positive(L)
    return CheckResult("complete-positivity", 0.0 if ok else 1.0, 0.0, 0.0,
                       generator_kind=_kind(G), n=L.dim)


def check_pde_1d(a: float, b0: float, t: float, xgrid, tol: float = 1e-12) -> CheckResult:
    res = density_pde_residual_1d(a, b0, t, xgrid)
    return CheckResult("pde-1d", res, 0.0, tol, n=1, detail=f"a={a!r} b0={b0!r} t={t!r}")


def check_scalar_closed_form(a: float, b0: float, t: float, method: str = "exact",
                             dt: float = 1e-3, rtol: float = 1e-8) -> CheckResult:
    """One-dimensional ``dB/dt = a B`` against ``b0 exp(a t)``."""
    grid = TimeGrid.with_step(0.0, t, dt)
    traj = propagate_covariance(scalar_generator(a), [[b0]], grid, method)
    ref = b0 * math.exp(a * t)
    return CheckResult("scalar-closed-form", float(traj.final[0, 0].real), ref, rtol * abs(ref),
                       generator_kind="scalar", n=1, detail=f"a={a!r} method={method}")


def check_von_neumann(G, B0, grid: TimeGrid, tol: float = 1e-8) -> list[CheckResult]:
    """Trace, purity and spectrum conservation under ``-i[H, B]``."""
    traj = propagate_covariance(_linear_part(G), B0, grid, "exact")
    tr = traj.traces()
    purity = np.real(np.einsum("kij,kji->k", traj.values, traj.values))
    eig = traj.eigenvalues()
    kw = dict(generator_kind=_kind(G), n=G.dim)
    return [
        CheckResult("von-neumann-trace", float(np.max(np.abs(tr - tr[0]))), 0.0, tol, **kw),
        CheckResult("von-neumann-purity", float(np.max(np.abs(purity - purity[0]))), 0.0, tol, **kw),
        CheckResult("von-neumann-spectrum", float(np.max(np.abs(eig - eig[0]))), 0.0, tol, **kw),
    ]


def check_rk4_vs_exact(G, B0, grid: TimeGrid, tol: float = 1e-6) -> CheckResult:
    a = propagate_covariance(G, B0, grid, "rk4")
    b = propagate_covariance(G, B0, grid, "exact")
    return CheckResult("rk4-vs-exact", max_abs(a.values - b.values), 0.0, tol,
                       generator_kind=_kind(G), n=G.dim)


def covariance_checks(spec: SDESpec, grid: TimeGrid, N: int, seed: int, times,
                      workers: int = 1, name: str = "ito"):
    """Empirical path covariance against the covariance ODE at ``times``.

    Returns ``(results, ensemble, ode_trajectory)``.
    """
    ens = simulate_linear_sde(spec, grid, N, seed, workers)
    ode = ou_covariance_ode(spec, grid)
    results = []
    for t in times:
        k = grid.index_of(t)
        ref = ode.values[k]
        err = max_abs(ens.second_moments[k] - ref)
        results.append(CheckResult(name, err, 0.0, covariance_bound(ref, N, grid.dt),
                                   n=spec.dim, N=N, seed=seed, detail=f"t={grid.times[k]!r}"))
    return results, ens, ode


def check_trace_growth(ens, ode, t: float) -> CheckResult:
    """``E||phi_t||^2`` against the ODE trace; std error is ``sqrt(Tr B_t^2 / N)``."""
    k = ens.grid.index_of(t)
    B = ode.values[k]
    se = math.sqrt(float(np.real(np.trace(B @ B))) / ens.N)
    emp = float(np.trace(ens.second_moments[k]).real)
    return CheckResult("trace-growth", emp, float(np.trace(B).real), 5.0 * se,
                       n=B.shape[0], N=ens.N, seed=ens.seed, std_error=se,
                       detail=f"t={ens.grid.times[k]!r}")


def check_initial_independence(ens) -> CheckResult:
    """Cross-covariance of ``xi0`` with the first standardized increment."""
    B0 = ens.spec.initial_covariance
    scale = math.sqrt(max(max_abs(B0), 1e-300))
    return CheckResult("initial-independence", max_abs(ens.initial_noise_cross), 0.0,
                       5.0 * scale / math.sqrt(ens.N), n=ens.spec.dim, N=ens.N, seed=ens.seed)


def check_norm_conservation(ens, ode) -> CheckResult:
    """For anti-Hermitian drift and no noise, ``E||phi||^2`` may grow only by the
    Euler factor ``prod_k ||I + dt A||^2``."""
    dt = ens.grid.dt
    growth = 1.0
    for t in ens.grid.times[:-1]:
        A = ens.spec.drift.at(t - ens.grid.t0)
        growth *= np.linalg.norm(np.eye(A.shape[0]) + dt * A, 2) ** 2
    tr = np.real(np.trace(ens.second_moments, axis1=1, axis2=2))
    drift = float(np.max(np.abs(tr / tr[0] - 1.0))) if tr[0] > 0 else 0.0
    return CheckResult("norm-conservation", drift, 0.0, (growth - 1.0) + 1e-12,
                       n=ens.spec.dim, N=ens.N, seed=ens.seed)
