"""Command-line front end.

::

    preq propagate --config scenario.json --out results/
    preq verify    --config scenario.json --seed 7
    preq paths     --config scenario.json --workers 4
    preq coeffs    --config scenario.json --format json

Exit status: 0 when every check passes, 1 when a check fails (or a solver
gives up), 2 for configuration or usage errors.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import checks as C
from . import io
from .config import ConfigError, Scenario, load_scenario, resolve_seed
from .dynamics import (
    StepSizeError,
    brownian_density_rate,
    propagate_covariance,
    propagate_density_nonlinear,
)
from .generators import AffineGenerator, Superoperator, coefficient_tensor
from .kernels import BACKEND
from .operators import OperatorError, as_positive, max_abs, normalize_trace
from .stochastic import SDESpec, ou_covariance_ode, simulate_linear_sde

log = logging.getLogger("preq")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunReport:
    command: str
    config_digest: str
    seed: int
    checks: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    duration: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self, include_timing: bool = False) -> dict:
        out = {
            "command": self.command,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "backend": BACKEND,
            "pass": self.passed,
            "checks": [c.to_json() for c in self.checks],
            "warnings": self.warnings,
            "summary": self.summary,
            "outputs": self.outputs,
        }
        if include_timing:
            out["duration_seconds"] = self.duration
        return out


def _need(scn: Scenario, *names: str, why: str):
    missing = [n for n in names if getattr(scn, n) is None]
    if missing:
        raise ConfigError(f"{why} needs {', '.join(missing)} in the config")


def _write(report: RunReport, out: str, name: str, fmt: str, csv_fn, json_obj_fn):
    path = os.path.join(out, f"{name}.{fmt}")
    if fmt == "csv":
        csv_fn(path)
    else:
        io.write_json(path, json_obj_fn())
    report.outputs.append(os.path.basename(path))


def run_propagate(scn: Scenario, report: RunReport, out: str, fmt: str, workers: int) -> None:
    _need(scn, "generator", "initial", "grid", why="propagate")
    G = scn.generator.generator
    opts = scn.propagate
    method = opts.get("method", "exact")
    is_linear = isinstance(G, Superoperator)
    want_density = opts.get("density", is_linear)
    if want_density and not is_linear:
        raise ConfigError("propagate.density: the nonlinear density flow needs a linear generator")

    if opts.get("covariance", True):
        traj = propagate_covariance(G, scn.initial, scn.grid, method)
        _write(report, out, "covariance", fmt,
               lambda p: io.write_trajectory_csv(p, traj), lambda: io.trajectory_to_json(traj))
        tr = traj.traces()
        report.summary["covariance"] = {
            "method": method,
            "final_trace": float(tr[-1]),
            "trace_min": float(tr.min()),
            "trace_max": float(tr.max()),
            "min_eigenvalue": float(traj.min_eigenvalues().min()),
        }
        report.warnings += [dict(w._asdict(), trajectory="covariance") for w in traj.warnings]

    if want_density:
        rho0, _ = normalize_trace(scn.initial)
        traj = propagate_density_nonlinear(G, rho0, scn.grid)
        _write(report, out, "density", fmt,
               lambda p: io.write_trajectory_csv(p, traj), lambda: io.trajectory_to_json(traj))
        drift = float(np.max(np.abs(traj.traces() - 1.0)))
        report.summary["density"] = {
            "trace_drift": drift,
            "min_eigenvalue": float(traj.min_eigenvalues().min()),
        }
        report.warnings += [dict(w._asdict(), trajectory="density") for w in traj.warnings]
        report.checks.append(C.CheckResult("trace-drift", drift, 0.0, 1e-8,
                                           generator_kind=scn.generator.kind, n=scn.dim))


def _pde_inputs(scn: Scenario):
    p = scn.verify.get("pde_1d")
    if p is None:
        raise ConfigError("checks 'pde-1d' and 'scalar-closed-form' need verify.pde_1d {a, b0, t}")
    x_min, x_max, step = p.get("x_min", -5.0), p.get("x_max", 5.0), p.get("x_step", 0.1)
    xs = x_min + step * np.arange(int(round((x_max - x_min) / step)) + 1)
    return float(p["a"]), float(p["b0"]), float(p["t"]), xs


def _verify_one(name: str, scn: Scenario, seed: int, workers: int) -> list:
    N = scn.samples
    if name in ("bridge", "scaling"):
        _need(scn, "initial", "observable", "samples", why=name)
        fn = C.check_bridge if name == "bridge" else C.check_scaling
        return [fn(as_positive(scn.initial), scn.observable, N, seed, workers)]
    if name == "dispersion":
        _need(scn, "initial", "samples", why=name)
        return [C.check_dispersion(as_positive(scn.initial), N, seed, workers)]
    if name == "covariance-recovery":
        _need(scn, "initial", "samples", why=name)
        return [C.check_covariance_recovery(as_positive(scn.initial), N, seed, workers)]
    if name == "moment":
        _need(scn, "generator", "initial", why=name)
        return [C.check_moment(scn.generator.generator, scn.initial)]
    if name == "nonlinear-vs-normalized":
        _need(scn, "generator", "initial", "grid", why=name)
        return [C.check_nonlinear_vs_normalized(scn.generator.generator, scn.initial, scn.grid,
                                                similarity_matrix=scn.generator.matrix)]
    if name == "trace-preserving-reduction":
        _need(scn, "generator", "initial", "grid", why=name)
        return C.check_trace_preserving_reduction(scn.generator.generator, scn.initial, scn.grid)
    if name == "complete-positivity":
        _need(scn, "generator", why=name)
        return [C.check_complete_positivity(scn.generator.generator)]
    if name == "rk4-vs-exact":
        _need(scn, "generator", "initial", "grid", why=name)
        return [C.check_rk4_vs_exact(scn.generator.generator, scn.initial, scn.grid)]
    if name == "von-neumann":
        _need(scn, "generator", "initial", "grid", why=name)
        if scn.generator.kind != "commutator":
            raise ConfigError("check 'von-neumann' needs a commutator generator")
        return C.check_von_neumann(scn.generator.generator, scn.initial, scn.grid)
    if name == "pde-1d":
        a, b0, t, xs = _pde_inputs(scn)
        return [C.check_pde_1d(a, b0, t, xs)]
    if name == "scalar-closed-form":
        a, b0, t, _ = _pde_inputs(scn)
        return [C.check_scalar_closed_form(a, b0, t, m) for m in ("exact", "rk4")]
    if name in ("brownian", "ito"):
        _need(scn, "paths", "grid", "samples", why=name)
        times = scn.paths.check_times or (scn.grid.t1,)
        res, ens, ode = C.covariance_checks(scn.paths.spec, scn.grid, N, seed, times, workers, name)
        return res + [C.check_initial_independence(ens)]
    raise KeyError(name)


VERIFY_CHECKS = (
    "bridge", "dispersion", "scaling", "covariance-recovery", "moment",
    "nonlinear-vs-normalized", "trace-preserving-reduction", "complete-positivity",
    "rk4-vs-exact", "von-neumann", "pde-1d", "scalar-closed-form", "brownian", "ito",
)


def run_verify(scn: Scenario, report: RunReport, out: str, fmt: str, workers: int) -> None:
    names = scn.verify.get("checks")
    if not names:
        raise ConfigError("verify needs verify.checks in the config")
    unknown = [n for n in names if n not in VERIFY_CHECKS]
    if unknown:
        raise ConfigError(f"unknown check(s) {unknown}; available: {', '.join(VERIFY_CHECKS)}")
    for name in names:
        report.checks += _verify_one(name, scn, report.seed, workers)


def _is_unitary_drift(spec: SDESpec) -> bool:
    if max_abs(spec.diffusion) > 0:
        return False
    return all(max_abs(A + A.conj().T) <= 1e-12 * (1 + max_abs(A)) for _, A in spec.drift.segments)


def run_paths(scn: Scenario, report: RunReport, out: str, fmt: str, workers: int) -> None:
    _need(scn, "paths", "grid", "samples", why="paths")
    pc = scn.paths
    grid = scn.grid
    times = pc.check_times or (grid.t1,)
    spec = pc.spec
    name = "brownian" if pc.process == "brownian" else "ito"
    ens = simulate_linear_sde(spec, grid, scn.samples, report.seed, workers, pc.record_paths)
    ode = ou_covariance_ode(spec, grid)
    for t in times:
        k = grid.index_of(t)
        ref = ode.values[k]
        report.checks.append(C.CheckResult(
            name, max_abs(ens.second_moments[k] - ref), 0.0,
            C.covariance_bound(ref, ens.N, grid.dt), n=spec.dim, N=ens.N, seed=ens.seed,
            detail=f"t={grid.times[k]!r}"))
        report.checks.append(C.check_trace_growth(ens, ode, t))
    report.checks.append(C.check_initial_independence(ens))
    if _is_unitary_drift(spec):
        report.checks.append(C.check_norm_conservation(ens, ode))
    if pc.process == "brownian":
        # time-dependent coefficient of the normalized Brownian flow
        diag = []
        for t in times:
            try:
                _, coef = brownian_density_rate(spec.initial_covariance, spec.diffusion, t - grid.t0)
            except OperatorError:
                continue
            diag.append({"t": float(t), "coefficient": coef})
        report.summary["brownian_density_rate_coefficient"] = diag

    _write(report, out, "paths_summary", fmt,
           lambda p: io.write_paths_summary_csv(p, ens, ode),
           lambda: io.paths_summary_to_json(ens, ode))
    if pc.record_paths:
        path = os.path.join(out, "paths_full.csv")
        io.write_paths_full_csv(path, ens)
        report.outputs.append("paths_full.csv")


def run_coeffs(scn: Scenario, report: RunReport, out: str, fmt: str, workers: int) -> None:
    _need(scn, "generator", why="coeffs")
    G = scn.generator.generator
    linear = G.linear if isinstance(G, AffineGenerator) else G
    tensor = coefficient_tensor(linear)
    _write(report, out, "coefficients", fmt,
           lambda p: io.write_tensor_csv(p, tensor), lambda: io.tensor_to_json(tensor))
    if scn.initial is not None:
        report.checks.append(C.check_moment(G, scn.initial))


COMMANDS = {
    "propagate": run_propagate,
    "verify": run_verify,
    "paths": run_paths,
    "coeffs": run_coeffs,
}


def _seed_arg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return v


def _workers_arg(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("workers must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="preq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("propagate", "integrate covariance and nonlinear density trajectories"),
        ("verify", "run named verification checks"),
        ("paths", "simulate Brownian / linear-SDE path ensembles against the covariance ODE"),
        ("coeffs", "dump the coefficient tensor of the generator"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--seed", type=_seed_arg, default=None, help="overrides the config seed")
        p.add_argument("--out", default=".", metavar="DIR")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--workers", type=_workers_arg, default=1,
                       help="parallel workers; affects speed only")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    start = time.perf_counter()
    try:
        scn = load_scenario(args.config)
        seed = resolve_seed(args.seed, scn)
        fmt = args.format or scn.format or "csv"
        os.makedirs(args.out, exist_ok=True)
        report = RunReport(args.command, scn.digest(), seed)
        COMMANDS[args.command](scn, report, args.out, fmt, args.workers)
    except (ConfigError, OperatorError) as exc:
        log.error("config error: %s", exc)
        return EXIT_USAGE
    except StepSizeError as exc:
        log.error("solver error: %s", exc)
        return EXIT_FAIL
    report.duration = time.perf_counter() - start
    io.write_json(os.path.join(args.out, "report.json"), report.to_json())
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        extra = f" [{c.detail}]" if c.detail else ""
        print(f"{status} {c.check}{extra}: value={c.value:.6g} reference={c.reference:.6g} "
              f"tol={c.tolerance:.3g}")
    for w in report.warnings:
        log.warning("warning: %s", w)
    log.info("%s finished in %.2fs (backend=%s)", args.command, report.duration, BACKEND)
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
