"""CSV and JSON writers for trajectories, path summaries and tensors.

Floats are written with 17 significant digits so files round-trip exactly.
"""
from __future__ import annotations

import csv
import json

import numpy as np

from .operators import matrix_to_json


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _entry_names(n: int, prefix: str = "") -> list[str]:
    names = []
    for i in range(n):
        for j in range(n):
            names += [f"{prefix}re_{i}{j}" if n < 10 else f"{prefix}re_{i}_{j}",
                      f"{prefix}im_{i}{j}" if n < 10 else f"{prefix}im_{i}_{j}"]
    return names


def _entries(M: np.ndarray) -> list[str]:
    out = []
    for z in np.asarray(M).reshape(-1):
        out += [fmt(z.real), fmt(z.imag)]
    return out


def write_trajectory_csv(path, traj) -> None:
    """Columns: t, re/im of each entry (row-major), trace, min_eigenvalue."""
    n = traj.dim
    traces = traj.traces()
    lam = traj.min_eigenvalues()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *_entry_names(n), "trace", "min_eigenvalue"])
        for k, t in enumerate(traj.times):
            w.writerow([fmt(t), *_entries(traj.values[k]), fmt(traces[k]), fmt(lam[k])])


def trajectory_to_json(traj) -> dict:
    return {
        "kind": traj.kind,
        "t": [float(t) for t in traj.times],
        "values": [matrix_to_json(M) for M in traj.values],
        "trace": [float(x) for x in traj.traces()],
        "min_eigenvalue": [float(x) for x in traj.min_eigenvalues()],
        "warnings": [w._asdict() for w in traj.warnings],
    }


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False, allow_nan=True)
        fh.write("\n")


def write_paths_summary_csv(path, ens, ode) -> None:
    """Empirical second moments beside the covariance ODE at every grid point."""
    n = ens.spec.dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *_entry_names(n), "trace", *_entry_names(n, "ode_"), "ode_trace",
                    "max_abs_diff"])
        for k, t in enumerate(ens.grid.times):
            emp = ens.second_moments[k]
            ref = ode.values[k]
            w.writerow([fmt(t), *_entries(emp), fmt(np.trace(emp).real),
                        *_entries(ref), fmt(np.trace(ref).real),
                        fmt(np.max(np.abs(emp - ref)))])


def paths_summary_to_json(ens, ode) -> dict:
    return {
        "t": [float(t) for t in ens.grid.times],
        "empirical": [matrix_to_json(M) for M in ens.second_moments],
        "ode": [matrix_to_json(M) for M in ode.values],
        "N": ens.N,
        "seed": ens.seed,
    }


def write_paths_full_csv(path, ens) -> None:
    n = ens.spec.dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "t", *[f"{p}_{i}" for i in range(n) for p in ("re", "im")]])
        for p in range(ens.N):
            for k, t in enumerate(ens.grid.times):
                row = [str(p), fmt(t)]
                for z in ens.paths[p, k]:
                    row += [fmt(z.real), fmt(z.imag)]
                w.writerow(row)


def write_tensor_csv(path, tensor) -> None:
    n = tensor.dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "m", "i", "j", "re", "im"])
        for idx in np.ndindex(n, n, n, n):
            z = tensor.values[idx]
            w.writerow([*map(str, idx), fmt(z.real), fmt(z.imag)])


def tensor_to_json(tensor) -> dict:
    v = tensor.values
    return {
        "dim": tensor.dim,
        "index_order": ["k", "m", "i", "j"],
        "values": [[[[[float(z.real), float(z.imag)] for z in row] for row in v[k, m]]
                    for m in range(tensor.dim)] for k in range(tensor.dim)],
    }
