"""Strict parsing of JSON scenario files.

Matrices use the shared format: row-major nested arrays of ``[re, im]``
pairs.  Unknown keys anywhere in the scenario are rejected.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .dynamics import TimeGrid
from .generators import (
    DriftSchedule,
    GKSLSpec,
    build_affine,
    build_commutator,
    build_gksl,
    build_similarity,
    scalar_generator,
)
from .operators import OperatorError, matrix_from_json
from .stochastic import SDESpec

SEED_ENV = "PREQ_DEFAULT_SEED"
GENERATOR_KINDS = ("gksl", "commutator", "similarity", "affine", "scalar")


class ConfigError(ValueError):
    pass


def _strict(d: Any, where: str, required=(), optional=()) -> dict:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object, got {type(d).__name__}")
    unknown = set(d) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = [k for k in required if k not in d]
    if missing:
        raise ConfigError(f"{where}: missing key(s) {missing}")
    return d


def _matrix(data, where: str, dim: int) -> np.ndarray:
    try:
        M = matrix_from_json(data)
    except OperatorError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    if M.shape[0] != dim:
        raise ConfigError(f"{where}: expected {dim}x{dim} matrix, got {M.shape[0]}x{M.shape[0]}")
    return M


def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _int(x, where: str, minimum: int = 0) -> int:
    if isinstance(x, bool) or not isinstance(x, int) or x < minimum:
        raise ConfigError(f"{where}: expected an integer >= {minimum}, got {x!r}")
    return x


@dataclass(frozen=True)
class GeneratorConfig:
    kind: str
    generator: Any
    matrix: np.ndarray | None = None  # drift matrix for similarity generators


def parse_generator(d, dim: int, where: str = "generator") -> GeneratorConfig:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError(f"{where}: needs a 'kind' among {list(GENERATOR_KINDS)}")
    kind = d["kind"]
    try:
        if kind == "gksl":
            _strict(d, where, ("kind", "hamiltonian"), ("jumps",))
            jumps = []
            for i, j in enumerate(d.get("jumps", [])):
                _strict(j, f"{where}.jumps[{i}]", ("operator", "rate"))
                jumps.append((_matrix(j["operator"], f"{where}.jumps[{i}].operator", dim),
                              _number(j["rate"], f"{where}.jumps[{i}].rate")))
            H = _matrix(d["hamiltonian"], f"{where}.hamiltonian", dim)
            return GeneratorConfig(kind, build_gksl(GKSLSpec(H, tuple(jumps))))
        if kind == "commutator":
            _strict(d, where, ("kind", "hamiltonian"))
            return GeneratorConfig(kind, build_commutator(_matrix(d["hamiltonian"], f"{where}.hamiltonian", dim)))
        if kind == "similarity":
            _strict(d, where, ("kind", "matrix"))
            A = _matrix(d["matrix"], f"{where}.matrix", dim)
            return GeneratorConfig(kind, build_similarity(A), A)
        if kind == "affine":
            _strict(d, where, ("kind", "linear", "sigma"), ("diffusion",))
            inner = parse_generator(d["linear"], dim, f"{where}.linear")
            if inner.kind == "affine":
                raise ConfigError(f"{where}.linear: nested affine generators are not allowed")
            sigma = _matrix(d["sigma"], f"{where}.sigma", dim)
            diffusion = d.get("diffusion", True)
            if not isinstance(diffusion, bool):
                raise ConfigError(f"{where}.diffusion: expected true/false")
            return GeneratorConfig(kind, build_affine(inner.generator, sigma, diffusion))
        if kind == "scalar":
            _strict(d, where, ("kind", "rate"))
            if dim != 1:
                raise ConfigError(f"{where}: scalar generators need dim = 1")
            return GeneratorConfig(kind, scalar_generator(_number(d["rate"], f"{where}.rate")))
    except OperatorError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: unknown kind {kind!r}; expected one of {list(GENERATOR_KINDS)}")


def parse_grid(d, where: str = "grid") -> TimeGrid:
    _strict(d, where, ("t1",), ("t0", "steps", "dt"))
    t0 = _number(d.get("t0", 0.0), f"{where}.t0")
    t1 = _number(d["t1"], f"{where}.t1")
    if "steps" in d and "dt" in d:
        raise ConfigError(f"{where}: give either 'steps' or 'dt', not both")
    try:
        if "steps" in d:
            return TimeGrid(t0, t1, _int(d["steps"], f"{where}.steps", 1))
        return TimeGrid.with_step(t0, t1, _number(d.get("dt", 1e-3), f"{where}.dt"))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class PathsConfig:
    spec: SDESpec
    process: str
    check_times: tuple
    record_paths: bool


def parse_paths(d, dim: int, initial, where: str = "paths") -> PathsConfig:
    _strict(d, where, ("process", "sigma"), ("drift", "check_times", "record_paths"))
    process = d["process"]
    if process not in ("brownian", "linear_sde"):
        raise ConfigError(f"{where}.process: expected 'brownian' or 'linear_sde', got {process!r}")
    sigma = _matrix(d["sigma"], f"{where}.sigma", dim)
    drift = d.get("drift")
    if process == "brownian":
        if drift is not None:
            raise ConfigError(f"{where}: brownian process takes no drift")
        schedule = DriftSchedule.constant(np.zeros((dim, dim)))
    elif drift is None:
        raise ConfigError(f"{where}: linear_sde needs a drift")
    elif isinstance(drift, list) and drift and isinstance(drift[0], dict):
        segs = []
        for i, seg in enumerate(drift):
            _strict(seg, f"{where}.drift[{i}]", ("matrix",), ("duration",))
            dur = _number(seg.get("duration", float("inf")), f"{where}.drift[{i}].duration")
            segs.append((dur, _matrix(seg["matrix"], f"{where}.drift[{i}].matrix", dim)))
        schedule = DriftSchedule(tuple(segs))
    else:
        schedule = DriftSchedule.constant(_matrix(drift, f"{where}.drift", dim))
    if initial is None:
        raise ConfigError(f"{where}: needs the top-level 'initial' covariance")
    try:
        spec = SDESpec(schedule, sigma, initial)
    except OperatorError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    times = tuple(_number(t, f"{where}.check_times") for t in d.get("check_times", []))
    record = d.get("record_paths", False)
    if not isinstance(record, bool):
        raise ConfigError(f"{where}.record_paths: expected true/false")
    return PathsConfig(spec, process, times, record)


TOP_KEYS = ("dim", "generator", "initial", "observable", "grid", "samples", "seed",
            "format", "propagate", "verify", "paths")


@dataclass(frozen=True)
class Scenario:
    raw: dict
    dim: int
    generator: GeneratorConfig | None = None
    initial: np.ndarray | None = None
    observable: np.ndarray | None = None
    grid: TimeGrid | None = None
    samples: int | None = None
    seed: int | None = None
    format: str | None = None
    propagate: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    paths: PathsConfig | None = None

    def digest(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def parse_scenario(raw: dict) -> Scenario:
    _strict(raw, "scenario", ("dim",), TOP_KEYS[1:])
    dim = _int(raw["dim"], "dim", 1)
    kw: dict = {"raw": raw, "dim": dim}
    if "generator" in raw:
        kw["generator"] = parse_generator(raw["generator"], dim)
    if "initial" in raw:
        kw["initial"] = _matrix(raw["initial"], "initial", dim)
    if "observable" in raw:
        kw["observable"] = _matrix(raw["observable"], "observable", dim)
    if "grid" in raw:
        kw["grid"] = parse_grid(raw["grid"])
    if "samples" in raw:
        kw["samples"] = _int(raw["samples"], "samples", 1)
    if "seed" in raw:
        kw["seed"] = _int(raw["seed"], "seed", 0)
    if "format" in raw:
        if raw["format"] not in ("csv", "json"):
            raise ConfigError(f"format: expected 'csv' or 'json', got {raw['format']!r}")
        kw["format"] = raw["format"]
    if "propagate" in raw:
        p = _strict(raw["propagate"], "propagate", (), ("method", "covariance", "density"))
        if p.get("method", "exact") not in ("exact", "rk4"):
            raise ConfigError("propagate.method: expected 'exact' or 'rk4'")
        for key in ("covariance", "density"):
            if not isinstance(p.get(key, True), bool):
                raise ConfigError(f"propagate.{key}: expected true/false")
        kw["propagate"] = p
    if "verify" in raw:
        v = _strict(raw["verify"], "verify", ("checks",), ("pde_1d",))
        if not isinstance(v["checks"], list) or not all(isinstance(c, str) for c in v["checks"]):
            raise ConfigError("verify.checks: expected a list of check names")
        if "pde_1d" in v:
            _strict(v["pde_1d"], "verify.pde_1d", ("a", "b0", "t"), ("x_min", "x_max", "x_step"))
        kw["verify"] = v
    if "paths" in raw:
        kw["paths"] = parse_paths(raw["paths"], dim, kw.get("initial"))
    return Scenario(**kw)


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_scenario(raw)


def resolve_seed(cli_seed: int | None, scenario: Scenario) -> int:
    """``--seed`` beats the config seed, which beats ``$PREQ_DEFAULT_SEED``; else 0."""
    if cli_seed is not None:
        return cli_seed
    if scenario.seed is not None:
        return scenario.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            seed = int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None
        if not 0 <= seed < 2**64:
            raise ConfigError(f"{SEED_ENV} out of range: {seed}")
        return seed
    return 0
