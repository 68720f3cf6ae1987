"""Experiment configuration: a single YAML file with nested blocks.

Every block is explicit; the only defaulting bundle is the partition preset
``dyadic-sup`` (hypercube, sup norm, K = 2^d, delta = nu' = 1/2 scaled by
the side length).  A sha256 hash of the canonical config is embedded in all
outputs so every emitted number is traceable to its configuration.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import yaml

from .costs import build_cost
from .environments import Environment, make_bump
from .geometry import Partition, SearchDomain, dyadic_sup_partition
from .objectives import Objective, load_table, make_builtin

ALGORITHMS = ("cmfdoo", "cmfstooo")


class ConfigError(Exception):
    """Invalid experiment configuration; the message names the field."""


@dataclass
class ExperimentConfig:
    raw: dict
    partition: Partition
    objective: Objective
    environment_kind: str
    bump_spec: Optional[dict]
    algorithm: str
    cost: object
    eps_list: list[float]
    budget: float
    max_depth: int
    seeds: list[int]
    grid_resolution: float
    gamma: float
    variance: float
    noise_dist: str
    out_dir: Optional[str]

    @property
    def L(self) -> float:
        return self.objective.L_declared

    @property
    def hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, default=str)
        return hashlib.sha256(canonical.encode()).hexdigest()[:12]

    def make_environment(self) -> Environment:
        bump = None
        if self.environment_kind == "bump":
            spec = self.bump_spec or {}
            bump = make_bump(
                self.objective,
                center=spec.get("center", self.objective.maximizer_hint),
                scale=float(spec.get("scale", 0.1)),
                sign=int(spec.get("sign", 1)),
            )
        return Environment(self.environment_kind, self.objective, bump=bump)


def _require(block: dict, key: str, where: str):
    if key not in block:
        raise ConfigError(f"{where}.{key}: missing required field")
    return block[key]


def _build_partition(block: dict) -> Partition:
    if not isinstance(block, dict):
        raise ConfigError("partition: must be a mapping")
    preset = block.get("preset")
    dim = int(_require(block, "dim", "partition"))
    if dim < 1:
        raise ConfigError("partition.dim: must be a positive integer")
    box = block.get("box")
    if box is None:
        box = [[0.0, 1.0]] * dim
    if len(box) != dim:
        raise ConfigError("partition.box: needs one interval per dimension")
    if preset is not None:
        if preset != "dyadic-sup":
            raise ConfigError(f"partition.preset: unknown preset {preset!r}")
        return dyadic_sup_partition(dim, box)
    norm = _require(block, "norm", "partition")
    arity = int(_require(block, "K", "partition"))
    delta = float(_require(block, "delta", "partition"))
    R = float(_require(block, "R", "partition"))
    nu = float(_require(block, "nu", "partition"))
    if not 0.0 < delta < 1.0:
        raise ConfigError(f"partition.delta: must be in (0, 1), got {delta}")
    if R <= 0.0:
        raise ConfigError("partition.R: must be positive")
    if nu <= 0.0:
        raise ConfigError("partition.nu: must be positive")
    try:
        domain = SearchDomain(box, norm=norm)
        return Partition(domain, arity=arity, delta=delta, R=R, nu=nu)
    except ValueError as exc:
        raise ConfigError(f"partition: {exc}") from exc


def _build_objective(block: dict, domain: SearchDomain) -> Objective:
    if not isinstance(block, dict):
        raise ConfigError("objective: must be a mapping")
    name = _require(block, "name", "objective")
    params = block.get("params", {}) or {}
    L = block.get("L")
    L = float(L) if L is not None else None
    try:
        if name == "table":
            return load_table(_require(params, "path", "objective.params"), norm=domain.norm, L_declared=L)
        return make_builtin(name, params=params, domain=domain, L_declared=L)
    except ValueError as exc:
        raise ConfigError(f"objective: {exc}") from exc


def _build_cost(block: dict):
    if not isinstance(block, dict):
        raise ConfigError("cost: must be a mapping")
    kind = _require(block, "kind", "cost")
    try:
        if kind == "tabulated":
            return build_cost(kind, table=_require(block, "table", "cost"))
        return build_cost(kind, **{k: v for k, v in block.items() if k != "kind"})
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"cost: {exc}") from exc


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("config root: must be a mapping")
    return parse_config(raw)


def parse_config(raw: dict) -> ExperimentConfig:
    partition = _build_partition(_require(raw, "partition", "config"))
    objective = _build_objective(_require(raw, "objective", "config"), partition.domain)
    env_block = raw.get("environment", {"kind": "noiseless"})
    env_kind = env_block.get("kind", "noiseless")
    if env_kind not in ("noiseless", "pessimistic", "optimistic", "collaborative", "bump"):
        raise ConfigError(f"environment.kind: unknown kind {env_kind!r}")
    algorithm = raw.get("algorithm", "cmfdoo")
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"algorithm: must be one of {ALGORITHMS}, got {algorithm!r}")
    cost = _build_cost(raw.get("cost", {"kind": "constant", "c0": 1.0}))

    eps_raw = _require(raw, "eps", "config")
    eps_list = [float(e) for e in (eps_raw if isinstance(eps_raw, (list, tuple)) else [eps_raw])]
    eps0 = objective.L_declared * partition.domain.diameter
    for e in eps_list:
        if not 0.0 < e < eps0:
            raise ConfigError(f"eps: value {e} outside (0, eps0={eps0})")

    budget = float(raw.get("budget", math.inf))
    if budget <= 0.0:
        raise ConfigError("budget: must be positive")
    max_depth = int(raw.get("max_depth", 40))
    if max_depth < 1:
        raise ConfigError("max_depth: must be >= 1")

    seeds = raw.get("seeds", [0])
    if not isinstance(seeds, (list, tuple)) or not seeds:
        raise ConfigError("seeds: must be a nonempty list")
    seeds = [int(s) for s in seeds]

    grid_resolution = float(raw.get("grid_resolution", 0.01))
    if grid_resolution <= 0.0:
        raise ConfigError("grid_resolution: must be positive")

    sto = raw.get("stochastic", {}) or {}
    gamma = float(sto.get("gamma", 0.1))
    if not 0.0 < gamma < 1.0:
        raise ConfigError("stochastic.gamma: must be in (0, 1)")
    variance = float(sto.get("v", 0.0))
    if variance < 0.0:
        raise ConfigError("stochastic.v: must be nonnegative")
    noise_dist = sto.get("noise", "gaussian")
    if noise_dist not in ("gaussian", "uniform"):
        raise ConfigError(f"stochastic.noise: unknown distribution {noise_dist!r}")
    if algorithm == "cmfstooo" and variance > 0 and not seeds:
        raise ConfigError("seeds: required for stochastic runs")

    return ExperimentConfig(
        raw=raw,
        partition=partition,
        objective=objective,
        environment_kind=env_kind,
        bump_spec=env_block.get("bump"),
        algorithm=algorithm,
        cost=cost,
        eps_list=eps_list,
        budget=budget,
        max_depth=max_depth,
        seeds=seeds,
        grid_resolution=grid_resolution,
        gamma=gamma,
        variance=variance,
        noise_dist=noise_dist,
        out_dir=raw.get("out_dir"),
    )
