"""Declarative run configuration: schema, validation, and factories.

A run is described by one YAML (or JSON) key-value tree::

    problem:
      kind: dictionary            # dictionary | toy | poisson-em | gmm-em | quad-regression
      lam: 0.1                    # per-kind hyperparameters, see below
      eta: 0.2
      n_atoms: 15
      solver: {max_iter: 10000, kkt_tol: 1.0e-8}
    data:
      source: synthetic           # synthetic | csv
      p: 30                       # synthetic: observation dimension
      tot: 5000                   # synthetic: number of samples
      sparsity: 0.2
      path: ratings.csv           # csv: input file
      has_header: false
    split:
      mode: balanced-kmeans       # balanced-kmeans | homogeneous
      n: 20
      iters: 50
    algorithm: fedmm              # fedmm | naive-theta | sa-ssmm | deterministic-mm
    federation:
      alpha: 0.01
      participation: 0.5
      compression: {kind: quantization, bits: 8}   # identity | quantization | rand-k
      batch_size: 50              # omit / null for full local batches
      b_geometry: identity        # identity | problem
      v_init: zeros               # zeros | exact-local-field
      enforce_alpha_bound: false
    schedule: {kind: sqrt-decay, beta: 0.05}       # constant {gamma} | harmonic
    run:
      t_max: 300
      repeats: 10
      master_seed: 1234
      out: results/hetero        # prefix; writes <out>_long.csv and <out>_summary.csv
      e_sp_cadence: 10

Problem hyperparameters by kind:

* dictionary: lam >= 0, eta > 0, n_atoms, optional solver block
* toy: no extras (one-column positive data)
* poisson-em: lam > 0, optional latent_values/latent_weights, bound, mc_draws
* gmm-em: lam > 0, components L, optional weights (default uniform),
  cov_scale (isotropic covariances, default 1.0) or explicit covariances
* quad-regression: rho > 0, reg {kind: none|l1|box, lam, lo, hi};
  rows are [features..., target]

Overrides use dotted paths (``--override run.t_max=50``); values parse as
YAML scalars and the last flag wins.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import yaml

from .compression import CompressionSpec
from .datasets import (Dataset, balanced_kmeans_split, gen_synthetic_dict,
                       homogeneous_partition, load_matrix_csv)
from .errors import ConfigError
from .federation import FedConfig
from .problems import (DictLearningProblem, GmmEMProblem, PoissonEMProblem,
                       Regularizer, SolverConfig, least_squares_problem)
from .problems.toy import ToyScalarProblem
from .rng import data_rng, split_rng
from .surrogate import StepSchedule

ALGORITHMS = ("fedmm", "naive-theta", "sa-ssmm", "deterministic-mm")
PROBLEM_KINDS = ("dictionary", "toy", "poisson-em", "gmm-em", "quad-regression")


@dataclass
class RunConfig:
    problem: dict
    data: dict
    split: dict
    algorithm: str
    federation: FedConfig
    schedule: StepSchedule
    t_max: int
    repeats: int
    master_seed: int
    out_prefix: str
    e_sp_cadence: int
    tree: dict = field(repr=False, default_factory=dict)


def _need(tree: dict, path: str, key: str, typ, default=None, required=False):
    full = f"{path}.{key}" if path else key
    if key not in tree or tree[key] is None:
        if required:
            raise ConfigError(full, "missing required field")
        return default
    val = tree[key]
    if typ is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if typ is not None and not isinstance(val, typ):
        raise ConfigError(full, f"expected {typ.__name__}, got {type(val).__name__}")
    return val


def _positive(value, path, strict=True):
    if value is None:
        return value
    if strict and value <= 0 or not strict and value < 0:
        raise ConfigError(path, f"must be {'>' if strict else '>='} 0, got {value}")
    return value


def _known_keys(tree: dict, path: str, allowed):
    for key in tree:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown field")


def validate_config(tree: dict) -> RunConfig:
    """Check the whole tree and build the typed run configuration."""
    if not isinstance(tree, dict):
        raise ConfigError("", "config root must be a mapping")
    _known_keys(tree, "", {"problem", "data", "split", "algorithm", "federation",
                           "schedule", "run"})

    problem = _need(tree, "", "problem", dict, required=True)
    kind = _need(problem, "problem", "kind", str, required=True)
    if kind not in PROBLEM_KINDS:
        raise ConfigError("problem.kind", f"unknown kind {kind!r}")
    _validate_problem(problem, kind)

    data = _need(tree, "", "data", dict, required=True)
    _known_keys(data, "data", {"source", "p", "tot", "sparsity", "path", "has_header"})
    source = _need(data, "data", "source", str, required=True)
    if source not in ("synthetic", "csv"):
        raise ConfigError("data.source", f"unknown source {source!r}")
    if source == "synthetic":
        if kind != "dictionary":
            raise ConfigError("data.source", "synthetic generation is dictionary-shaped; "
                                             "use csv data for other problems")
        _positive(_need(data, "data", "p", int, required=True), "data.p")
        _positive(_need(data, "data", "tot", int, required=True), "data.tot")
        sp = _need(data, "data", "sparsity", float, default=0.2)
        if not 0.0 < sp <= 1.0:
            raise ConfigError("data.sparsity", "must lie in (0, 1]")
    else:
        _need(data, "data", "path", str, required=True)

    split = _need(tree, "", "split", dict, required=True)
    _known_keys(split, "split", {"mode", "n", "iters"})
    mode = _need(split, "split", "mode", str, required=True)
    if mode not in ("balanced-kmeans", "homogeneous"):
        raise ConfigError("split.mode", f"unknown mode {mode!r}")
    _positive(_need(split, "split", "n", int, required=True), "split.n")
    _positive(_need(split, "split", "iters", int, default=50), "split.iters")

    algorithm = _need(tree, "", "algorithm", str, required=True)
    if algorithm not in ALGORITHMS:
        raise ConfigError("algorithm", f"unknown algorithm {algorithm!r}")

    sched_tree = _need(tree, "", "schedule", dict, required=True)
    _known_keys(sched_tree, "schedule", {"kind", "gamma", "beta"})
    sched_kind = _need(sched_tree, "schedule", "kind", str, required=True)
    if sched_kind == "constant":
        schedule = StepSchedule.constant(_need(sched_tree, "schedule", "gamma", float, required=True))
    elif sched_kind == "sqrt-decay":
        schedule = StepSchedule.sqrt_decay(_need(sched_tree, "schedule", "beta", float, required=True))
    elif sched_kind == "harmonic":
        schedule = StepSchedule.harmonic()
    else:
        raise ConfigError("schedule.kind", f"unknown kind {sched_kind!r}")

    run = _need(tree, "", "run", dict, required=True)
    _known_keys(run, "run", {"t_max", "repeats", "master_seed", "out", "e_sp_cadence"})
    t_max = _need(run, "run", "t_max", int, required=True)
    if t_max < 0:
        raise ConfigError("run.t_max", "must be >= 0")
    repeats = _positive(_need(run, "run", "repeats", int, default=1), "run.repeats")
    master_seed = _need(run, "run", "master_seed", int, default=0)
    out_prefix = _need(run, "run", "out", str, default="results/run")
    cadence = _need(run, "run", "e_sp_cadence", int, default=10)
    if cadence < 0:
        raise ConfigError("run.e_sp_cadence", "must be >= 0 (0 disables)")

    fed_tree = _need(tree, "", "federation", dict, default={})
    _known_keys(fed_tree, "federation", {"alpha", "participation", "compression",
                                         "batch_size", "b_geometry", "v_init",
                                         "enforce_alpha_bound"})
    comp_tree = _need(fed_tree, "federation", "compression", dict,
                      default={"kind": "identity"})
    _known_keys(comp_tree, "federation.compression", {"kind", "bits", "k"})
    compression = CompressionSpec(
        kind=_need(comp_tree, "federation.compression", "kind", str, default="identity"),
        bits=_need(comp_tree, "federation.compression", "bits", int, default=8),
        k=_need(comp_tree, "federation.compression", "k", int),
    )
    federation = FedConfig(
        schedule=schedule,
        t_max=t_max,
        alpha=_need(fed_tree, "federation", "alpha", float, default=0.0),
        participation=_need(fed_tree, "federation", "participation", float, default=1.0),
        compression=compression,
        batch_size=_need(fed_tree, "federation", "batch_size", int),
        b_geometry=_need(fed_tree, "federation", "b_geometry", str, default="identity"),
        v_init=_need(fed_tree, "federation", "v_init", str, default="zeros"),
        enforce_alpha_bound=bool(_need(fed_tree, "federation", "enforce_alpha_bound",
                                       bool, default=False)),
    )

    return RunConfig(problem=problem, data=data, split=split, algorithm=algorithm,
                     federation=federation, schedule=schedule, t_max=t_max,
                     repeats=repeats, master_seed=master_seed, out_prefix=out_prefix,
                     e_sp_cadence=cadence, tree=copy.deepcopy(tree))


def _validate_problem(problem: dict, kind: str):
    if kind == "dictionary":
        _known_keys(problem, "problem", {"kind", "lam", "eta", "n_atoms", "solver"})
        _positive(_need(problem, "problem", "eta", float, required=True), "problem.eta")
        _positive(_need(problem, "problem", "lam", float, default=0.0), "problem.lam", strict=False)
        _positive(_need(problem, "problem", "n_atoms", int, required=True), "problem.n_atoms")
        solver = _need(problem, "problem", "solver", dict, default={})
        _known_keys(solver, "problem.solver", {"max_iter", "kkt_tol"})
    elif kind == "toy":
        _known_keys(problem, "problem", {"kind"})
    elif kind == "poisson-em":
        _known_keys(problem, "problem", {"kind", "lam", "latent_values", "latent_weights",
                                         "bound", "mc_draws"})
        _positive(_need(problem, "problem", "lam", float, required=True), "problem.lam")
        _positive(_need(problem, "problem", "bound", float, default=1e3), "problem.bound")
    elif kind == "gmm-em":
        _known_keys(problem, "problem", {"kind", "lam", "components", "weights",
                                         "cov_scale", "covariances"})
        _positive(_need(problem, "problem", "lam", float, required=True), "problem.lam")
        comp = _need(problem, "problem", "components", int, required=True)
        if comp < 2:
            raise ConfigError("problem.components", "need at least two components")
    else:  # quad-regression
        _known_keys(problem, "problem", {"kind", "rho", "reg"})
        _positive(_need(problem, "problem", "rho", float, required=True), "problem.rho")
        reg = _need(problem, "problem", "reg", dict, default={"kind": "none"})
        _known_keys(reg, "problem.reg", {"kind", "lam", "lo", "hi"})


def load_config(path) -> RunConfig:
    with open(path) as fh:
        tree = yaml.safe_load(fh)
    return validate_config(tree)


def apply_overrides(tree: dict, overrides) -> dict:
    """Apply ``key.path=value`` overrides; values parse as YAML scalars."""
    tree = copy.deepcopy(tree)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key.path=value")
        key_path, raw = item.split("=", 1)
        node = tree
        parts = key_path.split(".")
        for part in parts[:-1]:
            nxt = node.get(part)
            if not isinstance(nxt, dict):
                nxt = {}
                node[part] = nxt
            node = nxt
        node[parts[-1]] = yaml.safe_load(raw)
    return tree


def build_dataset(cfg: RunConfig, seed: int) -> tuple[Dataset, Any]:
    """(dataset, ground-truth dictionary or None) from the data section."""
    data = cfg.data
    if data["source"] == "synthetic":
        rng = data_rng(seed)
        theta_star, dataset = gen_synthetic_dict(
            data["p"], cfg.problem["n_atoms"], data["tot"],
            float(data.get("sparsity", 0.2) or 0.2), rng)
        return dataset, theta_star
    return load_matrix_csv(data["path"], bool(data.get("has_header", False))), None


def build_partition(cfg: RunConfig, dataset: Dataset, seed: int):
    rng = split_rng(seed)
    if cfg.split["mode"] == "homogeneous":
        return homogeneous_partition(dataset, cfg.split["n"])
    return balanced_kmeans_split(dataset, cfg.split["n"], rng,
                                 int(cfg.split.get("iters", 50) or 50))


def build_problem(cfg: RunConfig, dataset: Dataset):
    problem = cfg.problem
    kind = problem["kind"]
    if kind == "dictionary":
        solver = problem.get("solver") or {}
        return DictLearningProblem(
            dataset.dim, problem["n_atoms"], float(problem.get("lam", 0.0) or 0.0),
            float(problem["eta"]),
            SolverConfig(int(solver.get("max_iter", 10_000)),
                         float(solver.get("kkt_tol", 1e-8))))
    if kind == "toy":
        return ToyScalarProblem()
    if kind == "poisson-em":
        return PoissonEMProblem.from_data(
            dataset.rows, float(problem["lam"]),
            latent_values=tuple(problem.get("latent_values") or (0.0,)),
            latent_weights=tuple(problem.get("latent_weights") or (1.0,)),
            bound=float(problem.get("bound", 1e3) or 1e3),
            mc_draws=problem.get("mc_draws"))
    if kind == "gmm-em":
        comp = int(problem["components"])
        weights = problem.get("weights") or [1.0 / comp] * comp
        covs = problem.get("covariances")
        if covs is None:
            scale = float(problem.get("cov_scale", 1.0) or 1.0)
            covs = np.stack([scale * np.eye(dataset.dim)] * comp)
        return GmmEMProblem.from_data(dataset.rows, weights, covs, float(problem["lam"]))
    reg_tree = problem.get("reg") or {"kind": "none"}
    reg = Regularizer(reg_tree.get("kind", "none"), float(reg_tree.get("lam", 0.0) or 0.0),
                      float(reg_tree.get("lo", -np.inf)), float(reg_tree.get("hi", np.inf)))
    return least_squares_problem(dataset.dim - 1, rho=float(problem["rho"]), reg=reg)
