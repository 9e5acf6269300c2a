"""Experiment orchestration: multi-seed repetition and CSV emission.

Each experiment writes two files:

* ``<out>_long.csv`` — every repeat, every round, fixed column order
  run_id,t,objective,e_s,e_ps,e_sp,e_p,bits_cumulative,active_count,diverged
* ``<out>_summary.csv`` — per-round mean and sample standard deviation
  (ddof 1; a single repeat reports 0.0) of each numeric column across
  repeats; positions where a metric is unpopulated stay empty.

Divergence is a result, not an error: once any populated metric is
non-finite or exceeds 1e12 the row is flagged and all later rows of that
repeat repeat its values with the flag set, so every repeat spans the full
horizon.  The repeat of index r runs with the seed derived from
(master_seed, r); the dataset and split are built once from the master
seed.

Set FEDMM_THREADS to run repeats concurrently (0 = one thread per CPU);
records are merged in repeat order, so the output is identical either way.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .config import RunConfig, build_dataset, build_partition, build_problem
from .core import OracleConfig, sa_ssmm_run
from .datasets import ClientPartition
from .errors import ConfigError
from .federation import default_s0, fedmm_run, naive_theta_run
from .metrics import CSV_COLUMNS, MetricsRecord
from .rng import init_rng, run_seed
from .surrogate import StepSchedule

# Re-exported diagnostics (normalized squared step norms); see metrics.py.
from .metrics import metric_e_p, metric_e_ps, metric_e_s, metric_e_sp, step_norm_sq  # noqa: F401

_SUMMARY_FIELDS = ("objective", "e_s", "e_ps", "e_sp", "e_p",
                   "bits_cumulative", "active_count")


@dataclass
class ExperimentResult:
    long_path: Path
    summary_path: Path
    records_by_repeat: list
    initial_objectives: list


def worker_count() -> int:
    raw = os.environ.get("FEDMM_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError("FEDMM_THREADS", f"not an integer: {raw!r}") from exc
    if n == 0:
        return os.cpu_count() or 1
    return max(n, 1)


def _single_repeat(cfg: RunConfig, problem, partition: ClientPartition,
                   repeat: int) -> tuple[list, float]:
    seed = run_seed(cfg.master_seed, repeat)
    algo = cfg.algorithm
    if algo == "fedmm":
        res = fedmm_run(problem, partition, cfg.federation, seed=seed, run_id=repeat)
        return res.records, res.initial_objective
    if algo == "naive-theta":
        res = naive_theta_run(problem, partition, cfg.federation, seed=seed,
                              run_id=repeat, e_sp_cadence=cfg.e_sp_cadence)
        return res.records, res.initial_objective
    # Centralized runs operate on the pooled data.
    rows = partition.global_rows
    if algo == "deterministic-mm":
        schedule, batch = StepSchedule.constant(1.0), OracleConfig(None)
    else:
        schedule, batch = cfg.schedule, OracleConfig(cfg.federation.batch_size)
    theta0 = problem.init_theta(init_rng(seed), rows)
    s0 = problem.exact_sbar(rows, theta0)
    traj = sa_ssmm_run(problem, rows, schedule, batch, s0, cfg.t_max, seed)
    records = [
        MetricsRecord(run_id=repeat, t=t + 1, objective=traj.objectives[t + 1],
                      e_s=traj.e_s[t], e_ps=traj.e_ps[t], active_count=1)
        for t in range(len(traj.e_s))
    ]
    return records, traj.initial_objective


def _apply_divergence_policy(records: list, t_max: int, run_id: int) -> list:
    """Flag and freeze everything after the first divergent row; pad to t_max."""
    out = []
    frozen = None
    for rec in records:
        if frozen is not None:
            break
        if rec.hits_divergence() or rec.diverged:
            rec = replace(rec, diverged=True)
            frozen = rec
        out.append(rec)
    template = frozen or (out[-1] if out else MetricsRecord(run_id, 0))
    while len(out) < t_max:
        nxt = template.frozen_copy(len(out) + 1) if frozen is not None else \
            replace(template, t=len(out) + 1)
        if frozen is None:
            # Padding without divergence only happens for t_max = 0 runners.
            nxt = replace(nxt, diverged=False)
        out.append(nxt)
    return out[:t_max]


def run_experiment(cfg: RunConfig) -> ExperimentResult:
    dataset, _ = build_dataset(cfg, cfg.master_seed)
    partition = build_partition(cfg, dataset, cfg.master_seed)
    problem = build_problem(cfg, dataset)

    workers = worker_count()
    repeats = range(cfg.repeats)
    if workers > 1 and cfg.repeats > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(
                lambda r: _single_repeat(cfg, problem, partition, r), repeats))
    else:
        outcomes = [_single_repeat(cfg, problem, partition, r) for r in repeats]

    records_by_repeat = [
        _apply_divergence_policy(records, cfg.t_max, r)
        for r, (records, _) in zip(repeats, outcomes)
    ]
    initial_objectives = [obj for _, obj in outcomes]

    prefix = Path(cfg.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    long_path = prefix.parent / (prefix.name + "_long.csv")
    summary_path = prefix.parent / (prefix.name + "_summary.csv")
    write_long_csv(long_path, records_by_repeat)
    write_summary_csv(summary_path, records_by_repeat, cfg.t_max)
    return ExperimentResult(long_path, summary_path, records_by_repeat,
                            initial_objectives)


# -- CSV emission -------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def write_long_csv(path, records_by_repeat):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for records in records_by_repeat:
            for rec in records:
                writer.writerow([
                    _fmt(rec.run_id), _fmt(rec.t), _fmt(rec.objective),
                    _fmt(rec.e_s), _fmt(rec.e_ps), _fmt(rec.e_sp), _fmt(rec.e_p),
                    _fmt(rec.bits_cumulative), _fmt(rec.active_count),
                    _fmt(rec.diverged),
                ])


def mean_std(values) -> tuple[float, float] | None:
    """Mean and sample std (ddof 1, 0.0 for a single value) of non-null floats."""
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    mean = math.fsum(vals) / len(vals)
    if len(vals) == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1)
    return mean, math.sqrt(var)


def write_summary_csv(path, records_by_repeat, t_max: int):
    header = ["t"]
    for name in _SUMMARY_FIELDS:
        header += [f"{name}_mean", f"{name}_std"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(1, t_max + 1):
            row = [str(t)]
            rows_at_t = [records[t - 1] for records in records_by_repeat]
            for name in _SUMMARY_FIELDS:
                stats = mean_std([getattr(r, name) for r in rows_at_t])
                if stats is None:
                    row += ["", ""]
                else:
                    row += [repr(stats[0]), repr(stats[1])]
            writer.writerow(row)
