"""Per-round metrics records and the normalized step-norm diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

DIVERGENCE_THRESHOLD = 1e12

# Fixed column order of the long-form CSV.
CSV_COLUMNS = ("run_id", "t", "objective", "e_s", "e_ps", "e_sp", "e_p",
               "bits_cumulative", "active_count", "diverged")


def step_norm_sq(new, old, gamma: float) -> float:
    """||new - old||^2 / gamma^2 for flat arrays, matrices, or scalars."""
    if gamma <= 0:
        raise DomainError("step normalization needs gamma > 0")
    diff = np.asarray(new, dtype=np.float64) - np.asarray(old, dtype=np.float64)
    return float(np.linalg.norm(diff.ravel()) ** 2) / float(gamma) ** 2


def metric_e_s(s_new, s_old, gamma: float) -> float:
    """Surrogate-space update size of the surrogate-aggregation algorithms."""
    return step_norm_sq(s_new.data, s_old.data, gamma)


def metric_e_ps(theta_new, theta_old, gamma: float) -> float:
    """Parameter-space update size of the mirror sequence."""
    return step_norm_sq(theta_new, theta_old, gamma)


def metric_e_p(theta_new, theta_old, gamma: float) -> float:
    """Parameter-space update size of the parameter-averaging baseline."""
    return step_norm_sq(theta_new, theta_old, gamma)


def metric_e_sp(field_new, field_old, gamma: float) -> float:
    """Surrogate-space diagnostic of the baseline's parameter sequence.

    Arguments are the full-data surrogate maps (1/n) sum_i E_i[sbar(Z, theta)]
    evaluated at consecutive parameters.
    """
    return step_norm_sq(field_new.data, field_old.data, gamma)


@dataclass
class MetricsRecord:
    """One CSV row.  Exactly one family of step metrics is populated:
    (e_s, e_ps) for surrogate aggregation, (e_p, e_sp) for the baseline."""

    run_id: int
    t: int
    objective: float | None = None
    e_s: float | None = None
    e_ps: float | None = None
    e_sp: float | None = None
    e_p: float | None = None
    bits_cumulative: int = 0
    active_count: int = 0
    diverged: bool = False

    def numeric_metrics(self):
        return (self.objective, self.e_s, self.e_ps, self.e_sp, self.e_p)

    def hits_divergence(self) -> bool:
        for v in self.numeric_metrics():
            if v is None:
                continue
            if not np.isfinite(v) or abs(v) > DIVERGENCE_THRESHOLD:
                return True
        return False

    def frozen_copy(self, t: int) -> "MetricsRecord":
        """Row carried forward after divergence: same values, flag set."""
        return MetricsRecord(self.run_id, t, self.objective, self.e_s, self.e_ps,
                             self.e_sp, self.e_p, self.bits_cumulative,
                             self.active_count, True)
