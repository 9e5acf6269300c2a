"""Scalar toy problem with loss z*theta + 1/theta on theta > 0.

The optimum is theta = 1/sqrt(E[Z]).  The per-datum surrogate statistic is
the observation itself, so surrogate-space aggregation recovers the global
optimum in one step while averaging locally optimal parameters does not:
with client means (1, 4) and equal weights the parameter average settles at
0.75 whereas the true optimum is 1/sqrt(2.5) ~ 0.632.
"""

from __future__ import annotations

import numpy as np

from ..errors import DomainError
from ..surrogate import Block, BlockLayout, SurrogateVector
from .base import MMProblem

_POSITIVE_FLOOR = 1e-12


class ToyScalarProblem(MMProblem):
    """One-dimensional problem: f(theta) = E[Z] * theta, g adds 1/theta on theta > 0.

    Surrogate decomposition: psi(theta) = 1/theta, phi(theta) = -theta,
    per-datum statistic sbar(z, theta) = z, and t_map(s) = 1/sqrt(s).
    """

    theta_shape = ()

    def __init__(self):
        self.layout = BlockLayout([Block(1, 1)])

    # data rows are (N, 1) arrays of positive observations
    @staticmethod
    def _check_rows(data):
        rows = np.atleast_2d(np.asarray(data, dtype=np.float64))
        if rows.shape[1] != 1:
            raise DomainError("toy problem expects one-column data")
        return rows[:, 0]

    def f_value(self, data, theta):
        z = self._check_rows(data)
        th = float(theta)
        return float(z.mean() * th + 1.0 / th)

    def g_value(self, theta):
        # The positivity constraint; 1/theta is carried by psi and folded
        # into f_value above so the reported objective matches E[z th + 1/th].
        return 0.0 if float(theta) > 0 else float("inf")

    def exact_sbar(self, data, theta):
        del theta
        z = self._check_rows(data)
        return SurrogateVector(np.array([z.mean()]), self.layout)

    def t_map(self, s):
        val = float(s.data[0])
        if val <= 0:
            raise DomainError(f"toy surrogate point must be positive, got {val}")
        return np.asarray(1.0 / np.sqrt(val))

    def contains(self, s, tol=1e-10):
        del tol  # the set is the open half-line; strict positivity is the test
        return float(s.data[0]) > 0.0

    def project(self, s, geometry=None):
        del geometry  # 1-d: any positive weight gives the same clip
        return SurrogateVector(np.maximum(s.data, _POSITIVE_FLOOR), self.layout)

    def psi(self, theta):
        return 1.0 / float(theta)

    def phi(self, theta):
        return SurrogateVector(np.array([-float(theta)]), self.layout)

    def init_theta(self, rng, data=None):
        del rng, data
        return np.asarray(1.0)


def toy_dataset(means) -> np.ndarray:
    """One row per client mean; equal-count clients give equal weights."""
    means = np.asarray(means, dtype=np.float64)
    if np.any(means <= 0):
        raise DomainError("toy client means must be strictly positive")
    return means.reshape(-1, 1)
