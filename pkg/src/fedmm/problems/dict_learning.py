"""Sparse dictionary learning as a variational surrogate problem.

Objective (per datum z in R^p, dictionary theta in R^{p x K}):

    f(theta) + g(theta) = E_pi[ min_h 0.5 ||z - theta h||^2 + (lam/2) ||h||_1 ]
                          + (eta/2) ||theta||_F^2,

i.e. one half of the unscaled quadratic objective with l1 weight lam and
ridge weight eta.  Carrying the 1/2 uniformly keeps the familiar pieces
unchanged:

* the best code of z is argmin_h ||z - theta h||^2 + lam ||h||_1
  (soft threshold lam / (2 theta^2) in the scalar case),
* the statistic of a minibatch is the pair of block means
  (mean H H^T, mean z H^T)  -- no extra factor,
* the minimization map is theta = s2 (s1 + eta I)^{-1},

because the matching decomposition is psi = 0 and
phi(theta) = (-0.5 theta^T theta, theta).

The surrogate set constrains the K x K block to the PSD cone (automatic for
exact statistics, enforced by projection after lossy aggregation).
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DomainError
from ..projection import psd_project
from ..surrogate import Block, BlockLayout, SurrogateVector
from .base import MMProblem
from .lasso import SolverConfig, batch_lasso

_PSD_DOMAIN_TOL = 1e-8


class DictLearningProblem(MMProblem):
    def __init__(self, obs_dim: int, n_atoms: int, lam: float, eta: float,
                 solver: SolverConfig = SolverConfig()):
        if eta <= 0:
            raise ConfigError("problem.eta", "ridge weight must be > 0 (unique minimizer)")
        if lam < 0:
            raise ConfigError("problem.lam", "l1 weight must be >= 0")
        self.p = int(obs_dim)
        self.K = int(n_atoms)
        self.lam = float(lam)
        self.eta = float(eta)
        self.solver = solver
        self.layout = BlockLayout([Block(self.K, self.K, symmetric=True),
                                   Block(self.p, self.K)])
        self.theta_shape = (self.p, self.K)

    # -- codes and statistics -------------------------------------------------

    def codes(self, batch: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return batch_lasso(batch, self.as_theta(theta), self.lam, self.solver)

    def f_value(self, data, theta):
        rows = np.atleast_2d(np.asarray(data, dtype=np.float64))
        theta = self.as_theta(theta)
        h = self.codes(rows, theta)
        resid = rows - h @ theta.T
        per_datum = 0.5 * (resid * resid).sum(axis=1) + 0.5 * self.lam * np.abs(h).sum(axis=1)
        return float(per_datum.mean())

    def g_value(self, theta):
        theta = self.as_theta(theta)
        return 0.5 * self.eta * float((theta * theta).sum())

    def exact_sbar(self, data, theta):
        rows = np.atleast_2d(np.asarray(data, dtype=np.float64))
        if rows.shape[0] == 0:
            raise DomainError("statistic of an empty batch is undefined")
        h = self.codes(rows, theta)
        s1 = h.T @ h / rows.shape[0]
        s2 = rows.T @ h / rows.shape[0]
        return SurrogateVector.from_blocks(self.layout, [s1, s2])

    def t_map(self, s):
        s1, s2 = s.block(0), s.block(1)
        sym_gap = float(np.abs(s1 - s1.T).max(initial=0.0))
        if sym_gap > _PSD_DOMAIN_TOL:
            raise DomainError(f"first block not symmetric (gap {sym_gap:.2e}); project first")
        min_eig = float(np.linalg.eigvalsh(0.5 * (s1 + s1.T)).min())
        if min_eig < -_PSD_DOMAIN_TOL:
            raise DomainError(f"first block not PSD (min eigenvalue {min_eig:.2e}); project first")
        # theta (s1 + eta I) = s2, solved against the SPD system, never inverted.
        system = 0.5 * (s1 + s1.T) + self.eta * np.eye(self.K)
        return np.linalg.solve(system, s2.T).T

    def contains(self, s, tol=1e-10):
        s1 = s.block(0)
        if float(np.abs(s1 - s1.T).max(initial=0.0)) > max(tol, 1e-12):
            return False
        return float(np.linalg.eigvalsh(0.5 * (s1 + s1.T)).min()) >= -tol

    def project(self, s, geometry=None):
        return psd_project(s, geometry)

    def psi(self, theta):
        del theta
        return 0.0

    def phi(self, theta):
        theta = self.as_theta(theta)
        return SurrogateVector.from_blocks(self.layout, [-0.5 * theta.T @ theta, theta])

    def init_theta(self, rng, data=None):
        # Gaussian atoms scaled so columns carry the data's RMS magnitude:
        # well conditioned, and starting codes are O(1) rather than inflated
        # by a too-small dictionary.
        scale = 1.0
        if data is not None:
            rows = np.atleast_2d(np.asarray(data, dtype=np.float64))
            rms = float(np.sqrt((rows * rows).sum(axis=1).mean()))
            scale = max(rms, 1e-12)
        return rng.standard_normal((self.p, self.K)) * (scale / np.sqrt(self.p))


def dict_oracle(batch, theta, lam, solver: SolverConfig = SolverConfig()) -> SurrogateVector:
    """Two-block minibatch statistic (mean H H^T, mean z H^T) for a dictionary."""
    theta = np.asarray(theta, dtype=np.float64)
    prob = DictLearningProblem(theta.shape[0], theta.shape[1], lam, eta=1.0, solver=solver)
    return prob.exact_sbar(np.atleast_2d(batch), theta)


def dict_t_map(s: SurrogateVector, eta: float) -> np.ndarray:
    """theta = s2 (s1 + eta I)^{-1} via an SPD solve."""
    k = s.layout.blocks[0].rows
    p = s.layout.blocks[1].rows
    prob = DictLearningProblem(p, k, lam=0.0, eta=eta)
    return prob.t_map(s)
