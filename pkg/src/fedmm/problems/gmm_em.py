"""Penalized ML estimation of Gaussian-mixture means by EM.

The mixture has L components with known weights nu and known SPD
covariances Gamma; only the means are learned, with a ridge penalty
g(theta) = (lam/2) sum_l ||m_l||^2.  The E-step statistic stacks, for the
first L-1 components, the responsibility-weighted observations and the
responsibilities themselves; the last component is recovered from the
complementary sums, which pulls the batch mean E_pi[Z] into psi.

Surrogate layout: block 0 is p x (L-1) with column l = mean of z * r_l(z),
block 1 is 1 x (L-1) with entries mean of r_l(z).  The set constrains block
1 to { x >= 0, sum(x) <= 1 }.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from ..errors import ConfigError, DomainError
from ..surrogate import Block, BlockLayout, SurrogateVector
from .base import MMProblem
from ..projection import project_capped_simplex


class GmmEMProblem(MMProblem):
    def __init__(self, means_dim: int, weights, covariances, lam: float, mean_z):
        self.p = int(means_dim)
        self.nu = np.asarray(weights, dtype=np.float64)
        self.L = self.nu.size
        if self.L < 2:
            raise ConfigError("problem.weights", "need at least two components")
        if np.any(self.nu <= 0) or abs(self.nu.sum() - 1.0) > 1e-9:
            raise ConfigError("problem.weights", "weights must be in the open simplex")
        covs = np.asarray(covariances, dtype=np.float64)
        if covs.shape != (self.L, self.p, self.p):
            raise ConfigError("problem.covariances", f"expected shape {(self.L, self.p, self.p)}")
        self.cov = covs
        self.cov_inv = np.empty_like(covs)
        self._log_det = np.empty(self.L)
        for l in range(self.L):
            c = covs[l]
            if not np.allclose(c, c.T, atol=1e-10):
                raise ConfigError("problem.covariances", f"component {l} not symmetric")
            try:
                chol = np.linalg.cholesky(c)
            except np.linalg.LinAlgError as exc:
                raise ConfigError("problem.covariances", f"component {l} not SPD") from exc
            self._log_det[l] = 2.0 * np.log(np.diag(chol)).sum()
            self.cov_inv[l] = np.linalg.inv(c)
        if lam <= 0:
            raise ConfigError("problem.lam", "ridge weight must be > 0")
        self.lam = float(lam)
        self.mean_z = np.asarray(mean_z, dtype=np.float64).reshape(self.p)
        self.layout = BlockLayout([Block(self.p, self.L - 1), Block(1, self.L - 1)])
        self.theta_shape = (self.p, self.L)

    @classmethod
    def from_data(cls, data, weights, covariances, lam) -> "GmmEMProblem":
        rows = np.atleast_2d(np.asarray(data, dtype=np.float64))
        return cls(rows.shape[1], weights, covariances, lam, rows.mean(axis=0))

    def localize(self, data):
        rows = np.atleast_2d(np.asarray(data, dtype=np.float64))
        return GmmEMProblem(self.p, self.nu, self.cov, self.lam, rows.mean(axis=0))

    # -- model pieces --------------------------------------------------------

    def _log_component_densities(self, rows: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """(N, L) matrix of log nu_l - 0.5 log det Gamma_l - 0.5 Mahalanobis."""
        out = np.empty((rows.shape[0], self.L))
        for l in range(self.L):
            diff = rows - theta[:, l]
            maha = np.einsum("ni,ij,nj->n", diff, self.cov_inv[l], diff)
            out[:, l] = np.log(self.nu[l]) - 0.5 * self._log_det[l] - 0.5 * maha
        return out

    def responsibilities(self, rows: np.ndarray, theta: np.ndarray) -> np.ndarray:
        logd = self._log_component_densities(rows, theta)
        return np.exp(logd - logsumexp(logd, axis=1, keepdims=True))

    def f_value(self, data, theta):
        rows = np.atleast_2d(np.asarray(data, dtype=np.float64))
        theta = self.as_theta(theta)
        logd = self._log_component_densities(rows, theta)
        return float(np.mean(-logsumexp(logd, axis=1)))

    def g_value(self, theta):
        theta = self.as_theta(theta)
        return 0.5 * self.lam * float((theta * theta).sum())

    def exact_sbar(self, data, theta):
        rows = np.atleast_2d(np.asarray(data, dtype=np.float64))
        resp = self.responsibilities(rows, self.as_theta(theta))[:, : self.L - 1]
        s1 = rows.T @ resp / rows.shape[0]           # p x (L-1)
        s2 = resp.mean(axis=0)[None, :]              # 1 x (L-1)
        return SurrogateVector.from_blocks(self.layout, [s1, s2])

    def t_map(self, s):
        s1, s2 = s.block(0), s.block(1)[0]
        theta = np.empty((self.p, self.L))
        for l in range(self.L - 1):
            theta[:, l] = self._solve_component(s2[l], self.cov[l], s1[:, l], l)
        rest_w = 1.0 - s2.sum()
        rest_v = self.mean_z - s1.sum(axis=1)
        theta[:, self.L - 1] = self._solve_component(rest_w, self.cov[self.L - 1],
                                                     rest_v, self.L - 1)
        return theta

    def _solve_component(self, weight, cov, vec, l):
        mat = weight * np.eye(self.p) + self.lam * cov
        try:
            return np.linalg.solve(mat, vec)
        except np.linalg.LinAlgError as exc:
            raise DomainError(
                f"component {l}: weight {weight} violates s2 >= 0 (system singular)"
            ) from exc

    def contains(self, s, tol=1e-10):
        s2 = s.block(1)[0]
        return bool(np.all(s2 >= -tol) and s2.sum() <= 1.0 + tol)

    def project(self, s, geometry=None):
        if geometry is not None and not np.isscalar(geometry):
            raise DomainError("GMM projection supports only scalar geometry weights")
        s2 = project_capped_simplex(s.block(1)[0])
        return SurrogateVector.from_blocks(self.layout, [s.block(0), s2[None, :]])

    def psi(self, theta):
        theta = self.as_theta(theta)
        m_last = theta[:, -1]
        gi = self.cov_inv[-1]
        return float(-m_last @ gi @ self.mean_z + 0.5 * m_last @ gi @ m_last)

    def phi(self, theta):
        theta = self.as_theta(theta)
        gi_last = self.cov_inv[-1]
        m_last = theta[:, -1]
        last_lin = gi_last @ m_last
        last_quad = m_last @ gi_last @ m_last
        lin = np.empty((self.p, self.L - 1))
        quad = np.empty((1, self.L - 1))
        for l in range(self.L - 1):
            m = theta[:, l]
            lin[:, l] = self.cov_inv[l] @ m - last_lin
            quad[0, l] = -0.5 * (m @ self.cov_inv[l] @ m - last_quad)
        return SurrogateVector.from_blocks(self.layout, [lin, quad])

    def init_theta(self, rng, data=None):
        del data
        spread = np.sqrt(np.trace(self.cov.mean(axis=0)) / self.p)
        return self.mean_z[:, None] + spread * rng.standard_normal((self.p, self.L))
