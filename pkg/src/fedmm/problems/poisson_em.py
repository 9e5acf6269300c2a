"""MAP estimation of a log-intensity offset for latent-shifted Poisson counts.

Observations are counts z whose log-intensity is theta + h with a latent
shift h drawn from a finite discrete distribution mu.  With an exp-prior
penalty g(theta) = lam * exp(theta), the fit minimizes

    f(theta) = E_pi[ -log sum_j w_j exp(theta z - exp(theta) exp(h_j)) ],

and, because E_pi[Z] is computable in batch mode, the Jensen upper bound is
parameterized by the single scalar statistic s = -E[exp(h) | posterior]:
psi(theta) = -theta E_pi[Z], phi(theta) = exp(theta), and the minimization
map is t_map(s) = log(E_pi[Z] / (lam - s)) on the interval s in [-M, 0].
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from ..errors import ConfigError, DomainError
from ..surrogate import Block, BlockLayout, SurrogateVector
from .base import MMProblem


class PoissonEMProblem(MMProblem):
    """Scalar EM instance with an exactly computable posterior.

    Parameters
    ----------
    mean_z : batch mean of the counts (strictly positive).
    lam : prior weight (> 0).
    latent_values / latent_weights : support and probabilities of the latent
        shift distribution; the default is a point mass at 0.
    bound : M such that the surrogate interval is [-M, 0].  The statistic is
        -E[exp(h)], so any M >= exp(max latent value) contains all iterates.
    mc_draws : when set, ``oracle`` replaces the exact posterior expectation
        with a Monte Carlo average over this many posterior samples.
    """

    theta_shape = ()

    def __init__(self, mean_z: float, lam: float,
                 latent_values=(0.0,), latent_weights=(1.0,),
                 bound: float = 1e3, mc_draws: int | None = None):
        if lam <= 0:
            raise ConfigError("problem.lam", "prior weight must be > 0")
        if mean_z <= 0:
            raise ConfigError("problem.mean_z", "mean count must be > 0")
        self.mean_z = float(mean_z)
        self.lam = float(lam)
        self.latent_values = np.asarray(latent_values, dtype=np.float64)
        w = np.asarray(latent_weights, dtype=np.float64)
        if w.shape != self.latent_values.shape or np.any(w <= 0):
            raise ConfigError("problem.latent_weights", "weights must be positive, same length as values")
        self.latent_weights = w / w.sum()
        if bound <= 0:
            raise ConfigError("problem.bound", "surrogate bound M must be > 0")
        if np.exp(self.latent_values.max()) > bound:
            raise ConfigError("problem.bound", "M too small to contain -E[exp(h)]")
        self.bound = float(bound)
        self.mc_draws = mc_draws
        self.layout = BlockLayout([Block(1, 1)])

    @classmethod
    def from_data(cls, data, lam, **kwargs) -> "PoissonEMProblem":
        rows = _count_rows(data)
        return cls(mean_z=float(rows.mean()), lam=lam, **kwargs)

    def localize(self, data):
        return PoissonEMProblem(float(_count_rows(data).mean()), self.lam,
                                self.latent_values, self.latent_weights,
                                self.bound, self.mc_draws)

    # -- model pieces --------------------------------------------------------

    def _posterior_log_weights(self, theta: float) -> np.ndarray:
        # Posterior over the latent support is proportional to
        # w_j * exp(-exp(theta) * exp(h_j)); it does not depend on z.
        logs = np.log(self.latent_weights) - np.exp(theta) * np.exp(self.latent_values)
        return logs - logsumexp(logs)

    def _posterior_mean_exp_h(self, theta: float) -> float:
        logw = self._posterior_log_weights(theta)
        return float(np.exp(logsumexp(logw + self.latent_values)))

    def f_value(self, data, theta):
        z = _count_rows(data)
        th = float(theta)
        # -log sum_j w_j exp(theta z - exp(theta) exp(h_j)), averaged over z.
        inner = logsumexp(np.log(self.latent_weights) - np.exp(th) * np.exp(self.latent_values))
        return float(np.mean(-(th * z) - inner))

    def g_value(self, theta):
        return self.lam * float(np.exp(float(theta)))

    def exact_sbar(self, data, theta):
        z = _count_rows(data)
        del z  # the statistic is z-free; data only sets the batch size
        return SurrogateVector(np.array([-self._posterior_mean_exp_h(float(theta))]), self.layout)

    def oracle(self, batch, theta, rng):
        if self.mc_draws is None:
            return self.exact_sbar(batch, theta)
        logw = self._posterior_log_weights(float(theta))
        idx = rng.choice(self.latent_values.size, size=self.mc_draws, p=np.exp(logw))
        return SurrogateVector(np.array([-np.exp(self.latent_values[idx]).mean()]), self.layout)

    def t_map(self, s):
        val = float(s.data[0])
        if self.lam - val <= 0:
            raise DomainError(f"t_map requires lam - s > 0, got lam={self.lam}, s={val}")
        return np.asarray(np.log(self.mean_z / (self.lam - val)))

    def contains(self, s, tol=1e-10):
        val = float(s.data[0])
        return -self.bound - tol <= val <= tol

    def project(self, s, geometry=None):
        del geometry  # 1-d: any positive weight yields the same interval clip
        return SurrogateVector(np.clip(s.data, -self.bound, 0.0), self.layout)

    def b_matrix(self, s):
        val = float(s.data[0])
        return self.mean_z / (self.lam - val) ** 2

    def psi(self, theta):
        return -float(theta) * self.mean_z

    def phi(self, theta):
        return SurrogateVector(np.array([np.exp(float(theta))]), self.layout)

    def init_theta(self, rng, data=None):
        del rng, data
        return np.asarray(0.0)


def _count_rows(data) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if rows.shape[1] != 1:
        raise DomainError("Poisson EM expects one-column count data")
    z = rows[:, 0]
    if np.any(z < 0) or np.any(z != np.round(z)):
        raise DomainError("Poisson EM data must be nonnegative integers")
    return z
