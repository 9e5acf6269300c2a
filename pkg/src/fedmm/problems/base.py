"""Abstract interface of a linearly parameterized majorize-minimization problem.

A problem bundles:

* an objective ``f(theta) + g(theta)`` where f is an empirical mean of
  per-datum losses over a supplied dataset,
* a per-datum surrogate statistic whose dataset mean identifies the current
  majorizing function (``exact_sbar``), with stochastic minibatch oracles,
* the minimization map ``t_map`` sending a surrogate point to the minimizer
  of ``g + psi - <s, phi>``,
* the geometry of the surrogate set: a membership predicate, a projection,
  and optionally a problem-specific SPD weighting for the projection.

ModelParam is a plain ndarray whose shape is problem-specific
(``theta_shape``); scalar problems use shape ().
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from ..surrogate import BlockLayout, SurrogateVector

ModelParam = np.ndarray


class MMProblem(ABC):
    """Base class; concrete problems fill in the pieces below."""

    layout: BlockLayout
    theta_shape: tuple

    # -- objective ---------------------------------------------------------

    def objective(self, data: np.ndarray, theta: ModelParam) -> float:
        """Full objective f(theta) + g(theta) over the dataset rows."""
        return self.f_value(data, theta) + self.g_value(theta)

    @abstractmethod
    def f_value(self, data: np.ndarray, theta: ModelParam) -> float:
        """Empirical mean of the per-datum loss."""

    @abstractmethod
    def g_value(self, theta: ModelParam) -> float:
        """Regularizer / constraint part of the objective."""

    # -- surrogate statistics ---------------------------------------------

    @abstractmethod
    def exact_sbar(self, data: np.ndarray, theta: ModelParam) -> SurrogateVector:
        """Mean surrogate statistic over all rows of ``data`` at ``theta``."""

    def oracle(self, batch: np.ndarray, theta: ModelParam, rng) -> SurrogateVector:
        """Stochastic oracle: mean statistic over a minibatch.

        The default is the exact per-batch mean; problems with additional
        oracle randomness (e.g. sampled latent variables) override this.
        """
        del rng
        return self.exact_sbar(batch, theta)

    # -- minimization map --------------------------------------------------

    @abstractmethod
    def t_map(self, s: SurrogateVector) -> ModelParam:
        """Unique minimizer of g + psi - <s, phi> for s in the surrogate set."""

    # -- surrogate-set geometry ---------------------------------------------

    @abstractmethod
    def contains(self, s: SurrogateVector, tol: float = 1e-10) -> bool:
        """Membership predicate of the surrogate set, up to ``tol``."""

    @abstractmethod
    def project(self, s: SurrogateVector, geometry=None) -> SurrogateVector:
        """Projection onto the surrogate set under ``geometry`` (None = Euclidean)."""

    def b_matrix(self, s: SurrogateVector):
        """Problem-specific SPD projection weighting at ``s``; None = identity."""
        del s
        return None

    # -- surrogate decomposition (for majorization checks) ------------------

    def psi(self, theta: ModelParam) -> float:
        raise NotImplementedError(f"{type(self).__name__} does not expose psi")

    def phi(self, theta: ModelParam) -> SurrogateVector:
        raise NotImplementedError(f"{type(self).__name__} does not expose phi")

    @property
    def has_majorizer_parts(self) -> bool:
        try:
            self.psi(self.init_theta(np.random.default_rng(0)))
        except NotImplementedError:
            return False
        return True

    # -- plumbing ------------------------------------------------------------

    @abstractmethod
    def init_theta(self, rng, data: np.ndarray | None = None) -> ModelParam:
        """A reasonable starting parameter for experiment runs.

        ``data`` lets instances seed themselves from observations (e.g.
        dictionary atoms drawn from data rows); it may be ignored.
        """

    def localize(self, data: np.ndarray) -> "MMProblem":
        """Problem instance whose data-dependent constants come from ``data``.

        Used by parameter-space aggregation baselines where each client
        optimizes against its own local distribution.  Problems whose maps
        are data-free return self.
        """
        del data
        return self

    def as_theta(self, theta) -> ModelParam:
        t = np.asarray(theta, dtype=np.float64)
        if t.shape != self.theta_shape:
            raise ValueError(f"theta shape {t.shape} != expected {self.theta_shape}")
        return t
