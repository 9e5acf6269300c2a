"""Quadratic-surrogate problem: proximal gradient as surrogate minimization.

For a smooth f with L-Lipschitz gradient and step rho <= 1/L, the quadratic
upper bound at tau is parameterized by the statistic
sbar(z, tau) = tau - rho * G(z, tau), with psi(theta) = ||theta||^2 / (2 rho)
and phi(theta) = theta / rho.  The minimization map is the proximal operator
of rho * g, so the mirror sequence of the deterministic surrogate iteration
is classical (proximal) gradient descent.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import ConfigError
from ..surrogate import Block, BlockLayout, SurrogateVector
from .base import MMProblem
from .prox import Regularizer, prox


class QuadSurrogateProblem(MMProblem):
    """Smooth empirical loss plus a simple regularizer, driven by callables.

    Parameters
    ----------
    dim : parameter dimension d.
    loss_fn : (rows (N, m), theta (d,)) -> (N,) per-datum losses.
    grad_fn : (rows (N, m), theta (d,)) -> (N, d) per-datum gradients.
    rho : surrogate curvature step; validated against ``lipschitz`` if given.
    reg : regularizer g (none / l1 / box).
    """

    def __init__(self, dim: int,
                 loss_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
                 grad_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
                 rho: float,
                 reg: Regularizer = Regularizer("none"),
                 lipschitz: float | None = None):
        if rho <= 0:
            raise ConfigError("problem.rho", "rho must be > 0")
        if lipschitz is not None and rho > 1.0 / lipschitz + 1e-12:
            raise ConfigError("problem.rho", f"rho={rho} exceeds 1/L={1.0 / lipschitz}")
        self.dim = int(dim)
        self.loss_fn = loss_fn
        self.grad_fn = grad_fn
        self.rho = float(rho)
        self.reg = reg
        self.layout = BlockLayout([Block(self.dim, 1)])
        self.theta_shape = (self.dim,)

    def f_value(self, data, theta):
        return float(np.mean(self.loss_fn(np.atleast_2d(data), np.asarray(theta))))

    def g_value(self, theta):
        return self.reg.value(np.asarray(theta))

    def exact_sbar(self, data, theta):
        theta = np.asarray(theta, dtype=np.float64)
        grads = self.grad_fn(np.atleast_2d(data), theta)
        mean_grad = np.asarray(grads, dtype=np.float64).mean(axis=0)
        return SurrogateVector(theta - self.rho * mean_grad, self.layout)

    def t_map(self, s):
        return prox(self.reg, self.rho, s.data)

    def contains(self, s, tol=1e-10):
        del tol  # surrogate set is all of R^d
        return s.is_finite()

    def project(self, s, geometry=None):
        del geometry
        return s.copy()

    def b_matrix(self, s):
        del s
        # The natural weighting is (1/rho) * I; a scalar multiple of the
        # identity leaves every projection unchanged, so report it directly.
        return 1.0 / self.rho

    def psi(self, theta):
        theta = np.asarray(theta)
        return float(theta @ theta) / (2.0 * self.rho)

    def phi(self, theta):
        return SurrogateVector(np.asarray(theta, dtype=np.float64) / self.rho, self.layout)

    def init_theta(self, rng, data=None):
        del rng, data
        return np.zeros(self.dim)


def least_squares_problem(dim: int, rho: float,
                          reg: Regularizer = Regularizer("none"),
                          lipschitz: float | None = None) -> QuadSurrogateProblem:
    """Rows are [x_1..x_d, y]; per-datum loss 0.5 * (x.theta - y)^2."""

    def loss(rows, theta):
        x, y = rows[:, :dim], rows[:, dim]
        r = x @ theta - y
        return 0.5 * r * r

    def grad(rows, theta):
        x, y = rows[:, :dim], rows[:, dim]
        return (x @ theta - y)[:, None] * x

    return QuadSurrogateProblem(dim, loss, grad, rho=rho, reg=reg, lipschitz=lipschitz)
