"""Centralized majorize-minimization machinery.

Deterministic iterations in both spaces, the mean-field function whose
roots are the stationary points, a numerical majorization check, and the
stochastic-approximation loop on the surrogate space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericsError
from .problems.base import MMProblem, ModelParam
from .rng import round_rng
from .surrogate import StepSchedule, SurrogateVector


def mean_field(problem: MMProblem, data: np.ndarray, s: SurrogateVector) -> SurrogateVector:
    """h(s) = (mean statistic at the mirror point of s) - s.

    Roots of h are exactly the fixed points of the surrogate-space
    iteration; callers must pass a point inside the surrogate set.
    """
    return problem.exact_sbar(data, problem.t_map(s)) - s


def mm_step_theta(problem: MMProblem, data: np.ndarray, theta: ModelParam) -> ModelParam:
    """One parameter-space step: minimize the majorizer built at theta."""
    return problem.t_map(problem.exact_sbar(data, theta))


def mm_step_s(problem: MMProblem, data: np.ndarray, s: SurrogateVector) -> SurrogateVector:
    """One surrogate-space step: statistic at the current mirror point."""
    return problem.exact_sbar(data, problem.t_map(s))


def fixed_point_residual(problem: MMProblem, data: np.ndarray,
                         s: SurrogateVector) -> tuple[float, float]:
    """(surrogate-space residual ||h(s)||, parameter-space residual).

    The second entry is ||T(next statistic) - T(s)||; both vanish together
    at stationary points.
    """
    theta = problem.t_map(s)
    s_next = problem.exact_sbar(data, theta)
    theta_next = problem.t_map(s_next)
    s_res = (s_next - s).norm()
    t_res = float(np.linalg.norm(np.asarray(theta_next) - np.asarray(theta)))
    return s_res, t_res


def majorization_gaps(problem: MMProblem, data: np.ndarray, tau: ModelParam,
                      probes) -> np.ndarray:
    """Surrogate-minus-objective gap at each probe (>= 0 when the bound holds).

    gap(theta) = f(tau) + psi(theta) - psi(tau)
                 - <sbar(tau), phi(theta) - phi(tau)> - f(theta).
    """
    sbar = problem.exact_sbar(data, tau)
    f_tau = problem.f_value(data, tau)
    psi_tau = problem.psi(tau)
    phi_tau = problem.phi(tau)
    gaps = []
    for theta in probes:
        upper = (f_tau + problem.psi(theta) - psi_tau
                 - float(sbar.data @ (problem.phi(theta) - phi_tau).data))
        gaps.append(upper - problem.f_value(data, theta))
    return np.asarray(gaps)


def check_majorization(problem: MMProblem, data: np.ndarray, tau: ModelParam,
                       probes, tol: float = 1e-9) -> bool:
    """True iff the quadratic/Jensen/variational upper bound holds at every probe.

    The bound must hold with slack ``tol`` everywhere and be tight
    (|gap| <= tol) whenever a probe equals tau itself.
    """
    probes = list(probes)
    gaps = majorization_gaps(problem, data, tau, probes)
    if np.any(gaps < -tol):
        return False
    tau_arr = np.asarray(tau)
    for theta, gap in zip(probes, gaps):
        if np.array_equal(np.asarray(theta), tau_arr) and abs(gap) > tol:
            return False
    return True


@dataclass
class OracleConfig:
    """Minibatch oracle: ``batch_size`` rows without replacement, None = full data."""

    batch_size: int | None = None


@dataclass
class SsmmTrajectory:
    """States and per-round diagnostics of a centralized run.

    ``states[t]`` is the iterate after t rounds (``states[0]`` is the start),
    ``mirrors[t]`` its mirror parameter.  Lists ``objective``, ``e_s`` and
    ``e_ps`` have one entry per round (1-based round t at index t-1).
    """

    states: list = field(default_factory=list)
    mirrors: list = field(default_factory=list)
    objectives: list = field(default_factory=list)
    e_s: list = field(default_factory=list)
    e_ps: list = field(default_factory=list)
    gammas: list = field(default_factory=list)

    @property
    def initial_objective(self) -> float:
        return self.objectives[0]


def sa_ssmm_run(problem: MMProblem, data: np.ndarray, schedule: StepSchedule,
                oracle_cfg: OracleConfig, s0: SurrogateVector, t_max: int,
                seed: int, log_objective: bool = True) -> SsmmTrajectory:
    """Stochastic-approximation surrogate MM on a single dataset.

    Each round draws a minibatch statistic S at the mirror of the current
    iterate and moves by s <- s + gamma (S - s).  Steps in (0, 1] keep the
    iterate inside the convex surrogate set, so no projection is applied.
    Deterministic given ``seed``: round t draws from the (seed, t, client=0)
    substream, matching a single-client federated run.
    """
    if t_max < 0:
        raise DomainError("t_max must be >= 0")
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    n = data.shape[0]
    b = oracle_cfg.batch_size
    if b is not None and not 1 <= b <= n:
        raise DomainError(f"batch_size must lie in [1, {n}], got {b}")

    traj = SsmmTrajectory()
    s = s0.copy()
    theta = problem.t_map(s)
    traj.states.append(s)
    traj.mirrors.append(theta)
    if log_objective:
        traj.objectives.append(problem.objective(data, theta))

    for t in range(t_max):
        gamma = schedule.gamma(t)
        rng = round_rng(seed, t, 0)
        if b is None:
            stat = problem.exact_sbar(data, theta)
        else:
            idx = rng.choice(n, size=b, replace=False)
            stat = problem.oracle(data[idx], theta, rng)
        s_next = s + gamma * (stat - s)
        if not s_next.is_finite():
            raise NumericsError(t + 1)
        theta_next = problem.t_map(s_next)

        traj.gammas.append(gamma)
        traj.e_s.append((s_next - s).norm() ** 2 / gamma**2)
        traj.e_ps.append(
            float(np.linalg.norm(np.asarray(theta_next) - np.asarray(theta))) ** 2 / gamma**2
        )
        if log_objective:
            traj.objectives.append(problem.objective(data, theta_next))
        traj.states.append(s_next)
        traj.mirrors.append(theta_next)
        s, theta = s_next, theta_next
    return traj
