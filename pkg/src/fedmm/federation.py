"""Federated surrogate aggregation with control variates and compression.

One round:

* each active client draws a minibatch statistic S_i at the broadcast
  mirror parameter, forms the drift-corrected difference
  Delta_i = S_i - S_hat - V_i, compresses it, updates its control variate
  V_i <- V_i + alpha * Qtilde(Delta_i), and uploads the compressed message;
* the server adds back the tracked control-variate mean,
  H = V + sum_i mu_i Qtilde_i(Delta_i), takes the stochastic-approximation
  step S_hat + gamma H, projects onto the surrogate set, and advances
  V <- V + alpha * sum_i mu_i Qtilde_i(Delta_i).

Partial participation is realized inside the compression wrapper (an
inactive client contributes the zero message and skips all updates), with
the 1/p scaling folded into Qtilde, so the same realized draws feed the
client and server control-variate updates and the server's V stays equal
to sum_i mu_i V_i at every round.

Also implements the parameter-averaging baseline: active clients minimize
their local surrogate and the server averages the resulting parameters
(weights renormalized over the active set), which recovers the classic
"aggregate then average models" scheme at p = 1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .compression import CompressionSpec, build_compressor, omega_p, pp_compress_payload
from .errors import ConfigError, DomainError, NumericsError, SolverDivergenceError
from .metrics import MetricsRecord, metric_e_p, metric_e_ps, metric_e_s, metric_e_sp
from .problems.base import MMProblem
from .rng import init_rng, round_rng
from .surrogate import StepSchedule, SurrogateVector
from .wire import HEADER_BITS


@dataclass(frozen=True)
class FedConfig:
    schedule: StepSchedule
    t_max: int
    alpha: float = 0.0
    participation: float = 1.0
    compression: CompressionSpec = field(default_factory=CompressionSpec)
    batch_size: int | None = None            # None = full local batch (exact field)
    b_geometry: str = "identity"             # "identity" | "problem"
    v_init: str = "zeros"                    # "zeros" | "exact-local-field"
    enforce_alpha_bound: bool = False

    def __post_init__(self):
        if self.t_max < 0:
            raise ConfigError("federation.t_max", "t_max must be >= 0")
        if not 0.0 < self.participation <= 1.0:
            raise ConfigError("federation.participation", "p must lie in (0, 1]")
        if self.alpha < 0:
            raise ConfigError("federation.alpha", "alpha must be >= 0")
        if self.b_geometry not in ("identity", "problem"):
            raise ConfigError("federation.b_geometry", f"unknown geometry {self.b_geometry!r}")
        if self.v_init not in ("zeros", "exact-local-field"):
            raise ConfigError("federation.v_init", f"unknown policy {self.v_init!r}")

    def check_alpha_bound(self, omega: float):
        """Validate alpha <= 1/(1 + omega_p); error or warn per the config flag."""
        bound = 1.0 / (1.0 + omega_p(omega, self.participation))
        if self.alpha <= bound + 1e-12:
            return
        msg = (f"alpha={self.alpha} exceeds the stability bound "
               f"1/(1+omega_p)={bound:.6g}")
        if self.enforce_alpha_bound:
            raise ConfigError("federation.alpha", msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)


@dataclass
class ClientState:
    cid: int
    rows: np.ndarray
    mu: float
    v: SurrogateVector


@dataclass
class ClientPayload:
    cid: int
    mu: float
    qdelta: SurrogateVector | None   # compressed Delta, 1/p scaling included
    sent: bool
    wire_payload: object = None

    @property
    def bits(self) -> int:
        return 0 if not self.sent else HEADER_BITS + self.wire_payload.bits


@dataclass
class ServerState:
    s_hat: SurrogateVector
    v: SurrogateVector
    t: int = 0
    bits_sent: int = 0


def init_clients(problem: MMProblem, partition, cfg: FedConfig,
                 s0: SurrogateVector) -> list[ClientState]:
    clients = []
    for i in range(partition.n):
        rows = partition.client_rows(i)
        if cfg.v_init == "zeros":
            v = SurrogateVector.zeros(problem.layout)
        else:
            v = problem.exact_sbar(rows, problem.t_map(s0)) - s0
        clients.append(ClientState(i, rows, float(partition.mu[i]), v))
    return clients


def client_round(client: ClientState, broadcast, problem: MMProblem,
                 cfg: FedConfig, compressor, rng) -> tuple[ClientPayload, ClientState]:
    """One client step; inactive clients change nothing and send nothing."""
    s_hat, theta = broadcast
    delta_placeholder = SurrogateVector.zeros(problem.layout)
    p = cfg.participation
    if p < 1.0 and rng.random() >= p:
        return ClientPayload(client.cid, client.mu, delta_placeholder, False), client
    if cfg.batch_size is None:
        batch = client.rows
    else:
        n = client.rows.shape[0]
        if not 1 <= cfg.batch_size <= n:
            raise ConfigError("federation.batch_size",
                              f"client {client.cid}: batch must lie in [1, {n}]")
        batch = client.rows[rng.choice(n, size=cfg.batch_size, replace=False)]
    try:
        stat = problem.oracle(batch, theta, rng)
    except SolverDivergenceError as exc:
        raise SolverDivergenceError(exc.iterations, exc.residual,
                                    f"client {client.cid}: oracle solve failed") from exc
    delta = stat - s_hat - client.v
    qvec, payload = compressor.compress(delta, rng)
    qdelta = (1.0 / p) * qvec
    new_v = client.v + cfg.alpha * qdelta
    return (ClientPayload(client.cid, client.mu, qdelta, True, payload),
            replace(client, v=new_v))


def server_round(server: ServerState, payloads, problem: MMProblem,
                 cfg: FedConfig) -> ServerState:
    """Aggregate one round of payloads and advance the server state."""
    gamma = cfg.schedule.gamma(server.t)
    agg = SurrogateVector.zeros(problem.layout)
    bits = 0
    for pl in payloads:
        if pl.sent:
            agg = agg + pl.mu * pl.qdelta
            bits += pl.bits
    field_est = server.v + agg
    s_half = server.s_hat + gamma * field_est
    geometry = problem.b_matrix(server.s_hat) if cfg.b_geometry == "problem" else None
    s_next = problem.project(s_half, geometry)
    if not s_next.is_finite():
        raise NumericsError(server.t + 1)
    v_next = server.v + cfg.alpha * agg
    return ServerState(s_next, v_next, server.t + 1, server.bits_sent + bits)


@dataclass
class FedRunResult:
    records: list
    states: list                      # S_hat_0 .. S_hat_T
    mirrors: list
    initial_objective: float
    v_gap_max: float
    server: ServerState
    clients: list
    gammas: list

    @property
    def final_mirror(self):
        return self.mirrors[-1]


def default_s0(problem: MMProblem, partition, seed: int,
               theta0=None) -> SurrogateVector:
    """Starting surrogate point: full-data statistic at theta0 (drawn if absent)."""
    if theta0 is None:
        theta0 = problem.init_theta(init_rng(seed), partition.global_rows)
    return problem.exact_sbar(partition.global_rows, theta0)


def fedmm_run(problem: MMProblem, partition, cfg: FedConfig,
              s0: SurrogateVector | None = None, seed: int = 0, run_id: int = 0,
              theta0=None, log_objective: bool = True) -> FedRunResult:
    """Full federated run; deterministic given ``seed``.

    Client work at round t draws only from the (seed, t, client) substream,
    so trajectories do not depend on client execution order.  With a single
    client, full participation, identity compression and alpha = 0, the
    round reduces exactly to the centralized stochastic-approximation update
    (projection is a no-op on in-set iterates).
    """
    if partition.n < 1:
        raise DomainError("partition must contain at least one client")
    if s0 is None:
        s0 = default_s0(problem, partition, seed, theta0)
    compressor = build_compressor(cfg.compression, problem.layout)
    cfg.check_alpha_bound(compressor.omega)

    clients = init_clients(problem, partition, cfg, s0)
    v0 = SurrogateVector.zeros(problem.layout)
    for c in clients:
        v0 = v0 + c.mu * c.v
    server = ServerState(s0.copy(), v0)
    full_rows = partition.global_rows

    theta = problem.t_map(server.s_hat)
    obj0 = problem.objective(full_rows, theta) if log_objective else float("nan")
    result = FedRunResult([], [server.s_hat.copy()], [theta], obj0, 0.0, server, clients, [])

    for t in range(cfg.t_max):
        gamma = cfg.schedule.gamma(t)
        broadcast = (server.s_hat, theta)
        payloads = []
        new_clients = []
        for c in clients:
            pl, c_next = client_round(c, broadcast, problem, cfg, compressor,
                                      round_rng(seed, t, c.cid))
            payloads.append(pl)
            new_clients.append(c_next)
        prev_s = server.s_hat
        server = server_round(server, payloads, problem, cfg)
        clients = new_clients

        v_mean = SurrogateVector.zeros(problem.layout)
        for c in clients:
            v_mean = v_mean + c.mu * c.v
        result.v_gap_max = max(result.v_gap_max, (server.v - v_mean).norm())

        theta_next = problem.t_map(server.s_hat)
        record = MetricsRecord(
            run_id=run_id,
            t=t + 1,
            objective=problem.objective(full_rows, theta_next) if log_objective else None,
            e_s=metric_e_s(server.s_hat, prev_s, gamma),
            e_ps=metric_e_ps(theta_next, theta, gamma),
            bits_cumulative=server.bits_sent,
            active_count=sum(1 for pl in payloads if pl.sent),
        )
        result.records.append(record)
        result.states.append(server.s_hat.copy())
        result.mirrors.append(theta_next)
        result.gammas.append(gamma)
        theta = theta_next
        if record.hits_divergence():
            record.diverged = True
            break

    result.server = server
    result.clients = clients
    return result


def surrogate_field_mean(problem: MMProblem, partition, theta) -> SurrogateVector:
    """Uniform client average of exact local statistics at theta.

    This is the full-data surrogate map used to diagnose parameter-space
    aggregation in surrogate coordinates; it requires one pass over every
    client's data.
    """
    acc = SurrogateVector.zeros(problem.layout)
    for i in range(partition.n):
        acc = acc + problem.exact_sbar(partition.client_rows(i), theta)
    return (1.0 / partition.n) * acc


@dataclass
class NaiveRunResult:
    records: list
    thetas: list
    initial_objective: float
    diverged: bool


def naive_theta_run(problem: MMProblem, partition, cfg: FedConfig,
                    theta0=None, seed: int = 0, run_id: int = 0,
                    e_sp_cadence: int = 10) -> NaiveRunResult:
    """Parameter-averaging baseline.

    Each active client minimizes the surrogate built from its own local
    statistic (data-dependent constants localized per client) and uploads
    the parameter; the server averages over the active set with weights
    renormalized to sum to one.  Divergence is a recorded outcome, not an
    error: the first non-finite or oversized round freezes the trajectory.
    """
    if theta0 is None:
        theta0 = problem.init_theta(init_rng(seed), partition.global_rows)
    theta0 = problem.as_theta(theta0)
    local_problems = [problem.localize(partition.client_rows(i)) for i in range(partition.n)]
    full_rows = partition.global_rows
    mu = partition.mu
    p = cfg.participation

    result = NaiveRunResult([], [theta0], problem.objective(full_rows, theta0), False)
    theta = theta0
    prev_field = None
    bits = 0  # baseline uplink: one full-precision parameter per active client

    for t in range(cfg.t_max):
        gamma = cfg.schedule.gamma(t)
        record = MetricsRecord(run_id=run_id, t=t + 1)
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                locals_theta = []
                weights = []
                for i in range(partition.n):
                    rng = round_rng(seed, t, i)
                    if p < 1.0 and rng.random() >= p:
                        continue
                    rows = partition.client_rows(i)
                    if cfg.batch_size is None:
                        batch = rows
                    else:
                        n_i = rows.shape[0]
                        if not 1 <= cfg.batch_size <= n_i:
                            raise ConfigError("federation.batch_size",
                                              f"client {i}: batch must lie in [1, {n_i}]")
                        batch = rows[rng.choice(n_i, size=cfg.batch_size, replace=False)]
                    stat = local_problems[i].oracle(batch, theta, rng)
                    locals_theta.append(local_problems[i].t_map(stat))
                    weights.append(mu[i])
                record.active_count = len(locals_theta)
                bits += len(locals_theta) * (HEADER_BITS + 64 * int(np.prod(problem.theta_shape)))
                record.bits_cumulative = bits
                if locals_theta:
                    w = np.asarray(weights) / np.sum(weights)
                    theta_next = sum(wi * np.asarray(th) for wi, th in zip(w, locals_theta))
                else:
                    theta_next = np.asarray(theta).copy()
                if not np.isfinite(theta_next).all():
                    raise FloatingPointError("non-finite parameter average")
                record.objective = problem.objective(full_rows, theta_next)
                record.e_p = metric_e_p(theta_next, theta, gamma)
                if e_sp_cadence > 0 and (t + 1) % e_sp_cadence == 0:
                    if prev_field is None:
                        prev_field = surrogate_field_mean(problem, partition, theta)
                    field = surrogate_field_mean(problem, partition, theta_next)
                    record.e_sp = metric_e_sp(field, prev_field, gamma)
                    prev_field = field
                else:
                    prev_field = None
        except (FloatingPointError, SolverDivergenceError, DomainError,
                np.linalg.LinAlgError):
            last = result.records[-1] if result.records else MetricsRecord(run_id, t)
            frozen = last.frozen_copy(t + 1)
            result.records.append(frozen)
            result.diverged = True
            break
        result.records.append(record)
        result.thetas.append(theta_next)
        theta = theta_next
        if record.hits_divergence():
            record.diverged = True
            result.diverged = True
            break
    return result


def replay_server_field(problem: MMProblem, partition, cfg: FedConfig,
                        s_hat: SurrogateVector, clients, n_replays: int,
                        seed: int = 0):
    """Replay one round many times from a frozen state.

    Returns (mean H, componentwise standard error, exact mean field h(s)).
    Used to verify that the server's aggregated direction is an unbiased
    estimate of the mean field under compression and partial participation.
    """
    compressor = build_compressor(cfg.compression, problem.layout)
    theta = problem.t_map(s_hat)
    v_bar = SurrogateVector.zeros(problem.layout)
    for c in clients:
        v_bar = v_bar + c.mu * c.v
    acc = np.zeros(problem.layout.size)
    acc2 = np.zeros(problem.layout.size)
    for r in range(n_replays):
        agg = SurrogateVector.zeros(problem.layout)
        for c in clients:
            pl, _ = client_round(c, (s_hat, theta), problem, cfg, compressor,
                                 round_rng(seed, r, c.cid))
            if pl.sent:
                agg = agg + c.mu * pl.qdelta
        h_draw = (v_bar + agg).data
        acc += h_draw
        acc2 += h_draw * h_draw
    mean = acc / n_replays
    var = np.maximum(acc2 / n_replays - mean**2, 0.0) * n_replays / max(n_replays - 1, 1)
    stderr = np.sqrt(var / n_replays)

    h_exact = SurrogateVector.zeros(problem.layout)
    for c in clients:
        h_exact = h_exact + c.mu * (problem.exact_sbar(c.rows, theta) - s_hat)
    return mean, stderr, h_exact.data
