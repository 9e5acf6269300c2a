"""Inner solver for l1-penalized least squares.

Solves, independently for each row z of a batch,

    min_h  ||z - dictionary @ h||^2 + lam * ||h||_1,

by cyclic coordinate descent with a KKT-residual stopping rule.  All rows
of a batch are updated jointly (coordinate j of every row at once), since
the per-row problems are uncoupled and share the Gram matrix.  Coordinate
descent stays reliable on the near-singular dictionaries that parameter
averaging tends to produce, where accelerated proximal gradient stalls
well above tight tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SolverDivergenceError
from .prox import soft_threshold


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 10_000   # full coordinate sweeps
    kkt_tol: float = 1e-8


def kkt_residual(codes: np.ndarray, batch: np.ndarray, dictionary: np.ndarray, lam: float) -> float:
    """Max coordinatewise violation of the subgradient optimality conditions."""
    grad = 2.0 * (codes @ (dictionary.T @ dictionary) - batch @ dictionary)
    on = codes != 0
    viol_on = np.abs(grad + lam * np.sign(codes)) * on
    viol_off = np.maximum(np.abs(grad) - lam, 0.0) * (~on)
    return float(np.maximum(viol_on, viol_off).max(initial=0.0))


def _row_objectives(codes, gram, corr, lam):
    """Per-row objective up to the constant ||z||^2 term."""
    quad = np.einsum("ij,jk,ik->i", codes, gram, codes)
    return quad - 2.0 * (codes * corr).sum(axis=1) + lam * np.abs(codes).sum(axis=1)


def _polish(codes, gram, corr, half_lam):
    """One active-set step: solve the KKT equalities on each row's support.

    The support includes coordinates whose gradient sits at the threshold
    boundary (their prospective sign comes from the gradient), which settles
    mass between near-duplicate atoms.  Rows sharing a pattern are solved as
    one multi-RHS minimum-norm least-squares system.
    """
    lam = 2.0 * half_lam
    grad = 2.0 * (codes @ gram - corr)
    signs = np.sign(codes)
    if lam > 0.0:
        boundary = (signs == 0.0) & (np.abs(grad) >= lam * (1.0 - 1e-3))
        signs = np.where(boundary, -np.sign(grad), signs)
    polished = codes.copy()
    groups = {}
    for r in range(codes.shape[0]):
        groups.setdefault(signs[r].tobytes(), []).append(r)
    for key, rows_idx in groups.items():
        sgn = np.frombuffer(key, dtype=np.float64)
        support = np.flatnonzero(sgn)
        if support.size == 0:
            continue
        sub = gram[np.ix_(support, support)]
        rhs = corr[np.ix_(rows_idx, support)].T - half_lam * sgn[support][:, None]
        sol, *_ = np.linalg.lstsq(sub, rhs, rcond=None)
        polished[np.ix_(rows_idx, support)] = sol.T
    return polished


def batch_lasso(batch: np.ndarray, dictionary: np.ndarray, lam: float,
                solver: SolverConfig = SolverConfig()) -> np.ndarray:
    """Codes H (one row per datum) minimizing ||z - dict h||^2 + lam ||h||_1.

    Coordinate sweeps identify the support; every few sweeps the current
    sign pattern is polished by a direct reduced solve (kept only where it
    lowers the objective), which settles ties between near-collinear atoms
    that first-order updates resolve arbitrarily slowly.  Raises
    SolverDivergenceError when the KKT residual is still above
    ``solver.kkt_tol`` after ``solver.max_iter`` sweeps.
    """
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    n, k = batch.shape[0], dictionary.shape[1]
    gram = dictionary.T @ dictionary
    corr = batch @ dictionary
    diag = np.diag(gram).copy()
    live = diag > 1e-300  # codes on zero atoms stay 0 (they cannot lower the loss)
    half_lam = 0.5 * lam

    if lam == 0.0:
        # Plain least squares; the normal equations are consistent, so the
        # minimum-norm solution is an exact minimizer.
        sol, *_ = np.linalg.lstsq(gram, corr.T, rcond=None)
        return np.ascontiguousarray(sol.T)

    codes = np.zeros((n, k))
    polish_every = 25
    for sweep in range(1, solver.max_iter + 1):
        delta_max = 0.0
        for j in range(k):
            if not live[j]:
                continue
            rho = corr[:, j] - codes @ gram[:, j] + codes[:, j] * diag[j]
            new_j = soft_threshold(rho, half_lam) / diag[j]
            step = new_j - codes[:, j]
            if step.any():
                delta_max = max(delta_max, float(np.abs(step).max()))
                codes[:, j] = new_j
        stationary = delta_max == 0.0
        if stationary or kkt_residual(codes, batch, dictionary, lam) <= solver.kkt_tol:
            return codes
        if sweep % polish_every == 0:
            candidate = _polish(codes, gram, corr, half_lam)
            better = (_row_objectives(candidate, gram, corr, lam)
                      <= _row_objectives(codes, gram, corr, lam) + 1e-15)
            codes[better] = candidate[better]
            if kkt_residual(codes, batch, dictionary, lam) <= solver.kkt_tol:
                return codes
    resid = kkt_residual(codes, batch, dictionary, lam)
    if resid <= solver.kkt_tol:
        return codes
    raise SolverDivergenceError(solver.max_iter, resid, "lasso code solver stalled")


def lasso_code(z: np.ndarray, dictionary: np.ndarray, lam: float,
               solver: SolverConfig = SolverConfig()) -> np.ndarray:
    """Code of a single datum; see batch_lasso."""
    return batch_lasso(np.asarray(z, dtype=np.float64)[None, :], dictionary, lam, solver)[0]
