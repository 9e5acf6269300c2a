"""Euclidean projections used by the surrogate-space constraint sets."""

from __future__ import annotations

import numpy as np

from .errors import DomainError, NumericsError
from .surrogate import SurrogateVector


def eig_clip_psd(mat: np.ndarray) -> np.ndarray:
    """Frobenius-nearest PSD matrix: symmetrize, then clip negative eigenvalues.

    Inputs already in the cone pass through unchanged (bit-exact no-op).
    """
    sym = 0.5 * (mat + mat.T)
    try:
        w, v = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh rarely fails
        raise NumericsError(0, f"eigendecomposition failed: {exc}") from exc
    if w[0] >= 0.0:
        return sym
    w = np.clip(w, 0.0, None)
    out = (v * w) @ v.T
    return 0.5 * (out + out.T)


def clip_interval(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return np.clip(x, lo, hi)


def project_capped_simplex(x: np.ndarray) -> np.ndarray:
    """Project onto { y >= 0, sum(y) <= 1 }.

    If clipping negatives already satisfies the sum constraint that clip is
    the projection; otherwise the optimality conditions reduce to the
    standard simplex projection of the original point.
    """
    y = np.clip(x, 0.0, None)
    if y.sum() <= 1.0:
        return y
    return _project_simplex(x)


def _project_simplex(x: np.ndarray) -> np.ndarray:
    # Sort-based projection onto { y >= 0, sum(y) = 1 }.
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, x.size + 1)
    cond = u - css / idx > 0
    rho = idx[cond][-1]
    tau = css[rho - 1] / rho
    return np.clip(x - tau, 0.0, None)


def psd_project(s: SurrogateVector, geometry=None) -> SurrogateVector:
    """Blockwise projection onto the PSD-constrained surrogate set.

    Blocks flagged symmetric are replaced by their nearest PSD matrix;
    rectangular blocks are unconstrained and pass through unchanged.  Only
    the Euclidean geometry is supported here: a non-trivial quadratic
    geometry would couple the eigenvalue clip across coordinates.
    """
    if geometry is not None and not _is_identity_geometry(geometry):
        raise DomainError("psd_project supports only the identity geometry")
    blocks = []
    for i, b in enumerate(s.layout.blocks):
        arr = s.block(i)
        blocks.append(eig_clip_psd(arr) if b.symmetric else arr)
    return SurrogateVector.from_blocks(s.layout, blocks)


def _is_identity_geometry(geometry) -> bool:
    if np.isscalar(geometry):
        return float(geometry) == 1.0
    g = np.asarray(geometry)
    return g.ndim == 2 and g.shape[0] == g.shape[1] and np.array_equal(g, np.eye(g.shape[0]))
