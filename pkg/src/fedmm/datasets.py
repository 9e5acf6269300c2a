"""Datasets, heterogeneous partitioning, and dense-matrix CSV ingestion.

All randomness comes from caller-supplied generators; with the package's
Philox streams a fixed seed reproduces datasets bit-for-bit across
platforms.  Draw order in ``gen_synthetic_dict``: dictionary entries
(row-major), then per-sample support indices, then support values.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParseError


@dataclass
class Dataset:
    """Dense real observations, one row per datum."""

    rows: np.ndarray
    tag: str = ""

    def __post_init__(self):
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=np.float64))
        if self.rows.ndim != 2:
            raise DomainError("dataset rows must form a 2-d array")
        if not np.isfinite(self.rows).all():
            raise DomainError("dataset contains non-finite entries")

    def __len__(self):
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


@dataclass
class ClientPartition:
    """Assignment of dataset rows to clients.

    For true splits every row belongs to exactly one client and the weights
    are mu_i = N_i / N.  ``replicated`` marks the homogeneous mode where
    each client holds a copy of the full dataset (weights 1/n).
    """

    dataset: Dataset
    client_indices: tuple = ()
    replicated: bool = False
    mu: np.ndarray = field(init=False)

    def __post_init__(self):
        self.client_indices = tuple(np.asarray(ix, dtype=np.int64) for ix in self.client_indices)
        if not self.client_indices:
            raise DomainError("partition needs at least one client")
        if not self.replicated:
            combined = np.sort(np.concatenate(self.client_indices))
            if combined.size != len(self.dataset) or not np.array_equal(
                    combined, np.arange(len(self.dataset))):
                raise DomainError("split must assign every row exactly once")
        counts = np.array([ix.size for ix in self.client_indices], dtype=np.float64)
        self.mu = counts / counts.sum()

    @classmethod
    def from_assignment(cls, dataset: Dataset, labels) -> "ClientPartition":
        labels = np.asarray(labels, dtype=np.int64)
        n = labels.max() + 1
        return cls(dataset, tuple(np.flatnonzero(labels == c) for c in range(n)))

    @classmethod
    def replicated_copies(cls, dataset: Dataset, n: int) -> "ClientPartition":
        full = np.arange(len(dataset))
        return cls(dataset, tuple(full.copy() for _ in range(n)), replicated=True)

    @property
    def n(self) -> int:
        return len(self.client_indices)

    def client_rows(self, i: int) -> np.ndarray:
        return self.dataset.rows[self.client_indices[i]]

    @property
    def global_rows(self) -> np.ndarray:
        return self.dataset.rows

    @property
    def assignment(self) -> np.ndarray:
        if self.replicated:
            raise DomainError("replicated partitions have no row assignment")
        labels = np.empty(len(self.dataset), dtype=np.int64)
        for cid, ix in enumerate(self.client_indices):
            labels[ix] = cid
        return labels


def gen_synthetic_dict(p: int, n_atoms: int, tot: int, sparsity: float = 0.2,
                       rng=None) -> tuple[np.ndarray, Dataset]:
    """Ground-truth dictionary and sparse-code observations.

    The dictionary has i.i.d. standard-normal entries; each sample's code
    has exactly round(sparsity * K) nonzeros at uniform positions with
    standard-normal values, and the observation is dictionary @ code.
    """
    if not 0.0 < sparsity <= 1.0:
        raise DomainError("sparsity must lie in (0, 1]")
    rng = np.random.default_rng() if rng is None else rng
    theta_star = rng.standard_normal((p, n_atoms))
    nnz = round(sparsity * n_atoms)
    rows = np.zeros((tot, p))
    for t in range(tot):
        code = np.zeros(n_atoms)
        if nnz > 0:
            support = rng.choice(n_atoms, size=nnz, replace=False)
            code[support] = rng.standard_normal(nnz)
        rows[t] = theta_star @ code
    return theta_star, Dataset(rows, tag=f"synthetic-dict-p{p}-K{n_atoms}")


def balanced_kmeans_split(dataset: Dataset, n: int, rng=None, iters: int = 50) -> ClientPartition:
    """Capacity-constrained Lloyd clustering into clusters balanced within 1.

    Assignment step: sort all (point, centroid) distances ascending and
    assign greedily; each cluster takes at most floor(N/n) points plus at
    most one of the N mod n leftover slots, so every cluster ends with
    floor(N/n) or ceil(N/n) points.
    """
    x = dataset.rows
    big_n = x.shape[0]
    if n < 1 or big_n < n:
        raise DomainError(f"need 1 <= n <= N, got n={n}, N={big_n}")
    rng = np.random.default_rng() if rng is None else rng
    centroids = x[rng.choice(big_n, size=n, replace=False)].copy()
    base, extras_total = divmod(big_n, n)
    labels = np.full(big_n, -1, dtype=np.int64)
    for _ in range(max(iters, 1)):
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        order = np.argsort(d2, axis=None, kind="stable")
        new_labels = np.full(big_n, -1, dtype=np.int64)
        sizes = np.zeros(n, dtype=np.int64)
        has_extra = np.zeros(n, dtype=bool)
        extras_left = extras_total
        assigned = 0
        for flat in order:
            pt, c = divmod(int(flat), n)
            if new_labels[pt] >= 0:
                continue
            if sizes[c] < base:
                pass
            elif sizes[c] == base and extras_left > 0 and not has_extra[c]:
                has_extra[c] = True
                extras_left -= 1
            else:
                continue
            new_labels[pt] = c
            sizes[c] += 1
            assigned += 1
            if assigned == big_n:
                break
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(n):
            member = labels == c
            if member.any():
                centroids[c] = x[member].mean(axis=0)
    return ClientPartition.from_assignment(dataset, labels)


def homogeneous_partition(dataset: Dataset, n: int) -> ClientPartition:
    """Every client holds a full copy of the data (weights 1/n)."""
    return ClientPartition.replicated_copies(dataset, n)


def load_matrix_csv(path, has_header: bool = False) -> Dataset:
    """Dense numeric CSV, one row per datum; errors carry 1-based line numbers."""
    rows = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, rec in enumerate(reader, start=1):
            if has_header and lineno == 1:
                continue
            if not rec or (len(rec) == 1 and rec[0].strip() == ""):
                continue
            if width is None:
                width = len(rec)
            elif len(rec) != width:
                raise ParseError(f"expected {width} fields, got {len(rec)}", line=lineno)
            try:
                rows.append([float(v) for v in rec])
            except ValueError as exc:
                raise ParseError(f"non-numeric cell: {exc}", line=lineno) from exc
    if not rows:
        raise ParseError("no data rows found", line=1)
    return Dataset(np.asarray(rows, dtype=np.float64), tag=str(path))


def save_matrix_csv(path, rows: np.ndarray):
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def save_partition_csv(path, partition: ClientPartition):
    """Write (row_index, client_id) pairs for a split partition."""
    labels = partition.assignment
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row_index", "client_id"])
        for i, c in enumerate(labels):
            writer.writerow([i, int(c)])


def load_partition_csv(path, dataset: Dataset) -> ClientPartition:
    labels = np.full(len(dataset), -1, dtype=np.int64)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["row_index", "client_id"]:
            raise ParseError("expected header row_index,client_id", line=1)
        for lineno, rec in enumerate(reader, start=2):
            try:
                idx, cid = int(rec[0]), int(rec[1])
            except (ValueError, IndexError) as exc:
                raise ParseError(f"bad partition row: {exc}", line=lineno) from exc
            labels[idx] = cid
    if np.any(labels < 0):
        raise ParseError("partition does not cover every row")
    return ClientPartition.from_assignment(dataset, labels)
