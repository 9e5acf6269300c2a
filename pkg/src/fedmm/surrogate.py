"""Surrogate-space vectors and step-size schedules.

A surrogate statistic lives in a convex subset of R^q.  Problems declare a
block layout (e.g. a symmetric K x K block followed by a p x K block for
dictionary learning); the vector itself is stored flat so that aggregation,
compression, and norms are plain dense linear algebra.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class Block:
    """One rectangular block of a surrogate vector.

    ``symmetric`` marks square blocks constrained to the PSD cone; such
    blocks are stored in full (all rows*cols entries).
    """

    rows: int
    cols: int
    symmetric: bool = False

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise DomainError(f"block dimensions must be positive, got {self.rows}x{self.cols}")
        if self.symmetric and self.rows != self.cols:
            raise DomainError("symmetric blocks must be square")

    @property
    def size(self) -> int:
        return self.rows * self.cols


class BlockLayout:
    """Ordered collection of blocks; defines the flattening of R^q."""

    def __init__(self, blocks):
        self.blocks = tuple(blocks)
        sizes = [b.size for b in self.blocks]
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        self._offsets = offsets
        self.size = int(offsets[-1])

    def __eq__(self, other):
        return isinstance(other, BlockLayout) and self.blocks == other.blocks

    def __hash__(self):
        return hash(self.blocks)

    def __repr__(self):
        return f"BlockLayout({list(self.blocks)})"

    def slice(self, i: int) -> slice:
        return slice(int(self._offsets[i]), int(self._offsets[i + 1]))

    def block_of(self, data: np.ndarray, i: int) -> np.ndarray:
        """2-d view of block ``i`` inside flat ``data``."""
        b = self.blocks[i]
        return data[self.slice(i)].reshape(b.rows, b.cols)

    def pack(self, arrays) -> np.ndarray:
        """Flatten per-block arrays (in layout order) into one vector."""
        arrays = list(arrays)
        if len(arrays) != len(self.blocks):
            raise DomainError(f"expected {len(self.blocks)} blocks, got {len(arrays)}")
        parts = []
        for arr, b in zip(arrays, self.blocks):
            a = np.asarray(arr, dtype=np.float64)
            if a.shape != (b.rows, b.cols):
                raise DomainError(f"block shape {a.shape} != declared {(b.rows, b.cols)}")
            parts.append(a.ravel())
        return np.concatenate(parts)


@dataclass
class SurrogateVector:
    """A point in the surrogate space: flat data plus its block layout.

    Arithmetic returns new vectors and preserves the layout, so convex
    combinations of members stay representable.
    """

    data: np.ndarray
    layout: BlockLayout

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64).ravel()
        if self.data.size != self.layout.size:
            raise DomainError(
                f"data length {self.data.size} != layout size {self.layout.size}"
            )

    @classmethod
    def zeros(cls, layout: BlockLayout) -> "SurrogateVector":
        return cls(np.zeros(layout.size), layout)

    @classmethod
    def from_blocks(cls, layout: BlockLayout, arrays) -> "SurrogateVector":
        return cls(layout.pack(arrays), layout)

    def block(self, i: int) -> np.ndarray:
        return self.layout.block_of(self.data, i)

    def with_data(self, data: np.ndarray) -> "SurrogateVector":
        return SurrogateVector(data, self.layout)

    def copy(self) -> "SurrogateVector":
        return SurrogateVector(self.data.copy(), self.layout)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.data).all())

    def _check_layout(self, other: "SurrogateVector"):
        if self.layout != other.layout:
            raise DomainError("layout mismatch in surrogate arithmetic")

    def __add__(self, other: "SurrogateVector") -> "SurrogateVector":
        self._check_layout(other)
        return SurrogateVector(self.data + other.data, self.layout)

    def __sub__(self, other: "SurrogateVector") -> "SurrogateVector":
        self._check_layout(other)
        return SurrogateVector(self.data - other.data, self.layout)

    def __mul__(self, scalar) -> "SurrogateVector":
        return SurrogateVector(self.data * float(scalar), self.layout)

    __rmul__ = __mul__

    def __neg__(self) -> "SurrogateVector":
        return SurrogateVector(-self.data, self.layout)


def convex_combination(a: SurrogateVector, b: SurrogateVector, weight: float) -> SurrogateVector:
    """(1 - weight) * a + weight * b, with weight in [0, 1]."""
    if not 0.0 <= weight <= 1.0:
        raise DomainError(f"convex weight must lie in [0, 1], got {weight}")
    a._check_layout(b)
    return SurrogateVector((1.0 - weight) * a.data + weight * b.data, a.layout)


@dataclass(frozen=True)
class StepSchedule:
    """Step-size sequence for the surrogate-space stochastic-approximation loop.

    Kinds (``t`` is the 0-based round index; every emitted value lies in (0, 1]):

    * ``constant``:   gamma_t = gamma
    * ``sqrt-decay``: gamma_t = beta / sqrt(beta + t)
    * ``harmonic``:   gamma_t = 1 / (t + 1); with this choice the running
      iterate equals the empirical mean of the oracles seen so far.
    """

    kind: str
    value: float = field(default=1.0)

    KINDS = ("constant", "sqrt-decay", "harmonic")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError("schedule.kind", f"unknown kind {self.kind!r}")
        if self.kind == "constant" and not 0.0 < self.value <= 1.0:
            raise ConfigError("schedule.gamma", "constant step must lie in (0, 1]")
        if self.kind == "sqrt-decay" and not 0.0 < self.value <= 1.0:
            # beta <= 1 keeps gamma_0 = sqrt(beta) inside (0, 1].
            raise ConfigError("schedule.beta", "beta must lie in (0, 1]")

    @classmethod
    def constant(cls, gamma: float) -> "StepSchedule":
        return cls("constant", gamma)

    @classmethod
    def sqrt_decay(cls, beta: float) -> "StepSchedule":
        return cls("sqrt-decay", beta)

    @classmethod
    def harmonic(cls) -> "StepSchedule":
        return cls("harmonic")

    def gamma(self, t: int) -> float:
        if t < 0:
            raise DomainError("round index must be >= 0")
        if self.kind == "constant":
            return self.value
        if self.kind == "sqrt-decay":
            return self.value / np.sqrt(self.value + t)
        return 1.0 / (t + 1.0)
