"""Exact proximal maps for the supported regularizer family."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DomainError


@dataclass(frozen=True)
class Regularizer:
    """g in {none, l1(lam), box indicator [lo, hi]^d}."""

    kind: str
    lam: float = 0.0
    lo: float = -np.inf
    hi: float = np.inf

    KINDS = ("none", "l1", "box")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError("regularizer.kind", f"unsupported kind {self.kind!r}")
        if self.kind == "l1" and self.lam < 0:
            raise ConfigError("regularizer.lam", "l1 weight must be >= 0")
        if self.kind == "box" and not self.lo <= self.hi:
            raise ConfigError("regularizer.box", "need lo <= hi")

    def value(self, theta: np.ndarray) -> float:
        if self.kind == "none":
            return 0.0
        if self.kind == "l1":
            return self.lam * float(np.abs(theta).sum())
        inside = np.all((theta >= self.lo - 1e-12) & (theta <= self.hi + 1e-12))
        return 0.0 if inside else float("inf")


def soft_threshold(x: np.ndarray, thresh: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - thresh, 0.0)


def prox(reg: Regularizer, rho: float, s: np.ndarray) -> np.ndarray:
    """Moreau proximal map of rho * g at s, exact for the supported family."""
    if rho <= 0:
        raise DomainError("prox step rho must be > 0")
    s = np.asarray(s, dtype=np.float64)
    if reg.kind == "none":
        return s.copy()
    if reg.kind == "l1":
        return soft_threshold(s, rho * reg.lam)
    return np.clip(s, reg.lo, reg.hi)
