from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..config import MASS_TOL


@dataclass(frozen=True)
class Pmf:
    """支撑为 offset, offset+1, ... 的有限概率质量函数；mass_deficit 为显式截断余量。"""

    offset: int
    probs: np.ndarray = field(repr=False)
    mass_deficit: float = 0.0

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        # 舍入造成的微小负值归零
        probs = np.where((probs < 0.0) & (probs > -MASS_TOL), 0.0, probs)
        if np.any(probs < 0.0) or np.any(probs > 1.0 + MASS_TOL):
            raise ValueError("概率必须位于 [0, 1]")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "mass_deficit", max(0.0, float(self.mass_deficit)))

    @classmethod
    def point_mass(cls, value: int) -> "Pmf":
        return cls(int(value), np.array([1.0]))

    @classmethod
    def from_probs(cls, offset: int, probs: np.ndarray) -> "Pmf":
        """截断余量取 1 − Σ probs。"""
        probs = np.asarray(probs, dtype=float)
        return cls(offset, probs, 1.0 - float(np.sum(probs)))

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + len(self.probs))

    @property
    def total(self) -> float:
        return float(np.sum(self.probs))

    def pmf(self, k: int) -> float:
        index = k - self.offset
        if 0 <= index < len(self.probs):
            return float(self.probs[index])
        return 0.0

    def cdf(self, k: float) -> float:
        index = math.floor(k) - self.offset
        if index < 0:
            return 0.0
        return float(np.sum(self.probs[: index + 1]))

    def tail(self, k: int) -> float:
        """P{X > k}，截断余量计入尾部。"""
        return max(0.0, 1.0 - self.cdf(k))

    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    def pgf(self, s: float) -> float:
        return float(np.sum(self.probs * s ** self.support.astype(float)))

    def is_normalized(self, tol: float = MASS_TOL) -> bool:
        return abs(self.total + self.mass_deficit - 1.0) <= tol


@dataclass(frozen=True)
class TailValue:
    """级数尾概率与其截断余量上界。"""

    value: float
    remainder: float

    @property
    def upper(self) -> float:
        return self.value + self.remainder
