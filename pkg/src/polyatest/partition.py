"""Canonical partitions of the real line and the plane.

Cells at depth ``j`` are the images of the dyadic intervals
``[(k-1)/2^j, k/2^j)`` under the base quantile function. Every observation is
located once, at the fixed grid depth :data:`GRID_DEPTH`; its cell at any
coarser depth is obtained by dropping trailing bits of that grid index. The
bit string of a cell read as a binary number (most significant bit = first
split) is its zero-based position from the left.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import DegenerateSample, DomainError
from .special import gaussian_quantile_array

__all__ = [
    "GRID_DEPTH",
    "AlphaRule",
    "DepthRule",
    "PartitionSpec",
    "CellCounts1D",
    "CellCounts2D",
    "standardize",
    "cell_index",
    "interleave",
    "count_tree_1d",
    "count_tree_2d",
    "floor_log",
]

GRID_DEPTH = 20


@dataclass(frozen=True)
class AlphaRule:
    """Growth of the Dirichlet parameter with depth.

    ``polynomial``: ``alpha(j) = multiplier * coefficient * j**2``
    ``exponential``: ``alpha(j) = multiplier * coefficient**j``

    ``multiplier`` exists so the marginal trees of the independence prior can
    use twice the joint tree's parameters.
    """

    kind: str = "polynomial"
    coefficient: float = 1.0
    multiplier: float = 1.0

    def __post_init__(self):
        if self.kind not in ("polynomial", "exponential"):
            raise DomainError(f"unknown alpha rule kind {self.kind!r}")
        if not (self.coefficient > 0 and math.isfinite(self.coefficient)):
            raise DomainError("alpha rule coefficient must be positive and finite")
        if not (self.multiplier > 0 and math.isfinite(self.multiplier)):
            raise DomainError("alpha rule multiplier must be positive and finite")
        if not self.kraft_summable:
            warnings.warn(
                f"{self}: sum of 1/alpha(j) diverges, draws need not be "
                "absolutely continuous",
                stacklevel=2,
            )

    @classmethod
    def parse(cls, text: str) -> "AlphaRule":
        """Parse ``"poly:c"`` or ``"exp:b"`` (e.g. ``"poly:1"``, ``"exp:2"``)."""
        try:
            kind, value = text.split(":")
            coefficient = float(value)
        except ValueError:
            raise DomainError(f"cannot parse alpha rule {text!r}") from None
        kinds = {"poly": "polynomial", "polynomial": "polynomial",
                 "exp": "exponential", "exponential": "exponential"}
        if kind not in kinds:
            raise DomainError(f"cannot parse alpha rule {text!r}")
        return cls(kinds[kind], coefficient)

    def __str__(self) -> str:
        short = "poly" if self.kind == "polynomial" else "exp"
        text = f"{short}:{self.coefficient:g}"
        if self.multiplier != 1.0:
            text += f"x{self.multiplier:g}"
        return text

    @property
    def kraft_summable(self) -> bool:
        return self.kind == "polynomial" or self.coefficient > 1.0

    def __call__(self, depth: int) -> float:
        if depth < 1:
            raise DomainError("alpha rules are defined for depth >= 1")
        if self.kind == "polynomial":
            value = self.coefficient * depth * depth
        else:
            value = self.coefficient ** depth
        value *= self.multiplier
        if not (value > 0 and math.isfinite(value)):
            raise DomainError(f"{self} is not positive and finite at depth {depth}")
        return value

    def scaled(self, factor: float) -> "AlphaRule":
        return AlphaRule(self.kind, self.coefficient, self.multiplier * factor)

    def levels(self, depth: int) -> np.ndarray:
        """Parameters for children at depths ``0..depth`` (entry 0 unused)."""
        out = np.ones(max(depth, 0) + 1)
        for j in range(1, depth + 1):
            out[j] = self(j)
        return out


STANDARD_ALPHA_RULES = (
    AlphaRule("polynomial", 0.1),
    AlphaRule("polynomial", 0.2),
    AlphaRule("polynomial", 1.0),
    AlphaRule("polynomial", 5.0),
    AlphaRule("polynomial", 10.0),
    AlphaRule("exponential", 2.0),
    AlphaRule("exponential", 4.0),
    AlphaRule("exponential", 8.0),
)


def floor_log(n: int, base: int) -> int:
    """Largest ``J`` with ``base**J <= n``; 0 for ``n <= 1``."""
    j = 0
    power = base
    while power <= n:
        j += 1
        power *= base
    return j


@dataclass(frozen=True)
class DepthRule:
    """Truncation depth as a function of sample size."""

    kind: str = "log4"
    fixed: int = 0

    def __post_init__(self):
        if self.kind not in ("log4", "log2", "fixed"):
            raise DomainError(f"unknown depth rule {self.kind!r}")
        if self.kind == "fixed" and self.fixed < 0:
            raise DomainError("fixed depth must be nonnegative")

    @classmethod
    def parse(cls, text: str) -> "DepthRule":
        if text in ("log4", "log2"):
            return cls(text)
        if text.startswith("fixed:"):
            try:
                return cls("fixed", int(text[6:]))
            except ValueError:
                pass
        raise DomainError(f"cannot parse depth rule {text!r}")

    def __str__(self) -> str:
        return f"fixed:{self.fixed}" if self.kind == "fixed" else self.kind

    def __call__(self, n: int) -> int:
        if self.kind == "log4":
            return floor_log(n, 4)
        if self.kind == "log2":
            return floor_log(n, 2)
        return self.fixed


@lru_cache(maxsize=8)
def _grid_boundaries(base_quantile: Callable) -> np.ndarray:
    probs = np.arange(1, 2**GRID_DEPTH, dtype=float) / 2.0**GRID_DEPTH
    bounds = np.asarray(base_quantile(probs), dtype=float)
    if bounds.shape != probs.shape or not np.all(np.diff(bounds) > 0):
        raise DomainError("base quantile must be strictly increasing on (0, 1)")
    return bounds


@dataclass(frozen=True)
class PartitionSpec:
    """Base quantile function, truncation rule and depth cap.

    ``base_quantile`` must accept and return numpy arrays.
    """

    base_quantile: Callable = field(default=gaussian_quantile_array)
    depth_rule: DepthRule = field(default_factory=DepthRule)
    max_depth_cap: int = GRID_DEPTH

    def __post_init__(self):
        if not 1 <= self.max_depth_cap <= GRID_DEPTH:
            raise DomainError(f"max_depth_cap must lie in [1, {GRID_DEPTH}]")

    def depth(self, n: int) -> int:
        """Truncation depth for a sample of size ``n``."""
        if n <= 1:
            return 0
        return min(self.depth_rule(n), self.max_depth_cap)

    def with_depth_rule(self, rule: DepthRule) -> "PartitionSpec":
        return PartitionSpec(self.base_quantile, rule, self.max_depth_cap)

    def boundaries(self, depth: int) -> np.ndarray:
        """Interior cell boundaries at ``depth`` (length ``2**depth - 1``)."""
        step = 2 ** (GRID_DEPTH - depth)
        return _grid_boundaries(self.base_quantile)[step - 1::step]


def standardize(values) -> np.ndarray:
    """Centre to mean 0 and scale to sample standard deviation 1 (n - 1)."""
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DegenerateSample("standardize needs at least two values")
    if not np.all(np.isfinite(x)):
        raise DegenerateSample("values must be finite")
    if np.ptp(x) == 0:
        raise DegenerateSample("all values are equal")
    sd = x.std(ddof=1)
    if sd == 0:
        raise DegenerateSample("zero standard deviation")
    return (x - x.mean()) / sd


def cell_index(values, spec: PartitionSpec) -> np.ndarray:
    """Zero-based cell of each value at :data:`GRID_DEPTH` (half-open cells)."""
    x = np.asarray(values, dtype=float)
    return np.searchsorted(_grid_boundaries(spec.base_quantile), x, side="right").astype(np.int64)


def interleave(ix: np.ndarray, iy: np.ndarray) -> np.ndarray:
    """Quadrant path of points from their x and y grid indices.

    Each depth contributes a base-4 digit ``2 * ybit + xbit``.
    """
    ix = np.asarray(ix, dtype=np.int64)
    iy = np.asarray(iy, dtype=np.int64)
    out = np.zeros_like(ix)
    for b in range(GRID_DEPTH):
        out |= ((ix >> b) & 1) << (2 * b)
        out |= ((iy >> b) & 1) << (2 * b + 1)
    return out


@dataclass
class CellCounts1D:
    """``levels[j - 1][k]`` is the count of cell ``k`` at depth ``j``."""

    levels: list

    def level(self, depth: int) -> np.ndarray:
        return self.levels[depth - 1]

    @property
    def depth(self) -> int:
        return len(self.levels)


@dataclass
class CellCounts2D:
    """``levels[j - 1][q]`` is the count of quadrant path ``q`` at depth ``j``."""

    levels: list

    def level(self, depth: int) -> np.ndarray:
        return self.levels[depth - 1]

    @property
    def depth(self) -> int:
        return len(self.levels)


def count_tree_1d(values, spec: PartitionSpec, depth: int) -> CellCounts1D:
    if depth < 0 or depth > GRID_DEPTH:
        raise DomainError(f"depth must lie in [0, {GRID_DEPTH}]")
    idx = cell_index(values, spec)
    return CellCounts1D([
        np.bincount(idx >> (GRID_DEPTH - j), minlength=2**j) for j in range(1, depth + 1)
    ])


def count_tree_2d(pairs, spec: PartitionSpec, depth: int) -> CellCounts2D:
    if depth < 0 or depth > GRID_DEPTH:
        raise DomainError(f"depth must lie in [0, {GRID_DEPTH}]")
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    path = interleave(cell_index(pairs[:, 0], spec), cell_index(pairs[:, 1], spec))
    return CellCounts2D([
        np.bincount(path >> (2 * (GRID_DEPTH - j)), minlength=4**j) for j in range(1, depth + 1)
    ])
