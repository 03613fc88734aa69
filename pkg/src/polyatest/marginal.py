"""Closed-form log marginal likelihoods of truncated Polya trees."""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .partition import AlphaRule, PartitionSpec, cell_index, interleave

__all__ = ["log_ml_1d", "log_ml_2d", "log_ml_2d_indep", "pt_cell_variance"]

DEFAULT_ALPHA = AlphaRule()
DEFAULT_SPEC = PartitionSpec()


def log_ml_1d(values, alpha: AlphaRule = DEFAULT_ALPHA, spec: PartitionSpec = DEFAULT_SPEC,
              density: bool = False, depth: int | None = None) -> float:
    """Log marginal likelihood of a 1D sample under ``PT(T, A)``.

    Sums ``ln B(a + n_k0, a + n_k1) - ln B(a, a)`` over nodes above the
    truncation depth ``spec.depth(n)`` that hold at least two observations.
    ``density=True`` adds ``n_k ln 2`` per such node, giving the marginal
    density relative to the base measure; only that version is comparable
    across truncation depths. ``depth`` overrides the truncation depth.
    The values are used as given; standardise beforehand if required.
    """
    x = np.asarray(values, dtype=float).ravel()
    depth = spec.depth(x.size) if depth is None else depth
    if depth == 0 or x.size < 2:
        return 0.0
    return kernels.log_ml_1d_idx(cell_index(x, spec), depth, alpha.levels(depth), density)


def _split_pairs(pairs):
    p = np.asarray(pairs, dtype=float)
    if p.size == 0:
        return np.empty(0), np.empty(0)
    p = p.reshape(-1, 2)
    return p[:, 0], p[:, 1]


def log_ml_2d(pairs, alpha: AlphaRule = DEFAULT_ALPHA, spec: PartitionSpec = DEFAULT_SPEC,
              density: bool = False) -> float:
    """Log marginal likelihood of 2D points under the quadrant Polya tree.

    Children of a depth-``j`` node carry Dirichlet parameter ``alpha(j + 1)``.
    ``density=True`` adds ``n_k ln 4`` per node holding two or more points.
    """
    x, y = _split_pairs(pairs)
    depth = spec.depth(x.size)
    if depth == 0:
        return 0.0
    path = interleave(cell_index(x, spec), cell_index(y, spec))
    return kernels.log_ml_2d_idx(path, depth, alpha.levels(depth), density)


def log_ml_2d_indep(pairs, alpha: AlphaRule = DEFAULT_ALPHA, spec: PartitionSpec = DEFAULT_SPEC,
                    density: bool = False) -> float:
    """Log marginal likelihood under the independence prior.

    Product of two 1D trees whose parameters are twice the joint tree's, so the
    prior matches the quadrant tree in expectation.
    """
    x, y = _split_pairs(pairs)
    marginal = alpha.scaled(2.0)
    return log_ml_1d(x, marginal, spec, density) + log_ml_1d(y, marginal, spec, density)


def pt_cell_variance(depth: int, alpha: AlphaRule = DEFAULT_ALPHA) -> float:
    """Prior variance of the mass of one depth-``depth`` cell,
    ``4**-d * (prod_j (2a_j + 2) / (2a_j + 1) - 1)``."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    # the product is 1 + O(1/a); expm1/log1p keeps digits for large a
    log_prod = math.fsum(math.log1p(1.0 / (2.0 * alpha(j) + 1.0)) for j in range(1, depth + 1))
    return math.expm1(log_prod) / 4.0**depth
