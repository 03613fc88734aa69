"""Pure-numpy implementation of the tree kernels.

All functions take integer grid indices (see :mod:`polyatest.partition`) and
return natural-log marginal likelihoods. They mirror ``_kernels_c.pyx``
one-to-one and are used when the compiled module is unavailable.
"""

import numpy as np
from scipy.special import gammaln

from .partition import GRID_DEPTH


def _runs(keys):
    # keys sorted; returns unique keys and their run lengths
    if keys.size == 0:
        return keys, keys
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    counts = np.diff(np.r_[starts, keys.size])
    return keys[starts], counts


def _tree_log_ml(path, depth, alpha, bits, arity, density=False):
    """Shared body of the 1D (bits=1, arity=2) and 2D (bits=2, arity=4) trees."""
    scale = np.log(arity) if density else 0.0
    path = np.sort(np.asarray(path, dtype=np.int64))
    total = 0.0
    for j in range(depth):
        a = alpha[j + 1]
        child_keys, child_counts = _runs(path >> (bits * (GRID_DEPTH - j - 1)))
        parent_of_child = child_keys >> bits
        starts = np.flatnonzero(np.r_[True, parent_of_child[1:] != parent_of_child[:-1]])
        parent_n = np.add.reduceat(child_counts, starts)
        live_parents = parent_n >= 2
        if not live_parents.any():
            break
        live_children = np.repeat(live_parents, np.diff(np.r_[starts, child_keys.size]))
        kids = child_counts[live_children]
        total += float(np.sum(gammaln(a + kids) - gammaln(a)))
        live_n = parent_n[live_parents]
        total -= float(np.sum(gammaln(arity * a + live_n) - gammaln(arity * a) - scale * live_n))
    return total


def log_ml_1d_idx(idx, depth, alpha, density=False):
    """Log marginal likelihood of a 1D tree truncated at ``depth``.

    ``alpha[j]`` is the Dirichlet parameter of each child at depth ``j``.
    Nodes holding fewer than two observations contribute nothing. With
    ``density`` each of those nodes also gains ``n_k ln 2``, which turns the
    cell-sequence probability into the density relative to the base measure.
    """
    return _tree_log_ml(idx, depth, alpha, 1, 2, density)


def log_ml_2d_idx(path, depth, alpha, density=False):
    """Quadrant-tree analogue of :func:`log_ml_1d_idx` on interleaved paths
    (density scaling ``n_k ln 4``)."""
    return _tree_log_ml(path, depth, alpha, 2, 4, density)


def condopt_idx(x_idx, z_idx, z_depth, local_depths, alpha, rho, density=False):
    """Log marginal likelihood of (x, z) pairs under the conditional optional
    Polya tree with stopping probability ``rho``.

    ``local_depths[m]`` is the truncation depth of the local tree on a cell
    holding ``m`` observations.
    """
    order = np.argsort(z_idx, kind="stable")
    z = np.asarray(z_idx, dtype=np.int64)[order]
    x = np.asarray(x_idx, dtype=np.int64)[order]
    log_rho = np.log(rho)
    log_split = np.log1p(-rho) if rho < 1 else -np.inf

    def phi(lo, hi, level):
        m = hi - lo
        local = _tree_log_ml(x[lo:hi], local_depths[m], alpha, 1, 2, density) if m >= 2 else 0.0
        if m <= 1 or level >= z_depth or rho >= 1.0:
            return local
        bit = np.int64(1) << (GRID_DEPTH - level - 1)
        mid = lo + int(np.searchsorted(z[lo:hi] & bit, bit, side="left"))
        split = phi(lo, mid, level + 1) + phi(mid, hi, level + 1)
        return np.logaddexp(log_rho + local, log_split + split)

    return float(phi(0, z.size, 0))
