# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tree kernels; same contracts as :mod:`polyatest._kernels_py`.

Observations are sorted by grid index so every tree node owns a contiguous
range; a node's children are found by bisecting on the next path bit(s).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport lgamma, log, log1p, exp, INFINITY
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()

cdef enum:
    GRID = 20

ctypedef long long i64


cdef int _cmp_i64(const void* a, const void* b) noexcept nogil:
    cdef i64 x = (<const i64*>a)[0]
    cdef i64 y = (<const i64*>b)[0]
    return (x > y) - (x < y)


cdef inline Py_ssize_t _first_set(const i64* v, Py_ssize_t lo, Py_ssize_t hi, i64 mask) noexcept nogil:
    # v[lo:hi] sorted and sharing all bits above mask: bit is 0...0 1...1
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if v[mid] & mask:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef double _ml1d(const i64* v, Py_ssize_t lo, Py_ssize_t hi, int level, int depth,
                  const double* alpha, const double* norm, double scale) noexcept nogil:
    cdef Py_ssize_t n = hi - lo
    if n < 2 or level >= depth:
        return 0.0
    cdef i64 mask = (<i64>1) << (GRID - level - 1)
    cdef Py_ssize_t mid = _first_set(v, lo, hi, mask)
    cdef double a = alpha[level + 1]
    cdef double term = (lgamma(a + (mid - lo)) + lgamma(a + (hi - mid))
                        - lgamma(2.0 * a + n) - norm[level + 1] + scale * n)
    return (term + _ml1d(v, lo, mid, level + 1, depth, alpha, norm, scale)
            + _ml1d(v, mid, hi, level + 1, depth, alpha, norm, scale))


cdef double _ml2d(const i64* v, Py_ssize_t lo, Py_ssize_t hi, int level, int depth,
                  const double* alpha, const double* norm, double scale) noexcept nogil:
    cdef Py_ssize_t n = hi - lo
    if n < 2 or level >= depth:
        return 0.0
    cdef int shift = 2 * (GRID - level - 1)
    cdef i64 hibit = (<i64>2) << shift
    cdef i64 lobit = (<i64>1) << shift
    cdef Py_ssize_t cut[5]
    cut[0] = lo
    cut[4] = hi
    cut[2] = _first_set(v, lo, hi, hibit)
    cut[1] = _first_set(v, lo, cut[2], lobit)
    cut[3] = _first_set(v, cut[2], hi, lobit)
    cdef double a = alpha[level + 1]
    cdef double term = -lgamma(4.0 * a + n) - norm[level + 1] + scale * n
    cdef int q
    for q in range(4):
        term += lgamma(a + (cut[q + 1] - cut[q]))
    for q in range(4):
        term += _ml2d(v, cut[q], cut[q + 1], level + 1, depth, alpha, norm, scale)
    return term


cdef inline double _logaddexp(double a, double b) noexcept nogil:
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a > b:
        return a + log1p(exp(b - a))
    return b + log1p(exp(a - b))


cdef struct CondOpt:
    const i64* z
    const i64* x
    i64* buf
    int z_depth
    const long* local_depths
    const double* alpha
    const double* norm
    double scale
    double log_rho
    double log_split
    bint stop_always


cdef double _phi(CondOpt* c, Py_ssize_t lo, Py_ssize_t hi, int level) noexcept nogil:
    cdef Py_ssize_t m = hi - lo
    cdef Py_ssize_t i
    cdef double local = 0.0
    if m >= 2:
        for i in range(m):
            c.buf[i] = c.x[lo + i]
        qsort(c.buf, m, sizeof(i64), _cmp_i64)
        local = _ml1d(c.buf, 0, m, 0, <int>c.local_depths[m], c.alpha, c.norm, c.scale)
    if m <= 1 or level >= c.z_depth or c.stop_always:
        return local
    cdef i64 mask = (<i64>1) << (GRID - level - 1)
    cdef Py_ssize_t mid = _first_set(c.z, lo, hi, mask)
    cdef double split = _phi(c, lo, mid, level + 1) + _phi(c, mid, hi, level + 1)
    return _logaddexp(c.log_rho + local, c.log_split + split)


def _norms(double[::1] alpha, int arity):
    out = np.zeros(alpha.shape[0])
    cdef Py_ssize_t j
    for j in range(1, alpha.shape[0]):
        out[j] = arity * lgamma(alpha[j]) - lgamma(arity * alpha[j])
    return out


def log_ml_1d_idx(idx, int depth, alpha, bint density=False):
    cdef cnp.ndarray[i64, ndim=1] v = np.sort(np.ascontiguousarray(idx, dtype=np.int64))
    cdef double[::1] a = np.ascontiguousarray(alpha, dtype=float)
    cdef double[::1] nrm = _norms(a, 2)
    if depth > a.shape[0] - 1:
        raise ValueError("alpha table shorter than depth")
    if v.shape[0] < 2:
        return 0.0
    return _ml1d(<const i64*>v.data, 0, v.shape[0], 0, depth, &a[0], &nrm[0],
                 log(2.0) if density else 0.0)


def log_ml_2d_idx(path, int depth, alpha, bint density=False):
    cdef cnp.ndarray[i64, ndim=1] v = np.sort(np.ascontiguousarray(path, dtype=np.int64))
    cdef double[::1] a = np.ascontiguousarray(alpha, dtype=float)
    cdef double[::1] nrm = _norms(a, 4)
    if depth > a.shape[0] - 1:
        raise ValueError("alpha table shorter than depth")
    if v.shape[0] < 2:
        return 0.0
    return _ml2d(<const i64*>v.data, 0, v.shape[0], 0, depth, &a[0], &nrm[0],
                 log(4.0) if density else 0.0)


def condopt_idx(x_idx, z_idx, int z_depth, local_depths, alpha, double rho, bint density=False):
    z_arr = np.ascontiguousarray(z_idx, dtype=np.int64)
    order = np.argsort(z_arr, kind="stable")
    cdef cnp.ndarray[i64, ndim=1] z = np.ascontiguousarray(z_arr[order])
    cdef cnp.ndarray[i64, ndim=1] x = np.ascontiguousarray(np.asarray(x_idx, dtype=np.int64)[order])
    cdef long[::1] depths = np.ascontiguousarray(local_depths, dtype=np.int_)
    cdef double[::1] a = np.ascontiguousarray(alpha, dtype=float)
    cdef double[::1] nrm = _norms(a, 2)
    cdef Py_ssize_t n = z.shape[0]
    if n == 0:
        return 0.0
    if depths.shape[0] < n + 1:
        raise ValueError("local depth table shorter than sample")
    if np.max(local_depths) > a.shape[0] - 1:
        raise ValueError("alpha table shorter than local depth")
    cdef CondOpt c
    c.z = <const i64*>z.data
    c.x = <const i64*>x.data
    c.z_depth = z_depth
    c.local_depths = &depths[0]
    c.alpha = &a[0]
    c.norm = &nrm[0]
    c.scale = log(2.0) if density else 0.0
    c.log_rho = log(rho)
    c.stop_always = rho >= 1.0
    c.log_split = log1p(-rho) if rho < 1.0 else -INFINITY
    c.buf = <i64*>malloc(n * sizeof(i64))
    if c.buf == NULL:
        raise MemoryError()
    try:
        return _phi(&c, 0, n, 0)
    finally:
        free(c.buf)
