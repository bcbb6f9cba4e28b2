# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Stirling table fills and CRP seating.

Same contracts as ``pdptools._pykernels``; the CRP loop performs the same
floating point operations in the same order, so both backends seat
customers identically for identical uniforms.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, exp, INFINITY
from libc.stdlib cimport calloc, free

cnp.import_array()


def log_stirling_fill(double a, Py_ssize_t n_max, Py_ssize_t t_cap, Py_ssize_t stripe,
                      Py_ssize_t dense_t, dense, rows):
    if (rows is not None and rows.dtype != np.float64) or (
            dense is not None and dense.dtype != np.float64):
        raise TypeError("compiled kernel needs float64 tables")
    cdef double[:, ::1] dv
    cdef double[:, ::1] rv
    cdef bint have_dense = dense is not None
    cdef bint have_rows = rows is not None
    dv = dense if have_dense else np.zeros((1, 1))
    rv = rows if have_rows else np.zeros((1, 1))
    cdef double[::1] cur = np.full(t_cap + 1, -INFINITY)
    cdef double[::1] nxt = np.full(t_cap + 1, -INFINITY)
    cdef double[::1] tmp
    cdef Py_ssize_t n, t, hi
    cdef double same, prev, d, coef
    cur[0] = 0.0
    _store(cur, 0, stripe, dense_t, dv, rv, have_dense, have_rows, t_cap)
    for n in range(n_max):
        hi = n + 1 if n + 1 < t_cap else t_cap
        nxt[0] = -INFINITY
        for t in range(1, hi + 1):
            prev = cur[t - 1]
            same = cur[t]
            if same == -INFINITY:
                nxt[t] = prev
                continue
            coef = <double>n - t * a
            d = prev - same
            if d > 0:
                nxt[t] = prev + log1p(coef * exp(-d))
            else:
                nxt[t] = same + log(exp(d) + coef)
        for t in range(hi + 1, t_cap + 1):
            nxt[t] = -INFINITY
        tmp = cur
        cur = nxt
        nxt = tmp
        _store(cur, n + 1, stripe, dense_t, dv, rv, have_dense, have_rows, t_cap)


cdef inline void _store(double[::1] row, Py_ssize_t n, Py_ssize_t stripe, Py_ssize_t dense_t,
                        double[:, ::1] dv, double[:, ::1] rv, bint have_dense,
                        bint have_rows, Py_ssize_t t_cap) noexcept:
    cdef Py_ssize_t t
    if have_dense:
        for t in range(dense_t + 1):
            dv[n, t] = row[t]
    if have_rows and n % stripe == 0:
        for t in range(t_cap + 1):
            rv[n // stripe, t] = row[t]


def ratio_fill(double a, Py_ssize_t n_max, Py_ssize_t t_cap, V):
    if V.dtype != np.float64:
        raise TypeError("compiled kernel needs a float64 table")
    cdef double[:, ::1] v = V
    cdef double[::1] U = np.zeros(t_cap + 1)
    cdef Py_ssize_t n, t, hi
    cdef double nn
    for n in range(1, n_max):
        hi = n if n < t_cap else t_cap
        nn = <double>n
        U[1] = nn - a
        for t in range(2, hi + 1):
            U[t] = 1.0 / v[n, t] + (nn - t * a)
        for t in range(2, hi + 1):
            v[n + 1, t] = (1.0 + (nn - t * a) * v[n, t]) / U[t - 1]
        if n + 1 <= t_cap:
            v[n + 1, n + 1] = 1.0 / U[n]


cdef Py_ssize_t _crp_one(double a, double b, Py_ssize_t N, const double[::1] u,
                         cnp.int64_t[::1] out, Py_ssize_t size, long *tree) noexcept nogil:
    cdef Py_ssize_t n, M, pos, nxt, step, label, i
    cdef long acc
    cdef double target
    for i in range(size + 1):
        tree[i] = 0
    out[0] = 1
    i = 1
    while i <= size:
        tree[i] += 1
        i += i & -i
    M = 1
    for n in range(1, N):
        target = u[n - 1] * (b + n)
        if target < n - M * a:
            pos = 0
            acc = 0
            step = size
            while step:
                nxt = pos + step
                if nxt <= M and <double>(acc + tree[nxt]) - nxt * a <= target:
                    pos = nxt
                    acc += tree[nxt]
                step >>= 1
            label = pos + 1
        else:
            M += 1
            label = M
        out[n] = label
        i = label
        while i <= size:
            tree[i] += 1
            i += i & -i
    return M


cdef Py_ssize_t _fen_size(Py_ssize_t N):
    cdef Py_ssize_t size = 1
    while size < N:
        size <<= 1
    return size


def crp_assign(double a, double b, Py_ssize_t N, const double[::1] u, cnp.int64_t[::1] out):
    if N == 0:
        return 0
    cdef Py_ssize_t size = _fen_size(N)
    cdef long *tree = <long *>calloc(size + 1, sizeof(long))
    if tree == NULL:
        raise MemoryError()
    cdef Py_ssize_t M
    try:
        with nogil:
            M = _crp_one(a, b, N, u, out, size, tree)
    finally:
        free(tree)
    return M


def crp_assign_batch(double a, double b, Py_ssize_t N, const double[:, ::1] U,
                     cnp.int64_t[:, ::1] out):
    cdef Py_ssize_t R = U.shape[0]
    counts = np.empty(R, dtype=np.int64)
    cdef cnp.int64_t[::1] cv = counts
    if N == 0:
        counts[:] = 0
        return counts
    cdef Py_ssize_t size = _fen_size(N)
    cdef long *tree = <long *>calloc(size + 1, sizeof(long))
    if tree == NULL:
        raise MemoryError()
    cdef Py_ssize_t r
    try:
        with nogil:
            for r in range(R):
                cv[r] = _crp_one(a, b, N, U[r], out[r], size, tree)
    finally:
        free(tree)
    return counts
