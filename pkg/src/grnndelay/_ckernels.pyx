# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled GRNN hot loops. Mirrors ``_kernels_py`` exactly in formula."""
import numpy as np

from libc.math cimport exp, INFINITY


cdef inline double _dist(const double[:, ::1] a, Py_ssize_t i,
                         const double[:, ::1] b, Py_ssize_t j,
                         const double[::1] sigma) noexcept nogil:
    cdef Py_ssize_t k
    cdef double t, acc = 0.0
    for k in range(a.shape[1]):
        t = (a[i, k] - b[j, k]) / sigma[k]
        acc += t * t
    return acc


def predict(const double[:, ::1] patterns, const double[::1] targets,
            const double[::1] sigma, const double[:, ::1] queries,
            double ymin, double ymax):
    cdef Py_ssize_t n = patterns.shape[0], m = queries.shape[0]
    cdef Py_ssize_t i, j
    cdef double dmin, num, den, w, y
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    d_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] d = d_arr
    with nogil:
        for i in range(m):
            dmin = INFINITY
            for j in range(n):
                d[j] = _dist(queries, i, patterns, j, sigma)
                if d[j] < dmin:
                    dmin = d[j]
            num = 0.0
            den = 0.0
            for j in range(n):
                w = exp(-0.5 * (d[j] - dmin))
                num += w * targets[j]
                den += w
            y = num / den
            if y < ymin:
                y = ymin
            elif y > ymax:
                y = ymax
            out[i] = y
    return out_arr


def loo_predict(const double[:, ::1] patterns, const double[::1] targets,
                const double[::1] sigma):
    cdef Py_ssize_t n = patterns.shape[0]
    cdef Py_ssize_t i, j
    cdef double dmin, num, den, w
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    # symmetric pairwise matrix, filled once
    dd_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] dd = dd_arr
    with nogil:
        for i in range(n):
            dd[i, i] = INFINITY
            for j in range(i + 1, n):
                dd[i, j] = _dist(patterns, i, patterns, j, sigma)
                dd[j, i] = dd[i, j]
        for i in range(n):
            dmin = INFINITY
            for j in range(n):
                if dd[i, j] < dmin:
                    dmin = dd[i, j]
            num = 0.0
            den = 0.0
            for j in range(n):
                if j == i:
                    continue
                w = exp(-0.5 * (dd[i, j] - dmin))
                num += w * targets[j]
                den += w
            out[i] = num / den
    return out_arr
