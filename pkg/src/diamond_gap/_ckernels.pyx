# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled interior-point kernels; same contracts as ``_pykernels``."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def schur_complement(const cnp.int64_t[::1] ptr, const cnp.int64_t[::1] rows,
                     const cnp.int64_t[::1] cols, const double[::1] vals,
                     const double[:, ::1] X, const double[:, ::1] Sinv):
    cdef Py_ssize_t m = ptr.shape[0] - 1
    cdef Py_ssize_t i, j, a, b
    cdef double acc, vb
    cdef cnp.int64_t rb, cb
    out = np.zeros((m, m), dtype=np.float64)
    cdef double[:, ::1] M = out
    for i in range(m):
        for j in range(i, m):
            acc = 0.0
            for b in range(ptr[i], ptr[i + 1]):
                rb = rows[b]
                cb = cols[b]
                vb = vals[b]
                for a in range(ptr[j], ptr[j + 1]):
                    acc += vb * vals[a] * X[cb, rows[a]] * Sinv[cols[a], rb]
            M[i, j] = acc
            M[j, i] = acc
    return out


def constraint_inner(const cnp.int64_t[::1] ptr, const cnp.int64_t[::1] rows,
                     const cnp.int64_t[::1] cols, const double[::1] vals,
                     const double[:, ::1] Y):
    cdef Py_ssize_t m = ptr.shape[0] - 1
    cdef Py_ssize_t i, a
    cdef double acc
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] res = out
    for i in range(m):
        acc = 0.0
        for a in range(ptr[i], ptr[i + 1]):
            acc += vals[a] * Y[rows[a], cols[a]]
        res[i] = acc
    return out


def constraint_combine(const cnp.int64_t[::1] ptr, const cnp.int64_t[::1] rows,
                       const cnp.int64_t[::1] cols, const double[::1] vals,
                       const double[::1] y, Py_ssize_t n):
    cdef Py_ssize_t m = ptr.shape[0] - 1
    cdef Py_ssize_t i, a
    cdef double yi
    out = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] res = out
    for i in range(m):
        yi = y[i]
        if yi == 0.0:
            continue
        for a in range(ptr[i], ptr[i + 1]):
            res[rows[a], cols[a]] += yi * vals[a]
    return out
