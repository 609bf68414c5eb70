# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_kernels_py`` for the reference semantics."""

import numpy as np
from libc.math cimport sqrt, INFINITY


def zero_crossing_update(double[:, ::1] S, const double[:, ::1] G, double step,
                         bint pin_zeros=True):
    cdef Py_ssize_t i, j
    cdef double s, t
    with nogil:
        for i in range(S.shape[0]):
            for j in range(S.shape[1]):
                s = S[i, j]
                if pin_zeros and s == 0.0:
                    continue
                t = s - step * G[i, j]
                if s * t < 0.0:
                    t = 0.0
                S[i, j] = t
    return np.asarray(S)


def partial_distances(const double[:, ::1] X, M):
    cdef const unsigned char[:, ::1] m = np.ascontiguousarray(M, dtype=np.uint8)
    cdef Py_ssize_t n = X.shape[0], N = X.shape[1]
    out_arr = np.empty((n, n))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, c, cnt
    cdef double acc, d
    with nogil:
        for i in range(n):
            for j in range(i, n):
                acc = 0.0
                cnt = 0
                for c in range(N):
                    if m[i, c] and m[j, c]:
                        d = X[i, c] - X[j, c]
                        acc = acc + d * d
                        cnt += 1
                if cnt > 0:
                    d = sqrt(acc * N / cnt)
                else:
                    d = INFINITY
                out[i, j] = d
                out[j, i] = d
    return out_arr


def knn_fill(const double[:, ::1] X, M, const Py_ssize_t[:, ::1] order, Py_ssize_t k,
             const double[:, ::1] fallback, double[:, ::1] out):
    cdef const unsigned char[:, ::1] m = np.ascontiguousarray(M, dtype=np.uint8)
    cdef Py_ssize_t n = X.shape[0], N = X.shape[1], width = order.shape[1]
    cdef Py_ssize_t i, c, r, j
    cdef Py_ssize_t found
    cdef double acc
    with nogil:
        for i in range(n):
            for c in range(N):
                if m[i, c]:
                    continue
                acc = 0.0
                found = 0
                for r in range(width):
                    j = order[i, r]
                    if m[j, c]:
                        acc = acc + X[j, c]
                        found += 1
                        if found == k:
                            break
                if found > 0:
                    out[i, c] = acc / found
                else:
                    out[i, c] = fallback[i, c]
    return np.asarray(out)
