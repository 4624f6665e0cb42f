# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled pairwise kernels; same surface as tdselector._kernels_py."""

import numpy as np

BACKEND_NAME = "compiled"


def pairwise_sqeuclidean(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t la = a.shape[0], lb = b.shape[0], n = a.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, d
    out = np.empty((la, lb))
    cdef double[:, ::1] o = out
    for i in range(la):
        for j in range(lb):
            acc = 0.0
            for k in range(n):
                d = a[i, k] - b[j, k]
                acc += d * d
            o[i, j] = acc
    return out


def pairwise_manhattan(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t la = a.shape[0], lb = b.shape[0], n = a.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, d
    out = np.empty((la, lb))
    cdef double[:, ::1] o = out
    for i in range(la):
        for j in range(lb):
            acc = 0.0
            for k in range(n):
                d = a[i, k] - b[j, k]
                acc += d if d >= 0.0 else -d
            o[i, j] = acc
    return out


def pairwise_dot(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t la = a.shape[0], lb = b.shape[0], n = a.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc
    out = np.empty((la, lb))
    cdef double[:, ::1] o = out
    for i in range(la):
        for j in range(lb):
            acc = 0.0
            for k in range(n):
                acc += a[i, k] * b[j, k]
            o[i, j] = acc
    return out
