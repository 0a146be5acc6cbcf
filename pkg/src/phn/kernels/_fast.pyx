# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Semantics must stay bit-identical to ``pure.py``."""

from libc.math cimport exp

import numpy as np


def trailing_mean(double[::1] values, Py_ssize_t window):
    cdef Py_ssize_t n = values.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, j, lo
    cdef double s
    for i in range(n):
        lo = i - window + 1
        if lo < 0:
            lo = 0
        s = 0.0
        for j in range(lo, i + 1):
            s += values[j]
        ov[i] = s / <double>(i + 1 - lo)
    return out


def impulse_response(double[::1] doses, double tau):
    cdef Py_ssize_t n = doses.shape[0]
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t t, s
    cdef double acc
    for t in range(n):
        acc = 0.0
        for s in range(t):
            acc += doses[s] * exp(-<double>(t - s) / tau)
        ov[t] = acc
    return out


def impulse_value(double[::1] doses, double tau):
    cdef Py_ssize_t n = doses.shape[0]
    cdef Py_ssize_t s
    cdef double acc = 0.0
    for s in range(n):
        acc += doses[s] * exp(-<double>(n - s) / tau)
    return acc


def group_minutes(long long[::1] minutes, long long max_gap, long long min_len):
    cdef Py_ssize_t n = minutes.shape[0]
    runs = []
    if n == 0:
        return runs
    cdef long long start = minutes[0]
    cdef long long prev = minutes[0]
    cdef long long m
    cdef Py_ssize_t i
    for i in range(1, n):
        m = minutes[i]
        if m - prev - 1 <= max_gap:
            prev = m
        else:
            if prev - start + 1 >= min_len:
                runs.append((int(start), int(prev)))
            start = m
            prev = m
    if prev - start + 1 >= min_len:
        runs.append((int(start), int(prev)))
    return runs
