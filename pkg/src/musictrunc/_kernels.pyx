# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same signatures and results as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, fabs, INFINITY
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()

cdef double TOL = 1e-12

cdef struct Keyed:
    double key
    Py_ssize_t idx


cdef int _cmp_keyed(const void* a, const void* b) noexcept nogil:
    cdef const Keyed* x = <const Keyed*> a
    cdef const Keyed* y = <const Keyed*> b
    if x.key < y.key:
        return -1
    if x.key > y.key:
        return 1
    if x.idx < y.idx:
        return -1
    if x.idx > y.idx:
        return 1
    return 0


cdef cnp.ndarray _keep_prefix(const double[::1] p, Keyed* order, Py_ssize_t n, double tau):
    cdef Py_ssize_t i, cut = n - 1, npos = 0
    cdef double cum = 0.0, mass = 0.0
    for i in range(n):
        if p[i] > 0:
            npos += 1
    for i in range(n):
        cum += p[order[i].idx]
        if cum >= tau - TOL:
            cut = i
            break
    mass = cum
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    if cut + 1 >= npos:
        for i in range(n):
            o[i] = p[i]
        return out
    for i in range(cut + 1):
        o[order[i].idx] = p[order[i].idx] / mass
    return out


def nucleus(probs, double tau):
    if tau >= 1.0:
        # only the whole support has mass 1; skip the tolerance test
        return np.array(probs, dtype=np.float64)
    cdef const double[::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], i
    cdef Keyed* order = <Keyed*> malloc(n * sizeof(Keyed))
    if order == NULL:
        raise MemoryError()
    try:
        for i in range(n):
            order[i].key = -p[i]
            order[i].idx = i
        qsort(order, n, sizeof(Keyed), _cmp_keyed)
        return _keep_prefix(p, order, n, tau)
    finally:
        free(order)


def typical(probs, double tau):
    if tau >= 1.0:
        # only the whole support has mass 1; skip the tolerance test
        return np.array(probs, dtype=np.float64)
    cdef const double[::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], i
    cdef double h = 0.0, ic
    cdef Keyed* order = <Keyed*> malloc(n * sizeof(Keyed))
    if order == NULL:
        raise MemoryError()
    try:
        for i in range(n):
            if p[i] > 0:
                h += p[i] * (-log(p[i]))
        for i in range(n):
            if p[i] > 0:
                ic = -log(p[i])
                order[i].key = fabs(h - ic)
            else:
                order[i].key = INFINITY
            order[i].idx = i
        qsort(order, n, sizeof(Keyed), _cmp_keyed)
        return _keep_prefix(p, order, n, tau)
    finally:
        free(order)


def top_k(probs, Py_ssize_t k):
    cdef const double[::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], i, npos = 0
    cdef double mass = 0.0
    for i in range(n):
        if p[i] > 0:
            npos += 1
    if k >= npos:
        return np.array(p, dtype=np.float64)
    cdef Keyed* order = <Keyed*> malloc(n * sizeof(Keyed))
    if order == NULL:
        raise MemoryError()
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    try:
        for i in range(n):
            order[i].key = -p[i]
            order[i].idx = i
        qsort(order, n, sizeof(Keyed), _cmp_keyed)
        for i in range(k):
            mass += p[order[i].idx]
        for i in range(k):
            o[order[i].idx] = p[order[i].idx] / mass
        return out
    finally:
        free(order)


def sample_index(probs, double u):
    cdef const double[::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], i, last = -1
    cdef double total = 0.0, cum = 0.0, target
    for i in range(n):
        total += p[i]
    target = u * total
    for i in range(n):
        cum += p[i]
        if p[i] > 0:
            last = i
        if cum > target:
            return i
    return last


def lag_profile(keys, bar_ptr, tune_ptr, Py_ssize_t max_lag):
    cdef const long long[::1] k = np.ascontiguousarray(keys, dtype=np.int64)
    cdef const long long[::1] bp = np.ascontiguousarray(bar_ptr, dtype=np.int64)
    cdef const long long[::1] tp = np.ascontiguousarray(tune_ptr, dtype=np.int64)
    cdef Py_ssize_t n_tunes = tp.shape[0] - 1, x, t, i, first, last, nb, top
    cdef Py_ssize_t a0, a1, b0, b1, la, lb, inter
    cdef double sim
    acc = np.zeros(max_lag, dtype=np.float64)
    cdef double[::1] out = acc
    for x in range(n_tunes):
        first = tp[x]
        last = tp[x + 1]
        nb = last - first
        top = max_lag if max_lag < nb - 1 else nb - 1
        for t in range(1, top + 1):
            for i in range(first, last - t):
                a0 = bp[i]
                a1 = bp[i + 1]
                b0 = bp[i + t]
                b1 = bp[i + t + 1]
                la = a1 - a0
                lb = b1 - b0
                if la == 0 and lb == 0:
                    sim = 1.0
                else:
                    inter = 0
                    while a0 < a1 and b0 < b1:
                        if k[a0] == k[b0]:
                            inter += 1
                            a0 += 1
                            b0 += 1
                        elif k[a0] < k[b0]:
                            a0 += 1
                        else:
                            b0 += 1
                    sim = (<double> inter) / (<double> (la + lb - inter))
                out[t - 1] += sim
    if n_tunes:
        for t in range(max_lag):
            out[t] = out[t] / n_tunes
    return acc
