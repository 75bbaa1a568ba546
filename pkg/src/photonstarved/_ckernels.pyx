# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Semantics match ``_pykernels`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, lgamma, exp, INFINITY, isinf

cnp.import_array()

cdef double _BIG = 1e250
cdef double _SMALL = 1e-250


def displaced_thermal_logpmf(double pulse_energy, double n_b, Py_ssize_t k_max):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(k_max + 1)
    cdef double[::1] o = out
    cdef Py_ssize_t k
    cdef double r, c, r2, shift, s_prev, s_cur, s_next, log_e
    if n_b == 0.0:
        if pulse_energy == 0.0:
            for k in range(k_max + 1):
                o[k] = -INFINITY
            o[0] = 0.0
            return out
        log_e = log(pulse_energy)
        for k in range(k_max + 1):
            o[k] = k * log_e - pulse_energy - lgamma(k + 1.0)
        return out

    r = n_b / (1.0 + n_b)
    c = pulse_energy / ((1.0 + n_b) * (1.0 + n_b))
    r2 = r * r
    shift = -pulse_energy / (1.0 + n_b) - log1p(n_b)
    s_prev = 0.0
    s_cur = 1.0
    o[0] = shift
    for k in range(k_max):
        s_next = ((r * (2 * k + 1) + c) * s_cur - r2 * k * s_prev) / (k + 1)
        s_prev = s_cur
        s_cur = s_next
        if s_cur > _BIG or s_cur < _SMALL:
            shift += log(s_cur)
            s_prev /= s_cur
            s_cur = 1.0
        o[k + 1] = shift + log(s_cur)
    return out


def fwht_rows(cnp.complex128_t[:, ::1] x):
    cdef Py_ssize_t n_rows = x.shape[0], m = x.shape[1]
    cdef Py_ssize_t row, h, i, j
    cdef cnp.complex128_t a, b
    for row in range(n_rows):
        h = 1
        while h < m:
            i = 0
            while i < m:
                for j in range(i, i + h):
                    a = x[row, j]
                    b = x[row, j + h]
                    x[row, j] = a + b
                    x[row, j + h] = a - b
                i += 2 * h
            h *= 2
    return np.asarray(x)


def frame_scores(cnp.int64_t[:, ::1] counts, cnp.int64_t[::1] truth,
                 double[::1] log_p1, double[::1] log_p0):
    cdef Py_ssize_t n_frames = counts.shape[0], m = counts.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] post = np.empty(n_frames)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] dec = np.empty(n_frames, dtype=np.int64)
    cdef double[::1] p = post
    cdef cnp.int64_t[::1] d = dec
    cdef Py_ssize_t f, j, best, n_inf, j_inf
    cdef double peak, acc, s, true_score, inv_ln2 = 1.0 / log(2.0)
    cdef cnp.int64_t k
    for f in range(n_frames):
        n_inf = 0
        j_inf = -1
        for j in range(m):
            if isinf(log_p0[counts[f, j]]):
                n_inf += 1
                j_inf = j
        if n_inf > 1:
            raise FloatingPointError("degenerate likelihoods: outcome impossible under every hypothesis")
        if n_inf == 1:
            if isinf(log_p1[counts[f, j_inf]]):
                raise FloatingPointError("degenerate likelihoods: outcome impossible under every hypothesis")
            d[f] = j_inf
            p[f] = 0.0 if truth[f] == j_inf else -INFINITY
            continue
        best = 0
        k = counts[f, 0]
        peak = log_p1[k] - log_p0[k]
        for j in range(1, m):
            k = counts[f, j]
            s = log_p1[k] - log_p0[k]
            if s > peak:
                peak = s
                best = j
        if isinf(peak) and peak < 0:
            raise FloatingPointError("degenerate likelihoods: all likelihood ratios vanish")
        acc = 0.0
        for j in range(m):
            k = counts[f, j]
            acc += exp(log_p1[k] - log_p0[k] - peak)
        k = counts[f, truth[f]]
        true_score = log_p1[k] - log_p0[k]
        p[f] = (true_score - peak - log(acc)) * inv_ln2
        d[f] = best
    return post, dec
