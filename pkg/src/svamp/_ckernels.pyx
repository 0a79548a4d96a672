# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, uint8_t, int64_t

cnp.import_array()


cdef inline uint64_t _gf_mul(uint64_t a, uint64_t b, int n, uint64_t mask, uint64_t poly) nogil:
    cdef uint64_t res = 0
    cdef uint64_t carry
    cdef int i
    for i in range(n):
        if b & 1:
            res ^= a
        carry = (a >> (n - 1)) & 1
        a = (a << 1) & mask
        if carry:
            a ^= poly
        b >>= 1
    return res


cdef inline uint64_t _mask(int n):
    if n >= 64:
        return <uint64_t>0xFFFFFFFFFFFFFFFF
    return (<uint64_t>1 << n) - 1


def gf_mul_array(a, b, n, poly):
    a_arr, b_arr = np.broadcast_arrays(np.asarray(a, dtype=np.uint64), np.asarray(b, dtype=np.uint64))
    shape = a_arr.shape
    cdef uint64_t[::1] av = np.ascontiguousarray(a_arr).ravel()
    cdef uint64_t[::1] bv = np.ascontiguousarray(b_arr).ravel()
    out = np.empty(av.shape[0], dtype=np.uint64)
    cdef uint64_t[::1] ov = out
    cdef int nn = n
    cdef uint64_t mask = _mask(nn)
    cdef uint64_t p = <uint64_t>poly
    cdef Py_ssize_t i
    with nogil:
        for i in range(av.shape[0]):
            ov[i] = _gf_mul(av[i], bv[i], nn, mask, p)
    return out.reshape(shape)


def product_histogram(xs, ts, n, poly, m):
    cdef uint64_t[::1] xv = np.ascontiguousarray(xs, dtype=np.uint64)
    cdef uint64_t[::1] tv = np.ascontiguousarray(ts, dtype=np.uint64)
    counts = np.zeros(1 << m, dtype=np.int64)
    cdef int64_t[::1] cv = counts
    cdef int nn = n
    cdef uint64_t mask = _mask(nn)
    cdef uint64_t p = <uint64_t>poly
    cdef uint64_t low = (<uint64_t>1 << m) - 1
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(xv.shape[0]):
            for j in range(tv.shape[0]):
                cv[_gf_mul(xv[i], tv[j], nn, mask, p) & low] += 1
    return counts


cdef void _draw_settings(const double[:, ::1] bp, const double[:, ::1] ub, uint8_t[::1] out) nogil:
    cdef Py_ssize_t i
    cdef int k, prefix
    for i in range(ub.shape[0]):
        prefix = 0
        for k in range(4):
            prefix = (prefix << 1) | (1 if ub[i, k] < bp[k, prefix] else 0)
        out[i] = <uint8_t>prefix


cdef void _sample(const uint8_t[::1] s, const double[:, ::1] cdf, const double[::1] u, uint8_t[::1] out) nogil:
    cdef Py_ssize_t i
    cdef int x, row
    for i in range(s.shape[0]):
        row = s[i]
        x = 0
        while x < 15 and cdf[row, x] <= u[i]:
            x += 1
        out[i] = <uint8_t>x


cdef int64_t _count(const uint8_t[::1] s, const uint8_t[::1] o, const uint8_t[:, ::1] table) nogil:
    cdef Py_ssize_t i
    cdef int64_t c = 0
    for i in range(s.shape[0]):
        c += table[s[i], o[i]]
    return c


def draw_setting_bits(bit_probs, ubits):
    cdef const double[:, ::1] bp = np.ascontiguousarray(bit_probs, dtype=np.float64)
    cdef const double[:, ::1] ub = np.ascontiguousarray(ubits, dtype=np.float64)
    out = np.empty(ub.shape[0], dtype=np.uint8)
    cdef uint8_t[::1] ov = out
    with nogil:
        _draw_settings(bp, ub, ov)
    return out


def sample_outcomes(settings, cdf, uout):
    cdef const uint8_t[::1] s = np.ascontiguousarray(settings, dtype=np.uint8)
    cdef const double[:, ::1] c = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef const double[::1] u = np.ascontiguousarray(uout, dtype=np.float64)
    out = np.empty(s.shape[0], dtype=np.uint8)
    cdef uint8_t[::1] ov = out
    with nogil:
        _sample(s, c, u, ov)
    return out


def bell_count(settings, outcomes, table):
    cdef const uint8_t[::1] s = np.ascontiguousarray(settings, dtype=np.uint8)
    cdef const uint8_t[::1] o = np.ascontiguousarray(outcomes, dtype=np.uint8)
    cdef const uint8_t[:, ::1] t = np.ascontiguousarray(table, dtype=np.uint8)
    cdef int64_t c
    with nogil:
        c = _count(s, o, t)
    return int(c)


def simulate_iid_rounds(bit_probs, cdf, ubits, uout, table):
    cdef const double[:, ::1] bp = np.ascontiguousarray(bit_probs, dtype=np.float64)
    cdef const double[:, ::1] ub = np.ascontiguousarray(ubits, dtype=np.float64)
    cdef const double[:, ::1] c = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef const double[::1] u = np.ascontiguousarray(uout, dtype=np.float64)
    cdef const uint8_t[:, ::1] t = np.ascontiguousarray(table, dtype=np.uint8)
    settings = np.empty(ub.shape[0], dtype=np.uint8)
    outcomes = np.empty(ub.shape[0], dtype=np.uint8)
    cdef uint8_t[::1] sv = settings
    cdef uint8_t[::1] ov = outcomes
    cdef int64_t count
    with nogil:
        _draw_settings(bp, ub, sv)
        _sample(sv, c, u, ov)
        count = _count(sv, ov, t)
    return settings, outcomes, int(count)


def pivot_inplace(double[:, ::1] T, Py_ssize_t r, Py_ssize_t c):
    cdef Py_ssize_t i, j
    cdef Py_ssize_t nr = T.shape[0], nc = T.shape[1]
    cdef double f, d
    with nogil:
        d = T[r, c]
        for j in range(nc):
            T[r, j] /= d
        for i in range(nr):
            if i == r:
                continue
            f = T[i, c]
            if f == 0.0:
                continue
            for j in range(nc):
                T[i, j] -= f * T[r, j]
