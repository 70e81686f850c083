# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled round kernel. Same contract as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()


cdef void _luts(const uint64_t[::1] cols, int lo_bits, uint64_t[::1] lo, uint64_t[::1] hi) noexcept nogil:
    cdef Py_ssize_t i, nb = cols.shape[0]
    cdef uint64_t acc
    cdef int bit
    for i in range(lo.shape[0]):
        acc = 0
        for bit in range(lo_bits):
            if (i >> bit) & 1:
                acc ^= cols[bit]
        lo[i] = acc
    for i in range(hi.shape[0]):
        acc = 0
        for bit in range(nb - lo_bits):
            if (i >> bit) & 1:
                acc ^= cols[lo_bits + bit]
        hi[i] = acc


def destination_index(cnp.ndarray cols_in, int j_star):
    """Flat ``parity * 4**(m-1) + survivor`` destination of every source string."""
    cdef const uint64_t[::1] cols = np.ascontiguousarray(cols_in, dtype=np.uint64)
    cdef int nbits = cols.shape[0]
    cdef int lo_bits = nbits // 2
    cdef Py_ssize_t n = (<Py_ssize_t>1) << nbits
    cdef Py_ssize_t quarter = n >> 2
    cdef uint64_t[::1] lo = np.empty((<Py_ssize_t>1) << lo_bits, dtype=np.uint64)
    cdef uint64_t[::1] hi = np.empty((<Py_ssize_t>1) << (nbits - lo_bits), dtype=np.uint64)
    cdef cnp.ndarray[int64_t, ndim=1] dest_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] dest = dest_arr
    cdef uint64_t lomask = (((<uint64_t>1) << lo_bits) - 1)
    cdef uint64_t keep = (((<uint64_t>1) << (2 * j_star)) - 1)
    cdef int amp = 2 * j_star + 1
    cdef int hshift = 2 * j_star + 2
    cdef Py_ssize_t x
    cdef uint64_t y, surv, par
    with nogil:
        _luts(cols, lo_bits, lo, hi)
        for x in range(n):
            y = lo[x & lomask] ^ hi[x >> lo_bits]
            par = (y >> amp) & 1
            surv = (y & keep) | ((y >> hshift) << (2 * j_star))
            dest[x] = <int64_t>(par * quarter + surv)
    return dest_arr


def split_round(cnp.ndarray w_in, cnp.ndarray cols_in, int j_star):
    """Push every branch through one round and split it by the measured parity.

    ``w_in`` has shape ``(branches, 4**m)``. Returns ``(2 * branches, 4**(m-1))``
    where row ``2*b + parity`` holds the unnormalized posterior of branch ``b``.
    """
    cdef const double[:, ::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef Py_ssize_t nb = w.shape[0], n = w.shape[1]
    cdef Py_ssize_t quarter = n >> 2
    if n != ((<Py_ssize_t>1) << cols_in.shape[0]):
        raise ValueError("weight rows do not match the transform size")
    cdef const int64_t[::1] dest = destination_index(cols_in, j_star)
    out_arr = np.zeros((nb * 2, quarter), dtype=np.float64)
    cdef double[:, ::1] out = out_arr.reshape(nb, 2 * quarter)
    cdef Py_ssize_t b, x
    with nogil:
        for b in range(nb):
            for x in range(n):
                out[b, dest[x]] += w[b, x]
    return out_arr


def branch_max_sum(cnp.ndarray w_in):
    """Sum over rows of the row maximum."""
    cdef const double[:, ::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef Py_ssize_t b, x
    cdef double best, total = 0.0
    with nogil:
        for b in range(w.shape[0]):
            best = 0.0
            for x in range(w.shape[1]):
                if w[b, x] > best:
                    best = w[b, x]
            total += best
    return total
