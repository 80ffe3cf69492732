# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled CSR x dense kernel.

Accumulation is strictly sequential, row-major and in ascending column
order, so outputs are bit-reproducible run to run.
"""
from libc.stdint cimport int64_t

import numpy as np


def csr_matmat(const int64_t[::1] indptr, const int64_t[::1] indices,
               const double[::1] data, const double[:, ::1] dense):
    """Return CSR(indptr, indices, data) @ dense as a new float64 array."""
    cdef Py_ssize_t m = indptr.shape[0] - 1
    cdef Py_ssize_t c = dense.shape[1]
    out_arr = np.zeros((m, c), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, jj, j, col
    cdef double v
    for i in range(m):
        for jj in range(indptr[i], indptr[i + 1]):
            col = indices[jj]
            v = data[jj]
            for j in range(c):
                out[i, j] += v * dense[col, j]
    return out_arr
