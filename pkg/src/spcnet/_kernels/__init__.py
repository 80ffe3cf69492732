"""CSR matmul kernel with backend selection at import time.

The compiled extension (`spcnet._kernels._spmm`) is preferred; a
vectorized numpy implementation is the fallback when the extension is
missing or when ``SPCNET_PURE_PYTHON=1`` is set. Both backends are
deterministic for fixed inputs within one build: the compiled kernel
accumulates row-major in ascending column order; the numpy fallback uses
numpy's fixed segmented-reduction order.
"""
import os

import numpy as np


def csr_matmat_numpy(indptr, indices, data, dense):
    """CSR @ dense in pure numpy. Same contract as the compiled kernel."""
    m = indptr.shape[0] - 1
    out = np.zeros((m, dense.shape[1]), dtype=np.float64)
    if data.shape[0] == 0:
        return out
    nonempty = np.diff(indptr) > 0
    prod = data[:, None] * dense[indices]
    # reduceat mishandles empty segments, so reduce nonempty rows only
    out[nonempty] = np.add.reduceat(prod, indptr[:-1][nonempty], axis=0)
    return out


if os.environ.get("SPCNET_PURE_PYTHON"):
    csr_matmat = csr_matmat_numpy
    BACKEND = "numpy"
else:
    try:
        from ._spmm import csr_matmat as _csr_matmat_compiled

        csr_matmat = _csr_matmat_compiled
        BACKEND = "compiled"
    except ImportError:
        csr_matmat = csr_matmat_numpy
        BACKEND = "numpy"
