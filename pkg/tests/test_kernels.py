import numpy as np

from spcnet import _kernels


def random_csr(rng, m, density=0.3):
    dense = rng.standard_normal((m, m)) * (rng.random((m, m)) < density)
    indptr = [0]
    indices, data = [], []
    for i in range(m):
        cols = np.nonzero(dense[i])[0]
        indices.extend(cols.tolist())
        data.extend(dense[i, cols].tolist())
        indptr.append(len(indices))
    return (np.asarray(indptr, dtype=np.int64),
            np.asarray(indices, dtype=np.int64),
            np.asarray(data, dtype=np.float64), dense)


def test_backends_agree():
    rng = np.random.default_rng(0)
    for _ in range(20):
        m = int(rng.integers(1, 40))
        indptr, indices, data, dense = random_csr(rng, m)
        block = np.ascontiguousarray(rng.standard_normal((m, 3)))
        expect = dense @ block
        got_np = _kernels.csr_matmat_numpy(indptr, indices, data, block)
        np.testing.assert_allclose(got_np, expect, atol=1e-12)
        got_active = _kernels.csr_matmat(indptr, indices, data, block)
        np.testing.assert_allclose(got_active, expect, atol=1e-12)


def test_compiled_backend_if_present():
    try:
        from spcnet._kernels import _spmm
    except ImportError:
        return  # fallback-only build
    rng = np.random.default_rng(1)
    indptr, indices, data, dense = random_csr(rng, 25)
    block = np.ascontiguousarray(rng.standard_normal((25, 4)))
    np.testing.assert_allclose(_spmm.csr_matmat(indptr, indices, data, block),
                               dense @ block, atol=1e-12)


def test_empty_rows_are_zero():
    # rows 0 and 2 empty, including a trailing empty row
    indptr = np.array([0, 0, 2, 2], dtype=np.int64)
    indices = np.array([0, 2], dtype=np.int64)
    data = np.array([3.0, -1.0])
    block = np.ascontiguousarray(np.arange(6.0).reshape(3, 2))
    expect = np.array([[0.0, 0.0], [3.0 * 0 - 1.0 * 4, 3.0 * 1 - 1.0 * 5],
                       [0.0, 0.0]])
    np.testing.assert_array_equal(
        _kernels.csr_matmat_numpy(indptr, indices, data, block), expect)
    np.testing.assert_array_equal(
        _kernels.csr_matmat(indptr, indices, data, block), expect)


def test_bitwise_deterministic():
    rng = np.random.default_rng(2)
    indptr, indices, data, _ = random_csr(rng, 30)
    block = np.ascontiguousarray(rng.standard_normal((30, 5)))
    first = _kernels.csr_matmat(indptr, indices, data, block)
    second = _kernels.csr_matmat(indptr, indices, data, block)
    assert np.array_equal(first, second)
    f_np = _kernels.csr_matmat_numpy(indptr, indices, data, block)
    s_np = _kernels.csr_matmat_numpy(indptr, indices, data, block)
    assert np.array_equal(f_np, s_np)
