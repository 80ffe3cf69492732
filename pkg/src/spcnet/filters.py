"""Truncated spectral filters applied through sparse propagation.

Two variants share the propagation pass P_0 = B, P_n = -(1/n) L P_{n-1}
(the 1/n! is folded into the iteration so factorials never overflow):

  * single-order: out = [B] + sum_n C_n(k, t) P_n, with continuous order k;
  * multi-term:   out = [B] + beta_0 B + sum_kappa beta_kappa
                  sum_n C_n(kappa, t) P_n, orders kappa = 1..K,
                  one propagation pass reused across all kappa.

[B] denotes the identity mapping, controlled by ``include_identity``.
"""
from dataclasses import dataclass

import numpy as np

from .graph import SparseSymMatrix, spmm
from .pcpoly import pc_coefficients, pc_coefficients_grad_k

SPCNET = "spcnet"
PCNET = "pcnet"


@dataclass(frozen=True)
class FilterSpec:
    variant: str = SPCNET
    k: float = 1.0            # filter order (single-order variant)
    t: float = 0.5
    n_terms: int = 10         # series truncation N
    beta: np.ndarray | None = None  # multi-term mixing weights, length K+1
    include_identity: bool = True

    def __post_init__(self):
        if self.variant not in (SPCNET, PCNET):
            raise ValueError(f"unknown filter variant {self.variant!r}")
        if self.n_terms < 0:
            raise ValueError("n_terms must be >= 0")
        if self.t < 0:
            raise ValueError("t must be >= 0")
        if self.variant == PCNET:
            if self.beta is None or np.asarray(self.beta).ndim != 1 \
                    or np.asarray(self.beta).shape[0] < 2:
                raise ValueError("multi-term filter needs beta of length K+1, K >= 1")
            object.__setattr__(self, "beta",
                               np.asarray(self.beta, dtype=np.float64))

    @property
    def num_orders(self):
        """K, the number of summed filter orders (multi-term variant)."""
        if self.variant != PCNET:
            raise ValueError("num_orders is defined for the multi-term variant only")
        return self.beta.shape[0] - 1

    def with_k(self, k):
        return FilterSpec(self.variant, float(k), self.t, self.n_terms,
                          self.beta, self.include_identity)

    def with_beta(self, beta):
        return FilterSpec(self.variant, self.k, self.t, self.n_terms,
                          np.asarray(beta, dtype=np.float64),
                          self.include_identity)


def _check_block(mat, block):
    block = np.asarray(block, dtype=np.float64)
    if block.ndim != 2 or block.shape[0] != mat.dim:
        raise ValueError(
            f"dimension mismatch: operator is {mat.dim}x{mat.dim}, "
            f"block is {block.shape}")
    if not np.all(np.isfinite(block)):
        raise ValueError("non-finite input values")
    return block


def _series_coefficients(spec: FilterSpec) -> np.ndarray:
    """Per-power coefficients c_n multiplying P_n, beta already folded in."""
    if spec.variant == SPCNET:
        return pc_coefficients(spec.k, spec.t, spec.n_terms).values
    combined = np.zeros(spec.n_terms + 1)
    for kappa in range(1, spec.num_orders + 1):
        combined += spec.beta[kappa] * \
            pc_coefficients(float(kappa), spec.t, spec.n_terms).values
    return combined


def _accumulate_series(L, block, coeffs, base):
    """base + sum_n coeffs[n] P_n with P_n = -(1/n) L P_{n-1}."""
    out = base + coeffs[0] * block
    prop = block
    for n in range(1, coeffs.shape[0]):
        prop = spmm(L, prop) * (-1.0 / n)
        out += coeffs[n] * prop
    return out


def apply_filter(L: SparseSymMatrix, block, spec: FilterSpec) -> np.ndarray:
    """Filter a dense feature block through the truncated series."""
    block = _check_block(L, block)
    base = block.copy() if spec.include_identity else np.zeros_like(block)
    if spec.variant == PCNET:
        base += spec.beta[0] * block
    return _accumulate_series(L, block, _series_coefficients(spec), base)


def apply_filter_transpose_grad(L, grad_block, spec: FilterSpec) -> np.ndarray:
    """Vector-Jacobian product of apply_filter w.r.t. its input block.

    The filter is a polynomial in the symmetric operator L, hence
    self-adjoint: the VJP is the filter itself applied to the incoming
    gradient.
    """
    return apply_filter(L, grad_block, spec)


def filter_grad_k(L: SparseSymMatrix, block, spec: FilterSpec) -> np.ndarray:
    """Derivative of apply_filter(L, block, spec) in the order k."""
    if spec.variant != SPCNET:
        raise ValueError("k-gradient undefined for PCNET")
    block = _check_block(L, block)
    dcoeffs = pc_coefficients_grad_k(spec.k, spec.t, spec.n_terms).dvalues_dk
    return _accumulate_series(L, block, dcoeffs, np.zeros_like(block))


def pcnet_term_outputs(L: SparseSymMatrix, block, spec: FilterSpec):
    """Per-order series sums S_kappa = sum_n C_n(kappa, t) P_n.

    The multi-term output decomposes as
    [B] + beta_0 B + sum_kappa beta_kappa S_kappa, which makes the beta
    gradient a plain inner product against each S_kappa. One propagation
    pass is shared by all orders.
    """
    if spec.variant != PCNET:
        raise ValueError("term outputs are defined for the multi-term variant only")
    block = _check_block(L, block)
    tables = [pc_coefficients(float(kappa), spec.t, spec.n_terms).values
              for kappa in range(1, spec.num_orders + 1)]
    sums = [table[0] * block for table in tables]
    prop = block
    for n in range(1, spec.n_terms + 1):
        prop = spmm(L, prop) * (-1.0 / n)
        for kappa_idx, table in enumerate(tables):
            sums[kappa_idx] += table[n] * prop
    return sums


def stability_constant(spec: FilterSpec) -> float:
    """sum_{n>=1} |C_n(k, t)| / (n-1)!

    Bounds the operator-norm change of the (identity-free) filter per
    unit operator-norm change of the Laplacian; 0 for n_terms = 0 where
    the filter is constant.
    """
    if spec.variant != SPCNET:
        raise ValueError("stability constant is defined for the single-order variant")
    if spec.n_terms == 0:
        return 0.0
    values = pc_coefficients(spec.k, spec.t, spec.n_terms).values
    total = 0.0
    inv_fact = 1.0
    for n in range(1, spec.n_terms + 1):
        if n > 1:
            inv_fact /= (n - 1.0)
        total += abs(values[n]) * inv_fact
    return total


def spectral_norm(mat, tol=1e-8, max_iter=10000, dense_cutoff=2000):
    """Largest singular value of a dense matrix.

    Exact (SVD) up to dense_cutoff rows; power iteration on M^T M with
    the given tolerance beyond that.
    """
    mat = np.asarray(mat, dtype=np.float64)
    if mat.shape[0] <= dense_cutoff:
        return float(np.linalg.norm(mat, 2))
    rng = np.random.default_rng(0)
    v = rng.standard_normal(mat.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = mat.T @ (mat @ v)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        sigma_new = np.sqrt(norm_w)
        if abs(sigma_new - sigma) <= tol * max(1.0, sigma_new):
            return float(sigma_new)
        sigma = sigma_new
    return float(sigma)
