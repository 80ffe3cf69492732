"""Shared fixtures and independent oracles.

The oracles here never call the code paths they check: coefficient
tables come from the explicit falling-factorial sum, dense filter
matrices from an eigendecomposition with factorial-summed responses, and
operator norms from numpy's SVD.
"""
import math
import os

import numpy as np
import pytest

from spcnet.graph import Graph

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
TOY6_DIR = os.path.join(REPO_ROOT, "data", "toy6")
CORA_DIR = os.path.join(REPO_ROOT, "data", "cora")


@pytest.fixture
def toy6_dir():
    return TOY6_DIR


def random_graph(rng, m, edge_prob=0.3, d=3, num_classes=2):
    """Erdos-Renyi graph with Gaussian features and random labels."""
    draws = rng.random((m, m))
    upper = np.triu(np.ones((m, m), dtype=bool), k=1)
    ei, ej = np.nonzero(upper & (draws < edge_prob))
    edges = np.stack([ei, ej], axis=1)
    features = rng.standard_normal((m, d))
    labels = rng.integers(num_classes, size=m)
    return Graph.build(m, edges, features, labels, num_classes=num_classes)


def dense_adjacency(g):
    A = np.zeros((g.num_nodes, g.num_nodes))
    for i, j in g.edges:
        A[i, j] = A[j, i] = 1.0
    return A


def dense_norm_adjacency_oracle(g):
    """(D+I)^{-1/2} (A+I) (D+I)^{-1/2} built densely, step by step."""
    A = dense_adjacency(g)
    d_inv_sqrt = np.diag(1.0 / np.sqrt(A.sum(axis=1) + 1.0))
    return d_inv_sqrt @ (A + np.eye(g.num_nodes)) @ d_inv_sqrt


def falling_factorial(x, n):
    out = 1.0
    for i in range(n):
        out *= (x - i)
    return out


def pc_explicit_sum(k, t, n):
    """C_n(k, t) = sum_j binom(n, j) (-t)^j k(k-1)...(k-n+j+1)."""
    return sum(math.comb(n, j) * (-t) ** j * falling_factorial(k, n - j)
               for j in range(n + 1))


def response_oracle(k, t, n_terms, lam, include_identity=True):
    """Truncated response via explicit-sum coefficients and factorials."""
    acc = 1.0 if include_identity else 0.0
    for n in range(n_terms + 1):
        acc += pc_explicit_sum(k, t, n) * (-lam) ** n / math.factorial(n)
    return acc


def dense_filter_oracle(L_dense, k, t, n_terms, include_identity=True):
    """Filter matrix from the eigendecomposition of the dense operator."""
    lams, U = np.linalg.eigh(L_dense)
    resp = np.array([response_oracle(k, t, n_terms, lam, include_identity)
                     for lam in lams])
    return (U * resp) @ U.T


def pcnet_dense_filter_oracle(L_dense, beta, t, n_terms, include_identity=True):
    out = np.zeros_like(L_dense)
    if include_identity:
        out += np.eye(L_dense.shape[0])
    out += beta[0] * np.eye(L_dense.shape[0])
    for kappa in range(1, len(beta)):
        out += beta[kappa] * dense_filter_oracle(
            L_dense, float(kappa), t, n_terms, include_identity=False)
    return out
