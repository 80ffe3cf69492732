"""Graph container and the normalized spectral operators built from it.

All scalars are float64. Graphs are simple and undirected: the edge list
is deduplicated, stored with i < j, and never contains self-loops.
Self-loops enter exactly once inside the adjacency normalization (the
A + I shift), never through the edge list.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels


def _freeze(arr):
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph with node features and integer labels."""

    num_nodes: int
    edges: np.ndarray      # (E, 2) int64, i < j, sorted, deduplicated
    features: np.ndarray   # (m, d) float64
    labels: np.ndarray     # (m,) int64
    num_classes: int

    @classmethod
    def build(cls, num_nodes, edges, features, labels, num_classes=None):
        """Validate and canonicalize raw inputs into a Graph.

        Duplicate edges (in either orientation) are silently merged;
        self-loops are rejected.
        """
        m = int(num_nodes)
        if m <= 0:
            raise ValueError("num_nodes must be positive")
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= m:
                raise ValueError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self-loops are not allowed")
            lo = np.minimum(edges[:, 0], edges[:, 1])
            hi = np.maximum(edges[:, 0], edges[:, 1])
            edges = np.unique(np.stack([lo, hi], axis=1), axis=0)
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] != m:
            raise ValueError(f"feature matrix must have {m} rows")
        labels = np.asarray(labels, dtype=np.int64).reshape(-1)
        if labels.shape[0] != m:
            raise ValueError(f"label vector must have {m} entries")
        if labels.min() < 0:
            raise ValueError("labels must be non-negative")
        if num_classes is None:
            num_classes = int(labels.max()) + 1
        if labels.max() >= num_classes:
            raise ValueError("label id >= num_classes")
        return cls(m, _freeze(edges), _freeze(features), _freeze(labels),
                   int(num_classes))

    @property
    def num_edges(self):
        return self.edges.shape[0]

    def degrees(self):
        """Degree of every node (self-loops excluded, as stored)."""
        deg = np.zeros(self.num_nodes, dtype=np.int64)
        if self.edges.size:
            deg += np.bincount(self.edges[:, 0], minlength=self.num_nodes)
            deg += np.bincount(self.edges[:, 1], minlength=self.num_nodes)
        return deg


@dataclass(frozen=True)
class SparseSymMatrix:
    """Symmetric sparse operator in CSR form (column indices sorted per row)."""

    dim: int
    indptr: np.ndarray   # (m+1,) int64
    indices: np.ndarray  # (nnz,) int64
    data: np.ndarray     # (nnz,) float64

    @classmethod
    def from_coo(cls, dim, rows, cols, vals, check_symmetry=True):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        indptr = np.zeros(dim + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        mat = cls(int(dim), _freeze(indptr), _freeze(cols), _freeze(vals))
        if check_symmetry and not mat.is_symmetric():
            raise ValueError("matrix is not symmetric")
        return mat

    @property
    def nnz(self):
        return self.data.shape[0]

    def is_symmetric(self, tol=1e-12):
        """True if entry (i,j) matches (j,i) within tol, structurally too."""
        rows = np.repeat(np.arange(self.dim, dtype=np.int64),
                         np.diff(self.indptr))
        a = np.lexsort((self.indices, rows))
        b = np.lexsort((rows, self.indices))
        return (np.array_equal(rows[a], self.indices[b])
                and np.array_equal(self.indices[a], rows[b])
                and np.all(np.abs(self.data[a] - self.data[b]) <= tol))

    def diagonal(self):
        diag = np.zeros(self.dim)
        rows = np.repeat(np.arange(self.dim, dtype=np.int64),
                         np.diff(self.indptr))
        on_diag = rows == self.indices
        diag[rows[on_diag]] = self.data[on_diag]
        return diag

    def to_dense(self):
        dense = np.zeros((self.dim, self.dim))
        rows = np.repeat(np.arange(self.dim, dtype=np.int64),
                         np.diff(self.indptr))
        dense[rows, self.indices] = self.data
        return dense


def build_normalized_adjacency(g: Graph) -> SparseSymMatrix:
    """Self-loop-augmented, symmetrically normalized adjacency.

    Entry (i,j) is 1/sqrt((deg_i+1)(deg_j+1)) for each edge and the
    diagonal is 1/(deg_i+1); isolated nodes get diagonal 1.
    """
    m = g.num_nodes
    scale = 1.0 / np.sqrt(g.degrees() + 1.0)
    ei, ej = g.edges[:, 0], g.edges[:, 1]
    diag_ids = np.arange(m, dtype=np.int64)
    rows = np.concatenate([ei, ej, diag_ids])
    cols = np.concatenate([ej, ei, diag_ids])
    off_vals = scale[ei] * scale[ej]
    vals = np.concatenate([off_vals, off_vals, scale[diag_ids] ** 2])
    return SparseSymMatrix.from_coo(m, rows, cols, vals, check_symmetry=False)


def build_normalized_laplacian(g: Graph) -> SparseSymMatrix:
    """I minus the normalized adjacency; eigenvalues lie in [0, 2]."""
    adj = build_normalized_adjacency(g)
    data = -adj.data.copy()
    rows = np.repeat(np.arange(adj.dim, dtype=np.int64), np.diff(adj.indptr))
    on_diag = rows == adj.indices
    data[on_diag] += 1.0
    return SparseSymMatrix(adj.dim, adj.indptr, adj.indices, _freeze(data))


def edge_homophily(g: Graph) -> float:
    """Fraction of edges whose endpoints share a label."""
    if g.num_edges == 0:
        raise ValueError("no edges")
    same = g.labels[g.edges[:, 0]] == g.labels[g.edges[:, 1]]
    return float(np.mean(same))


def spmm(mat: SparseSymMatrix, dense) -> np.ndarray:
    """Sparse-dense product mat @ dense, deterministic per build."""
    dense = np.asarray(dense, dtype=np.float64)
    if dense.ndim != 2 or dense.shape[0] != mat.dim:
        raise ValueError(
            f"dimension mismatch: matrix is {mat.dim}x{mat.dim}, "
            f"block is {dense.shape}")
    dense = np.ascontiguousarray(dense)
    return _kernels.csr_matmat(mat.indptr, mat.indices, mat.data, dense)
