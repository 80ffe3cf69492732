"""Dataset loading, split protocols and the two-block SBM generator.

Dataset directory layout (plain text, hermetic, no downloads here):
  edges.txt     one edge per line, two whitespace-separated 0-based node
                ids; lines starting with '#' are ignored
  features.txt  whitespace-separated numeric matrix, one node per row
  labels.txt    one integer per line
  meta.json     {"name": ..., "C": num_classes, "d": feature_dim}
"""
import json
import os
from dataclasses import dataclass

import numpy as np

from .graph import Graph
from .model import SplitSpec

SPARSE_CLASSIC = "sparse-classic"   # 20 per class train, 500 val, 1000 test
SPARSE_RATIO = "sparse-ratio"       # 2.5 / 2.5 / 95 percent, stratified
DENSE_RANDOM = "dense-random"       # 60 / 20 / 20 percent, random
FIXED_4832 = "fixed-4832"           # 48 / 32 / 20 percent, committed seeds

# Committed once for the fixed-split protocol; protocol.seed indexes into
# this list (see README).
FIXED_SPLIT_SEEDS = (1171, 2288, 3033, 4174, 5901, 6240, 7332, 8081, 9112, 10851)


@dataclass(frozen=True)
class SplitProtocol:
    kind: str = DENSE_RANDOM
    seed: int = 0
    train_per_class: int = 20
    val_count: int = 500
    test_count: int = 1000
    train_frac: float = 0.6
    val_frac: float = 0.2

    def __post_init__(self):
        if self.kind not in (SPARSE_CLASSIC, SPARSE_RATIO, DENSE_RANDOM,
                             FIXED_4832):
            raise ValueError(f"unknown split protocol {self.kind!r}")
        if self.train_frac <= 0 or self.val_frac < 0 \
                or self.train_frac + self.val_frac > 1.0:
            raise ValueError("split fractions must satisfy train > 0, "
                             "val >= 0, train + val <= 1")


@dataclass(frozen=True)
class SbmConfig:
    """Two-block symmetric SBM: equal blocks, within prob p, cross prob q.

    Features are Gaussian around +/- mu0 per block (mu1 = -mu0); labels
    are the block ids.
    """
    nodes: int = 500
    p: float = 0.2
    q: float = 0.05
    feature_dim: int = 2
    mu0: tuple = (1.0, 1.0)
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.nodes < 2 or self.nodes % 2 != 0:
            raise ValueError("nodes must be even and >= 2")
        if not (0.0 < self.p < 1.0) or not (0.0 <= self.q < 1.0):
            raise ValueError("p must be in (0,1), q in [0,1)")
        if self.p == self.q:
            raise ValueError("p and q must differ")
        if len(self.mu0) != self.feature_dim:
            raise ValueError("mu0 length must equal feature_dim")


def _read_matrix(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([float(x) for x in line.split()])
    return np.asarray(rows, dtype=np.float64)


def row_normalize(features, eps=1e-12):
    """Scale every row to unit L1 norm; all-zero rows stay zero."""
    norms = np.abs(features).sum(axis=1, keepdims=True)
    return features / np.maximum(norms, eps)


def load_dataset(dir_path, normalize_features=True) -> Graph:
    """Load a dataset directory into a Graph.

    Duplicate edges are deduplicated; self-loops are rejected. Features
    are row-normalized to unit L1 norm unless disabled.
    """
    for name in ("edges.txt", "features.txt", "labels.txt", "meta.json"):
        if not os.path.exists(os.path.join(dir_path, name)):
            raise FileNotFoundError(f"missing {name} in {dir_path}")
    with open(os.path.join(dir_path, "meta.json"), encoding="utf-8") as fh:
        meta = json.load(fh)
    features = _read_matrix(os.path.join(dir_path, "features.txt"))
    labels_raw = _read_matrix(os.path.join(dir_path, "labels.txt"))
    labels = labels_raw.reshape(-1).astype(np.int64)
    m = features.shape[0]
    if labels.shape[0] != m:
        raise ValueError("label count does not match feature row count")
    if features.shape[1] != int(meta["d"]):
        raise ValueError("feature dimension does not match meta.json")
    edges_raw = _read_matrix(os.path.join(dir_path, "edges.txt"))
    edges = edges_raw.astype(np.int64) if edges_raw.size else \
        np.empty((0, 2), dtype=np.int64)
    if normalize_features:
        features = row_normalize(features)
    return Graph.build(m, edges, features, labels,
                       num_classes=int(meta["C"]))


def save_dataset(g: Graph, dir_path, name):
    """Write a Graph back out in the plain-text dataset layout."""
    os.makedirs(dir_path, exist_ok=True)
    with open(os.path.join(dir_path, "edges.txt"), "w", encoding="utf-8") as fh:
        for i, j in g.edges:
            fh.write(f"{i} {j}\n")
    np.savetxt(os.path.join(dir_path, "features.txt"), g.features, fmt="%.17g")
    np.savetxt(os.path.join(dir_path, "labels.txt"), g.labels, fmt="%d")
    with open(os.path.join(dir_path, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump({"name": name, "C": g.num_classes,
                   "d": g.features.shape[1]}, fh)


def _fractional_split(m, rng, train_frac, val_frac):
    perm = rng.permutation(m)
    n_train = int(round(train_frac * m))
    n_val = int(round(val_frac * m))
    if n_train == 0:
        raise ValueError("split produces an empty training set")
    return (perm[:n_train], perm[n_train:n_train + n_val],
            perm[n_train + n_val:])


def make_split(g: Graph, protocol: SplitProtocol) -> SplitSpec:
    """Disjoint train/val/test index sets per the chosen protocol."""
    m = g.num_nodes
    if protocol.kind == FIXED_4832:
        if not 0 <= protocol.seed < len(FIXED_SPLIT_SEEDS):
            raise ValueError("fixed-split seed index out of range")
        rng = np.random.default_rng(FIXED_SPLIT_SEEDS[protocol.seed])
        tr, va, te = _fractional_split(m, rng, 0.48, 0.32)
    elif protocol.kind == DENSE_RANDOM:
        rng = np.random.default_rng(protocol.seed)
        tr, va, te = _fractional_split(m, rng, protocol.train_frac,
                                       protocol.val_frac)
    elif protocol.kind == SPARSE_CLASSIC:
        rng = np.random.default_rng(protocol.seed)
        train_parts = []
        for c in range(g.num_classes):
            members = np.flatnonzero(g.labels == c)
            if members.shape[0] < protocol.train_per_class:
                raise ValueError(f"class {c} has fewer than "
                                 f"{protocol.train_per_class} nodes")
            train_parts.append(rng.choice(members, protocol.train_per_class,
                                          replace=False))
        tr = np.concatenate(train_parts)
        rest = rng.permutation(np.setdiff1d(np.arange(m), tr))
        if rest.shape[0] < protocol.val_count + protocol.test_count:
            raise ValueError("not enough nodes left for val + test")
        va = rest[:protocol.val_count]
        te = rest[protocol.val_count:protocol.val_count + protocol.test_count]
    else:  # SPARSE_RATIO: 2.5 / 2.5 / 95, stratified train and val
        rng = np.random.default_rng(protocol.seed)
        train_parts, val_parts = [], []
        for c in range(g.num_classes):
            members = rng.permutation(np.flatnonzero(g.labels == c))
            n_tr = max(1, round(0.025 * members.shape[0]))
            n_va = max(1, round(0.025 * members.shape[0]))
            if members.shape[0] < n_tr + n_va:
                raise ValueError(f"class {c} too small for a stratified split")
            train_parts.append(members[:n_tr])
            val_parts.append(members[n_tr:n_tr + n_va])
        tr = np.concatenate(train_parts)
        va = np.concatenate(val_parts)
        te = np.setdiff1d(np.arange(m), np.concatenate([tr, va]))
    return SplitSpec(np.sort(tr).astype(np.int64),
                     np.sort(va).astype(np.int64),
                     np.sort(te).astype(np.int64))


def generate_sbm(cfg: SbmConfig) -> Graph:
    """Draw a two-block SBM graph with Gaussian features.

    Nodes 0..w/2-1 form block 0, the rest block 1. Each unordered pair
    is an edge with probability p (same block) or q (cross block);
    self-loops are excluded by construction. Adjacency is drawn before
    features so the stream layout is stable.
    """
    rng = np.random.default_rng(cfg.seed)
    w = cfg.nodes
    half = w // 2
    labels = np.zeros(w, dtype=np.int64)
    labels[half:] = 1
    same_block = labels[:, None] == labels[None, :]
    prob = np.where(same_block, cfg.p, cfg.q)
    draws = rng.random((w, w))
    upper = np.triu(np.ones((w, w), dtype=bool), k=1)
    ei, ej = np.nonzero(upper & (draws < prob))
    edges = np.stack([ei, ej], axis=1)
    mu0 = np.asarray(cfg.mu0, dtype=np.float64)
    means = np.where(labels[:, None] == 0, mu0[None, :], -mu0[None, :])
    features = means + cfg.sigma * rng.standard_normal((w, cfg.feature_dim))
    return Graph.build(w, edges, features, labels, num_classes=2)


def resolve_dataset_dir(path):
    """Resolve a dataset path, falling back to $SPCNET_DATA_DIR/<path>."""
    if os.path.isdir(path):
        return path
    root = os.environ.get("SPCNET_DATA_DIR")
    if root:
        candidate = os.path.join(root, path)
        if os.path.isdir(candidate):
            return candidate
    raise FileNotFoundError(f"dataset directory not found: {path}")
