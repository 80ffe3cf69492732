"""Node classifier: MLP feature transform, spectral filter, softmax CE.

logits = filter(L, Theta(X)); Theta is a two-layer perceptron (ReLU,
dropout before each linear layer) or, with hidden=0, a single linear
layer. Gradients are hand-written reverse mode; the filter is
self-adjoint so its VJP is the filter itself. Training is full batch
with an adaptive-moment optimizer, early stopping on validation
accuracy, and a per-run seeded generator so runs are bit-reproducible.
"""
import copy
import json
import time
from dataclasses import asdict, dataclass

import numpy as np

from .filters import (PCNET, SPCNET, FilterSpec, apply_filter,
                      apply_filter_transpose_grad, filter_grad_k,
                      pcnet_term_outputs)
from .graph import Graph, build_normalized_laplacian

SPCNET_D = "spcnet-d"   # fixed filter order k
SPCNET_L = "spcnet-l"   # learnable filter order, initialized at 1
PCNET_MODEL = "pcnet"   # multi-term baseline with learnable beta

VARIANTS = (SPCNET_D, SPCNET_L, PCNET_MODEL)


@dataclass
class ModelConfig:
    variant: str = SPCNET_D
    hidden: int = 64          # 0 selects the single-linear-layer transform
    dropout: float = 0.5
    lr: float = 0.01
    weight_decay: float = 5e-4
    epochs: int = 1000
    patience: int = 200
    k: float = 1.0
    t: float = 0.5
    n_terms: int = 10
    num_orders: int = 10      # K for the multi-term baseline
    include_identity: bool = True
    freeze_beta: bool = False
    beta_init: tuple | None = None  # default: all-ones / (K+1)
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown model variant {self.variant!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.variant == PCNET_MODEL and self.num_orders < 1:
            raise ValueError("multi-term baseline needs num_orders >= 1")
        if self.beta_init is not None:
            self.beta_init = tuple(float(b) for b in self.beta_init)
            if len(self.beta_init) != self.num_orders + 1:
                raise ValueError("beta_init must have num_orders + 1 entries")


@dataclass
class ModelParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray | None
    b2: np.ndarray | None
    k_param: float
    beta: np.ndarray | None
    hyper: ModelConfig


@dataclass(frozen=True)
class SplitSpec:
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray

    def __post_init__(self):
        sets = [set(self.train_idx.tolist()), set(self.val_idx.tolist()),
                set(self.test_idx.tolist())]
        total = len(sets[0]) + len(sets[1]) + len(sets[2])
        if len(sets[0] | sets[1] | sets[2]) != total:
            raise ValueError("split index sets overlap")


def _glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(g: Graph, cfg: ModelConfig, rng) -> ModelParams:
    d, c = g.features.shape[1], g.num_classes
    if cfg.hidden > 0:
        W1 = _glorot(rng, d, cfg.hidden)
        b1 = np.zeros(cfg.hidden)
        W2 = _glorot(rng, cfg.hidden, c)
        b2 = np.zeros(c)
    else:
        W1 = _glorot(rng, d, c)
        b1 = np.zeros(c)
        W2 = b2 = None
    beta = None
    if cfg.variant == PCNET_MODEL:
        beta = np.asarray(cfg.beta_init, dtype=np.float64) \
            if cfg.beta_init is not None else \
            np.full(cfg.num_orders + 1, 1.0 / (cfg.num_orders + 1))
    return ModelParams(W1, b1, W2, b2, float(cfg.k), beta, cfg)


def filter_spec_for(params: ModelParams) -> FilterSpec:
    cfg = params.hyper
    if cfg.variant == PCNET_MODEL:
        return FilterSpec(PCNET, t=cfg.t, n_terms=cfg.n_terms,
                          beta=params.beta,
                          include_identity=cfg.include_identity)
    return FilterSpec(SPCNET, k=params.k_param, t=cfg.t, n_terms=cfg.n_terms,
                      include_identity=cfg.include_identity)


def _dropout_mask(rng, shape, p):
    return (rng.random(shape) >= p) / (1.0 - p)


def forward(g: Graph, params: ModelParams, spec: FilterSpec,
            train_mode=False, rng=None, laplacian=None):
    """Pre-softmax logits = filter(L, Theta(X)) plus a cache for backward."""
    cfg = params.hyper
    if params.W1.shape[0] != g.features.shape[1]:
        raise ValueError("parameter shapes do not match the graph features")
    if laplacian is None:
        laplacian = build_normalized_laplacian(g)
    X = g.features
    use_dropout = train_mode and cfg.dropout > 0.0
    mask1 = _dropout_mask(rng, X.shape, cfg.dropout) if use_dropout else None
    Xd = X * mask1 if use_dropout else X
    if params.W2 is not None:
        H1 = Xd @ params.W1 + params.b1
        R = np.maximum(H1, 0.0)
        mask2 = _dropout_mask(rng, R.shape, cfg.dropout) if use_dropout else None
        Rd = R * mask2 if use_dropout else R
        theta = Rd @ params.W2 + params.b2
    else:
        H1 = R = Rd = mask2 = None
        theta = Xd @ params.W1 + params.b1
    if not np.all(np.isfinite(theta)):
        raise FloatingPointError("numerical divergence")
    logits = apply_filter(laplacian, theta, spec)
    if not np.all(np.isfinite(logits)):
        raise FloatingPointError("numerical divergence")
    cache = {"laplacian": laplacian, "Xd": Xd, "H1": H1, "Rd": Rd,
             "mask2": mask2, "theta": theta}
    return logits, cache


def _softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


def cross_entropy(logits, labels, idx):
    """Mean CE over the given node indices."""
    probs = _softmax(logits[idx])
    picked = probs[np.arange(idx.shape[0]), labels[idx]]
    return float(-np.mean(np.log(picked)))


def loss_and_grads(g: Graph, params: ModelParams, spec: FilterSpec,
                   split: SplitSpec, rng=None, laplacian=None):
    """Training loss and gradients for every trainable parameter.

    Returns (loss, grads) where grads is a dict keyed by parameter name;
    "k" appears only for the learnable-order variant, "beta" only for
    the trainable multi-term baseline. Weight decay is added to the
    linear weights (not biases, k or beta).
    """
    cfg = params.hyper
    train_idx = np.asarray(split.train_idx)
    if train_idx.shape[0] == 0:
        raise ValueError("empty train_idx")
    logits, cache = forward(g, params, spec, train_mode=True, rng=rng,
                            laplacian=laplacian)
    L = cache["laplacian"]

    probs = _softmax(logits[train_idx])
    picked = probs[np.arange(train_idx.shape[0]), g.labels[train_idx]]
    loss = float(-np.mean(np.log(picked)))

    dlogits = np.zeros_like(logits)
    dl = probs.copy()
    dl[np.arange(train_idx.shape[0]), g.labels[train_idx]] -= 1.0
    dlogits[train_idx] = dl / train_idx.shape[0]

    dtheta = apply_filter_transpose_grad(L, dlogits, spec)
    grads = {}
    if params.W2 is not None:
        grads["W2"] = cache["Rd"].T @ dtheta + cfg.weight_decay * params.W2
        grads["b2"] = dtheta.sum(axis=0)
        dRd = dtheta @ params.W2.T
        dR = dRd * cache["mask2"] if cache["mask2"] is not None else dRd
        dH1 = dR * (cache["H1"] > 0.0)
    else:
        dH1 = dtheta
    grads["W1"] = cache["Xd"].T @ dH1 + cfg.weight_decay * params.W1
    grads["b1"] = dH1.sum(axis=0)

    if cfg.variant == SPCNET_L:
        grads["k"] = float(np.sum(dlogits *
                                  filter_grad_k(L, cache["theta"], spec)))
    if cfg.variant == PCNET_MODEL and not cfg.freeze_beta:
        terms = pcnet_term_outputs(L, cache["theta"], spec)
        gbeta = np.empty(spec.num_orders + 1)
        gbeta[0] = np.sum(dlogits * cache["theta"])
        for kappa in range(1, spec.num_orders + 1):
            gbeta[kappa] = np.sum(dlogits * terms[kappa - 1])
        grads["beta"] = gbeta
    return loss, grads


def evaluate(g: Graph, params: ModelParams, spec: FilterSpec, idx,
             laplacian=None) -> float:
    """Accuracy of the argmax prediction over idx (ties -> lowest class)."""
    idx = np.asarray(idx)
    if idx.shape[0] == 0:
        raise ValueError("empty index set")
    logits, _ = forward(g, params, spec, train_mode=False,
                        laplacian=laplacian)
    pred = np.argmax(logits[idx], axis=1)
    return float(np.mean(pred == g.labels[idx]))


class AdamState:
    """Per-tensor adaptive-moment state (beta1=0.9, beta2=0.999)."""

    def __init__(self):
        self.m = {}
        self.v = {}
        self.step_count = 0

    def step(self, tensors, grads, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.step_count += 1
        t = self.step_count
        for name, grad in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(grad)
                self.v[name] = np.zeros_like(grad)
            self.m[name] = beta1 * self.m[name] + (1 - beta1) * grad
            self.v[name] = beta2 * self.v[name] + (1 - beta2) * grad ** 2
            mhat = self.m[name] / (1 - beta1 ** t)
            vhat = self.v[name] / (1 - beta2 ** t)
            tensors[name] -= lr * mhat / (np.sqrt(vhat) + eps)


def train(g: Graph, split: SplitSpec, cfg: ModelConfig):
    """Full-batch training; returns (best_params, history).

    Best = highest validation accuracy; when the split has no validation
    nodes (e.g. a plain train/test protocol) the lowest training loss is
    used instead. The stop check runs at the top of each epoch, so
    patience=0 returns the initial (epoch-0) parameters untouched.
    History entries: epoch, train_loss, val_acc (None without a
    validation set) and wall time; only the time field is excluded from
    determinism guarantees.
    """
    rng = np.random.default_rng(cfg.seed)
    laplacian = build_normalized_laplacian(g)
    params = init_params(g, cfg, rng)
    opt = AdamState()
    has_val = np.asarray(split.val_idx).shape[0] > 0

    if has_val:
        best_score = evaluate(g, params, filter_spec_for(params),
                              split.val_idx, laplacian=laplacian)
    else:
        logits0, _ = forward(g, params, filter_spec_for(params),
                             laplacian=laplacian)
        best_score = -cross_entropy(logits0, g.labels,
                                    np.asarray(split.train_idx))
    best_params = copy.deepcopy(params)
    history = []
    since_improved = 0

    for epoch in range(1, cfg.epochs + 1):
        if since_improved >= cfg.patience:
            break
        t0 = time.perf_counter()
        spec = filter_spec_for(params)
        loss, grads = loss_and_grads(g, params, spec, split, rng=rng,
                                     laplacian=laplacian)
        # training loss belongs to the pre-update parameters
        improved = not has_val and -loss > best_score
        if improved:
            best_score = -loss
            best_params = copy.deepcopy(params)

        tensors = {"W1": params.W1, "b1": params.b1}
        if params.W2 is not None:
            tensors.update(W2=params.W2, b2=params.b2)
        if "k" in grads:
            k_arr = np.array(params.k_param)
            tensors["k"] = k_arr
        if "beta" in grads:
            tensors["beta"] = params.beta
        opt.step(tensors, grads, cfg.lr)
        if "k" in grads:
            params.k_param = float(tensors["k"])

        val_acc = None
        if has_val:
            val_acc = evaluate(g, params, filter_spec_for(params),
                               split.val_idx, laplacian=laplacian)
            improved = val_acc > best_score
            if improved:
                best_score = val_acc
                best_params = copy.deepcopy(params)
        history.append({"epoch": epoch, "train_loss": loss,
                        "val_acc": val_acc,
                        "time_s": time.perf_counter() - t0})
        since_improved = 0 if improved else since_improved + 1
    return best_params, history


CHECKPOINT_FIELDS = ("w1", "b1", "w2", "b2", "k", "beta", "hyper")


def save_params(params: ModelParams, path):
    """Write a checkpoint: flat JSON of named arrays plus hyperparameters."""
    payload = {
        "w1": params.W1.tolist(),
        "b1": params.b1.tolist(),
        "w2": params.W2.tolist() if params.W2 is not None else None,
        "b2": params.b2.tolist() if params.b2 is not None else None,
        "k": params.k_param,
        "beta": params.beta.tolist() if params.beta is not None else None,
        "hyper": asdict(params.hyper),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_params(path) -> ModelParams:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    cfg = ModelConfig(**payload["hyper"])
    return ModelParams(
        W1=np.asarray(payload["w1"], dtype=np.float64),
        b1=np.asarray(payload["b1"], dtype=np.float64),
        W2=None if payload["w2"] is None else np.asarray(payload["w2"], dtype=np.float64),
        b2=None if payload["b2"] is None else np.asarray(payload["b2"], dtype=np.float64),
        k_param=float(payload["k"]),
        beta=None if payload["beta"] is None else np.asarray(payload["beta"], dtype=np.float64),
        hyper=cfg,
    )
