"""Dense graph convolutional network with hand-derived backpropagation.

Forward pass per window: H0 = X (nodes x features); each graph-conv layer
computes H = ReLU(S @ H @ Theta); the readout is the column mean over node
rows followed by a linear layer and a numerically stabilized softmax over
the two classes.  Training is full batch: one analytic gradient and one
Adam step per epoch, deterministic for a fixed seed.

layer_dims [d0, h1, ..., hm, 2] places a graph-conv weight on every
transition except the last, which is the readout; [d0, 2] therefore has no
hidden layers and reduces to pooled-linear-softmax.

Adam follows m = b1*m + (1-b1)*g, v = b2*v + (1-b2)*g^2 with bias
correction and the update theta <- theta - lr * m_hat / sqrt(v_hat + eps).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from .graphs import EegGraph, build_montage_graph
from .features import SegmentFeatureMatrix

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class GcnConfig:
    layer_dims: tuple[int, ...] = (66, 64, 32, 2)
    learning_rate: float = 0.01
    epochs: int = 500
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if len(self.layer_dims) < 2:
            raise ValueError("layer_dims needs at least input and class dims")
        if self.layer_dims[-1] != 2:
            raise ValueError("the final dimension must be 2 (binary classes)")
        if any(d < 1 for d in self.layer_dims):
            raise ValueError("all layer dimensions must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class GcnParams:
    """Graph-conv weights plus the linear readout head."""

    thetas: list[np.ndarray]
    readout_W: np.ndarray
    readout_b: np.ndarray

    def tensors(self) -> list[np.ndarray]:
        return [*self.thetas, self.readout_W, self.readout_b]

    def tensor_names(self) -> list[str]:
        return [f"theta_{i}" for i in range(len(self.thetas))] + [
            "readout_W", "readout_b"]


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0


@dataclass
class ForwardCache:
    X: np.ndarray
    S: np.ndarray
    propagated: list[np.ndarray]       # S @ H per conv layer
    pre_activations: list[np.ndarray]  # (S @ H) @ Theta per conv layer
    pooled: np.ndarray
    logits: np.ndarray
    probabilities: np.ndarray
    single: bool
    # Weight snapshots taken at pass time: Adam updates parameters in
    # place, so references would go stale before a later backward().
    thetas: list[np.ndarray] = field(default_factory=list)
    readout_W: np.ndarray | None = None


def init_params(config: GcnConfig) -> GcnParams:
    """Seeded He initialization (scale sqrt(2 / fan_in)); zero readout bias.

    Draw order is fixed (theta_0, theta_1, ..., readout_W) so identical
    seeds give identical parameters.
    """
    rng = np.random.default_rng(config.seed)
    dims = config.layer_dims
    thetas = [rng.standard_normal((dims[i], dims[i + 1])) * np.sqrt(2.0 / dims[i])
              for i in range(len(dims) - 2)]
    readout_W = rng.standard_normal((dims[-2], dims[-1])) * np.sqrt(2.0 / dims[-2])
    return GcnParams(thetas=thetas, readout_W=readout_W,
                     readout_b=np.zeros(dims[-1]))


def init_adam(params: GcnParams) -> AdamState:
    return AdamState(m=[np.zeros_like(t) for t in params.tensors()],
                     v=[np.zeros_like(t) for t in params.tensors()])


def _as_batch(X) -> tuple[np.ndarray, bool]:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        return X[None], True
    if X.ndim == 3:
        return X, False
    raise ValueError("X must be (nodes, features) or (n, nodes, features)")


def forward(params: GcnParams, S: np.ndarray, X) -> tuple[np.ndarray,
                                                          ForwardCache]:
    """Class probabilities for one window or a batch of windows.

    Returns a (2,) vector for 2-D input or an (n, 2) matrix for 3-D input,
    plus the cache backward() needs.
    """
    batch, single = _as_batch(X)
    S = np.asarray(S, dtype=np.float64)
    if not np.isfinite(batch).all():
        raise ValueError("input features contain non-finite values")
    if batch.shape[1] != S.shape[0] or S.shape[0] != S.shape[1]:
        raise ValueError(f"node count mismatch: X has {batch.shape[1]} rows, "
                         f"S is {S.shape}")
    expected = params.thetas[0].shape[0] if params.thetas else params.readout_W.shape[0]
    if batch.shape[2] != expected:
        raise ValueError(f"feature dimension {batch.shape[2]} does not match "
                         f"the first weight matrix ({expected})")

    H = batch
    propagated, pre_activations = [], []
    for theta in params.thetas:
        SH = np.matmul(S, H)
        Z = SH @ theta
        propagated.append(SH)
        pre_activations.append(Z)
        H = np.maximum(Z, 0.0)
    pooled = H.mean(axis=1)
    logits = pooled @ params.readout_W + params.readout_b
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    probabilities = exp / exp.sum(axis=-1, keepdims=True)

    cache = ForwardCache(X=batch, S=S, propagated=propagated,
                         pre_activations=pre_activations, pooled=pooled,
                         logits=logits, probabilities=probabilities,
                         single=single,
                         thetas=[theta.copy() for theta in params.thetas],
                         readout_W=params.readout_W.copy())
    return (probabilities[0] if single else probabilities), cache


def loss(probabilities, label) -> float:
    """Cross-entropy -log p_label; the mean over a batch."""
    p = np.asarray(probabilities, dtype=np.float64)
    if p.ndim == 1:
        p = p[None]
    labels = np.atleast_1d(np.asarray(label, dtype=int))
    if len(labels) != len(p):
        raise ValueError("probabilities and labels must align")
    return float(np.mean(-np.log(p[np.arange(len(p)), labels])))


def _loss_from_logits(logits: np.ndarray, labels: np.ndarray) -> float:
    # log-sum-exp form: finite for any finite logits.
    m = logits.max(axis=-1)
    lse = m + np.log(np.exp(logits - m[..., None]).sum(axis=-1))
    return float(np.mean(lse - logits[np.arange(len(logits)), labels]))


def backward(cache: ForwardCache, label) -> GcnParams:
    """Exact gradients of the mean cross-entropy for every parameter tensor.

    Softmax and cross-entropy combine to (p - y) / n at the logits; the
    ReLU derivative is the strict indicator Z > 0 (subgradient 0 at exactly
    zero).
    """
    labels = np.atleast_1d(np.asarray(label, dtype=int))
    n, nodes, _ = cache.X.shape
    if len(labels) != n:
        raise ValueError("labels do not match the cached batch size")
    one_hot = np.eye(cache.probabilities.shape[-1])[labels]

    d_logits = (cache.probabilities - one_hot) / n
    n_thetas = len(cache.pre_activations)
    theta_shapes = [(cache.propagated[i].shape[2], cache.pre_activations[i].shape[2])
                    for i in range(n_thetas)]

    grad_W = cache.pooled.T @ d_logits
    grad_b = d_logits.sum(axis=0)
    d_pooled = d_logits @ cache.readout_W.T

    grad_thetas: list[np.ndarray] = [np.empty(shape) for shape in theta_shapes]
    dH = d_pooled[:, None, :] / nodes  # mean pooling spreads evenly over nodes
    for i in range(n_thetas - 1, -1, -1):
        dZ = dH * (cache.pre_activations[i] > 0)
        grad_thetas[i] = np.einsum("nif,nid->fd", cache.propagated[i], dZ)
        if i > 0:
            dH = np.matmul(cache.S.T, dZ @ cache.thetas[i].T)
    return GcnParams(thetas=grad_thetas, readout_W=grad_W, readout_b=grad_b)


def forward_backward(params: GcnParams, S: np.ndarray, X, labels
                     ) -> tuple[float, GcnParams]:
    """One full-batch pass: (mean loss, gradients)."""
    _, cache = forward(params, S, X)
    batch_labels = np.atleast_1d(np.asarray(labels, dtype=int))
    value = _loss_from_logits(cache.logits, batch_labels)
    return value, backward(cache, batch_labels)


def adam_step(params: GcnParams, grads: GcnParams, state: AdamState,
              config: GcnConfig) -> tuple[GcnParams, AdamState]:
    """In-place Adam update; rejects non-finite gradients before mutating."""
    grad_tensors = grads.tensors()
    for g in grad_tensors:
        if not np.isfinite(g).all():
            raise ValueError("non-finite gradient; step rejected")
    state.t += 1
    t = state.t
    for i, (p, g) in enumerate(zip(params.tensors(), grad_tensors)):
        state.m[i] = config.beta1 * state.m[i] + (1 - config.beta1) * g
        state.v[i] = config.beta2 * state.v[i] + (1 - config.beta2) * g * g
        m_hat = state.m[i] / (1 - config.beta1 ** t)
        v_hat = state.v[i] / (1 - config.beta2 ** t)
        p -= config.learning_rate * m_hat / np.sqrt(v_hat + config.eps)
    return params, state


def _as_training_arrays(train_set) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(train_set, tuple) and len(train_set) == 2:
        X, y = train_set
        return (np.asarray(X, dtype=np.float64),
                np.asarray(y, dtype=int))
    if isinstance(train_set, (list,)) and train_set:
        first = train_set[0]
        if isinstance(first, SegmentFeatureMatrix):
            X = np.stack([m.node_features for m in train_set])
            y = np.array([m.label for m in train_set], dtype=int)
            return X, y
        if isinstance(first, (tuple, list)) and len(first) == 2:
            X = np.stack([m.node_features for m, _ in train_set])
            y = np.array([lbl for _, lbl in train_set], dtype=int)
            return X, y
    raise ValueError("train_set must be (X, y) arrays or a list of feature "
                     "matrices")


def train(train_set, graph: EegGraph, config: GcnConfig
          ) -> tuple[GcnParams, np.ndarray]:
    """Full-batch Adam training for config.epochs epochs.

    Returns the trained parameters and the per-epoch loss history.
    Deterministic for a fixed config (seeded init, fixed batch order).
    """
    X, y = _as_training_arrays(train_set)
    if len(X) == 0:
        raise ValueError("training set is empty")
    if len(np.unique(y)) < 2:
        raise ValueError("training set must contain both classes")
    params = init_params(config)
    state = init_adam(params)
    history = np.empty(config.epochs)
    for epoch in range(config.epochs):
        value, grads = forward_backward(params, graph.S, X, y)
        history[epoch] = value
        adam_step(params, grads, state, config)
    return params, history


def predict(params: GcnParams, graph: EegGraph, features):
    """Predicted label(s) and seizure probability p_1.

    A probability of exactly 0.5 resolves to label 0 (non-seizure).
    Accepts one SegmentFeatureMatrix or 2-D matrix (returns scalars) or a
    3-D batch (returns arrays).
    """
    if isinstance(features, SegmentFeatureMatrix):
        features = features.node_features
    probabilities, _ = forward(params, graph.S, features)
    p_seizure = probabilities[..., 1]
    labels = (p_seizure > 0.5).astype(int)
    if probabilities.ndim == 1:
        return int(labels), float(p_seizure)
    return labels, p_seizure


def save_checkpoint(path: str | Path, params: GcnParams, config: GcnConfig,
                    band: str, adjacency_fingerprint: str,
                    window_s: float = 6.0, fs: float = 256.0) -> None:
    """Write a versioned JSON checkpoint.

    Tensors are stored row-major with explicit shapes; the adjacency
    fingerprint guards against loading a model onto a different graph.
    """
    tensors = {}
    for name, tensor in zip(params.tensor_names(), params.tensors()):
        tensors[name] = {"shape": list(tensor.shape),
                         "data": [float(v) for v in tensor.reshape(-1)]}
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "band": band,
        "window_s": window_s,
        "fs": fs,
        "adjacency_sha256": adjacency_fingerprint,
        "config": {
            "layer_dims": list(config.layer_dims),
            "learning_rate": config.learning_rate,
            "epochs": config.epochs,
            "beta1": config.beta1,
            "beta2": config.beta2,
            "eps": config.eps,
            "seed": config.seed,
        },
        "tensors": tensors,
    }
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


@dataclass
class Checkpoint:
    params: GcnParams
    config: GcnConfig
    band: str
    adjacency_fingerprint: str
    window_s: float
    fs: float


def load_checkpoint(path: str | Path) -> Checkpoint:
    with open(path) as handle:
        payload = json.load(handle)
    version = payload.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version!r}")
    cfg = payload["config"]
    config = GcnConfig(layer_dims=tuple(cfg["layer_dims"]),
                       learning_rate=cfg["learning_rate"],
                       epochs=cfg["epochs"], beta1=cfg["beta1"],
                       beta2=cfg["beta2"], eps=cfg["eps"], seed=cfg["seed"])

    def tensor(name: str) -> np.ndarray:
        entry = payload["tensors"][name]
        return np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])

    n_thetas = len(config.layer_dims) - 2
    params = GcnParams(thetas=[tensor(f"theta_{i}") for i in range(n_thetas)],
                       readout_W=tensor("readout_W"),
                       readout_b=tensor("readout_b"))
    expected = [(config.layer_dims[i], config.layer_dims[i + 1])
                for i in range(n_thetas)]
    actual = [t.shape for t in params.thetas]
    if actual != expected or params.readout_W.shape != (config.layer_dims[-2], 2):
        raise ValueError("checkpoint tensor shapes do not match its config")
    return Checkpoint(params=params, config=config, band=payload["band"],
                      adjacency_fingerprint=payload["adjacency_sha256"],
                      window_s=payload["window_s"], fs=payload["fs"])


class GcnClassifier(BaseEstimator, ClassifierMixin):
    """Scikit-learn interface over the graph convolutional network.

    X may be (n, nodes, features) or flattened (n, nodes * features); rows
    are reshaped against the graph's node count.  With graph=None the
    canonical 23-channel montage graph is built at fit time.
    """

    def __init__(self, layer_dims=(66, 64, 32, 2), learning_rate: float = 0.01,
                 epochs: int = 500, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, seed: int = 0, graph: EegGraph | None = None):
        self.layer_dims = layer_dims
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.seed = seed
        self.graph = graph

    def _config(self) -> GcnConfig:
        return GcnConfig(layer_dims=tuple(self.layer_dims),
                         learning_rate=self.learning_rate, epochs=self.epochs,
                         beta1=self.beta1, beta2=self.beta2, eps=self.eps,
                         seed=self.seed)

    def _reshape(self, X: np.ndarray, graph: EegGraph) -> np.ndarray:
        nodes = graph.S.shape[0]
        d0 = tuple(self.layer_dims)[0]
        if X.ndim == 3:
            return X
        if X.ndim == 2:
            if X.shape[1] != nodes * d0:
                raise ValueError(f"flattened rows of width {X.shape[1]} do not "
                                 f"match {nodes} nodes x {d0} features")
            return X.reshape(len(X), nodes, d0)
        raise ValueError("X must be 2-D or 3-D")

    def fit(self, X, y) -> "GcnClassifier":
        X = check_array(X, allow_nd=True, dtype=np.float64)
        y = column_or_1d(y)
        if len(X) != len(y):
            raise ValueError("X and y lengths differ")
        labels = np.asarray(y, dtype=int)
        if not set(np.unique(labels)) <= {0, 1}:
            raise ValueError("labels must be binary 0/1")
        graph = self.graph if self.graph is not None else build_montage_graph()
        config = self._config()
        X3 = self._reshape(X, graph)
        self.params_, self.loss_history_ = train((X3, labels), graph, config)
        self.graph_ = graph
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1] if X.ndim == 2 else X.shape[1] * X.shape[2]
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "params_")
        X = check_array(X, allow_nd=True, dtype=np.float64)
        probabilities, _ = forward(self.params_, self.graph_.S,
                                   self._reshape(X, self.graph_))
        return probabilities

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] > 0.5).astype(int)
