"""Trainable multi-head-attention GCN and its layered pruning view.

The model aggregates a node-signal matrix U (signal_dim x nodes) with K
learnable attention matrices, convolves the aggregates with K filter banks,
and classifies the flattened features with a dense head:

    H = relu(sum_k  A[k] @ U.T @ W[k])          # (nodes, filters)
    probs = softmax(head.T @ H.ravel())

Training is plain momentum SGD on the cross-entropy loss with manual
gradients; the learning rate moves inversely to the speed of change of the
loss (slows down when the loss moves faster, speeds up when it stalls).

as_layered exposes the three parameter groups as one dense 3-layer network
so the mask machinery can prune the model. The view requires
signal_dim == nodes: the filter entry W[k][m, c] then sits on the view
connection from aggregate (k, m) to feature (m, c), which is a genuine
signal route of the model (aggregate (k, m) carries channel m, which filter
column c reads). Every model parameter owns exactly one view connection;
the remaining view slots are structural zeros that carry no parameter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import SkeletonSequence, temporal_chunking
from .errors import DivergenceError, DomainError, ShapeError
from .network import LayeredNetwork, MaskTensor


@dataclass(frozen=True)
class GcnShape:
    heads: int
    nodes: int
    signal_dim: int
    filters: int
    num_classes: int

    def __post_init__(self):
        if min(self.heads, self.nodes, self.signal_dim, self.filters, self.num_classes) < 1:
            raise DomainError("all shape fields must be positive")

    @property
    def chunks(self) -> int:
        if self.signal_dim % 3 != 0:
            raise DomainError(f"signal_dim {self.signal_dim} is not 3 * chunks")
        return self.signal_dim // 3

    @property
    def parameter_count(self) -> int:
        k, n, s, c, q = (self.heads, self.nodes, self.signal_dim, self.filters, self.num_classes)
        return k * n * n + k * s * c + n * c * q


@dataclass(frozen=True)
class GcnModel:
    shape: GcnShape
    attention: np.ndarray  # (heads, nodes, nodes)
    conv: np.ndarray  # (heads, signal_dim, filters)
    head: np.ndarray  # (nodes * filters, num_classes)

    def __post_init__(self):
        k, n, s, c, q = (
            self.shape.heads,
            self.shape.nodes,
            self.shape.signal_dim,
            self.shape.filters,
            self.shape.num_classes,
        )
        attention = np.asarray(self.attention, dtype=np.float64)
        conv = np.asarray(self.conv, dtype=np.float64)
        head = np.asarray(self.head, dtype=np.float64)
        if attention.shape != (k, n, n):
            raise ShapeError(f"attention shape {attention.shape} != {(k, n, n)}")
        if conv.shape != (k, s, c):
            raise ShapeError(f"conv shape {conv.shape} != {(k, s, c)}")
        if head.shape != (n * c, q):
            raise ShapeError(f"head shape {head.shape} != {(n * c, q)}")
        object.__setattr__(self, "attention", attention)
        object.__setattr__(self, "conv", conv)
        object.__setattr__(self, "head", head)


def init_model(shape: GcnShape, seed: int, head_scale: float = 1.0) -> GcnModel:
    """Random init; scales keep pre-activations O(1) at these sizes."""
    rng = np.random.default_rng(seed)
    k, n, s, c, q = (shape.heads, shape.nodes, shape.signal_dim, shape.filters, shape.num_classes)
    attention = rng.standard_normal((k, n, n)) / np.sqrt(n)
    conv = rng.standard_normal((k, s, c)) / np.sqrt(s)
    head = head_scale * rng.standard_normal((n * c, q)) / np.sqrt(n * c)
    return GcnModel(shape, attention, conv, head)


def copy_model(model: GcnModel) -> GcnModel:
    return GcnModel(model.shape, model.attention.copy(), model.conv.copy(), model.head.copy())


@dataclass(frozen=True)
class ParamMasks:
    """Keep/drop bits per parameter group, aligned with GcnModel arrays."""

    attention: np.ndarray
    conv: np.ndarray
    head: np.ndarray

    @staticmethod
    def all_ones(shape: GcnShape) -> "ParamMasks":
        k, n, s, c, q = (shape.heads, shape.nodes, shape.signal_dim, shape.filters, shape.num_classes)
        return ParamMasks(
            np.ones((k, n, n), dtype=bool),
            np.ones((k, s, c), dtype=bool),
            np.ones((n * c, q), dtype=bool),
        )


def apply_param_masks(model: GcnModel, masks: ParamMasks) -> GcnModel:
    return GcnModel(
        model.shape,
        np.where(masks.attention, model.attention, 0.0),
        np.where(masks.conv, model.conv, 0.0),
        np.where(masks.head, model.head, 0.0),
    )


# ---------------------------------------------------------------------------
# Forward / loss / gradients


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = np.exp(logits - logits.max(axis=1, keepdims=True))
    return z / z.sum(axis=1, keepdims=True)


def forward_batch(model: GcnModel, signals: np.ndarray):
    """Probabilities for a batch of signal matrices (batch, signal_dim, nodes)."""
    n, c = model.shape.nodes, model.shape.filters
    if signals.ndim != 3 or signals.shape[1:] != (model.shape.signal_dim, n):
        raise ShapeError(
            f"signals shape {signals.shape} != (batch, {model.shape.signal_dim}, {n})"
        )
    # aggregates[b,k,i,m] = sum_j attention[k,i,j] * signals[b,m,j]
    aggregates = np.einsum("kij,bmj->bkim", model.attention, signals)
    pre = np.einsum("bkim,kmc->bic", aggregates, model.conv)
    hidden = np.maximum(pre, 0.0)
    flat = hidden.reshape(len(signals), n * c)
    logits = flat @ model.head
    return _softmax_rows(logits), (aggregates, pre, flat, logits)


def gcn_forward(model: GcnModel, signal: np.ndarray) -> np.ndarray:
    """Class probabilities for a single signal matrix (signal_dim, nodes)."""
    probs, _ = forward_batch(model, np.asarray(signal, dtype=np.float64)[None])
    return probs[0]


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    picked = probs[np.arange(len(labels)), labels]
    with np.errstate(divide="ignore"):
        return float(-np.mean(np.log(picked)))


def loss_and_grads(model: GcnModel, signals: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and gradients for every parameter group."""
    probs, (aggregates, pre, flat, _) = forward_batch(model, signals)
    batch = len(labels)
    loss = cross_entropy(probs, labels)
    dlogits = probs.copy()
    dlogits[np.arange(batch), labels] -= 1.0
    dlogits /= batch
    g_head = flat.T @ dlogits
    dflat = dlogits @ model.head.T
    dpre = dflat.reshape(pre.shape) * (pre > 0)
    g_conv = np.einsum("bkim,bic->kmc", aggregates, dpre)
    dagg = np.einsum("bic,kmc->bkim", dpre, model.conv)
    g_attn = np.einsum("bkim,bmj->kij", dagg, signals)
    return loss, (g_attn, g_conv, g_head)


# ---------------------------------------------------------------------------
# Training


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int = 600
    initial_lr: float = 0.05
    momentum: float = 0.9
    lr_decay: float = 0.99
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise DomainError("epochs and batch_size must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise DomainError(f"momentum must be in [0, 1), got {self.momentum}")
        if not 0.0 < self.lr_decay < 1.0:
            raise DomainError(f"lr_decay must be in (0, 1), got {self.lr_decay}")
        if self.initial_lr <= 0:
            raise DomainError("initial_lr must be positive")


_LR_MIN, _LR_MAX = 1e-8, 1.0


def dataset_arrays(dataset: list[SkeletonSequence], chunks: int):
    if not dataset:
        raise DomainError("dataset is empty")
    signals = np.stack([temporal_chunking(seq, chunks) for seq in dataset])
    labels = np.asarray([seq.label for seq in dataset], dtype=np.intp)
    return signals, labels


def train(
    model: GcnModel,
    dataset: list[SkeletonSequence],
    cfg: TrainConfig,
    mask: MaskTensor | ParamMasks | None = None,
) -> tuple[GcnModel, list[float]]:
    """Momentum SGD on cross-entropy; returns (trained copy, per-epoch loss).

    With a mask, the masked parameters are zeroed up front and their
    gradients and velocities are zeroed every step, so they stay exactly 0.
    The learning rate adapts per epoch: when |loss(t-1) - loss(t)| grew
    compared to the previous epoch the rate is multiplied by lr_decay,
    otherwise divided; it is clamped to [1e-8, 1].
    """
    signals, labels = dataset_arrays(dataset, model.shape.chunks)
    if isinstance(mask, MaskTensor):
        mask = view_mask_to_param_masks(mask, model.shape)
    params = [model.attention.copy(), model.conv.copy(), model.head.copy()]
    bits = None
    if mask is not None:
        bits = [mask.attention, mask.conv, mask.head]
        params = [np.where(b, p, 0.0) for p, b in zip(params, bits)]
    velocity = [np.zeros_like(p) for p in params]
    rng = np.random.default_rng(cfg.seed)
    lr = cfg.initial_lr
    losses: list[float] = []
    current = GcnModel(model.shape, *params)
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(labels))
        epoch_loss = 0.0
        for lo in range(0, len(order), cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            loss, grads = loss_and_grads(current, signals[idx], labels[idx])
            epoch_loss += loss * len(idx)
            for p, v, g, b in zip(params, velocity, grads, bits or [None] * 3):
                if b is not None:
                    g = np.where(b, g, 0.0)
                v *= cfg.momentum
                v -= lr * g
                if b is not None:
                    v[~b] = 0.0
                p += v
                if b is not None:
                    p[~b] = 0.0
            current = GcnModel(model.shape, *params)
        epoch_loss /= len(labels)
        if not np.isfinite(epoch_loss):
            raise DivergenceError(epoch)
        losses.append(epoch_loss)
        if len(losses) >= 3:
            speed_now = abs(losses[-1] - losses[-2])
            speed_prev = abs(losses[-2] - losses[-3])
            lr = lr * cfg.lr_decay if speed_now > speed_prev else lr / cfg.lr_decay
            lr = float(np.clip(lr, _LR_MIN, _LR_MAX))
    return current, losses


def evaluate(
    model: GcnModel,
    dataset: list[SkeletonSequence],
    mask: MaskTensor | ParamMasks | None = None,
) -> float:
    """Balanced accuracy: per-class accuracy averaged over the classes present."""
    signals, labels = dataset_arrays(dataset, model.shape.chunks)
    if isinstance(mask, MaskTensor):
        mask = view_mask_to_param_masks(mask, model.shape)
    if mask is not None:
        model = apply_param_masks(model, mask)
    probs, _ = forward_batch(model, signals)
    preds = probs.argmax(axis=1)
    per_class = [np.mean(preds[labels == cls] == cls) for cls in np.unique(labels)]
    return float(np.mean(per_class))


# ---------------------------------------------------------------------------
# Layered pruning view


@dataclass(frozen=True)
class GcnIndexMap:
    """Bidirectional map between view connections and model parameters."""

    shape: GcnShape

    @property
    def parameter_count(self) -> int:
        return self.shape.parameter_count

    def view_dims(self) -> tuple[int, int, int, int]:
        n, c, q = self.shape.nodes, self.shape.filters, self.shape.num_classes
        return (n, self.shape.heads * n, n * c, q)

    def param_at(self, layer: int, row: int, col: int):
        """Parameter behind a view connection, or None for a structural zero."""
        n, c = self.shape.nodes, self.shape.filters
        if layer == 1:
            k, i = divmod(col, n)
            return ("attention", k, i, row)
        if layer == 2:
            k, m = divmod(row, n)
            i, cc = divmod(col, c)
            return ("conv", k, m, cc) if i == m else None
        if layer == 3:
            return ("head", row, col)
        raise IndexError(f"layer {layer} out of range 1..3")

    def view_position(self, kind: str, *idx) -> tuple[int, int, int]:
        n, c = self.shape.nodes, self.shape.filters
        if kind == "attention":
            k, i, j = idx
            return (1, j, k * n + i)
        if kind == "conv":
            k, m, cc = idx
            return (2, k * n + m, m * c + cc)
        if kind == "head":
            rc, q = idx
            return (3, rc, q)
        raise DomainError(f"unknown parameter kind {kind!r}")


def as_layered(model: GcnModel) -> tuple[LayeredNetwork, GcnIndexMap]:
    """Expose the three parameter groups as a dense 3-layer network.

    Layer 1 connects input node j to aggregate (k, i) with weight
    attention[k][i, j]; layer 2 connects aggregate (k, m) to feature (m, c)
    with weight conv[k][m, c] (structural zeros elsewhere); layer 3 is the
    head. Masks over the view translate back to per-parameter masks via
    view_mask_to_param_masks.
    """
    k, n, s, c = (model.shape.heads, model.shape.nodes, model.shape.signal_dim, model.shape.filters)
    if s != n:
        raise DomainError(
            f"layered view requires signal_dim == nodes, got {s} != {n}; "
            f"pick chunks so 3 * chunks == nodes"
        )
    w1 = model.attention.transpose(2, 0, 1).reshape(n, k * n).copy()
    w2 = np.zeros((k * n, n * c))
    for kk in range(k):
        for m in range(n):
            w2[kk * n + m, m * c : (m + 1) * c] = model.conv[kk, m]
    w3 = model.head.copy()
    view = LayeredNetwork((w1, w2, w3), ("relu", "relu", "softmax"))
    return view, GcnIndexMap(model.shape)


def view_mask_to_param_masks(mask: MaskTensor, shape: GcnShape) -> ParamMasks:
    """Collapse a view mask to parameter bits; structural-zero bits are ignored."""
    k, n, c, q = (shape.heads, shape.nodes, shape.filters, shape.num_classes)
    if shape.signal_dim != n:
        raise DomainError("layered view requires signal_dim == nodes")
    expected = (n, k * n, n * c, q)
    if mask.dims != expected:
        raise ShapeError(f"mask dims {mask.dims} do not match view dims {expected}")
    m1, m2, m3 = mask.masks
    attention = m1.reshape(n, k, n).transpose(1, 2, 0).copy()
    diag = np.arange(n)
    conv = m2.reshape(k, n, n, c)[:, diag, diag, :].copy()
    return ParamMasks(attention, conv, m3.copy())


# ---------------------------------------------------------------------------
# Model persistence (JSON)


def save_model(model: GcnModel, path) -> None:
    payload = {
        "heads": model.shape.heads,
        "nodes": model.shape.nodes,
        "signal_dim": model.shape.signal_dim,
        "filters": model.shape.filters,
        "num_classes": model.shape.num_classes,
        "attention": model.attention.tolist(),
        "conv": model.conv.tolist(),
        "head": model.head.tolist(),
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh)


def load_model(path) -> GcnModel:
    with open(path, "r", encoding="ascii") as fh:
        payload = json.load(fh)
    shape = GcnShape(
        payload["heads"],
        payload["nodes"],
        payload["signal_dim"],
        payload["filters"],
        payload["num_classes"],
    )
    return GcnModel(
        shape,
        np.asarray(payload["attention"]),
        np.asarray(payload["conv"]),
        np.asarray(payload["head"]),
    )
