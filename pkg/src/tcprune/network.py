"""Layered dense networks, binary mask tensors, and masked evaluation.

A depth-L network is a chain of weight matrices W[0..L-1] where W[l] has
shape (dims[l], dims[l+1]); layer l+1 maps activations of width dims[l] to
width dims[l+1] via f(W.T @ x). Layers are numbered 1..L in public APIs.
Networks and masks are treated as immutable once constructed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, ShapeError
from .linalg import as_bools, as_dense, hadamard


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _softmax(x: np.ndarray) -> np.ndarray:
    z = np.exp(x - x.max())
    return z / z.sum()


ACTIVATIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "relu": _relu,
    "tanh": np.tanh,
    "identity": lambda x: x,
    "softmax": _softmax,
}


@dataclass(frozen=True)
class LayeredNetwork:
    """Stack of dense weight matrices with one activation kind per layer."""

    weights: tuple[np.ndarray, ...]
    activations: tuple[str, ...]

    def __post_init__(self):
        weights = tuple(as_dense(w) for w in self.weights)
        activations = tuple(self.activations)
        if not weights:
            raise ShapeError("a network needs at least one layer")
        if len(activations) != len(weights):
            raise ShapeError(
                f"{len(weights)} layers but {len(activations)} activations"
            )
        for name in activations:
            if name not in ACTIVATIONS:
                raise DomainError(f"unknown activation {name!r}")
        for a, b in zip(weights, weights[1:]):
            if a.shape[1] != b.shape[0]:
                raise ShapeError(f"layer shapes do not chain: {a.shape} -> {b.shape}")
        for w in weights:
            if not np.isfinite(w).all():
                raise DomainError("weights must be finite")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "activations", activations)

    @property
    def depth(self) -> int:
        return len(self.weights)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)


@dataclass(frozen=True)
class MaskTensor:
    """Per-layer binary keep/drop matrices, shape-matched to a network."""

    masks: tuple[np.ndarray, ...]

    def __post_init__(self):
        masks = tuple(as_bools(m) for m in self.masks)
        if not masks:
            raise ShapeError("a mask tensor needs at least one layer")
        for a, b in zip(masks, masks[1:]):
            if a.shape[1] != b.shape[0]:
                raise ShapeError(f"mask shapes do not chain: {a.shape} -> {b.shape}")
        object.__setattr__(self, "masks", masks)

    @property
    def depth(self) -> int:
        return len(self.masks)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.masks[0].shape[0],) + tuple(m.shape[1] for m in self.masks)

    @property
    def kept_count(self) -> int:
        return int(sum(int(m.sum()) for m in self.masks))


def full_mask(net: LayeredNetwork) -> MaskTensor:
    return MaskTensor(tuple(np.ones(w.shape, dtype=bool) for w in net.weights))


def empty_mask(net: LayeredNetwork) -> MaskTensor:
    return MaskTensor(tuple(np.zeros(w.shape, dtype=bool) for w in net.weights))


def check_shapes(net: LayeredNetwork, mask: MaskTensor) -> None:
    if net.dims != mask.dims:
        raise ShapeError(f"mask dims {mask.dims} do not match network dims {net.dims}")


@dataclass(frozen=True)
class PruningBudget:
    total_connections: int
    rate: float
    max_kept: int


def total_connections(net: LayeredNetwork) -> int:
    return int(sum(w.size for w in net.weights))


def budget(net: LayeredNetwork, rate: float) -> PruningBudget:
    """Keep at most floor((1 - rate) * total) connections."""
    if not 0.0 <= rate < 1.0:
        raise DomainError(f"pruning rate must be in [0, 1), got {rate}")
    total = total_connections(net)
    return PruningBudget(total, rate, math.floor((1.0 - rate) * total))


def forward(net: LayeredNetwork, x) -> np.ndarray:
    """Evaluate the network on an input vector (no bias terms)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.dims[0],):
        raise ShapeError(f"input length {x.shape} does not match width {net.dims[0]}")
    for w, name in zip(net.weights, net.activations):
        x = ACTIVATIONS[name](w.T @ x)
    return x


def masked_forward(net: LayeredNetwork, mask: MaskTensor, x) -> np.ndarray:
    """Evaluate with each layer's weights zeroed where the mask is 0."""
    check_shapes(net, mask)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.dims[0],):
        raise ShapeError(f"input length {x.shape} does not match width {net.dims[0]}")
    for w, m, name in zip(net.weights, mask.masks, net.activations):
        x = ACTIVATIONS[name](hadamard(w, m).T @ x)
    return x


def apply_mask(net: LayeredNetwork, mask: MaskTensor) -> LayeredNetwork:
    """Materialize the pruned network with masked weights set to zero."""
    check_shapes(net, mask)
    zeroed = tuple(hadamard(w, m) for w, m in zip(net.weights, mask.masks))
    return LayeredNetwork(zeroed, net.activations)


# ---------------------------------------------------------------------------
# Text serialization. One header line "layers L", then per layer a line
# "dims r c" followed by r lines of c space-separated values (masks: 0/1).
# Weights are written with 17 significant digits, which round-trips float64.


def _write_matrices(path, mats: Sequence[np.ndarray], fmt) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"layers {len(mats)}\n")
        for m in mats:
            r, c = m.shape
            fh.write(f"dims {r} {c}\n")
            for row in m:
                fh.write(" ".join(fmt(v) for v in row) + "\n")


def _read_matrices(path, conv) -> list[np.ndarray]:
    with open(path, "r", encoding="ascii") as fh:
        tokens = fh.read().split("\n")
    lines = [ln for ln in tokens if ln.strip()]
    head = lines[0].split()
    if len(head) != 2 or head[0] != "layers":
        raise DomainError(f"bad header line {lines[0]!r}")
    n_layers = int(head[1])
    mats = []
    pos = 1
    for _ in range(n_layers):
        dims = lines[pos].split()
        if len(dims) != 3 or dims[0] != "dims":
            raise DomainError(f"bad dims line {lines[pos]!r}")
        r, c = int(dims[1]), int(dims[2])
        pos += 1
        rows = []
        for i in range(r):
            vals = lines[pos + i].split()
            if len(vals) != c:
                raise DomainError(f"expected {c} values, got {len(vals)}")
            rows.append([conv(v) for v in vals])
        pos += r
        mats.append(np.asarray(rows))
    return mats


def save_network(net: LayeredNetwork, path) -> None:
    _write_matrices(path, net.weights, lambda v: f"{v:.17g}")


def load_network(path, activations: Sequence[str] | None = None) -> LayeredNetwork:
    """Read weights back; activations are not stored, default to identity."""
    mats = [m.astype(np.float64) for m in _read_matrices(path, float)]
    if activations is None:
        activations = ["identity"] * len(mats)
    return LayeredNetwork(tuple(mats), tuple(activations))


def save_mask(mask: MaskTensor, path) -> None:
    _write_matrices(path, [m.astype(np.uint8) for m in mask.masks], lambda v: str(int(v)))


def load_mask(path) -> MaskTensor:
    return MaskTensor(tuple(m.astype(bool) for m in _read_matrices(path, int)))
