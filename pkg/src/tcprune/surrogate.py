"""Global magnitude-surrogate scores that drive chain selection.

For a layer l, the downstream table entry D[l](j, k) aggregates the
magnitudes of all paths from neuron j (output side of layer l) to output
neuron k. With the power-mean knob alpha it is the (1/alpha)-norm of the
per-path magnitude products:

    D[l] = ( |W[l+1]|^(1/alpha) . D[l+1]^(1/alpha) )^alpha,   D[L] = identity

alpha = 1 gives the plain product of absolute weight matrices (the sum over
all downstream paths); as alpha -> 0 each entry approaches the single
largest path product. The recursion runs in log space: the entrywise power
1/alpha can reach 1000, where any linear-domain evaluation under- or
overflows, while log-sum-exp with a per-entry max shift is exact about the
dominating path and never produces a silent Inf. A shared positive rescale
never changes within-layer argmax decisions, and neither does the log map.

The edge score of connection (l, i -> j) is |W[l](i, j)| * max_k D[l](j, k);
for the last layer the identity base makes this plain |W[L](i, j)|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .network import LayeredNetwork


def _lse_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """out[i,k] = log sum_j exp(a[i,j] + b[j,k]), with -inf acting as log 0."""
    t = a[:, :, None] + b[None, :, :]
    mx = t.max(axis=1)
    shift = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        total = np.exp(t - shift[:, None, :]).sum(axis=1)
        out = np.where(np.isfinite(mx), shift + np.log(total), -np.inf)
    return out


def _log_abs(w: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(w))


def _log_identity(n: int) -> np.ndarray:
    out = np.full((n, n), -np.inf)
    np.fill_diagonal(out, 0.0)
    return out


@dataclass(frozen=True)
class SurrogateTable:
    """Log-domain downstream products D[1..L]; D[L] is the identity base."""

    alpha: float
    log_downstream: tuple[np.ndarray, ...]
    dims: tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.log_downstream)

    def downstream(self, layer: int) -> np.ndarray:
        """Linear-domain table for one layer, shape (dims[layer], dims[-1])."""
        self._check_layer(layer)
        return np.exp(self.log_downstream[layer - 1])

    def _check_layer(self, layer: int) -> None:
        if not 1 <= layer <= self.depth:
            raise IndexError(f"layer {layer} out of range 1..{self.depth}")


def build_table(net: LayeredNetwork, alpha: float) -> SurrogateTable:
    """Evaluate the downstream recursion back to front on |W|."""
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must satisfy 1/alpha >= 1, got {alpha}")
    depth = net.depth
    logs: list[np.ndarray] = [np.empty(0)] * depth
    logs[depth - 1] = _log_identity(net.dims[-1])
    for layer in range(depth - 1, 0, -1):
        logs[layer - 1] = alpha * _lse_matmul(
            _log_abs(net.weights[layer]) / alpha, logs[layer] / alpha
        )
    return SurrogateTable(alpha, tuple(logs), net.dims)


def local_score(net: LayeredNetwork, layer: int, i: int, j: int) -> float:
    """Plain local criterion: the absolute weight of the connection."""
    w = net.weights[layer - 1]
    return float(abs(w[i, j]))


def edge_score(table: SurrogateTable, net: LayeredNetwork, layer: int, i: int, j: int) -> float:
    """|W[layer](i, j)| scaled by the best downstream aggregate from j."""
    table._check_layer(layer)
    w = net.weights[layer - 1]
    rows, cols = w.shape
    if not (0 <= i < rows and 0 <= j < cols):
        raise IndexError(f"connection ({i}, {j}) out of range for shape {(rows, cols)}")
    log_w = _log_abs(w[i : i + 1, j : j + 1])[0, 0]
    best = table.log_downstream[layer - 1][j].max()
    return float(np.exp(log_w + best))


def log_score_matrix(
    net: LayeredNetwork, layer: int, table: SurrogateTable | None = None
) -> np.ndarray:
    """Log scores of every connection of one layer.

    Local scoring (table is None) reduces to log |W[layer]|. Global scoring
    adds the best downstream log-aggregate of each target neuron. Scores are
    only ever compared within a layer, so the log map is argmax-safe.
    """
    scores = _log_abs(net.weights[layer - 1])
    if table is not None:
        table._check_layer(layer)
        scores = scores + table.log_downstream[layer - 1].max(axis=1)[None, :]
    return scores
