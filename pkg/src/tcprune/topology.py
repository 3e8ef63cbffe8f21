"""Accessibility and co-accessibility analysis of mask tensors.

A kept connection (layer l, i -> j) is accessible when some input neuron
reaches neuron i through kept connections of layers 1..l-1, and
co-accessible when neuron j reaches some output neuron through kept
connections of layers l+1..L. A mask is topologically consistent when every
kept connection is both, i.e. lies on a complete input-to-output path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .linalg import bool_matmul, identity_pattern
from .network import MaskTensor


def _check_layer(mask: MaskTensor, layer: int) -> None:
    if not 1 <= layer <= mask.depth:
        raise IndexError(f"layer {layer} out of range 1..{mask.depth}")


def access_pattern(mask: MaskTensor, layer: int) -> np.ndarray:
    """Nonzero pattern of the product of mask layers 1..layer-1.

    Row p / column i is 1 iff input neuron p reaches neuron i of the layer's
    input side. The empty product (layer 1) is the identity pattern.
    """
    _check_layer(mask, layer)
    pattern = identity_pattern(mask.dims[0])
    for m in mask.masks[: layer - 1]:
        pattern = bool_matmul(pattern, m)
    return pattern


def coaccess_pattern(mask: MaskTensor, layer: int) -> np.ndarray:
    """Nonzero pattern of the product of mask layers layer+1..L.

    Row j / column q is 1 iff neuron j of the layer's output side reaches
    output neuron q. The empty product (layer L) is the identity pattern.
    """
    _check_layer(mask, layer)
    pattern = identity_pattern(mask.dims[layer])
    for m in mask.masks[layer:]:
        pattern = bool_matmul(pattern, m)
    return pattern


def connection_flags(mask: MaskTensor, layer: int, i: int, j: int) -> tuple[bool, bool]:
    """(accessible, coaccessible) for the connection (layer, i -> j)."""
    _check_layer(mask, layer)
    rows, cols = mask.masks[layer - 1].shape
    if not (0 <= i < rows and 0 <= j < cols):
        raise IndexError(f"connection ({i}, {j}) out of range for shape {(rows, cols)}")
    accessible = bool(access_pattern(mask, layer)[:, i].any())
    coaccessible = bool(coaccess_pattern(mask, layer)[j, :].any())
    return accessible, coaccessible


def _neuron_flags(mask: MaskTensor) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Per-depth reachability vectors, computed incrementally.

    reached[d][i] == some input neuron reaches neuron i at depth d;
    reaches_out[d][i] == neuron i at depth d reaches some output neuron.
    Equivalent to column/row tests on the full pattern products.
    """
    dims = mask.dims
    reached = [np.ones(dims[0], dtype=bool)]
    for m in mask.masks:
        reached.append(m[reached[-1], :].any(axis=0) if reached[-1].any()
                       else np.zeros(m.shape[1], dtype=bool))
    reaches_out = [np.ones(dims[-1], dtype=bool)]
    for m in reversed(mask.masks):
        nxt = reaches_out[0]
        reaches_out.insert(0, m[:, nxt].any(axis=1) if nxt.any()
                           else np.zeros(m.shape[0], dtype=bool))
    return reached, reaches_out


@dataclass(frozen=True)
class ConsistencyReport:
    """Per-connection flags plus aggregate counts over kept connections."""

    per_layer_accessible: tuple[np.ndarray, ...]
    per_layer_coaccessible: tuple[np.ndarray, ...]
    kept_count: int
    consistent_count: int
    ac_percentage: float | None


def consistency_report(mask: MaskTensor) -> ConsistencyReport:
    """Flag every connection and aggregate over mask-1 positions.

    ac_percentage is None when the mask keeps nothing (undefined rather
    than 0 or 100).
    """
    reached, reaches_out = _neuron_flags(mask)
    accessible = []
    coaccessible = []
    kept = 0
    consistent = 0
    for l, m in enumerate(mask.masks):
        acc = np.broadcast_to(reached[l][:, None], m.shape).copy()
        coa = np.broadcast_to(reaches_out[l + 1][None, :], m.shape).copy()
        accessible.append(acc)
        coaccessible.append(coa)
        kept += int(m.sum())
        consistent += int((m & acc & coa).sum())
    pct = 100.0 * consistent / kept if kept > 0 else None
    return ConsistencyReport(tuple(accessible), tuple(coaccessible), kept, consistent, pct)


def report_to_json(report: ConsistencyReport) -> str:
    return json.dumps(
        {
            "kept": report.kept_count,
            "consistent": report.consistent_count,
            "ac_percent": report.ac_percentage,
        }
    )


def trim_to_consistent(mask: MaskTensor) -> MaskTensor:
    """Drop kept connections that are not on a complete path, to fixpoint.

    Removing a dangling connection can orphan others upstream or downstream,
    so flags are recomputed after every sweep until nothing changes. The
    result is topologically consistent or empty, and is a subset of the
    input mask.
    """
    masks = [m.copy() for m in mask.masks]
    while True:
        current = MaskTensor(tuple(masks))
        report = consistency_report(current)
        changed = False
        for l, m in enumerate(masks):
            keep = m & report.per_layer_accessible[l] & report.per_layer_coaccessible[l]
            if not np.array_equal(keep, m):
                masks[l] = keep
                changed = True
        if not changed:
            return current
