"""Mask construction: standard, stochastic, and chain-based consistent pruning.

standard_mp keeps the globally largest absolute weights; stochastic_mp
samples connections without replacement proportionally to magnitude. Both
can leave kept connections dangling. tc_mp instead grows the mask one
complete input-to-output chain at a time, so its output is topologically
consistent by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, DegenerateDistributionError, DomainError, SaturationError
from .network import LayeredNetwork, MaskTensor, budget
from .surrogate import build_table, log_score_matrix


@dataclass(frozen=True)
class PruneSpec:
    """Knobs of one pruning run; seeded stochastic modes are reproducible."""

    rate: float
    tc: bool = True
    stochastic: bool = False
    scoring: str = "local"  # "local" | "global"
    alpha: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise DomainError(f"pruning rate must be in [0, 1), got {self.rate}")
        if self.scoring not in ("local", "global"):
            raise DomainError(f"unknown scoring {self.scoring!r}")
        if self.scoring == "global" and not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"global scoring needs 1/alpha >= 1, got alpha={self.alpha}")


@dataclass(frozen=True)
class ChainTrace:
    """One complete chain added by tc_mp: (layer, from, to) per step."""

    steps: tuple[tuple[int, int, int], ...]
    newly_added: int

    def __post_init__(self):
        for t, (layer, _, _) in enumerate(self.steps):
            if layer != t + 1:
                raise DomainError(f"step {t} has layer {layer}, expected {t + 1}")
        for (_, _, to), (_, frm, _) in zip(self.steps, self.steps[1:]):
            if to != frm:
                raise DomainError("chain steps do not connect")


def standard_mp(net: LayeredNetwork, rate: float) -> MaskTensor:
    """Keep the max_kept connections with the largest absolute weights.

    Ties break toward the lexicographically smallest (layer, row, col).
    """
    b = budget(net, rate)
    mags, layers, rows, cols = [], [], [], []
    for l, w in enumerate(net.weights):
        r, c = np.divmod(np.arange(w.size), w.shape[1])
        mags.append(np.abs(w).ravel())
        layers.append(np.full(w.size, l))
        rows.append(r)
        cols.append(c)
    mags = np.concatenate(mags)
    layers = np.concatenate(layers)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    order = np.lexsort((cols, rows, layers, -mags))
    keep = order[: b.max_kept]
    masks = [np.zeros(w.shape, dtype=bool) for w in net.weights]
    for idx in keep:
        masks[layers[idx]][rows[idx], cols[idx]] = True
    return MaskTensor(tuple(masks))


def stochastic_mp(net: LayeredNetwork, rate: float, seed: int) -> MaskTensor:
    """Sample max_kept connections without replacement, p proportional to |w|.

    Implemented as Gumbel top-k on log magnitudes, which draws from the same
    distribution as sequentially sampling proportionally to the remaining
    weights. Zero-magnitude connections are only chosen once every positive
    one is selected.
    """
    b = budget(net, rate)
    flat = np.concatenate([np.abs(w).ravel() for w in net.weights])
    if not flat.any():
        raise DegenerateDistributionError("all weights are zero")
    rng = np.random.default_rng(seed)
    with np.errstate(divide="ignore"):
        keys = np.log(flat) + rng.gumbel(size=flat.size)
    order = np.argsort(-keys, kind="stable")
    chosen = np.zeros(flat.size, dtype=bool)
    chosen[order[: b.max_kept]] = True
    masks, offset = [], 0
    for w in net.weights:
        masks.append(chosen[offset : offset + w.size].reshape(w.shape))
        offset += w.size
    return MaskTensor(tuple(masks))


def select_start(net: LayeredNetwork, spec: PruneSpec, sweep_index: int,
                 rng: np.random.Generator | None = None) -> int:
    """Chain start neuron: round-robin when deterministic, uniform otherwise."""
    d0 = net.dims[0]
    if spec.stochastic:
        if rng is None:
            rng = np.random.default_rng(spec.seed)
        return int(rng.integers(d0))
    return sweep_index % d0


def _argmax_step(row_scores: np.ndarray, row_mask: np.ndarray) -> int:
    # Prefer connections not selected yet so the budget keeps filling once a
    # start neuron's best chain repeats; within the pool the first (lowest
    # index) maximum wins.
    fresh = np.flatnonzero(~row_mask)
    cand = fresh if fresh.size else np.arange(row_mask.size)
    return int(cand[np.argmax(row_scores[cand])])


def _sample_step(row_scores: np.ndarray, rng: np.random.Generator) -> int:
    mx = row_scores.max()
    if mx == -np.inf:
        # every forward neighbor has zero magnitude; fall back to uniform
        probs = np.full(row_scores.size, 1.0 / row_scores.size)
    else:
        weights = np.exp(row_scores - mx)
        probs = weights / weights.sum()
    return int(rng.choice(row_scores.size, p=probs))


def tc_mp_trace(net: LayeredNetwork, spec: PruneSpec) -> tuple[MaskTensor, list[ChainTrace]]:
    """Chain-based consistent pruning, returning the chains it selected.

    Chains start at an input neuron and extend layer by layer to an output
    neuron, choosing the next neuron by argmax of the edge score
    (deterministic) or by sampling proportionally to it (stochastic). The
    budget counter advances only on newly set mask bits and is checked
    before each chain, so the final chain may overshoot by at most L - 1.
    """
    if not spec.tc:
        raise DomainError("chain pruning requires spec.tc == True")
    b = budget(net, spec.rate)
    depth = net.depth
    if b.max_kept < depth:
        raise BudgetError(
            f"budget {b.max_kept} cannot hold one complete chain of {depth} connections"
        )
    table = build_table(net, spec.alpha) if spec.scoring == "global" else None
    scores = [log_score_matrix(net, layer, table) for layer in range(1, depth + 1)]
    masks = [np.zeros(w.shape, dtype=bool) for w in net.weights]
    rng = np.random.default_rng(spec.seed)
    # Deterministic selection repeats verbatim after one full round-robin
    # sweep with no new bits; stochastic selection gets a generous allowance
    # before it is declared stuck.
    stall_limit = net.dims[0] if not spec.stochastic else max(32 * net.dims[0], 1000)
    traces: list[ChainTrace] = []
    kept = 0
    sweep = 0
    stall = 0
    while kept < b.max_kept:
        cur = select_start(net, spec, sweep, rng)
        steps = []
        new_bits = 0
        for layer in range(1, depth + 1):
            row_scores = scores[layer - 1][cur]
            row_mask = masks[layer - 1][cur]
            if spec.stochastic:
                nxt = _sample_step(row_scores, rng)
            else:
                nxt = _argmax_step(row_scores, row_mask)
            if not row_mask[nxt]:
                row_mask[nxt] = True
                kept += 1
                new_bits += 1
            steps.append((layer, cur, nxt))
            cur = nxt
        traces.append(ChainTrace(tuple(steps), new_bits))
        sweep += 1
        if new_bits == 0:
            stall += 1
            if stall >= stall_limit:
                raise SaturationError(kept, b.max_kept)
        else:
            stall = 0
    return MaskTensor(tuple(masks)), traces


def tc_mp(net: LayeredNetwork, spec: PruneSpec) -> MaskTensor:
    """Topologically consistent magnitude pruning (chain selection)."""
    return tc_mp_trace(net, spec)[0]


def prune(net: LayeredNetwork, spec: PruneSpec) -> MaskTensor:
    """Dispatch on the spec: chain pruning when tc, plain or sampled otherwise."""
    if spec.tc:
        return tc_mp(net, spec)
    if spec.stochastic:
        return stochastic_mp(net, spec.rate, spec.seed)
    return standard_mp(net, spec.rate)
