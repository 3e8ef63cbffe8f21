"""Skeleton sequences: synthetic generation, temporal chunking, file I/O.

A sequence is a set of J joint trajectories in 3-D plus a fixed spatial
adjacency over the joints. Temporal chunking turns a trajectory of any
length into a fixed-size descriptor: the frames are split into M contiguous
chunks of near-equal size and the per-chunk coordinate averages are
concatenated. Column j of the resulting signal matrix describes joint j.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptyTrajectoryError, ShapeError


@dataclass(frozen=True)
class SkeletonSequence:
    label: int
    joints: np.ndarray  # (J, T, 3)
    adjacency: np.ndarray  # (J, J) bool, symmetric

    def __post_init__(self):
        joints = np.asarray(self.joints, dtype=np.float64)
        adjacency = np.asarray(self.adjacency).astype(bool)
        if joints.ndim != 3 or joints.shape[2] != 3:
            raise ShapeError(f"joints must have shape (J, T, 3), got {joints.shape}")
        if joints.shape[1] == 0:
            raise EmptyTrajectoryError("every trajectory must be nonempty")
        if adjacency.shape != (joints.shape[0], joints.shape[0]):
            raise ShapeError(
                f"adjacency shape {adjacency.shape} does not match {joints.shape[0]} joints"
            )
        if not np.array_equal(adjacency, adjacency.T):
            raise DomainError("adjacency must be symmetric")
        object.__setattr__(self, "joints", joints)
        object.__setattr__(self, "adjacency", adjacency)

    @property
    def num_joints(self) -> int:
        return self.joints.shape[0]

    @property
    def num_frames(self) -> int:
        return self.joints.shape[1]


def chunk_sizes(frames: int, chunks: int) -> list[int]:
    """Near-equal partition: the first frames % chunks chunks get one extra."""
    q, r = divmod(frames, chunks)
    return [q + 1] * r + [q] * (chunks - r)


def temporal_chunking(seq: SkeletonSequence, chunks: int) -> np.ndarray:
    """Chunk-average descriptor matrix of shape (3 * chunks, num_joints)."""
    if chunks < 1:
        raise DomainError(f"chunk count must be positive, got {chunks}")
    frames = seq.num_frames
    if frames < chunks:
        raise DomainError(f"need at least {chunks} frames to form {chunks} chunks, got {frames}")
    sizes = chunk_sizes(frames, chunks)
    bounds = np.cumsum([0] + sizes)
    cols = []
    for j in range(seq.num_joints):
        parts = [seq.joints[j, bounds[c] : bounds[c + 1]].mean(axis=0) for c in range(chunks)]
        cols.append(np.concatenate(parts))
    return np.stack(cols, axis=1)


def hand_adjacency(joints: int) -> np.ndarray:
    """Wrist root plus up to five finger-like chains; self-loops included."""
    if joints < 1:
        raise DomainError("need at least one joint")
    adj = np.eye(joints, dtype=bool)
    if joints > 1:
        for chain in np.array_split(np.arange(1, joints), min(5, joints - 1)):
            prev = 0
            for node in chain:
                adj[prev, node] = adj[node, prev] = True
                prev = int(node)
    return adj


def synth_dataset(
    num_classes: int,
    per_class: int,
    joints: int,
    frames: int,
    seed: int,
    noise: float = 0.05,
    phase_jitter: float = 0.0,
    scale_jitter: float = 0.0,
) -> list[SkeletonSequence]:
    """Class-separable sequences: per-class sinusoidal joint motions.

    Every class owns its own frequency/phase/amplitude/offset per joint and
    coordinate. Samples within a class differ by additive noise and,
    optionally, by a per-sample global phase offset (uniform in
    [0, phase_jitter]) and amplitude scale (uniform in 1 +- scale_jitter);
    jitter is shared by all joints of a sample, so class identity lives in
    the relative motion structure rather than absolute coordinates.
    Deterministic for a fixed seed.
    """
    if min(num_classes, per_class, joints, frames) < 1:
        raise DomainError("all generator counts must be positive")
    rng = np.random.default_rng(seed)
    adjacency = hand_adjacency(joints)
    shape = (num_classes, joints, 1, 3)
    freq = rng.uniform(0.5, 3.0, size=shape)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=shape)
    amp = rng.uniform(0.5, 1.5, size=shape)
    base = rng.uniform(-1.0, 1.0, size=shape)
    t = np.linspace(0.0, 1.0, frames)[None, :, None]
    sequences = []
    for c in range(num_classes):
        for _ in range(per_class):
            offset = rng.uniform(0.0, phase_jitter) if phase_jitter > 0 else 0.0
            scale = 1.0 + rng.uniform(-scale_jitter, scale_jitter) if scale_jitter > 0 else 1.0
            clean = base[c] + scale * amp[c] * np.sin(
                2.0 * np.pi * freq[c] * t + phase[c] + offset
            )
            pts = clean + noise * rng.standard_normal(size=(joints, frames, 3))
            sequences.append(SkeletonSequence(c, pts, adjacency))
    return sequences


# ---------------------------------------------------------------------------
# Text formats. Sequence file: "label k" / "joints J frames T" / T blocks of
# J lines "x y z". Adjacency file: J lines of J space-separated 0/1.


def save_adjacency(adjacency: np.ndarray, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for row in np.asarray(adjacency).astype(int):
            fh.write(" ".join(str(v) for v in row) + "\n")


def load_adjacency(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        rows = [[int(v) for v in ln.split()] for ln in fh if ln.strip()]
    return np.asarray(rows, dtype=bool)


def save_sequence(seq: SkeletonSequence, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"label {seq.label}\n")
        fh.write(f"joints {seq.num_joints} frames {seq.num_frames}\n")
        for frame in range(seq.num_frames):
            for j in range(seq.num_joints):
                x, y, z = seq.joints[j, frame]
                fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")


def load_sequence(path, adjacency: np.ndarray) -> SkeletonSequence:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln.strip()]
    head = lines[0].split()
    if len(head) != 2 or head[0] != "label":
        raise DomainError(f"bad label line {lines[0]!r}")
    label = int(head[1])
    meta = lines[1].split()
    if len(meta) != 4 or meta[0] != "joints" or meta[2] != "frames":
        raise DomainError(f"bad meta line {lines[1]!r}")
    n_joints, n_frames = int(meta[1]), int(meta[3])
    joints = np.zeros((n_joints, n_frames, 3))
    pos = 2
    for frame in range(n_frames):
        for j in range(n_joints):
            joints[j, frame] = [float(v) for v in lines[pos].split()]
            pos += 1
    return SkeletonSequence(label, joints, adjacency)


def save_dataset(sequences: list[SkeletonSequence], dirpath) -> None:
    os.makedirs(dirpath, exist_ok=True)
    save_adjacency(sequences[0].adjacency, os.path.join(dirpath, "adjacency.txt"))
    for idx, seq in enumerate(sequences):
        save_sequence(seq, os.path.join(dirpath, f"seq_{idx:05d}.txt"))


def load_dataset(dirpath) -> list[SkeletonSequence]:
    adjacency = load_adjacency(os.path.join(dirpath, "adjacency.txt"))
    names = sorted(n for n in os.listdir(dirpath) if n.startswith("seq_"))
    return [load_sequence(os.path.join(dirpath, n), adjacency) for n in names]
