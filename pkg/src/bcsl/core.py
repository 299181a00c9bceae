"""Shared numeric types and protocol-state records.

Machine ids are 1-based: machine 1 is the master, machines 2..m+1 are
workers. All vectors are dense float64; arrays held by the container
types are frozen (read-only) after construction so instances can be
shared across threads without synchronization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MASTER_ID = 1


def as_param_vec(values, dim: int | None = None) -> np.ndarray:
    """Coerce ``values`` to a finite 1-D float64 parameter vector."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"parameter vector must be 1-D, got shape {v.shape}")
    if v.size < 1:
        raise ValueError("parameter vector must have length >= 1")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite input")
    if dim is not None and v.size != dim:
        raise ValueError(f"expected dimension {dim}, got {v.size}")
    return v


def l2_norm(v) -> float:
    """Euclidean norm with an explicit finiteness check."""
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite input")
    return float(np.linalg.norm(v))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass
class Dataset:
    """Feature matrix plus labels.

    ``kind`` is ``"binary"`` (labels in {0,1}) or ``"continuous"``.
    """

    features: np.ndarray
    labels: np.ndarray
    kind: str = "binary"

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {X.shape}")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValueError(
                f"labels must be 1-D with length {X.shape[0]}, got shape {y.shape}"
            )
        if not np.all(np.isfinite(X)):
            raise ValueError("non-finite feature entry")
        if not np.all(np.isfinite(y)):
            raise ValueError("non-finite label")
        if self.kind not in ("binary", "continuous"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.kind == "binary" and not np.all(np.isin(y, (0.0, 1.0))):
            raise ValueError("binary labels must be in {0, 1}")
        self.features = _freeze(X)
        self.labels = _freeze(y)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features[idx], self.labels[idx], self.kind)


@dataclass
class ShardAssignment:
    """m+1 disjoint, equally sized index sets; shard k-1 belongs to machine k."""

    shards: list
    master_id: int = MASTER_ID

    def __post_init__(self):
        if self.master_id != MASTER_ID:
            raise ValueError("machine 1 is always the master")
        if len(self.shards) < 2:
            raise ValueError("need at least a master and one worker shard")
        shards = [np.asarray(s, dtype=np.intp) for s in self.shards]
        n = shards[0].size
        if n < 1:
            raise ValueError("shards must be nonempty")
        seen: set[int] = set()
        for s in shards:
            if s.size != n:
                raise ValueError("all shards must have equal size")
            ids = set(int(i) for i in s)
            if len(ids) != s.size or seen & ids:
                raise ValueError("shards must be pairwise disjoint")
            seen |= ids
        self.shards = [_freeze(s) for s in shards]

    @property
    def n_machines(self) -> int:
        return len(self.shards)

    @property
    def n_workers(self) -> int:
        return len(self.shards) - 1

    @property
    def shard_size(self) -> int:
        return self.shards[0].size

    def shard_of(self, machine_id: int) -> np.ndarray:
        """Index set held by 1-based machine ``machine_id``."""
        if not 1 <= machine_id <= self.n_machines:
            raise ValueError(f"machine id {machine_id} out of range")
        return self.shards[machine_id - 1]

    def worker_ids(self) -> list:
        return list(range(2, self.n_machines + 1))


@dataclass(frozen=True)
class ByzantineMask:
    """Which worker ids send corrupted reports; the master (id 1) never does."""

    corrupted: frozenset = field(default_factory=frozenset)
    alpha: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "corrupted", frozenset(int(i) for i in self.corrupted))
        if not 0.0 <= self.alpha < 0.5:
            raise ValueError("alpha must be in [0, 1/2)")
        if MASTER_ID in self.corrupted:
            raise ValueError("the master machine is never Byzantine")
        if any(i < 2 for i in self.corrupted):
            raise ValueError("worker ids start at 2")

    @classmethod
    def sample(cls, alpha: float, m: int, rng: np.random.Generator) -> "ByzantineMask":
        """Draw floor(alpha*m) corrupted workers uniformly from {2..m+1}."""
        if not 0.0 <= alpha < 0.5:
            raise ValueError("alpha must be in [0, 1/2)")
        count = math.floor(alpha * m)
        ids = rng.choice(np.arange(2, m + 2), size=count, replace=False)
        return cls(corrupted=frozenset(int(i) for i in ids), alpha=alpha)

    def validate_for(self, m: int) -> None:
        if any(i > m + 1 for i in self.corrupted):
            raise ValueError(f"corrupted worker id exceeds m+1 = {m + 1}")
        if len(self.corrupted) != math.floor(self.alpha * m):
            raise ValueError(
                f"expected floor(alpha*m) = {math.floor(self.alpha * m)} corrupted "
                f"workers, got {len(self.corrupted)}"
            )

    def is_corrupted(self, worker_id: int) -> bool:
        return worker_id in self.corrupted


@dataclass(frozen=True)
class GradientReport:
    """One worker's message for a round: its id, the vector it sent, and
    whether it followed the protocol."""

    worker_id: int
    vector: np.ndarray
    honest: bool = True

    def __post_init__(self):
        if not 2 <= self.worker_id:
            raise ValueError("reports come from workers (ids >= 2)")
        v = np.asarray(self.vector, dtype=np.float64)
        if v.ndim != 1:
            raise ValueError("report vector must be 1-D")
        object.__setattr__(self, "vector", _freeze(v))
