"""Coordinate-wise aggregation rules applied to collected gradient vectors.

Conventions pinned here (floating point makes summation order observable):

  * median of an even count is the midpoint of the two central order
    statistics;
  * the trimmed mean drops ``k = floor(beta*m)`` values per side and, when
    ``k >= 1``, sums the survivors in ascending order; with ``k == 0`` it
    degenerates to ``coord_mean`` (summation in input order), so beta below
    1/m is bitwise identical to the mean;
  * all sums run sequentially over the machine axis, making results
    independent of any coordinate-level parallelism.

Vectors must be finite: callers sanitize adversarial reports first (see
``attacks.sanitize_report``), so a NaN/Inf here is a programming error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

AGG_KINDS = ("mean", "median", "trimmed")


@dataclass(frozen=True)
class AggRule:
    """Aggregation strategy; ``beta`` is the per-side trim fraction and is
    only meaningful for ``kind="trimmed"``."""

    kind: str = "median"
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in AGG_KINDS:
            raise ValueError(f"unknown aggregation rule {self.kind!r}; expected one of {AGG_KINDS}")
        if not 0.0 <= self.beta < 0.5:
            raise ValueError("beta must be in [0, 1/2)")

    def validate_for(self, m: int) -> None:
        if self.kind == "trimmed" and m - 2 * math.floor(self.beta * m) < 1:
            raise ValueError(
                f"trimming beta={self.beta} leaves no values out of {m} reports"
            )


def _stack(vectors) -> np.ndarray:
    if len(vectors) == 0:
        raise ValueError("cannot aggregate an empty list of vectors")
    first = np.asarray(vectors[0], dtype=np.float64)
    if first.ndim != 1:
        raise ValueError("aggregation inputs must be 1-D vectors")
    d = first.shape[0]
    for v in vectors[1:]:
        if np.asarray(v).shape != (d,):
            raise ValueError("ragged input: all vectors must share the same length")
    V = np.asarray(np.stack([np.asarray(v, dtype=np.float64) for v in vectors]))
    if not np.all(np.isfinite(V)):
        raise ValueError("non-finite report; sanitize reports before aggregation")
    return V


def _seq_mean(rows: np.ndarray) -> np.ndarray:
    # Sequential sum over axis 0 so the result is reproducible by a plain
    # per-coordinate loop (pairwise summation would not be).
    acc = rows[0].astype(np.float64, copy=True)
    for i in range(1, rows.shape[0]):
        acc += rows[i]
    return acc / rows.shape[0]


def coord_mean(vectors) -> np.ndarray:
    """Arithmetic mean per coordinate, summed in input order."""
    return _seq_mean(_stack(vectors))


def coord_median(vectors) -> np.ndarray:
    """Per-coordinate median; even counts take the midpoint of the two
    central order statistics."""
    return np.median(_stack(vectors), axis=0)


def coord_trimmed_mean(vectors, beta: float) -> np.ndarray:
    """Per coordinate: sort the m values, drop the largest and smallest
    ``floor(beta*m)``, and average the rest."""
    if not 0.0 <= beta < 0.5:
        raise ValueError("beta must be in [0, 1/2)")
    V = _stack(vectors)
    m = V.shape[0]
    k = math.floor(beta * m)
    if m - 2 * k < 1:
        raise ValueError(f"trimming beta={beta} leaves no values out of {m} reports")
    if k == 0:
        return _seq_mean(V)
    return _seq_mean(np.sort(V, axis=0)[k : m - k])


def aggregate(rule: AggRule, vectors) -> np.ndarray:
    """Apply ``rule`` to the stacked vectors."""
    if rule.kind == "mean":
        return coord_mean(vectors)
    if rule.kind == "median":
        return coord_median(vectors)
    return coord_trimmed_mean(vectors, rule.beta)
