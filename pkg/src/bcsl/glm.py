"""Loss values, gradients, penalties, and proximal maps for the two GLM
families used by the distributed algorithms.

Families:
  * ``logistic``: labels in {0,1}, per-sample loss ``log(1+exp(x'w)) - y x'w``
    evaluated with the stable form ``max(t,0) + log1p(exp(-|t|))``.
  * ``linear``:  half squared error ``(y - x'w)^2 / 2``; its shard loss is
    the quadratic ``w'S w / 2 - v'w + const`` whose moments feed the
    closed-form ridge update.

Penalties: ``none``, ``l2sq`` (gamma/2 * ||w||_2^2, chosen with the 1/2
factor so its prox is the plain shrinkage v/(1+gamma*step)), and ``l1``
(gamma * ||w||_1, prox = coordinate-wise soft threshold).

All operations are pure functions; they may be called concurrently over
disjoint shards.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .core import Dataset

FAMILIES = ("logistic", "linear")
PENALTY_KINDS = ("none", "l2sq", "l1")


@dataclass(frozen=True)
class GlmModel:
    """Model family, fixed for the life of a run.

    ``fit_intercept`` records whether column 0 of the feature matrix is a
    constant-one intercept column; the loss and gradient treat features
    as given either way.
    """

    family: str
    fit_intercept: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")


@dataclass(frozen=True)
class Penalty:
    kind: str = "none"
    gamma: float = 0.0

    def __post_init__(self):
        if self.kind not in PENALTY_KINDS:
            raise ValueError(f"unknown penalty {self.kind!r}; expected one of {PENALTY_KINDS}")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")


def _shard_view(data: Dataset, shard) -> tuple[np.ndarray, np.ndarray]:
    if shard is None:
        return data.features, data.labels
    idx = np.asarray(shard, dtype=np.intp)
    if idx.size == 0:
        raise ValueError("empty shard")
    return data.features[idx], data.labels[idx]


def _check_dim(theta: np.ndarray, X: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim != 1 or theta.shape[0] != X.shape[1]:
        raise ValueError(
            f"dimension mismatch: theta has shape {theta.shape}, features have {X.shape[1]} columns"
        )
    return theta


def loss_value(model: GlmModel, theta, data: Dataset, shard=None) -> float:
    """Shard-averaged loss ``(1/|shard|) sum_i l(theta; Z_i)``."""
    X, y = _shard_view(data, shard)
    theta = _check_dim(theta, X)
    z = X @ theta
    if model.family == "logistic":
        # log(1+e^z) - y*z via logaddexp for stability at |z| >> 1
        return float(np.mean(np.logaddexp(0.0, z) - y * z))
    return float(0.5 * np.mean((y - z) ** 2))


def gradient(model: GlmModel, theta, data: Dataset, shard=None) -> np.ndarray:
    """Shard-averaged gradient ``(1/|shard|) sum_i [b'(x_i'w) - y_i] x_i``."""
    X, y = _shard_view(data, shard)
    theta = _check_dim(theta, X)
    z = X @ theta
    if model.family == "logistic":
        resid = expit(z) - y
    else:
        resid = z - y
    return (X.T @ resid) / X.shape[0]


def penalty_value(pen: Penalty, theta) -> float:
    theta = np.asarray(theta, dtype=np.float64)
    if pen.kind == "none":
        return 0.0
    if pen.kind == "l2sq":
        return float(0.5 * pen.gamma * np.dot(theta, theta))
    return float(pen.gamma * np.sum(np.abs(theta)))


def prox_penalty(pen: Penalty, v, step: float) -> np.ndarray:
    """Proximal map ``argmin_x { g(x) + ||x-v||^2 / (2*step) }``."""
    if step <= 0:
        raise ValueError("step must be positive")
    v = np.asarray(v, dtype=np.float64)
    if pen.kind == "none":
        return v.copy()
    if pen.kind == "l2sq":
        return v / (1.0 + pen.gamma * step)
    t = pen.gamma * step
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)
