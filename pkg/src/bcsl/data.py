"""Synthetic data generation, CSV ingestion, splitting, and sharding.

Synthetic scenarios (all prepend a constant-one intercept column, so the
feature dimension is p+1):

  * ``logistic_dense`` : covariates N(0, diag(8,4,4,2,1,...,1)), labels
    Bernoulli(sigmoid(x'theta*)), theta* a uniformly random direction
    scaled to ``theta_norm``;
  * ``logistic_sparse``: covariates N(0, I_p), theta* supported on the 10
    leading non-intercept coordinates (intercept coefficient 0), scaled to
    ``theta_norm``;
  * ``linear``         : same covariate choices, y = x'theta* + N(0, noise_std^2).
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .core import Dataset, ShardAssignment

logger = logging.getLogger(__name__)

SCENARIOS = ("logistic_dense", "logistic_sparse", "linear")
SIGMA_SPECS = ("spiked_diag", "identity")


@dataclass(frozen=True)
class SyntheticSpec:
    scenario: str
    N: int
    p: int
    theta_norm: float = 3.0
    sigma_spec: str = "spiked_diag"
    noise_std: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.sigma_spec not in SIGMA_SPECS:
            raise ValueError(f"unknown sigma_spec {self.sigma_spec!r}")
        if self.N < 1 or self.p < 1:
            raise ValueError("N and p must be positive")
        if self.theta_norm <= 0:
            raise ValueError("theta_norm must be positive")


@dataclass(frozen=True)
class CsvSchema:
    path: str
    label_column: int = -1
    delimiter: str = ","
    header: bool = False
    standardize: bool = True


def spiked_diagonal(p: int) -> np.ndarray:
    """Covariate variances diag(8,4,4,2,1,...,1); needs p >= 5."""
    if p < 5:
        raise ValueError("spiked_diag requires p >= 5")
    out = np.ones(p)
    out[:4] = (8.0, 4.0, 4.0, 2.0)
    return out


def _covariates(rng: np.random.Generator, N: int, p: int, sigma_spec: str) -> np.ndarray:
    u = rng.standard_normal((N, p))
    if sigma_spec == "spiked_diag":
        u *= np.sqrt(spiked_diagonal(p))
    return u


def _with_intercept(u: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((u.shape[0], 1)), u])


def _bernoulli_labels(rng: np.random.Generator, X: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return (rng.random(X.shape[0]) < expit(X @ theta)).astype(np.float64)


def gen_logistic_dense(
    N: int, p: int, seed: int, theta_norm: float = 3.0, sigma_spec: str = "spiked_diag"
) -> tuple[Dataset, np.ndarray]:
    """Dense logistic scenario; returns the dataset and the drawn theta*."""
    rng = np.random.default_rng(seed)
    u = _covariates(rng, N, p, sigma_spec)
    direction = rng.standard_normal(p + 1)
    theta_star = theta_norm * direction / np.linalg.norm(direction)
    X = _with_intercept(u)
    y = _bernoulli_labels(rng, X, theta_star)
    return Dataset(X, y, kind="binary"), theta_star


def gen_logistic_sparse(
    N: int, seed: int, p: int = 1000, theta_norm: float = 3.0, support_size: int = 10
) -> tuple[Dataset, np.ndarray]:
    """Sparse logistic scenario: isotropic covariates, theta* supported on
    the ``support_size`` leading non-intercept coordinates."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((N, p))
    v = rng.standard_normal(support_size)
    theta_star = np.zeros(p + 1)
    theta_star[1 : support_size + 1] = theta_norm * v / np.linalg.norm(v)
    X = _with_intercept(u)
    y = _bernoulli_labels(rng, X, theta_star)
    return Dataset(X, y, kind="binary"), theta_star


def gen_linear(
    N: int,
    p: int,
    seed: int,
    theta_norm: float = 3.0,
    sigma_spec: str = "spiked_diag",
    noise_std: float = 1.0,
) -> tuple[Dataset, np.ndarray]:
    """Linear-response scenario with additive Gaussian noise."""
    rng = np.random.default_rng(seed)
    u = _covariates(rng, N, p, sigma_spec)
    direction = rng.standard_normal(p + 1)
    theta_star = theta_norm * direction / np.linalg.norm(direction)
    X = _with_intercept(u)
    y = X @ theta_star + noise_std * rng.standard_normal(N)
    return Dataset(X, y, kind="continuous"), theta_star


def generate(spec: SyntheticSpec) -> tuple[Dataset, np.ndarray]:
    """Dispatch a :class:`SyntheticSpec` to its generator."""
    if spec.scenario == "logistic_dense":
        return gen_logistic_dense(spec.N, spec.p, spec.seed, spec.theta_norm, spec.sigma_spec)
    if spec.scenario == "logistic_sparse":
        return gen_logistic_sparse(spec.N, spec.seed, p=spec.p, theta_norm=spec.theta_norm)
    return gen_linear(
        spec.N, spec.p, spec.seed, spec.theta_norm, spec.sigma_spec, spec.noise_std
    )


def load_csv(schema: CsvSchema) -> Dataset:
    """Parse a numeric CSV into a binary-label dataset.

    One sample per row; the label column is removed from the features, a
    constant-one intercept column is prepended, and (optionally) every
    feature column is standardized by its full-file mean and standard
    deviation. Parsing errors carry row/column coordinates.
    """
    rows: list[list[float]] = []
    width: int | None = None
    with open(schema.path, newline="") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        for lineno, row in enumerate(reader, start=1):
            if schema.header and lineno == 1:
                continue
            if not row:
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(
                    f"ragged row {lineno}: expected {width} cells, got {len(row)}"
                )
            parsed = []
            for col, cell in enumerate(row):
                try:
                    parsed.append(float(cell))
                except ValueError as exc:
                    raise ValueError(
                        f"non-numeric cell at row {lineno}, column {col + 1}: {cell!r}"
                    ) from exc
            rows.append(parsed)
    if not rows:
        raise ValueError(f"no data rows in {schema.path}")
    table = np.asarray(rows, dtype=np.float64)
    label_col = schema.label_column % table.shape[1]
    y = table[:, label_col]
    X = np.delete(table, label_col, axis=1)
    if schema.standardize:
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std[std == 0.0] = 1.0
        X = (X - mean) / std
    return Dataset(_with_intercept(X), y, kind="binary")


def max_feasible_shard_size(N: int, test_size: int, m: int) -> int:
    return (N - test_size) // (m + 1)


def split_and_shard(
    data: Dataset, test_size: int, m: int, n: int, seed
) -> tuple[ShardAssignment, Dataset | None, list]:
    """Randomly carve out a test set and m+1 disjoint shards of size n.

    Returns the shard assignment (indices into ``data``), the test subset
    (None when ``test_size == 0``), and the worker ids eligible for
    corruption. Deterministic given ``seed`` (an int or SeedSequence).
    """
    if test_size < 0 or m < 1 or n < 1:
        raise ValueError("need test_size >= 0, m >= 1, n >= 1")
    needed = test_size + (m + 1) * n
    if needed > data.n_samples:
        raise ValueError(
            f"insufficient rows: test_size + (m+1)*n = {needed} exceeds "
            f"N = {data.n_samples}; max feasible n is "
            f"{max_feasible_shard_size(data.n_samples, test_size, m)}"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(data.n_samples)
    test_idx = perm[:test_size]
    shards = [
        perm[test_size + k * n : test_size + (k + 1) * n] for k in range(m + 1)
    ]
    assignment = ShardAssignment(shards=shards)
    test = data.subset(test_idx) if test_size > 0 else None
    return assignment, test, assignment.worker_ids()


def clipped_shard_size(data: Dataset, test_size: int, m: int, n: int) -> int:
    """Largest usable shard size not exceeding the requested ``n``.

    Harness-level fallback: infeasible (n, m) requests keep their labels
    but run with the clipped size, which is logged.
    """
    feasible = max_feasible_shard_size(data.n_samples, test_size, m)
    if feasible < 1:
        raise ValueError(
            f"cannot fit {m + 1} machines and a test set of {test_size} into "
            f"{data.n_samples} rows"
        )
    if n > feasible:
        logger.warning(
            "requested shard size n=%d infeasible for N=%d, m=%d, test_size=%d; "
            "using effective n=%d",
            n,
            data.n_samples,
            m,
            test_size,
            feasible,
        )
        return feasible
    return n
