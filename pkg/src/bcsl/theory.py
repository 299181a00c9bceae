"""Error-bound formulas and regularization-weight heuristics, evaluated as
numeric diagnostics.

These are order-of-magnitude companions to the empirical convergence
curves: the bounds take uncertified, empirically estimated problem
constants and report the statistical error floor the iterates should
plateau at, together with the feasibility of the Byzantine fraction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import skew

from .core import Dataset, ShardAssignment
from .glm import GlmModel, gradient

#: Skewness coefficient in the median bound.
MEDIAN_SKEW_COEFF = 0.4748


@dataclass(frozen=True)
class TheoryParams:
    """Problem constants feeding the error bounds.

    ``V``: per-coordinate gradient standard-deviation bound; ``S``:
    coordinate skewness bound; ``upsilon``: sub-exponential scale;
    ``L_tilde``: root-sum-square of coordinate Lipschitz constants;
    ``D``: diameter of the (nominal, unenforced) parameter domain;
    ``epsilon``: confidence slack in (0, 1/2); ``rho``: strong convexity;
    ``delta``: master-vs-population Hessian gap.
    """

    V: float = 1.0
    S: float = 1.0
    upsilon: float = 1.0
    L_tilde: float = 1.0
    D: float = 10.0
    epsilon: float = 1.0 / 6.0
    rho: float = 1.0
    delta: float = 0.0

    def __post_init__(self):
        for name in ("V", "S", "upsilon", "L_tilde", "D", "rho", "delta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError("epsilon must be in (0, 1/2)")


@dataclass(frozen=True)
class BoundReport:
    """A bound value plus the feasibility condition it was derived under."""

    value: float
    feasibility_lhs: float
    feasibility_rhs: float
    feasible: bool
    remainder_scale: float | None = None


def c_epsilon(epsilon: float) -> float:
    """Median concentration constant ``sqrt(2*pi) * exp(z^2/2)`` with
    ``z = ndtri(1 - epsilon)`` (inverse standard normal CDF)."""
    if not 0.0 < epsilon < 0.5:
        raise ValueError("epsilon must be in (0, 1/2)")
    z = ndtri(1.0 - epsilon)
    return math.sqrt(2.0 * math.pi) * math.exp(0.5 * z * z)


def _log_term(n: int, m: int, params: TheoryParams) -> float:
    return math.log(1.0 + n * (m + 1) * params.L_tilde * params.D)


def delta_nm_alpha(n: int, m: int, alpha: float, params: TheoryParams, p: int) -> BoundReport:
    """Statistical error floor of the median-aggregation algorithm.

    Also evaluates the feasibility condition on the Byzantine fraction
    ``alpha + sqrt(p*log(...)/(m(1-alpha))) + 0.4748*S/sqrt(n) <= 1/2 - eps``
    and flags infeasible configurations instead of refusing to evaluate.
    """
    if n < 1 or m < 1 or p < 1:
        raise ValueError("n, m, p must be positive")
    if not 0.0 <= alpha < 0.5:
        raise ValueError("alpha must be in [0, 1/2)")
    inner = (
        alpha
        + math.sqrt(p * _log_term(n, m, params) / (m * (1.0 - alpha)))
        + MEDIAN_SKEW_COEFF * params.S / math.sqrt(n)
    )
    value = (
        2.0 * math.sqrt(2.0) / ((m + 1) * n)
        + math.sqrt(2.0) * c_epsilon(params.epsilon) * params.V / math.sqrt(n) * inner
    )
    rhs = 0.5 - params.epsilon
    return BoundReport(
        value=value, feasibility_lhs=inner, feasibility_rhs=rhs, feasible=inner <= rhs
    )


def delta_nm_beta(n: int, m: int, beta: float, params: TheoryParams, p: int) -> BoundReport:
    """Statistical error floor of the trimmed-mean algorithm (leading term).

    The unspecified-constant remainder of order ``beta/n + 1/(nm)`` is
    reported separately in ``remainder_scale`` and never added to the
    bound.
    """
    if n < 1 or m < 1 or p < 1:
        raise ValueError("n, m, p must be positive")
    if not 0.0 <= beta < 0.5:
        raise ValueError("beta must be in [0, 1/2)")
    lead = (
        params.upsilon
        * p
        / params.epsilon
        * (3.0 * math.sqrt(2.0) * beta / math.sqrt(n) + 2.0 / math.sqrt(n * m))
        * math.sqrt(_log_term(n, m, params) + math.log(1.0 + m) / p)
    )
    rhs = 0.5 - params.epsilon
    return BoundReport(
        value=lead,
        feasibility_lhs=beta,
        feasibility_rhs=rhs,
        feasible=beta <= rhs,
        remainder_scale=beta / n + 1.0 / (n * m),
    )


def suggest_lambda(
    regime: str,
    *,
    delta: float | None = None,
    rho: float | None = None,
    p: int | None = None,
    n: int | None = None,
    c: float = 1.0,
) -> float:
    """Proximal-weight heuristics.

    ``glm_default`` returns ``c * delta^2 / rho`` (the weight large enough
    to restore contraction when the master shard is small); ``linear_pn``
    returns ``c * p / n`` (the dimension-adaptive choice that keeps the
    linear-family update contracting regardless of n/p). The constants are
    order-of-magnitude only; ``c`` rescales them.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if regime == "glm_default":
        if delta is None or rho is None or delta < 0 or rho <= 0:
            raise ValueError("glm_default needs delta >= 0 and rho > 0")
        return c * delta * delta / rho
    if regime == "linear_pn":
        if p is None or n is None or p < 1 or n < 1:
            raise ValueError("linear_pn needs positive p and n")
        return c * p / n
    raise ValueError(f"unknown regime {regime!r}")


def estimate_theory_params(
    model: GlmModel,
    data: Dataset,
    shards: ShardAssignment,
    theta0,
    epsilon: float = 1.0 / 6.0,
    D: float = 10.0,
) -> TheoryParams:
    """Rough empirical estimates of the bound constants at ``theta0``.

    V and S come from the spread and skewness of the per-worker gradients;
    upsilon is set to V; L_tilde uses the data-driven coordinate curvature
    bound; rho and delta compare the master-shard Hessian with the
    full-data Hessian. These are estimates, not certified bounds.
    """
    theta0 = np.asarray(theta0, dtype=np.float64)
    grads = np.stack(
        [gradient(model, theta0, data, shards.shard_of(k)) for k in shards.worker_ids()]
    )
    V = float(np.max(np.std(grads, axis=0, ddof=1))) if grads.shape[0] > 1 else 1.0
    S = float(np.max(np.abs(skew(grads, axis=0, bias=True)))) if grads.shape[0] > 2 else 1.0
    X = data.features
    # Coordinate curvature: |d/dw grad_k| <= max_i b''_max * |x_ik| * ||x_i||.
    b2max = 0.25 if model.family == "logistic" else 1.0
    row_norms = np.linalg.norm(X, axis=1)
    L_k = b2max * np.max(np.abs(X) * row_norms[:, None], axis=0)
    L_tilde = float(np.linalg.norm(L_k))

    def hessian(idx) -> np.ndarray:
        Xs = X if idx is None else X[np.asarray(idx, dtype=np.intp)]
        z = Xs @ theta0
        if model.family == "logistic":
            from scipy.special import expit

            s = expit(z)
            w = s * (1.0 - s)
        else:
            w = np.ones(Xs.shape[0])
        return (Xs.T * w) @ Xs / Xs.shape[0]

    H1 = hessian(shards.shard_of(1))
    H = hessian(None)
    rho = float(max(np.linalg.eigvalsh(H)[0], 1e-12))
    delta = float(np.linalg.norm(H1 - H, ord=2))
    return TheoryParams(
        V=V, S=S, upsilon=V, L_tilde=L_tilde, D=D, epsilon=epsilon, rho=rho, delta=delta
    )
