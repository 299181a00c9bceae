"""Master-side optimization: the per-round surrogate solve and the
centralized reference fit.

The surrogate objective for one round, anchored at the current iterate
``a`` with gradient shift ``s`` and proximal weight ``lam``, is

    F(w) = f1(w) - <s, w> + (lam/2) ||w - a||^2 + g(w)

minimized by full-batch proximal gradient with Armijo backtracking. The
solver certifies termination through the prox-gradient residual

    || w - prox_{step*g}(w - step * grad_smooth(w)) || / step <= tol

evaluated at the returned point with the accepted step size.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .core import Dataset
from .glm import GlmModel, Penalty, gradient, loss_value, penalty_value, prox_penalty

#: Armijo sufficient-decrease constant for the backtracking line search.
SUFFICIENT_DECREASE = 1e-4


class DivergentSolveError(RuntimeError):
    """Raised when the inner solve encounters a non-finite objective."""


@dataclass(frozen=True)
class SolverOptions:
    """Termination and step-size policy for the proximal-gradient solver.

    ``fixed_step`` bypasses backtracking when set; otherwise the line
    search starts from ``init_step`` and multiplies by ``shrink`` until the
    Armijo condition holds.
    """

    tol: float = 1e-8
    max_iter: int = 500
    init_step: float = 1.0
    shrink: float = 0.5
    fixed_step: float | None = None

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.init_step <= 0 or not 0 < self.shrink < 1:
            raise ValueError("need init_step > 0 and shrink in (0, 1)")
        if self.fixed_step is not None and self.fixed_step <= 0:
            raise ValueError("fixed_step must be positive")


@dataclass
class SurrogateProblem:
    """One round's objective: master data plus the aggregate-gradient shift."""

    model: GlmModel
    data: Dataset
    shard: np.ndarray | None
    shift: np.ndarray
    penalty: Penalty
    lam: float = 0.0
    anchor: np.ndarray | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        self.shift = np.asarray(self.shift, dtype=np.float64)
        if self.lam > 0 and self.anchor is None:
            raise ValueError("lam > 0 requires an anchor point")
        if self.anchor is not None:
            self.anchor = np.asarray(self.anchor, dtype=np.float64)

    def smooth_value(self, theta: np.ndarray) -> float:
        val = loss_value(self.model, theta, self.data, self.shard) - float(
            np.dot(self.shift, theta)
        )
        if self.lam > 0:
            diff = theta - self.anchor
            val += 0.5 * self.lam * float(np.dot(diff, diff))
        return val

    def smooth_grad(self, theta: np.ndarray) -> np.ndarray:
        g = gradient(self.model, theta, self.data, self.shard) - self.shift
        if self.lam > 0:
            g = g + self.lam * (theta - self.anchor)
        return g

    def objective(self, theta: np.ndarray) -> float:
        return self.smooth_value(theta) + penalty_value(self.penalty, theta)


@dataclass
class SolveDiagnostics:
    iterations: int = 0
    residual: float = np.inf
    converged: bool = False
    objective: float = np.nan
    step: float = np.nan
    nonunique: bool = False
    objective_history: list = field(default_factory=list)


def _detect_nonunique(problem: SurrogateProblem) -> bool:
    # Only the documented degenerate case: linear family, no curvature from
    # penalty or proximal term, rank-deficient shard Gram matrix.
    if problem.lam > 0 or problem.penalty.kind != "none":
        return False
    if problem.model.family != "linear":
        return False
    X = problem.data.features if problem.shard is None else problem.data.features[
        np.asarray(problem.shard, dtype=np.intp)
    ]
    return int(np.linalg.matrix_rank(X)) < X.shape[1]


def solve_surrogate(
    problem: SurrogateProblem, init, opts: SolverOptions | None = None
) -> tuple[np.ndarray, SolveDiagnostics]:
    """Minimize the round objective from ``init``.

    Returns the final iterate together with diagnostics certifying either
    the residual-based termination or that ``max_iter`` was hit.
    """
    opts = opts or SolverOptions()
    theta = np.asarray(init, dtype=np.float64).copy()
    step = opts.fixed_step if opts.fixed_step is not None else opts.init_step

    diag = SolveDiagnostics(nonunique=_detect_nonunique(problem))
    f_smooth = problem.smooth_value(theta)
    obj = f_smooth + penalty_value(problem.penalty, theta)
    if not np.isfinite(obj):
        raise DivergentSolveError("divergent inner solve")
    diag.objective_history.append(obj)

    for it in range(opts.max_iter + 1):
        grad = problem.smooth_grad(theta)
        # Line search: accept once the composite objective drops enough.
        while True:
            cand = prox_penalty(problem.penalty, theta - step * grad, step)
            move = cand - theta
            move_sq = float(np.dot(move, move))
            cand_obj = problem.smooth_value(cand) + penalty_value(problem.penalty, cand)
            if not np.isfinite(cand_obj):
                raise DivergentSolveError("divergent inner solve")
            if opts.fixed_step is not None:
                break
            # The ulp-scale slack keeps rounding noise from rejecting steps
            # once the true decrease falls below double resolution.
            slack = 4.0 * np.finfo(np.float64).eps * abs(obj)
            if cand_obj <= obj - SUFFICIENT_DECREASE * move_sq / step + slack or move_sq == 0.0:
                break
            step *= opts.shrink

        residual = float(np.sqrt(move_sq)) / step
        diag.iterations = it
        diag.residual = residual
        diag.step = step
        diag.objective = obj
        if residual <= opts.tol:
            diag.converged = True
            return theta, diag
        if it == opts.max_iter:
            break
        theta = cand
        obj = cand_obj
        diag.objective_history.append(obj)

    return theta, diag


def shard_moments(data: Dataset, shard=None) -> tuple[np.ndarray, np.ndarray]:
    """Second moment ``X'X / n`` and cross moment ``X'y / n`` of a shard."""
    if shard is None:
        X, y = data.features, data.labels
    else:
        idx = np.asarray(shard, dtype=np.intp)
        X, y = data.features[idx], data.labels[idx]
    n = X.shape[0]
    return (X.T @ X) / n, (X.T @ y) / n


def closed_form_ridge_update(
    sigma1: np.ndarray,
    v_hat1: np.ndarray | None,
    theta_t,
    h_t,
    lam: float,
) -> np.ndarray:
    """Exact linear-family update: solve ``(S + lam I) w = (S + lam I) a - h``.

    ``sigma1`` is the master shard's second-moment matrix; ``v_hat1`` is kept
    in the signature for symmetry with the moment pair but only enters
    through ``h_t`` when the master's own gradient joins the aggregate.
    """
    del v_hat1
    S = np.asarray(sigma1, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("sigma1 must be square")
    if not np.allclose(S, S.T, rtol=1e-10, atol=1e-12):
        raise ValueError("sigma1 must be symmetric")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    theta_t = np.asarray(theta_t, dtype=np.float64)
    h_t = np.asarray(h_t, dtype=np.float64)
    A = S + lam * np.eye(S.shape[0])
    try:
        factor = cho_factor(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular system; increase lambda") from exc
    return cho_solve(factor, A @ theta_t - h_t)


def centralized_minimizer(
    model: GlmModel,
    penalty: Penalty,
    data: Dataset,
    opts: SolverOptions | None = None,
    init=None,
) -> tuple[np.ndarray, SolveDiagnostics]:
    """Single-machine reference fit over the whole dataset."""
    d = data.dim
    problem = SurrogateProblem(
        model=model,
        data=data,
        shard=None,
        shift=np.zeros(d),
        penalty=penalty,
        lam=0.0,
    )
    start = np.zeros(d) if init is None else np.asarray(init, dtype=np.float64)
    return solve_surrogate(problem, start, opts)
