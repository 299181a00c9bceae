"""The outer distributed loop: broadcast, gradient collection, robust
aggregation, and the master's surrogate solve.

One round simulates one broadcast plus m worker reports (communication
cost O(m*p)). Honest workers report their shard gradient at the current
iterate; corrupted workers report whatever their attack produces. The
master sanitizes the reports, aggregates them coordinate-wise, and solves
the shifted local objective, with an optional proximal term anchored at
the current iterate.

By default the master's own shard gradient joins the aggregate as the
first entry, which makes the mean rule reproduce the plain
surrogate-likelihood iteration exactly (its fixed point is the full-data
minimizer). Set ``include_master_gradient=False`` to aggregate over the m
worker reports only.

Determinism: every corrupted worker owns a counter-based Philox stream
derived from the run seed and its worker id, and reports are aggregated
in worker-id order, so results are independent of any parallel schedule.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .aggregation import AggRule, aggregate
from .attacks import AttackSpec, corrupt, sanitize_report
from .core import Dataset, ByzantineMask, GradientReport, ShardAssignment, l2_norm
from .glm import GlmModel, Penalty, gradient
from .solver import SolveDiagnostics, SolverOptions, SurrogateProblem, solve_surrogate

ALGORITHMS = ("bcsl", "bcslp")
INITS = ("zero", "local")


@dataclass(frozen=True)
class AlgoSpec:
    """Which outer algorithm to run and how.

    ``bcsl`` is the plain robust surrogate iteration (``lam`` forced to 0);
    ``bcslp`` adds the proximal term and requires ``lam > 0``. ``init``
    selects the starting point: the zero vector, or the master's own
    regularized local fit ("local").
    """

    algorithm: str = "bcsl"
    rule: AggRule = field(default_factory=AggRule)
    lam: float = 0.0
    rounds: int = 10
    init: str = "zero"
    include_master_gradient: bool = True

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.algorithm == "bcsl" and self.lam != 0.0:
            raise ValueError("bcsl runs with lam = 0; use bcslp for lam > 0")
        if self.algorithm == "bcslp" and self.lam <= 0.0:
            raise ValueError("bcslp requires lam > 0")
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if self.init not in INITS:
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class TraceRecord:
    t: int
    theta: np.ndarray
    err_star: float = np.nan
    err_hat: float = np.nan
    test_error: float = np.nan
    inner_iters: int = 0
    elapsed_ms: float = 0.0
    inner_converged: bool = True
    nonunique: bool = False


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)
    aborted: bool = False
    abort_reason: str = ""

    def __len__(self) -> int:
        return len(self.records)

    def metric(self, name: str) -> np.ndarray:
        return np.asarray([getattr(r, name) for r in self.records], dtype=np.float64)

    @property
    def thetas(self) -> list:
        return [r.theta for r in self.records]

    @property
    def final_theta(self) -> np.ndarray:
        return self.records[-1].theta


@dataclass
class RoundResult:
    theta_next: np.ndarray
    aggregate: np.ndarray
    reports: list
    diagnostics: SolveDiagnostics


def worker_streams(seed: int, worker_ids) -> dict:
    """Independent Philox streams keyed by worker id, derived from ``seed``.

    The (1, k) spawn keys namespace worker streams away from any other
    streams a harness derives from the same seed.
    """
    return {
        k: np.random.Generator(
            np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(1, k)))
        )
        for k in worker_ids
    }


def collect_reports(
    theta_t: np.ndarray,
    model: GlmModel,
    data: Dataset,
    shards: ShardAssignment,
    mask: ByzantineMask,
    attack: AttackSpec,
    streams: dict,
) -> list:
    """One round of worker messages, sanitized, in worker-id order."""
    honest = {
        k: gradient(model, theta_t, data, shards.shard_of(k))
        for k in shards.worker_ids()
    }
    honest_ids = [k for k in shards.worker_ids() if not mask.is_corrupted(k)]
    honest_mean = np.mean([honest[k] for k in honest_ids], axis=0)
    reports = []
    for k in shards.worker_ids():
        if mask.is_corrupted(k):
            sent = corrupt(attack, honest[k], honest_mean, streams[k])
        else:
            sent = honest[k]
        reports.append(
            GradientReport(
                worker_id=k,
                vector=sanitize_report(sent),
                honest=not mask.is_corrupted(k),
            )
        )
    return reports


def master_update(
    theta_t: np.ndarray,
    h_t: np.ndarray,
    model: GlmModel,
    penalty: Penalty,
    data: Dataset,
    master_shard: np.ndarray,
    lam: float,
    opts: SolverOptions,
) -> tuple[np.ndarray, SolveDiagnostics]:
    """Solve the shifted local objective given the aggregate gradient."""
    grad1 = gradient(model, theta_t, data, master_shard)
    problem = SurrogateProblem(
        model=model,
        data=data,
        shard=master_shard,
        shift=grad1 - h_t,
        penalty=penalty,
        lam=lam,
        anchor=theta_t if lam > 0 else None,
    )
    return solve_surrogate(problem, theta_t, opts)


def one_round(
    theta_t: np.ndarray,
    model: GlmModel,
    penalty: Penalty,
    data: Dataset,
    shards: ShardAssignment,
    mask: ByzantineMask,
    attack: AttackSpec,
    rule: AggRule,
    lam: float,
    opts: SolverOptions,
    streams: dict,
    include_master_gradient: bool = True,
) -> RoundResult:
    """Single iteration of the outer loop, exposed for step-by-step tests."""
    reports = collect_reports(theta_t, model, data, shards, mask, attack, streams)
    vectors = [r.vector for r in reports]
    if include_master_gradient:
        vectors = [gradient(model, theta_t, data, shards.shard_of(1))] + vectors
    h_t = aggregate(rule, vectors)
    theta_next, diag = master_update(
        theta_t, h_t, model, penalty, data, shards.shard_of(1), lam, opts
    )
    return RoundResult(theta_next=theta_next, aggregate=h_t, reports=reports, diagnostics=diag)


def _test_error(theta: np.ndarray, test_data: Dataset | None) -> float:
    if test_data is None:
        return np.nan
    scores = test_data.features @ theta
    if test_data.kind == "binary":
        predicted = (scores > 0).astype(np.float64)
        return float(np.mean(predicted != test_data.labels))
    return np.nan


def local_init(
    model: GlmModel,
    penalty: Penalty,
    data: Dataset,
    master_shard: np.ndarray,
    opts: SolverOptions,
) -> np.ndarray:
    """The master's own regularized fit, used as the "good" starting point."""
    d = data.dim
    problem = SurrogateProblem(
        model=model,
        data=data,
        shard=master_shard,
        shift=np.zeros(d),
        penalty=penalty,
        lam=0.0,
    )
    theta, _ = solve_surrogate(problem, np.zeros(d), opts)
    return theta


def run(
    algo: AlgoSpec,
    model: GlmModel,
    penalty: Penalty,
    data: Dataset,
    shards: ShardAssignment,
    mask: ByzantineMask,
    attack: AttackSpec,
    seed: int,
    opts: SolverOptions | None = None,
    theta_star: np.ndarray | None = None,
    theta_hat: np.ndarray | None = None,
    test_data: Dataset | None = None,
) -> IterationTrace:
    """Execute the full outer loop and record a per-round trace.

    ``theta_star``/``theta_hat`` are optional references for the error
    metrics; the trace stores NaN where a reference is missing. The trace
    has ``rounds + 1`` records (it includes the starting point). On an
    inner-solve divergence the partial trace is returned with the abort
    flag set.
    """
    opts = opts or SolverOptions()
    mask.validate_for(shards.n_workers)
    n_agg = shards.n_workers + (1 if algo.include_master_gradient else 0)
    algo.rule.validate_for(n_agg)
    if mask.alpha > 0 and len(mask.corrupted) > shards.n_workers / 2:
        import warnings

        warnings.warn("more than half the workers are corrupted; no rule can help")

    streams = worker_streams(seed, shards.worker_ids())
    if algo.init == "zero":
        theta = np.zeros(data.dim)
    else:
        theta = local_init(model, penalty, data, shards.shard_of(1), opts)

    def record(t: int, th: np.ndarray, diag: SolveDiagnostics | None, ms: float) -> TraceRecord:
        return TraceRecord(
            t=t,
            theta=th,
            err_star=l2_norm(th - theta_star) if theta_star is not None else np.nan,
            err_hat=l2_norm(th - theta_hat) if theta_hat is not None else np.nan,
            test_error=_test_error(th, test_data),
            inner_iters=diag.iterations if diag is not None else 0,
            elapsed_ms=ms,
            inner_converged=diag.converged if diag is not None else True,
            nonunique=diag.nonunique if diag is not None else False,
        )

    trace = IterationTrace()
    trace.records.append(record(0, theta, None, 0.0))
    from .solver import DivergentSolveError

    for t in range(algo.rounds):
        started = time.perf_counter()
        try:
            result = one_round(
                theta,
                model,
                penalty,
                data,
                shards,
                mask,
                attack,
                algo.rule,
                algo.lam,
                opts,
                streams,
                algo.include_master_gradient,
            )
        except DivergentSolveError as exc:
            trace.aborted = True
            trace.abort_reason = str(exc)
            return trace
        elapsed_ms = (time.perf_counter() - started) * 1e3
        theta = result.theta_next
        trace.records.append(record(t + 1, theta, result.diagnostics, elapsed_ms))
    return trace
