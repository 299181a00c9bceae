"""Experiment harness: JSON run configurations, replicated executions,
metrics CSV, and summary statistics.

File formats (stable interfaces, consumed by external tooling):

  * metrics CSV, one row per (replicate, round), header
    ``run_id,replicate,algo,rule,t,err_star,err_hat,test_error,inner_iters,elapsed_ms``
    with missing metrics emitted as empty cells;
  * summary JSON with per-round mean/std of each metric plus the
    centralized baseline ("Best-line") values.

Requested topologies keep their (n, m) labels even when the dataset
cannot feed m+1 shards of size n plus the test split; the effective shard
size is clipped, logged, and recorded in the summary.
"""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from .aggregation import AggRule
from .attacks import AttackSpec
from .core import ByzantineMask, Dataset, ShardAssignment, l2_norm
from .data import CsvSchema, SyntheticSpec, clipped_shard_size, generate, load_csv, split_and_shard
from .glm import GlmModel, Penalty
from .protocol import ALGORITHMS, INITS, AlgoSpec, IterationTrace, run
from .solver import SolverOptions, centralized_minimizer
from .theory import suggest_lambda

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "run_id",
    "replicate",
    "algo",
    "rule",
    "t",
    "err_star",
    "err_hat",
    "test_error",
    "inner_iters",
    "elapsed_ms",
)

GAMMA_RULES = ("fixed", "auto_sparse")


class ConfigError(ValueError):
    """Config validation failure with the offending field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class RunAbort(RuntimeError):
    """A run diverged or failed after validation."""


@dataclass(frozen=True)
class RunConfig:
    run_id: str
    data: object  # SyntheticSpec | CsvSchema
    n: int
    m: int
    alpha: float
    algo: AlgoSpec
    attack: AttackSpec
    penalty: Penalty
    gamma_rule: str = "fixed"
    test_size: int = 0
    replicates: int = 1
    seed: int = 0
    output_dir: str = "out"
    solver: SolverOptions = field(default_factory=SolverOptions)
    # The reference fit uses its own (tight) budget: per-round budgets are an
    # experiment knob, but the baseline must stay a true minimizer.
    centralized_solver: SolverOptions = field(
        default_factory=lambda: SolverOptions(tol=1e-9, max_iter=20000)
    )


def _expect(d: dict, key, fieldname, typ, default=None, required=False):
    if key not in d:
        if required:
            raise ConfigError(fieldname, "missing required field")
        return default
    val = d[key]
    if typ is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, typ) or isinstance(val, bool) and typ is not bool:
        raise ConfigError(fieldname, f"expected {typ.__name__}, got {type(val).__name__}")
    return val


def _parse_data(d: dict) -> object:
    kind = _expect(d, "kind", "data.kind", str, required=True)
    if kind == "synthetic":
        try:
            return SyntheticSpec(
                scenario=_expect(d, "scenario", "data.scenario", str, required=True),
                N=_expect(d, "N", "data.N", int, required=True),
                p=_expect(d, "p", "data.p", int, required=True),
                theta_norm=_expect(d, "theta_norm", "data.theta_norm", float, 3.0),
                sigma_spec=_expect(d, "sigma_spec", "data.sigma_spec", str, "spiked_diag"),
                noise_std=_expect(d, "noise_std", "data.noise_std", float, 1.0),
            )
        except ValueError as exc:
            raise ConfigError("data", str(exc)) from exc
    if kind == "csv":
        return CsvSchema(
            path=_expect(d, "path", "data.path", str, required=True),
            label_column=_expect(d, "label_column", "data.label_column", int, -1),
            delimiter=_expect(d, "delimiter", "data.delimiter", str, ","),
            header=_expect(d, "header", "data.header", bool, False),
            standardize=_expect(d, "standardize", "data.standardize", bool, True),
        )
    raise ConfigError("data.kind", f"unknown data kind {kind!r}")


def parse_config(raw: dict, source: str = "<config>") -> RunConfig:
    """Validate a raw JSON dict into a :class:`RunConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    run_id = _expect(raw, "run_id", "run_id", str, default=os.path.basename(source))

    data = _parse_data(_expect(raw, "data", "data", dict, required=True))

    topo = _expect(raw, "topology", "topology", dict, required=True)
    n = _expect(topo, "n", "topology.n", int, required=True)
    m = _expect(topo, "m", "topology.m", int, required=True)
    if n < 1 or m < 1:
        raise ConfigError("topology", "n and m must be positive")

    alpha = _expect(raw, "alpha", "alpha", float, 0.0)
    if not 0.0 <= alpha < 0.5:
        raise ConfigError("alpha", f"must be in [0, 1/2), got {alpha}")

    algo_d = _expect(raw, "algo", "algo", dict, required=True)
    algorithm = _expect(algo_d, "algorithm", "algo.algorithm", str, required=True)
    if algorithm not in ALGORITHMS:
        raise ConfigError("algo.algorithm", f"expected one of {ALGORITHMS}, got {algorithm!r}")
    rule_kind = _expect(algo_d, "rule", "algo.rule", str, "median")
    beta = _expect(algo_d, "beta", "algo.beta", float, 0.0)
    lam = algo_d.get("lambda")
    if lam is not None:
        lam = _expect(algo_d, "lambda", "algo.lambda", float)
    rounds = _expect(algo_d, "rounds", "algo.rounds", int, 10)
    init = _expect(algo_d, "init", "algo.init", str, "zero")
    if init not in INITS:
        raise ConfigError("algo.init", f"expected one of {INITS}, got {init!r}")
    include_master = _expect(
        algo_d, "include_master_gradient", "algo.include_master_gradient", bool, True
    )

    penalty_d = _expect(raw, "penalty", "penalty", dict, default={})
    gamma_rule = _expect(penalty_d, "gamma_rule", "penalty.gamma_rule", str, "fixed")
    if gamma_rule not in GAMMA_RULES:
        raise ConfigError("penalty.gamma_rule", f"expected one of {GAMMA_RULES}")
    try:
        penalty = Penalty(
            kind=_expect(penalty_d, "kind", "penalty.kind", str, "none"),
            gamma=_expect(penalty_d, "gamma", "penalty.gamma", float, 0.0),
        )
    except ValueError as exc:
        raise ConfigError("penalty", str(exc)) from exc

    attack_d = _expect(raw, "attack", "attack", dict, default={})
    try:
        attack = AttackSpec(
            kind=_expect(attack_d, "kind", "attack.kind", str, "sign_flip"),
            sigma=_expect(attack_d, "sigma", "attack.sigma", float, 0.0),
            scale=_expect(attack_d, "scale", "attack.scale", float, 3.0),
            constant=_expect(attack_d, "constant", "attack.constant", float, 0.0),
        )
    except ValueError as exc:
        raise ConfigError("attack", str(exc)) from exc

    solver_d = _expect(raw, "solver", "solver", dict, default={})
    try:
        solver = SolverOptions(
            tol=_expect(solver_d, "tol", "solver.tol", float, 1e-8),
            max_iter=_expect(solver_d, "max_iter", "solver.max_iter", int, 500),
        )
    except ValueError as exc:
        raise ConfigError("solver", str(exc)) from exc
    central_d = _expect(raw, "centralized_solver", "centralized_solver", dict, default={})
    try:
        centralized_solver = SolverOptions(
            tol=_expect(central_d, "tol", "centralized_solver.tol", float, 1e-9),
            max_iter=_expect(central_d, "max_iter", "centralized_solver.max_iter", int, 20000),
        )
    except ValueError as exc:
        raise ConfigError("centralized_solver", str(exc)) from exc

    replicates = _expect(raw, "replicates", "replicates", int, 1)
    if replicates < 1:
        raise ConfigError("replicates", "must be >= 1")
    seed = _expect(raw, "seed", "seed", int, 0)
    output_dir = _expect(raw, "output_dir", "output_dir", str, "out")
    test_size = _expect(raw, "test_size", "test_size", int, 0)
    if isinstance(data, CsvSchema):
        data_dict = raw["data"]
        test_size = _expect(data_dict, "test_size", "data.test_size", int, test_size)
    if test_size < 0:
        raise ConfigError("test_size", "must be >= 0")

    # Resolve the penalty weight and the proximal weight now so the run is
    # fully pinned before any data is touched.
    dim_p = data.p if isinstance(data, SyntheticSpec) else None
    total_n = data.N if isinstance(data, SyntheticSpec) else None
    if gamma_rule == "auto_sparse":
        if penalty.kind != "l1":
            raise ConfigError("penalty.gamma_rule", "auto_sparse applies to the l1 penalty")
        if dim_p is None or total_n is None:
            raise ConfigError("penalty.gamma_rule", "auto_sparse needs synthetic dimensions")
        penalty = Penalty(kind="l1", gamma=0.2 * math.sqrt(math.log(dim_p) / total_n))
    if lam is None:
        if algorithm == "bcslp":
            lam = suggest_lambda("linear_pn", p=(dim_p or n), n=n)
        else:
            lam = 0.0
    try:
        algo = AlgoSpec(
            algorithm=algorithm,
            rule=AggRule(kind=rule_kind, beta=beta if rule_kind == "trimmed" else 0.0),
            lam=lam,
            rounds=rounds,
            init=init,
            include_master_gradient=include_master,
        )
    except ValueError as exc:
        raise ConfigError("algo", str(exc)) from exc

    return RunConfig(
        run_id=run_id,
        data=data,
        n=n,
        m=m,
        alpha=alpha,
        algo=algo,
        attack=attack,
        penalty=penalty,
        gamma_rule=gamma_rule,
        test_size=test_size,
        replicates=replicates,
        seed=seed,
        output_dir=output_dir,
        solver=solver,
        centralized_solver=centralized_solver,
    )


def load_config(path: str) -> RunConfig:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<json>", f"invalid JSON in {path}: {exc}") from exc
    return parse_config(raw, source=path)


@dataclass
class ReplicateRefs:
    """Everything one replicate shares across algorithm variants."""

    data: Dataset
    shards: ShardAssignment
    test: Dataset | None
    mask: ByzantineMask
    theta_star: np.ndarray | None
    theta_hat: np.ndarray
    effective_n: int

    def baseline_err_star(self) -> float:
        if self.theta_star is None:
            return np.nan
        return l2_norm(self.theta_hat - self.theta_star)

    def baseline_test_error(self) -> float:
        if self.test is None:
            return np.nan
        predicted = (self.test.features @ self.theta_hat > 0).astype(np.float64)
        return float(np.mean(predicted != self.test.labels))


def _model_for(config: RunConfig) -> GlmModel:
    if isinstance(config.data, SyntheticSpec) and config.data.scenario == "linear":
        return GlmModel(family="linear")
    return GlmModel(family="logistic")


def _refs_cache_key(config: RunConfig, replicate: int) -> tuple:
    return (
        repr(config.data),
        config.n,
        config.m,
        config.alpha,
        config.test_size,
        repr(config.penalty),
        repr(config.centralized_solver),
        config.seed,
        replicate,
    )


def build_replicate_refs(config: RunConfig, replicate: int) -> ReplicateRefs:
    """Generate data, split/shard it, draw the corrupted set, and fit the
    centralized reference for one replicate."""
    base = config.seed + replicate
    if isinstance(config.data, SyntheticSpec):
        dataset, theta_star = generate(replace(config.data, seed=base))
    else:
        dataset = load_csv(config.data)
        theta_star = None
    n_eff = clipped_shard_size(dataset, config.test_size, config.m, config.n)
    shard_seed = np.random.SeedSequence(entropy=base, spawn_key=(0, 1))
    shards, test, _ = split_and_shard(
        dataset, config.test_size, config.m, n_eff, seed=shard_seed
    )
    mask_rng = np.random.default_rng(np.random.SeedSequence(entropy=base, spawn_key=(0, 2)))
    mask = ByzantineMask.sample(config.alpha, config.m, mask_rng)
    # The reference minimizer lives on the data the machines actually hold.
    allocated = np.concatenate(shards.shards)
    train = dataset.subset(allocated)
    theta_hat, diag = centralized_minimizer(
        _model_for(config), config.penalty, train, config.centralized_solver
    )
    if not diag.converged:
        logger.warning(
            "centralized reference for %s replicate %d stopped at residual %.3e",
            config.run_id,
            replicate,
            diag.residual,
        )
    return ReplicateRefs(
        data=dataset,
        shards=shards,
        test=test,
        mask=mask,
        theta_star=theta_star,
        theta_hat=theta_hat,
        effective_n=n_eff,
    )


def run_replicate(config: RunConfig, refs: ReplicateRefs, replicate: int) -> IterationTrace:
    base = config.seed + replicate
    return run(
        config.algo,
        _model_for(config),
        config.penalty,
        refs.data,
        refs.shards,
        refs.mask,
        config.attack,
        seed=base,
        opts=config.solver,
        theta_star=refs.theta_star,
        theta_hat=refs.theta_hat,
        test_data=refs.test,
    )


def _cell(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _rows_for_trace(config: RunConfig, replicate: int, trace: IterationTrace) -> list:
    rows = []
    rule_label = config.algo.rule.kind
    for rec in trace.records:
        rows.append(
            [
                config.run_id,
                replicate,
                config.algo.algorithm,
                rule_label,
                rec.t,
                _cell(rec.err_star),
                _cell(rec.err_hat),
                _cell(rec.test_error),
                rec.inner_iters,
                f"{rec.elapsed_ms:.3f}",
            ]
        )
    return rows


def _stat(values: list) -> dict | None:
    arr = np.asarray([v for v in values if not math.isnan(v)], dtype=np.float64)
    if arr.size == 0:
        return None
    mean = float(np.mean(arr))
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return {"mean": mean, "std": std}


def summarize(config: RunConfig, traces: list, refs_list: list) -> dict:
    per_t = []
    # Aborted replicates leave short traces; summarize the common prefix.
    rounds = min(len(tr) for tr in traces) - 1
    for t in range(rounds + 1):
        entry: dict = {"t": t}
        for name in ("err_star", "err_hat", "test_error"):
            entry[name] = _stat([getattr(tr.records[t], name) for tr in traces])
        entry["inner_iters"] = _stat(
            [float(tr.records[t].inner_iters) for tr in traces]
        )
        per_t.append(entry)
    baseline = {
        "err_star": _stat([r.baseline_err_star() for r in refs_list]),
        "test_error": _stat([r.baseline_test_error() for r in refs_list]),
    }
    return {
        "run_id": config.run_id,
        "algo": config.algo.algorithm,
        "rule": config.algo.rule.kind,
        "init": config.algo.init,
        "lambda": config.algo.lam,
        "topology": {"n": config.n, "m": config.m},
        "effective_n": refs_list[0].effective_n,
        "alpha": config.alpha,
        "rounds": rounds,
        "replicates": config.replicates,
        "per_t": per_t,
        "baseline": baseline,
    }


def execute(
    config: RunConfig,
    threads: int = 1,
    out_dir: str | None = None,
    refs_cache: dict | None = None,
) -> str:
    """Run all replicates of one config; returns the metrics CSV path.

    ``refs_cache`` lets a suite share per-replicate data and centralized
    fits across variant configs that agree on data, seed, and penalty.
    """
    out = out_dir or config.output_dir
    os.makedirs(out, exist_ok=True)
    metrics_path = os.path.join(out, f"{config.run_id}_metrics.csv")
    summary_path = os.path.join(out, f"{config.run_id}_summary.json")

    refs_list = []
    for r in range(config.replicates):
        key = _refs_cache_key(config, r)
        if refs_cache is not None and key in refs_cache:
            refs_list.append(refs_cache[key])
            continue
        refs = build_replicate_refs(config, r)
        if refs_cache is not None:
            refs_cache[key] = refs
        refs_list.append(refs)

    if threads > 1:
        traces = Parallel(n_jobs=threads)(
            delayed(run_replicate)(config, refs_list[r], r) for r in range(config.replicates)
        )
    else:
        traces = [run_replicate(config, refs_list[r], r) for r in range(config.replicates)]

    rows = []
    for r, trace in enumerate(traces):
        rows.extend(_rows_for_trace(config, r, trace))
    with open(metrics_path, "w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(str(c) for c in row) + "\n")

    with open(summary_path, "w") as fh:
        json.dump(summarize(config, traces, refs_list), fh, indent=2, sort_keys=True)
        fh.write("\n")

    aborted = [i for i, tr in enumerate(traces) if tr.aborted]
    if aborted:
        raise RunAbort(
            f"{config.run_id}: inner solve diverged in replicates {aborted}; "
            f"partial results flushed to {metrics_path}"
        )
    return metrics_path


def compare_suite(configs: list, threads: int = 1, out_dir: str | None = None) -> dict:
    """Execute a batch of variant configs and align their mean curves.

    Configs must share the data seed and the number of rounds; each
    (algorithm, rule) pair becomes one curve series per topology.
    """
    if not configs:
        raise ValueError("empty config list")
    seeds = {c.seed for c in configs}
    if len(seeds) != 1:
        raise ValueError(f"configs must share the data seed, got {sorted(seeds)}")
    rounds = {c.algo.rounds for c in configs}
    if len(rounds) != 1:
        raise ValueError(f"configs must share the number of rounds, got {sorted(rounds)}")

    cache: dict = {}
    series = []
    for config in configs:
        execute(config, threads=threads, out_dir=out_dir, refs_cache=cache)
        summary_path = os.path.join(out_dir or config.output_dir, f"{config.run_id}_summary.json")
        with open(summary_path) as fh:
            summary = json.load(fh)
        for metric in ("err_star", "err_hat", "test_error"):
            values = [
                (entry[metric]["mean"] if entry[metric] else None)
                for entry in summary["per_t"]
            ]
            if all(v is None for v in values):
                continue
            series.append(
                {
                    "run_id": summary["run_id"],
                    "algo": summary["algo"],
                    "rule": summary["rule"],
                    "init": summary["init"],
                    "n": summary["topology"]["n"],
                    "m": summary["topology"]["m"],
                    "metric": metric,
                    "values": values,
                    "baseline": summary["baseline"].get(metric),
                }
            )
    return {"rounds": rounds.pop(), "series": series}
