"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line and enforcing its runtime budget.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the report
lines. Experiment-protocol choices (instances, per-round inner budgets,
proximal weights) are pinned in the shipped config files under
``configs/`` and mirrored here.
"""
import math
import os
import time

import numpy as np
import pytest

from bcsl.aggregation import coord_median, coord_trimmed_mean
from bcsl.core import Dataset, ShardAssignment, ByzantineMask
from bcsl.data import gen_logistic_dense
from bcsl.glm import GlmModel, Penalty, gradient, loss_value, penalty_value, prox_penalty
from bcsl.protocol import AlgoSpec, run
from bcsl.aggregation import AggRule
from bcsl.attacks import AttackSpec
from bcsl.solver import (
    SolverOptions,
    SurrogateProblem,
    centralized_minimizer,
    closed_form_ridge_update,
    solve_surrogate,
)
from bcsl.experiments import compare_suite, execute, load_config, parse_config
from bcsl.theory import TheoryParams, c_epsilon, delta_nm_alpha, delta_nm_beta

LOGISTIC = GlmModel("logistic")
LINEAR = GlmModel("linear")


def report(tag, ok, budget_s, elapsed, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"[ACCEPTANCE] {tag}: {status} ({elapsed:.1f}s / budget {budget_s}s) {detail}")
    assert ok, f"{tag} failed: {detail}"
    assert elapsed < budget_s, f"{tag} exceeded runtime budget: {elapsed:.1f}s"


def test_aggregation_oracle_equivalence():
    started = time.monotonic()
    rng = np.random.default_rng(12345)
    checked = 0
    for _ in range(10_000):
        m = int(rng.integers(1, 10))
        d = int(rng.integers(1, 5))
        V = rng.standard_normal((m, d)) * 10.0 ** float(rng.integers(-2, 3))
        if m >= 2 and rng.random() < 0.25:  # inject exact ties
            V[int(rng.integers(0, m))] = V[int(rng.integers(0, m))]
        beta = float(rng.uniform(0.0, 0.4999))
        k = math.floor(beta * m)
        med = coord_median(list(V))
        trm = coord_trimmed_mean(list(V), beta)
        for j in range(d):
            col = V[:, j].tolist()
            s = sorted(col)
            ref_med = s[m // 2] if m % 2 else (s[m // 2 - 1] + s[m // 2]) / 2.0
            vals = col if k == 0 else s[k : m - k]
            acc = 0.0
            for v in vals:
                acc += v
            ref_trm = acc / len(vals)
            assert med[j] == ref_med and trm[j] == ref_trm
        checked += 1
    report("aggregation-oracle-equivalence", checked == 10_000, 10,
           time.monotonic() - started, f"{checked} instances, exact equality")


def test_gradient_correctness():
    started = time.monotonic()
    rng = np.random.default_rng(777)
    h = 1e-6
    worst = 0.0
    for i in range(200):
        family = "logistic" if i % 2 == 0 else "linear"
        model = GlmModel(family)
        n, d = int(rng.integers(10, 40)), int(rng.integers(2, 8))
        X = rng.standard_normal((n, d))
        if family == "logistic":
            data = Dataset(X, (rng.random(n) < 0.5).astype(float), kind="binary")
        else:
            data = Dataset(X, rng.standard_normal(n), kind="continuous")
        theta = rng.standard_normal(d)
        g = gradient(model, theta, data)
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            fd = (loss_value(model, theta + e, data) - loss_value(model, theta - e, data)) / (2 * h)
            rel = abs(fd - g[j]) / max(abs(g[j]), 1e-8)
            worst = max(worst, rel)
    report("gradient-finite-difference", worst <= 1e-5, 10,
           time.monotonic() - started, f"200 instances, worst rel err {worst:.2e}")


def test_prox_correctness():
    started = time.monotonic()
    rng = np.random.default_rng(4242)
    # 1-D grid oracles for the two nontrivial penalties
    grid = np.arange(-4.0, 4.0, 1e-4)
    worst_gap = 0.0
    for _ in range(40):
        pen = Penalty("l1", float(rng.uniform(0.1, 2.0))) if rng.random() < 0.5 else \
            Penalty("l2sq", float(rng.uniform(0.1, 2.0)))
        step = float(rng.uniform(0.05, 2.0))
        v = float(rng.uniform(-2.0, 2.0))
        if pen.kind == "l1":
            obj = pen.gamma * np.abs(grid) + (grid - v) ** 2 / (2 * step)
        else:
            obj = 0.5 * pen.gamma * grid**2 + (grid - v) ** 2 / (2 * step)
        best = grid[int(np.argmin(obj))]
        got = prox_penalty(pen, np.array([v]), step)[0]
        worst_gap = max(worst_gap, abs(got - best))
    ok_grid = worst_gap <= 5e-4

    # firm non-expansiveness on 10,000 random pairs
    violations = 0
    for _ in range(10_000):
        kind = rng.choice(["l1", "l2sq", "none"])
        pen = Penalty(kind, float(rng.uniform(0.0, 2.0)) if kind != "none" else 0.0)
        step = float(rng.uniform(0.05, 2.0))
        u = rng.uniform(-5, 5, size=3)
        w = rng.uniform(-5, 5, size=3)
        pu = prox_penalty(pen, u, step)
        pw = prox_penalty(pen, w, step)
        gap = pu - pw
        if np.dot(gap, gap) > np.dot(u - w, gap) + 1e-12:
            violations += 1
    report("prox-oracles-and-firm-nonexpansiveness", ok_grid and violations == 0, 10,
           time.monotonic() - started,
           f"grid gap {worst_gap:.1e}, {violations} non-expansiveness violations")


def test_closed_form_consistency():
    started = time.monotonic()
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(2, 21))
        n = 3 * d
        X = rng.standard_normal((n, d))
        y = rng.standard_normal(n)
        data = Dataset(X, y, kind="continuous")
        lam = float(rng.uniform(0.05, 1.0))
        anchor = rng.standard_normal(d)
        h_t = rng.standard_normal(d)
        S = X.T @ X / n
        expected = closed_form_ridge_update(S, None, anchor, h_t, lam)
        problem = SurrogateProblem(
            model=LINEAR, data=data, shard=None,
            shift=gradient(LINEAR, anchor, data) - h_t,
            penalty=Penalty(), lam=lam, anchor=anchor,
        )
        lips = float(np.linalg.eigvalsh(S).max() + lam)
        theta, diag = solve_surrogate(
            problem, anchor, SolverOptions(tol=1e-12, max_iter=100000, fixed_step=1.0 / lips)
        )
        worst = max(worst, float(np.linalg.norm(theta - expected)))
    report("closed-form-consistency", worst <= 1e-8, 30,
           time.monotonic() - started, f"100 SPD instances, worst gap {worst:.2e}")


def test_csl_reduction():
    # Well-conditioned logistic instance (identity covariates, weak signal):
    # saturated spiked instances make the exact surrogate map non-contractive,
    # which would test conditioning rather than the fixed-point identity.
    started = time.monotonic()
    data, _ = gen_logistic_dense(2000, 10, seed=7, theta_norm=0.25, sigma_spec="identity")
    shards = ShardAssignment(shards=[np.arange(k * 200, (k + 1) * 200) for k in range(10)])
    theta_hat, _ = centralized_minimizer(
        LOGISTIC, Penalty(), data, SolverOptions(tol=1e-13, max_iter=200000)
    )
    algo = AlgoSpec(algorithm="bcsl", rule=AggRule("mean"), rounds=15)
    trace = run(
        algo, LOGISTIC, Penalty(), data, shards,
        ByzantineMask(frozenset(), 0.0), AttackSpec("constant", constant=0.0),
        seed=0, opts=SolverOptions(tol=1e-12, max_iter=50000), theta_hat=theta_hat,
    )
    final = trace.metric("err_hat")[-1]
    report("csl-reduction", final <= 1e-5, 60,
           time.monotonic() - started, f"||theta_T - theta_hat|| = {final:.2e} after 15 rounds")


@pytest.fixture(scope="module")
def dense_suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("dense")
    configs = [
        load_config(os.path.join("configs", "dense", name))
        for name in sorted(os.listdir(os.path.join("configs", "dense")))
    ]
    started = time.monotonic()
    summary = compare_suite(configs, out_dir=str(out))
    return summary, time.monotonic() - started, str(out)


def test_dense_benchmark_reproduction(dense_suite):
    summary, elapsed, _ = dense_suite
    series = {
        (s["algo"], s["rule"], s["init"]): s
        for s in summary["series"]
        if s["metric"] == "err_star"
    }
    baseline = np.mean([s["baseline"]["mean"] for s in series.values()])
    finals = {key: s["values"][-1] for key, s in series.items()}

    robust_keys = [(a, r, i) for a in ("bcsl", "bcslp") for r in ("median", "trimmed")
                   for i in ("zero", "local")]
    mean_keys = [(a, "mean", i) for a in ("bcsl", "bcslp") for i in ("zero", "local")]
    worst_robust = max(finals[k] for k in robust_keys)
    ok_robust = worst_robust <= 2.0 * baseline
    ok_mean = all(finals[k] >= 3.0 * worst_robust for k in mean_keys)

    # soft (non-fatal) stability comparison of the two algorithm families
    bcsl_p = np.mean([finals[("bcsl", r, i)] for r in ("median", "trimmed") for i in ("zero", "local")])
    bcslp_p = np.mean([finals[("bcslp", r, i)] for r in ("median", "trimmed") for i in ("zero", "local")])
    print(f"[ACCEPTANCE-soft] proximal-variant stability: bcslp plateau {bcslp_p:.3f} "
          f"vs bcsl {bcsl_p:.3f} ({'better' if bcslp_p <= bcsl_p else 'worse'}; non-fatal)")

    detail = (f"baseline {baseline:.3f}, worst robust {worst_robust:.3f} "
              f"({worst_robust / baseline:.2f}x), weakest mean-rule margin "
              f"{min(finals[k] / worst_robust for k in mean_keys):.2f}x")
    report("dense-benchmark", ok_robust and ok_mean, 600, elapsed, detail)


def test_sparse_benchmark_reproduction(tmp_path):
    # Support recovery is averaged over replicates: a signal draw can place
    # true coefficients below the l1 detection floor (the >= 8 of 10
    # allowance exists for exactly those), so the per-replicate count is a
    # random variable whose mean the criterion pins.
    started = time.monotonic()
    from bcsl.experiments import build_replicate_refs, run_replicate

    configs = [
        load_config(os.path.join("configs", "sparse", name))
        for name in sorted(os.listdir(os.path.join("configs", "sparse")))
    ]
    cache: dict = {}
    execute(configs[0], out_dir=str(tmp_path), refs_cache=cache)  # exercises the CSV/JSON path
    # variant configs share data/penalty/seed, so the cached refs apply to all
    refs_by_replicate = dict(enumerate(cache.values()))
    ok_mono, ok_support = True, True
    details = []
    for config in configs:
        hit_counts = []
        curves = []
        for r in range(config.replicates):
            refs = refs_by_replicate[r]
            trace = run_replicate(config, refs, r)
            curves.append(trace.metric("err_star"))
            theta_T = trace.final_theta
            support_true = np.flatnonzero(refs.theta_star)
            hit_counts.append(
                int(np.sum(np.abs(theta_T[support_true]) > 0.1 * np.abs(theta_T).max()))
            )
        curve = np.mean(curves, axis=0)
        mono = all(curve[t + 1] <= curve[t] + 1e-9 for t in range(2, len(curve) - 1))
        ok_mono &= mono
        ok_support &= float(np.mean(hit_counts)) >= 8.0
        details.append(f"{config.run_id}: mono={mono} support={hit_counts}")
    report("sparse-benchmark", ok_mono and ok_support, 1200,
           time.monotonic() - started, "; ".join(details))


def test_byzantine_price_scaling():
    started = time.monotonic()
    central = SolverOptions(tol=1e-10, max_iter=20000)
    opts = SolverOptions(tol=1e-9, max_iter=500)

    def plateau(alpha, m, n=300, reps=3, seed0=500):
        from bcsl.data import split_and_shard

        vals = []
        for r in range(reps):
            b = seed0 + r
            data, _ = gen_logistic_dense((m + 1) * n, 10, seed=b,
                                         theta_norm=1.5, sigma_spec="identity")
            shards, _, _ = split_and_shard(
                data, 0, m, n, seed=np.random.SeedSequence(entropy=b, spawn_key=(0, 1))
            )
            mask = ByzantineMask.sample(
                alpha, m, np.random.default_rng(np.random.SeedSequence(entropy=b, spawn_key=(0, 2)))
            )
            theta_hat, _ = centralized_minimizer(LOGISTIC, Penalty(), data, central)
            algo = AlgoSpec(algorithm="bcsl", rule=AggRule("median"), rounds=12)
            trace = run(algo, LOGISTIC, Penalty(), data, shards, mask,
                        AttackSpec("sign_flip", scale=3.0), seed=b, opts=opts,
                        theta_hat=theta_hat)
            vals.append(float(np.mean(trace.metric("err_hat")[-3:])))
        return float(np.mean(vals))

    alpha_curve = [plateau(a, 20) for a in (0.0, 0.1, 0.2)]
    m_curve = [plateau(0.0, m) for m in (10, 20, 40)]
    ok = (alpha_curve[0] <= alpha_curve[1] <= alpha_curve[2]
          and m_curve[0] >= m_curve[1] >= m_curve[2])
    report("byzantine-price-scaling", ok, 900, time.monotonic() - started,
           f"alpha curve {[round(v, 4) for v in alpha_curve]}, "
           f"m curve {[round(v, 4) for v in m_curve]}")


def test_theory_bounds():
    started = time.monotonic()
    ok_c = 3.9 <= c_epsilon(1 / 6) <= 4.1
    params = TheoryParams(epsilon=1 / 6)
    alpha_vals = [delta_nm_alpha(900, 20, a, params, 100).value for a in (0.0, 0.1, 0.2, 0.3)]
    n_vals = [delta_nm_alpha(n, 20, 0.1, params, 100).value for n in (200, 400, 800, 1600)]
    m_vals = [delta_nm_alpha(900, m, 0.1, params, 100).value for m in (10, 20, 40, 80)]
    beta_vals = [delta_nm_beta(450, 40, b, params, 100).value for b in (0.0, 0.1, 0.2, 0.3)]
    eps_vals = [c_epsilon(e) for e in np.linspace(0.05, 0.45, 9)]
    ok_mono = (
        all(x < y for x, y in zip(alpha_vals, alpha_vals[1:]))
        and all(x > y for x, y in zip(n_vals, n_vals[1:]))
        and all(x > y for x, y in zip(m_vals, m_vals[1:]))
        and all(x < y for x, y in zip(beta_vals, beta_vals[1:]))
        and all(x > y for x, y in zip(eps_vals, eps_vals[1:]))
    )
    report("theory-bounds", ok_c and ok_mono, 1, time.monotonic() - started,
           f"c_eps(1/6) = {c_epsilon(1 / 6):.4f}")


SPAMBASE_PATHS = [
    os.environ.get("SPAMBASE_CSV", ""),
    os.path.join("data", "spambase", "spambase.data"),
    os.path.join("data", "spambase.data"),
]


def _spambase_path():
    for p in SPAMBASE_PATHS:
        if p and os.path.exists(p):
            return p
    return None


@pytest.mark.skipif(_spambase_path() is None,
                    reason="spambase file not present (set SPAMBASE_CSV or data/spambase/)")
def test_spambase_real_data(tmp_path):
    started = time.monotonic()
    path = _spambase_path()
    base = {
        "seed": 99,
        "replicates": 3,
        "output_dir": str(tmp_path),
        "data": {"kind": "csv", "path": path, "label_column": -1, "delimiter": ",",
                 "header": False, "standardize": True, "test_size": 1000},
        "topology": {"n": 180, "m": 20},
        "alpha": 0.2,
        "attack": {"kind": "sign_flip", "scale": 3.0},
        "penalty": {"kind": "l2sq", "gamma": 0.001},
        "solver": {"tol": 1e-8, "max_iter": 100},
        "centralized_solver": {"tol": 1e-9, "max_iter": 20000},
    }
    finals = {}
    baselines = []
    for rule in ("median", "trimmed", "mean"):
        raw = dict(base)
        raw["run_id"] = f"spam-{rule}"
        raw["algo"] = {"algorithm": "bcsl", "rule": rule, "rounds": 10, "init": "zero",
                       "beta": 0.2 if rule == "trimmed" else 0.0}
        config = parse_config(raw)
        execute(config, out_dir=str(tmp_path))
        import json

        with open(os.path.join(str(tmp_path), f"spam-{rule}_summary.json")) as fh:
            summary = json.load(fh)
        finals[rule] = summary["per_t"][-1]["test_error"]["mean"]
        baselines.append(summary["baseline"]["test_error"]["mean"])
    baseline = float(np.mean(baselines))
    robust_ok = all(finals[r] <= baseline + 0.03 for r in ("median", "trimmed"))
    mean_ok = finals["mean"] >= max(finals["median"], finals["trimmed"]) + 0.05
    report("spambase", robust_ok and mean_ok, 300, time.monotonic() - started,
           f"baseline {baseline:.3f}, median {finals['median']:.3f}, "
           f"trimmed {finals['trimmed']:.3f}, mean {finals['mean']:.3f}")
