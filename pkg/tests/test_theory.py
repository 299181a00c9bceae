import math

import numpy as np
import pytest

from bcsl.core import ShardAssignment
from bcsl.data import gen_logistic_dense
from bcsl.glm import GlmModel
from bcsl.theory import (
    TheoryParams,
    c_epsilon,
    delta_nm_alpha,
    delta_nm_beta,
    estimate_theory_params,
    suggest_lambda,
)

UNIT_PARAMS = TheoryParams(V=1.0, S=1.0, upsilon=1.0, L_tilde=1.0, D=10.0, epsilon=1 / 6)


def bisect_inverse_normal_cdf(q, lo=-10.0, hi=10.0, iters=200):
    """Independent oracle: bisection on the normal CDF via erf."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if 0.5 * (1.0 + math.erf(mid / math.sqrt(2.0))) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestCEpsilon:
    def test_reference_value_at_one_sixth(self):
        # frozen from a 40-digit evaluation
        assert c_epsilon(1 / 6) == pytest.approx(4.002386373020493, abs=1e-9)
        assert 3.9 <= c_epsilon(1 / 6) <= 4.1

    def test_limit_at_one_half(self):
        assert c_epsilon(0.4999999) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-5)

    def test_matches_bisection_oracle(self):
        for eps in (0.1, 0.25, 0.4):
            z = bisect_inverse_normal_cdf(1.0 - eps)
            expected = math.sqrt(2 * math.pi) * math.exp(0.5 * z * z)
            assert c_epsilon(eps) == pytest.approx(expected, rel=1e-6)

    def test_monotone_decreasing(self):
        grid = np.linspace(0.01, 0.49, 25)
        vals = [c_epsilon(e) for e in grid]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("eps", [0.0, 0.5, -0.1, 0.7])
    def test_domain(self, eps):
        with pytest.raises(ValueError):
            c_epsilon(eps)


class TestDeltaNmAlpha:
    def test_frozen_regression_value(self):
        # independently evaluated at 40 digits for these inputs
        rep = delta_nm_alpha(900, 20, 0.2, UNIT_PARAMS, 100)
        assert rep.value == pytest.approx(1.6849852560647445, rel=1e-12)
        assert rep.feasibility_lhs == pytest.approx(8.929862609125058, rel=1e-12)
        assert not rep.feasible  # this configuration violates the alpha condition

    def test_term_dropout_at_alpha_zero_s_zero(self):
        params = TheoryParams(V=1.0, S=0.0, L_tilde=1.0, D=10.0, epsilon=1 / 6)
        n, m, p = 400, 50, 10
        rep = delta_nm_alpha(n, m, 0.0, params, p)
        logterm = math.log(1 + n * (m + 1) * 1.0 * 10.0)
        expected = 2 * math.sqrt(2) / ((m + 1) * n) + math.sqrt(2) * c_epsilon(
            1 / 6
        ) / math.sqrt(n) * math.sqrt(p * logterm / m)
        assert rep.value == pytest.approx(expected, rel=1e-12)

    def test_doubling_n_decreases_bound(self):
        for n in (100, 400, 1600):
            a = delta_nm_alpha(n, 20, 0.1, UNIT_PARAMS, 50).value
            b = delta_nm_alpha(2 * n, 20, 0.1, UNIT_PARAMS, 50).value
            assert b < a

    def test_monotone_in_alpha_and_v(self):
        alphas = [0.0, 0.1, 0.2, 0.3, 0.4]
        vals = [delta_nm_alpha(900, 20, a, UNIT_PARAMS, 100).value for a in alphas]
        assert all(x < y for x, y in zip(vals, vals[1:]))
        for V in (0.5, 1.0, 2.0):
            lo = delta_nm_alpha(900, 20, 0.1, TheoryParams(V=V, epsilon=1 / 6), 100).value
            hi = delta_nm_alpha(900, 20, 0.1, TheoryParams(V=2 * V, epsilon=1 / 6), 100).value
            assert hi > lo

    def test_monotone_decreasing_in_m(self):
        vals = [delta_nm_alpha(900, m, 0.1, UNIT_PARAMS, 100).value for m in (10, 20, 40, 80)]
        assert all(x > y for x, y in zip(vals, vals[1:]))

    def test_alpha_domain(self):
        with pytest.raises(ValueError, match="alpha"):
            delta_nm_alpha(900, 20, 0.5, UNIT_PARAMS, 100)

    def test_feasibility_frontier_grows_with_m(self):
        def max_feasible_alpha(m):
            grid = np.linspace(0.0, 0.49, 200)
            ok = [a for a in grid if delta_nm_alpha(900, m, a, UNIT_PARAMS, 5).feasible]
            return max(ok) if ok else -1.0

        fr = [max_feasible_alpha(m) for m in (50, 200, 800)]
        assert fr[0] <= fr[1] <= fr[2] and fr[2] > fr[0]


class TestDeltaNmBeta:
    def test_frozen_regression_value(self):
        rep = delta_nm_beta(450, 40, 0.2, UNIT_PARAMS, 100)
        assert rep.value == pytest.approx(114.89262700108555, rel=1e-12)
        assert rep.remainder_scale == pytest.approx(0.2 / 450 + 1 / (450 * 40), rel=1e-12)

    def test_beta_zero_reduction(self):
        n, m, p = 300, 30, 20
        rep = delta_nm_beta(n, m, 0.0, UNIT_PARAMS, p)
        logterm = math.log(1 + n * (m + 1) * 10.0)
        eps = 1 / 6
        expected = (1.0 * p / eps) * (2 / math.sqrt(n * m)) * math.sqrt(
            logterm + math.log(1 + m) / p
        )
        assert rep.value == pytest.approx(expected, rel=1e-12)

    def test_linear_in_upsilon(self):
        base = delta_nm_beta(450, 40, 0.2, UNIT_PARAMS, 100).value
        p2 = TheoryParams(V=1.0, S=1.0, upsilon=3.0, L_tilde=1.0, D=10.0, epsilon=1 / 6)
        assert delta_nm_beta(450, 40, 0.2, p2, 100).value == pytest.approx(3 * base, rel=1e-12)

    def test_monotone_in_beta(self):
        vals = [delta_nm_beta(450, 40, b, UNIT_PARAMS, 100).value for b in (0.0, 0.1, 0.2, 0.3)]
        assert all(x < y for x, y in zip(vals, vals[1:]))

    def test_beta_domain(self):
        with pytest.raises(ValueError, match="beta"):
            delta_nm_beta(450, 40, 0.5, UNIT_PARAMS, 100)

    def test_feasibility_flag(self):
        assert delta_nm_beta(450, 40, 0.2, UNIT_PARAMS, 100).feasible
        assert not delta_nm_beta(450, 40, 0.4, UNIT_PARAMS, 100).feasible


class TestSuggestLambda:
    def test_glm_default(self):
        assert suggest_lambda("glm_default", delta=0.3, rho=1.0) == pytest.approx(0.09)

    def test_linear_pn(self):
        assert suggest_lambda("linear_pn", p=100, n=900) == pytest.approx(1 / 9)

    def test_scaling_constant(self):
        base = suggest_lambda("linear_pn", p=10, n=100)
        assert suggest_lambda("linear_pn", p=10, n=100, c=2.0) == pytest.approx(2 * base)

    def test_unknown_regime(self):
        with pytest.raises(ValueError, match="regime"):
            suggest_lambda("bayes")


def test_estimate_theory_params_smoke():
    data, _ = gen_logistic_dense(600, 6, seed=0)
    shards = ShardAssignment(shards=[np.arange(k * 100, (k + 1) * 100) for k in range(6)])
    params = estimate_theory_params(GlmModel("logistic"), data, shards, np.zeros(data.dim))
    assert params.V > 0 and params.L_tilde > 0 and params.rho > 0
    assert params.delta >= 0 and 0 < params.epsilon < 0.5
    # the estimates should make the bound computable
    rep = delta_nm_alpha(100, 5, 0.2, params, data.dim)
    assert np.isfinite(rep.value) and rep.value > 0
