import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stnlffm.errors import ConfigError
from stnlffm.regression import (
    RegressionCoefficients,
    RegressionParams,
    coefficient_limits_check,
    fit_restricted,
    objective,
)


def normal_equations(ck, cp, gamma):
    m = np.column_stack([ck, np.ones_like(ck)])
    e_a = np.array([1.0, 0.0])
    lhs = m.T @ m + gamma * np.outer(e_a, e_a)
    rhs = m.T @ cp + gamma * e_a
    return np.linalg.solve(lhs, rhs)


def ols(ck, cp):
    xm, ym = ck.mean(), cp.mean()
    slope = ((ck - xm) * (cp - ym)).sum() / ((ck - xm) ** 2).sum()
    return slope, ym - slope * xm


class TestFitRestricted:
    def test_identity(self, rng):
        ck = rng.random(12) * 0.4
        fit = fit_restricted(ck, ck)
        assert fit.a == pytest.approx(1.0, abs=1e-12) and fit.b == pytest.approx(0.0, abs=1e-12)
        assert not fit.degenerate

    def test_uniform_shift(self, rng):
        ck = rng.random(12) * 0.4
        fit = fit_restricted(ck, ck + 0.05)
        assert fit.a == pytest.approx(1.0, abs=1e-12) and fit.b == pytest.approx(0.05, abs=1e-12)

    def test_grid_search_and_analytic(self):
        r = np.random.default_rng(2024)
        ck = r.uniform(0.05, 0.45, 20)
        cp = 1.3 * ck - 0.04 + r.normal(0, 0.01, 20)
        gamma = 0.01
        fit = fit_restricted(ck, cp, RegressionParams(gamma=gamma))

        a_exp, b_exp = normal_equations(ck, cp, gamma)
        assert abs(fit.a - a_exp) < 1e-8 and abs(fit.b - b_exp) < 1e-8

        # coarse-to-fine brute force; each stage zooms on the previous grid minimum
        a_lo, a_hi, b_lo, b_hi = 0.0, 2.0, -0.5, 0.5
        for step in (0.01, 1e-3, 1e-4, 1e-5, 1e-6):
            a_grid = np.arange(a_lo, a_hi + step / 2, step)
            b_grid = np.arange(b_lo, b_hi + step / 2, step)
            best = (np.inf, None, None)
            for a in a_grid:
                resid = cp[None, :] - (a * ck[None, :] + b_grid[:, None])
                obj = 0.5 * (resid**2).sum(-1) + 0.5 * gamma * (a - 1) ** 2
                j = int(np.argmin(obj))
                if obj[j] < best[0]:
                    best = (obj[j], a, b_grid[j])
            _, a_best, b_best = best
            a_lo, a_hi = a_best - 10 * step, a_best + 10 * step
            b_lo, b_hi = b_best - 10 * step, b_best + 10 * step
        assert abs(fit.a - a_best) <= 2e-6 and abs(fit.b - b_best) <= 2e-6

    def test_degenerate_few_points(self):
        fit = fit_restricted([0.1, 0.2], [0.15, 0.3], RegressionParams(min_points=5))
        assert fit.degenerate and fit.a == 1.0
        assert fit.b == pytest.approx(0.075)

    def test_degenerate_constant(self):
        fit = fit_restricted([0.2] * 8, [0.1 * i for i in range(8)])
        assert fit.degenerate and fit.a == 1.0
        assert fit.b == pytest.approx(np.mean([0.1 * i - 0.2 for i in range(8)]))

    def test_errors(self):
        with pytest.raises(ValueError):
            fit_restricted([], [])
        with pytest.raises(ValueError):
            fit_restricted([0.1, np.nan], [0.1, 0.2])
        with pytest.raises(ValueError):
            fit_restricted([0.1, 0.2], [0.1])

    def test_gamma_limit(self, rng):
        for _ in range(20):
            ck = rng.uniform(0, 0.5, 15)
            cp = rng.uniform(0, 0.5, 15)
            fit = fit_restricted(ck, cp, RegressionParams(gamma=1e6))
            assert abs(fit.a - 1) < 1e-4

    def test_gamma_monotone(self, rng):
        ck = rng.uniform(0, 0.5, 15)
        cp = 2.0 * ck + 0.01
        gaps = [abs(fit_restricted(ck, cp, RegressionParams(gamma=g)).a - 1)
                for g in (0, 0.01, 0.1, 1, 10, 1e3, 1e6)]
        assert all(x >= y for x, y in zip(gaps, gaps[1:]))
        b_inf = fit_restricted(ck, cp, RegressionParams(gamma=1e9)).b
        assert b_inf == pytest.approx(np.mean(cp - ck), abs=1e-6)

    def test_gamma_zero_is_ols(self, rng):
        for _ in range(100):
            ck = rng.uniform(0, 0.5, 25)
            cp = rng.uniform(0, 0.5, 25)
            fit = fit_restricted(ck, cp, RegressionParams(gamma=0.0))
            slope, icpt = ols(ck, cp)
            assert abs(fit.a - slope) < 1e-10 and abs(fit.b - icpt) < 1e-10

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 100_000), gamma=st.floats(0, 10), delta=st.floats(-0.2, 0.2))
    def test_optimality_and_equivariance(self, seed, gamma, delta):
        r = np.random.default_rng(seed)
        ck = r.uniform(0, 0.5, 12)
        cp = r.uniform(0, 0.5, 12)
        params = RegressionParams(gamma=gamma)
        fit = fit_restricted(ck, cp, params)
        assert not fit.degenerate
        # optimality spot check against the a = 1 fallback
        assert objective(fit.a, fit.b, ck, cp, gamma) <= objective(
            1.0, np.mean(cp - ck), ck, cp, gamma) + 1e-12
        # shifting only c_p moves b by delta
        sp = fit_restricted(ck, cp + delta, params)
        assert sp.a == pytest.approx(fit.a, abs=1e-9)
        assert sp.b == pytest.approx(fit.b + delta, abs=1e-9)
        # shifting both moves b by delta * (1 - a); unchanged only when a == 1
        sb = fit_restricted(ck + delta, cp + delta, params)
        assert sb.a == pytest.approx(fit.a, abs=1e-9)
        assert sb.b == pytest.approx(fit.b + delta * (1 - fit.a), abs=1e-9)

    def test_both_shift_leaves_b_when_a_is_one(self, rng):
        ck = rng.uniform(0, 0.5, 10)
        fit = fit_restricted(ck + 0.1, ck + 0.13)
        assert fit.b == pytest.approx(fit_restricted(ck, ck + 0.03).b, abs=1e-12)


class TestLimits:
    def test_in_bounds(self):
        c = RegressionCoefficients(1.02, 0.01, 10, False, 0.02)
        assert coefficient_limits_check(c) is c

    def test_out_of_bounds(self):
        c = coefficient_limits_check(RegressionCoefficients(-4.0, 0.9, 10, False, 0.02))
        assert c.a == 1.0 and c.b == 0.02 and c.degenerate

    def test_boundary_inclusive(self):
        c = RegressionCoefficients(3.0, 0.0, 10, False, 0.02)
        assert coefficient_limits_check(c).a == 3.0
        c0 = RegressionCoefficients(0.0, 0.0, 10, False, 0.02)
        assert coefficient_limits_check(c0).a == 0.0


@pytest.mark.parametrize("kw", [dict(gamma=-1), dict(min_points=1), dict(variance_floor=0),
                                dict(a_min=2, a_max=1)])
def test_param_validation(kw):
    with pytest.raises(ConfigError):
        RegressionParams(**kw)
