import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from pinning import disorder, estimators


@pytest.fixture(scope="module")
def spec():
    return disorder.make_spec(1.5)


@pytest.fixture(scope="module")
def big_sample(spec):
    return disorder.sample_env(spec, 10 ** 6, seed=11)


class TestSpec:
    def test_tail_constant(self, spec):
        assert abs(spec.c_p - 0.5 ** 1.5) <= 1e-12

    def test_gamma_bounds(self):
        for g in (1.0, 2.0, 0.5, 2.5):
            with pytest.raises(ValueError):
                disorder.make_spec(g)

    def test_survival_closed_form(self, spec):
        assert spec.survival(-1.0) == 1.0
        assert spec.survival(-2.0) == 1.0
        assert abs(spec.survival(10.0) - ((10 + 1.5) / 0.5) ** -1.5) <= 1e-15

    @settings(max_examples=30, deadline=None)
    @given(u=st.floats(1e-9, 1.0))
    def test_isf_inverts_survival(self, spec, u):
        assert abs(spec.survival(spec.isf(u)) - u) <= 1e-9 * u + 1e-13

    def test_density_integrates_to_survival(self, spec):
        lo, hi = 0.5, 7.0
        val, _ = quad(spec.density, lo, hi, epsabs=1e-12)
        assert abs(val - (spec.survival(lo) - spec.survival(hi))) <= 1e-9

    def test_tail_constant_is_the_tail_limit(self, spec):
        xs = np.array([1e3, 1e4, 1e5])
        scaled = xs ** 1.5 * spec.survival(xs)
        assert abs(scaled[-1] - spec.c_p) / spec.c_p < 2e-3
        assert np.all(np.diff(np.abs(scaled - spec.c_p)) < 0)


class TestSampling:
    def test_support(self, big_sample):
        assert big_sample.values.min() >= -1.0

    def test_centering_median_of_means(self, big_sample):
        # skew bias and spread of the block means share the (B/n)^(1-1/gamma)
        # rate, so the right zero test is the order-statistic interval
        mom = estimators.median_of_means(big_sample.values, blocks=16)
        assert mom.ci_low <= 0.0 <= mom.ci_high
        assert abs(mom.estimate) <= 4.0 * (mom.ci_high - mom.ci_low)

    def test_tail_frequencies(self, spec, big_sample):
        n = len(big_sample.values)
        for x in (5.0, 10.0, 20.0):
            p = spec.survival(x)
            freq = float(np.mean(big_sample.values > x))
            assert abs(freq - p) <= 4.0 * math.sqrt(p * (1 - p) / n)

    def test_deterministic(self, spec, big_sample):
        again = disorder.sample_env(spec, 10 ** 6, seed=11)
        assert np.array_equal(big_sample.values, again.values)
        other = disorder.sample_env(spec, 10 ** 6, seed=12)
        assert not np.array_equal(big_sample.values, other.values)

    def test_values_read_only(self, big_sample):
        with pytest.raises(ValueError):
            big_sample.values[0] = 0.0


class TestTilt:
    def test_acceptance_rate(self, spec):
        env = disorder.tilt_sample(spec, 0.5, 200_000, seed=4)
        assert env.tilt_acceptance is not None
        assert abs(env.tilt_acceptance - 1.0 / spec.gamma) < 0.02

    def test_indicator_identity(self, spec):
        # tilted mass of {omega > 1} equals the reweighted base expectation
        beta = 0.5
        n = 10 ** 6
        env = disorder.tilt_sample(spec, beta, n, seed=5)
        target = disorder.expect(spec, lambda w: (1 + beta * w) * (w > 1.0), breakpoints=[1.0])
        freq = float(np.mean(env.values > 1.0))
        assert abs(freq - target) <= 4.0 * math.sqrt(target * (1 - target) / n)

    def test_bounded_functional_identity(self, spec):
        beta = 0.3
        n = 10 ** 6
        env = disorder.tilt_sample(spec, beta, n, seed=6)
        emp = float(np.minimum(env.values, 5.0).mean())
        target = disorder.expect(spec, lambda w: (1 + beta * w) * min(w, 5.0), breakpoints=[5.0])
        spread = float(np.minimum(env.values, 5.0).std(ddof=1)) / math.sqrt(n)
        assert abs(emp - target) <= 4.0 * spread

    def test_small_beta_recovers_base_law(self, spec):
        beta = 1e-3
        n = 200_000
        env = disorder.tilt_sample(spec, beta, n, seed=7)
        # total variation between tilted and base laws is at most beta
        for x in (-0.5, 0.0, 1.0, 5.0):
            p = spec.survival(x)
            freq = float(np.mean(env.values > x))
            assert abs(freq - p) <= beta + 4.0 * math.sqrt(p * (1 - p) / n)

    def test_beta_validation(self, spec):
        with pytest.raises(ValueError):
            disorder.tilt_sample(spec, 1.0, 10, seed=0)

    def test_deterministic(self, spec):
        a = disorder.tilt_sample(spec, 0.4, 5000, seed=9)
        b = disorder.tilt_sample(spec, 0.4, 5000, seed=9)
        assert np.array_equal(a.values, b.values)


class TestCappedMoments:
    @settings(max_examples=15, deadline=None)
    @given(cap=st.floats(0.5, 200.0), gamma=st.floats(1.1, 1.9))
    def test_capped_mean_vs_quadrature(self, cap, gamma):
        sp = disorder.make_spec(gamma)
        closed = sp.mean_capped(cap)
        numeric = disorder.expect(sp, lambda w: min(w, cap), breakpoints=[cap])
        assert abs(closed - numeric) <= 1e-9

    @settings(max_examples=15, deadline=None)
    @given(cap=st.floats(0.5, 200.0), gamma=st.floats(1.1, 1.9))
    def test_capped_second_moment_vs_quadrature(self, cap, gamma):
        sp = disorder.make_spec(gamma)
        closed = sp.second_moment_capped(cap)
        numeric = disorder.expect(sp, lambda w: min(w, cap) ** 2, breakpoints=[cap])
        assert abs(closed - numeric) <= 1e-9

    def test_mean_above_vs_quadrature(self, spec):
        for level in (0.0, 2.0, 10.0):
            closed = spec.mean_above(level)
            numeric = disorder.expect(spec, lambda w: w * (w > level), breakpoints=[level])
            assert abs(closed - numeric) <= 1e-9

    def test_cap_environment(self, spec):
        env = disorder.sample_env(spec, 1000, seed=3)
        capped = disorder.cap_environment(env, 2.0)
        assert capped.values.max() <= 2.0
        assert capped.values.min() >= -1.0


class TestTruncationContext:
    def test_small_beta_limits(self, spec):
        h_prev, chi_prev = None, None
        for b in (0.2, 0.1, 0.05, 0.01):
            ctx = disorder.truncation_context(spec, 0.75, b, c1=1.0)
            assert ctx.h_beta > 0 and ctx.chi >= 0
            if h_prev is not None:
                assert ctx.h_beta < h_prev and ctx.chi < chi_prev
            h_prev, chi_prev = ctx.h_beta, ctx.chi

    def test_reward_scaling_exponent(self, spec):
        # log h_beta / log beta approaches alpha*gamma/(1-gamma(1-alpha)) = 1.8
        target = 0.75 * 1.5 / (1 - 1.5 * 0.25)
        ratios = [math.log(disorder.truncation_context(spec, 0.75, b, 1.0).h_beta)
                  / math.log(b) for b in (1e-3, 1e-4, 1e-5)]
        assert abs(ratios[-1] - target) < 0.05
        assert abs(ratios[-1] - target) < abs(ratios[0] - target)

    def test_branches(self, spec):
        at_half = disorder.truncation_context(spec, 0.5, 0.05, c1=1.0)
        below = disorder.truncation_context(spec, 0.45, 0.05, c1=1.0, delta=0.1)
        assert at_half.n_beta >= 2 and below.n_beta >= 2

    def test_cap_monotonicity_drives_reward(self, spec):
        # larger caps recover more of the positive tail, shrinking the reward
        caps = [5.0, 20.0, 100.0]
        rewards = [-math.log1p(0.3 * spec.mean_capped(t)) for t in caps]
        assert rewards[0] > rewards[1] > rewards[2] > 0

    def test_too_large_beta_reported(self, spec):
        with pytest.raises(ValueError, match="beta too large"):
            disorder.truncation_context(spec, 0.9, 0.9, c1=1e-3)

    def test_regime_validation(self, spec):
        with pytest.raises(ValueError):
            disorder.truncation_context(spec, 0.2, 0.1, c1=1.0)


class TestMoment1PlusQ:
    def test_unit_at_zero_coupling(self, spec):
        assert disorder.moment_1plusq(spec, 0.0, 0.3) == 1.0

    def test_infinite_order_signalled(self, spec):
        with pytest.raises(ValueError, match="infinite"):
            disorder.moment_1plusq(spec, 0.1, 0.5)
        with pytest.raises(ValueError):
            disorder.moment_1plusq(spec, 0.1, -0.1)

    def test_monotone_and_continuous_in_beta(self):
        sp = disorder.make_spec(1.8)
        betas = np.linspace(0.0, 0.9, 10)
        vals = [disorder.moment_1plusq(sp, float(b), 0.3) if b else 1.0
                for b in betas]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        assert vals[1] - vals[0] < 0.05

    def test_growth_toward_tail_order(self):
        sp = disorder.make_spec(1.8)
        vals = [disorder.moment_1plusq(sp, 0.3, q) for q in (0.3, 0.6, 0.75, 0.79)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert vals[-1] > 10.0

    def test_against_monte_carlo(self):
        sp = disorder.make_spec(1.8)
        quad_val = disorder.moment_1plusq(sp, 0.1, 0.3)
        env = disorder.sample_env(sp, 2 * 10 ** 6, seed=3)
        mom = estimators.median_of_means((1 + 0.1 * env.values) ** 1.3, blocks=8)
        assert mom.ci_low <= quad_val <= mom.ci_high

    def test_budget_bisection(self):
        sp = disorder.make_spec(1.8)
        b = disorder.moment_budget_beta(sp, 0.3, 0.01)
        assert disorder.moment_1plusq(sp, b, 0.3) <= 1.01 + 1e-9
        assert disorder.moment_1plusq(sp, min(b * 1.1, 0.999), 0.3) > 1.01


class TestPenaltyFunctionals:
    def test_zero_coupling_symmetry(self, spec):
        eta1, eta2, cost = disorder.penalty_functionals(spec, 0.0, 0.0, 1000)
        assert eta1 == pytest.approx(eta2, abs=1e-15)
        assert eta1 > 0
        assert cost > 1.0

    def test_level_probability_scales_inverse_k(self, spec):
        for k in (10 ** 2, 10 ** 3, 10 ** 4):
            p = spec.survival(k ** (1.0 / spec.gamma))
            assert abs(k * p - spec.c_p) / spec.c_p < 0.6
        assert abs(1e6 * spec.survival(1e6 ** (1 / 1.5)) - spec.c_p) / spec.c_p < 0.05

    def test_cost_power_bounded(self, spec):
        for k in (10 ** 2, 10 ** 3, 10 ** 4):
            _, _, cost = disorder.penalty_functionals(spec, 0.0, 0.0, k)
            p = spec.survival(k ** (1.0 / spec.gamma))
            assert cost ** k <= (1.0 + (math.e - 1.0) * p) ** k
            assert cost ** k <= 2.0

    def test_first_order_rate(self, spec):
        # eta1 ~ p/log k with a known 1/(2 log k) second-order correction
        for k in (10 ** 3, 10 ** 4):
            eta1, _, _ = disorder.penalty_functionals(spec, 0.0, 0.0, k)
            p = spec.survival(k ** (1.0 / spec.gamma))
            ratio = eta1 * math.log(k) / p
            assert abs(ratio - (1.0 - 1.0 / (2.0 * math.log(k)))) < 0.01

    def test_eta2_sign_tracks_reward(self, spec):
        beta, k = 0.4, 1000
        flip = -math.log(1.0 - (1.0 - math.exp(-1 / math.log(k)))
                         * (spec.survival(k ** (1 / spec.gamma))
                            + beta * spec.mean_above(k ** (1 / spec.gamma))))
        _, eta2_lo, _ = disorder.penalty_functionals(spec, beta, flip - 1e-4, k)
        _, eta2_hi, _ = disorder.penalty_functionals(spec, beta, flip + 1e-4, k)
        assert eta2_lo > 0 > eta2_hi

    def test_k_validation(self, spec):
        with pytest.raises(ValueError):
            disorder.penalty_functionals(spec, 0.1, 0.0, 2)


class TestIO:
    def test_spec_round_trip(self, tmp_path, spec):
        path = tmp_path / "spec.json"
        disorder.save_spec(spec, str(path))
        data = json.loads(path.read_text())
        assert data == {"gamma": 1.5, "family": "shifted_pareto"}
        assert disorder.load_spec(str(path)) == spec

    def test_env_csv_round_trip(self, tmp_path, spec):
        env = disorder.sample_env(spec, 50, seed=2)
        path = tmp_path / "env.csv"
        disorder.export_env(env, str(path))
        back = disorder.import_env(str(path), spec)
        assert np.array_equal(back.values, env.values)

    def test_env_npy_round_trip(self, tmp_path, spec):
        env = disorder.sample_env(spec, 50, seed=2)
        path = tmp_path / "env.npy"
        disorder.export_env(env, str(path))
        back = disorder.import_env(str(path), spec)
        assert np.array_equal(back.values, env.values)
