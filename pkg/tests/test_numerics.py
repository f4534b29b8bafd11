import math

import numpy as np
import pytest

from lcsampler.errors import UsageError
from lcsampler.numerics import (
    adaptive_quadrature,
    gaussian_tail_integral,
    gaussian_tail_partial,
    ks_critical_value,
    ks_statistic,
    normal_cdf,
    sample_gaussian_tail,
    tv_distance,
)


class TestGaussianTailIntegral:
    def test_zero_drift_is_half_gaussian(self):
        assert gaussian_tail_integral(0.0) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-14)

    def test_unit_drift_matches_quadrature(self):
        # independent oracle: direct quadrature of the integrand
        quad = adaptive_quadrature(lambda t: math.exp(-t - 0.5 * t * t), 0.0, 45.0, tol=1e-12)
        assert quad.value == pytest.approx(0.6556795424187984, rel=1e-10)
        assert gaussian_tail_integral(1.0) == pytest.approx(quad.value, rel=1e-10)

    def test_large_drift_asymptotics(self):
        # Mills ratio: G(a) ~ 1/a within 0.2% at a = 1e3
        assert gaussian_tail_integral(1e3) == pytest.approx(1e-3, rel=2e-3)

    def test_mills_bound_on_log_grid(self):
        for a in np.logspace(-2, 3, 26):
            assert gaussian_tail_integral(float(a)) <= 1.0 / a

    def test_negative_drift_rejected(self):
        with pytest.raises(UsageError):
            gaussian_tail_integral(-0.1)

    def test_partial_tail(self):
        assert gaussian_tail_partial(1.0, 0.0) == pytest.approx(gaussian_tail_integral(1.0))
        quad = adaptive_quadrature(lambda t: math.exp(-t - 0.5 * t * t), 2.0, 45.0, tol=1e-12)
        assert gaussian_tail_partial(1.0, 2.0) == pytest.approx(quad.value, rel=1e-9)
        # vectorized and monotone decreasing
        vals = gaussian_tail_partial(0.5, np.array([0.0, 1.0, 2.0, 5.0]))
        assert np.all(np.diff(vals) < 0)


class TestTailSampling:
    def _tail_cdf(self, a):
        total = gaussian_tail_integral(a)
        return lambda t: 1.0 - gaussian_tail_partial(a, np.maximum(t, 0.0)) / total

    @pytest.mark.parametrize("drift", [0.0, 0.7, 3.0, 7.5, 40.0])
    def test_draws_match_analytic_cdf(self, drift):
        rng = np.random.default_rng(11)
        draws = sample_gaussian_tail(drift, rng, size=20_000)
        assert float(np.min(draws)) >= 0.0
        ks = ks_statistic(draws, self._tail_cdf(drift))
        assert ks < ks_critical_value(20_000)

    def test_scalar_draw(self):
        rng = np.random.default_rng(0)
        assert isinstance(sample_gaussian_tail(1.0, rng), float)


class TestAdaptiveQuadrature:
    def test_linear(self):
        res = adaptive_quadrature(lambda x: x, 0.0, 1.0, tol=1e-12)
        assert res.value == pytest.approx(0.5, abs=1e-12)
        assert res.converged

    def test_gaussian_mass(self):
        res = adaptive_quadrature(lambda x: math.exp(-0.5 * x * x), -40.0, 40.0, tol=1e-10)
        assert res.value == pytest.approx(math.sqrt(2 * math.pi), rel=1e-10)

    def test_breakpoints_handle_kinks(self):
        res = adaptive_quadrature(abs, -1.0, 1.0, tol=1e-12, breakpoints=[0.0])
        assert res.value == pytest.approx(1.0, abs=1e-12)

    def test_empty_interval(self):
        assert adaptive_quadrature(lambda x: x, 2.0, 2.0).value == 0.0

    def test_bad_bounds(self):
        with pytest.raises(UsageError):
            adaptive_quadrature(lambda x: x, 1.0, 0.0)

    def test_depth_exhaustion_is_flagged(self):
        # near-singular integrand: panels at the left edge never settle
        res = adaptive_quadrature(lambda x: (x + 1e-280) ** -0.5, 0.0, 1.0, tol=1e-14)
        assert not res.converged
        assert res.error_estimate > 0.0


class TestTvDistance:
    def _normal_density(self, mu):
        return lambda x: math.exp(-0.5 * (x - mu) ** 2) / math.sqrt(2 * math.pi)

    def test_identical_densities(self):
        p = self._normal_density(0.0)
        assert tv_distance(p, p, tol=1e-10) == pytest.approx(0.0, abs=1e-10)

    def test_mean_shifted_gaussians_closed_form(self):
        # TV(N(0,1), N(2,1)) = 2*Phi(1) - 1
        p, q = self._normal_density(0.0), self._normal_density(2.0)
        expected = 2.0 * float(normal_cdf(1.0)) - 1.0
        assert expected == pytest.approx(0.6826894921370859, rel=1e-12)
        assert tv_distance(p, q, tol=1e-9, breakpoints=[1.0]) == pytest.approx(expected, abs=1e-7)

    def test_symmetry_and_triangle(self):
        p, q, r = (self._normal_density(mu) for mu in (0.0, 0.7, 1.5))
        d_pq = tv_distance(p, q, tol=1e-9)
        d_qp = tv_distance(q, p, tol=1e-9)
        d_qr = tv_distance(q, r, tol=1e-9)
        d_pr = tv_distance(p, r, tol=1e-9)
        assert d_pq == pytest.approx(d_qp, abs=1e-8)
        assert d_pr <= d_pq + d_qr + 1e-8


class TestKsStatistic:
    def test_samples_from_the_cdf_itself(self):
        rng = np.random.default_rng(3)
        samples = rng.standard_normal(100_000)
        assert ks_statistic(samples, normal_cdf) < ks_critical_value(100_000)

    def test_constant_samples_vs_continuous_cdf(self):
        assert ks_statistic(np.zeros(100), normal_cdf) >= 0.5

    def test_single_sample_at_median(self):
        assert ks_statistic([0.0], normal_cdf) == pytest.approx(0.5)

    def test_empty_rejected(self):
        with pytest.raises(UsageError):
            ks_statistic([], normal_cdf)

    def test_critical_value_table(self):
        assert ks_critical_value(100) == pytest.approx(0.163)
        with pytest.raises(UsageError):
            ks_critical_value(100, significance=0.5)
