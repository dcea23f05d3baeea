"""Close-in and alpha-beta path-loss models."""

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mmsound.errors import (
    DegenerateError,
    DomainError,
    InsufficientDataError,
    RankDeficiencyError,
)
from mmsound.models import ModelFamily, PathLossModel
from mmsound.processing import pathloss

F_HZ = 27.85e9


def _draws(rng, n, p0, sigma, count=200):
    d = rng.uniform(36.0, 400.0, count)
    pl = 10 * n * np.log10(d) + p0 + rng.normal(0.0, sigma, count)
    return list(zip(d, pl))


class TestFreeSpace:
    def test_reference(self):
        assert pathloss.fspl_reference(F_HZ) == pytest.approx(61.34, abs=0.01)

    def test_distance_curve(self):
        assert pathloss.fspl_db(100.0, F_HZ) == pytest.approx(101.34, abs=0.01)
        curve = pathloss.fspl_db([1.0, 10.0], F_HZ)
        assert curve[1] - curve[0] == pytest.approx(20.0)

    def test_nonpositive_frequency(self):
        with pytest.raises(DomainError):
            pathloss.fspl_reference(0.0)


class TestCloseIn:
    def test_points_on_free_space_line(self):
        p0 = pathloss.fspl_reference(F_HZ)
        report = pathloss.fit_ci([(10.0, p0 + 20.0), (100.0, p0 + 40.0)], F_HZ)
        assert report.model.n == pytest.approx(2.0, abs=1e-12)
        assert report.model.family == ModelFamily.CI
        assert report.ks_p is None

    def test_monte_carlo_recovery(self):
        p0 = pathloss.fspl_reference(F_HZ)
        recovered = gaussian = 0
        for seed in range(100):
            report = pathloss.fit_ci(_draws(np.random.default_rng(seed), 3.58, p0, 3.06), F_HZ)
            recovered += abs(report.model.n - 3.58) <= 0.1 and abs(report.model.sigma_db / 3.06 - 1) <= 0.15
            gaussian += report.ks_p is not None and report.ks_p > 0.05
        assert recovered >= 95
        assert gaussian >= 90

    def test_all_at_reference_distance(self):
        with pytest.raises(DegenerateError):
            pathloss.fit_ci([(1.0, 61.0), (1.0, 62.0)], F_HZ)

    def test_single_sample(self):
        with pytest.raises(InsufficientDataError):
            pathloss.fit_ci([(10.0, 80.0)], F_HZ)

    def test_nonpositive_distance(self):
        with pytest.raises(DomainError):
            pathloss.fit_ci([(0.0, 80.0), (10.0, 90.0)], F_HZ)


class TestAlphaBeta:
    def test_exact_line(self):
        report = pathloss.fit_abg([(10.0, 81.34), (100.0, 101.34)])
        assert report.model.n == pytest.approx(2.0)
        assert report.model.p0_db == pytest.approx(61.34)
        assert report.model.sigma_db == pytest.approx(0.0, abs=1e-9)

    def test_monte_carlo_recovery(self):
        recovered = 0
        for seed in range(100):
            m = pathloss.fit_abg(_draws(np.random.default_rng(seed), 2.82, 63.47, 6.44, count=2000)).model
            recovered += (
                abs(m.n - 2.82) <= 0.2
                and abs(m.p0_db - 63.47) <= 4.5
                and abs(m.sigma_db / 6.44 - 1) <= 0.1
            )
        assert recovered >= 95

    def test_single_distance(self):
        with pytest.raises(RankDeficiencyError):
            pathloss.fit_abg([(50.0, 100.0), (50.0, 104.0), (50.0, 98.0)])


class TestPredict:
    def test_log_term_vanishes_at_one_meter(self):
        model = PathLossModel(n=2.92, p0_db=61.34, sigma_db=0.0, family=ModelFamily.CI)
        assert pathloss.predict(model, 1.0) == pytest.approx(61.34)

    def test_free_space_at_100m(self):
        model = PathLossModel(n=2.0, p0_db=61.34, sigma_db=0.0, family=ModelFamily.CI)
        assert pathloss.predict(model, 100.0) == pytest.approx(101.34)

    def test_nonpositive_distance(self):
        model = PathLossModel(n=2.0, p0_db=61.34, sigma_db=0.0, family=ModelFamily.CI)
        with pytest.raises(DomainError):
            pathloss.predict(model, -1.0)


class TestKolmogorovSmirnov:
    def test_gaussian_residuals_pass(self):
        passed = 0
        for seed in range(100):
            stat, p = pathloss.gaussian_ks_test(np.random.default_rng(seed).standard_normal(10_000))
            assert stat < 0.02
            passed += p > 0.05
        assert passed >= 90

    def test_uniform_residuals_fail(self):
        for seed in range(100):
            _, p = pathloss.gaussian_ks_test(np.random.default_rng(seed).uniform(-1.0, 1.0, 10_000))
            assert p < 0.05

    def test_heavy_tails_fail_against_supplied_sigma(self, rng):
        _, p = pathloss.gaussian_ks_test(rng.uniform(-1.0, 1.0, 2000) ** 3, sigma=0.1)
        assert p < 1e-6

    def test_supplied_sigma_accepts_one_residual(self):
        stat, p = pathloss.gaussian_ks_test([0.0], sigma=1.0)
        assert stat == pytest.approx(0.5)
        assert 0.0 <= p <= 1.0

    def test_too_few_residuals(self):
        with pytest.raises(InsufficientDataError):
            pathloss.gaussian_ks_test([1.0, -1.0])

    def test_zero_variance(self):
        with pytest.raises(DegenerateError):
            pathloss.gaussian_ks_test([0.5, 0.5, 0.5])

    def test_bad_sigma(self):
        with pytest.raises(DomainError):
            pathloss.gaussian_ks_test([0.1, 0.2, 0.3], sigma=-1.0)


class TestReports:
    def test_shadowing_cdf(self, rng):
        report = pathloss.fit_abg(_draws(rng, 2.0, 60.0, 5.0, count=40))
        x, emp, fitted = pathloss.shadowing_cdf(report)
        assert x.size == emp.size == fitted.size == 40
        assert np.all(np.diff(x) >= 0)
        assert emp[-1] == 1.0

    def test_report_row(self, rng):
        report = pathloss.fit_ci(_draws(rng, 2.9, pathloss.fspl_reference(F_HZ), 6.0, count=20), F_HZ)
        row = pathloss.report_row(report, "Street28", "omni")
        assert row["family"] == "CI"
        assert row["count"] == 20
        assert row["skipped"] is None
        assert set(row) >= {"n", "p0_db", "sigma_db", "ks_p"}


path_loss_samples = st.lists(
    st.tuples(st.floats(1.5, 500.0), st.floats(40.0, 160.0)),
    min_size=3,
    max_size=40,
)


class TestFitProperties:
    @staticmethod
    def _spread(s):
        return np.ptp(np.log10([d for d, _ in s])) > 0.05

    @settings(max_examples=100, deadline=None)
    @given(path_loss_samples)
    def test_abg_residuals_sum_to_zero(self, s):
        assume(self._spread(s))
        report = pathloss.fit_abg(s)
        assert abs(sum(report.residuals_db)) < 1e-6

    @settings(max_examples=100, deadline=None)
    @given(path_loss_samples)
    def test_abg_never_worse_than_ci(self, s):
        assume(self._spread(s))
        assert pathloss.fit_abg(s).model.sigma_db <= pathloss.fit_ci(s, F_HZ).model.sigma_db + 1e-7

    @settings(max_examples=100, deadline=None)
    @given(path_loss_samples, st.floats(-50.0, 50.0))
    def test_constant_offset_moves_intercept_only(self, s, k):
        assume(self._spread(s))
        base = pathloss.fit_abg(s).model
        shifted = pathloss.fit_abg([(d, pl + k) for d, pl in s]).model
        assert shifted.p0_db == pytest.approx(base.p0_db + k, abs=1e-6)
        assert shifted.n == pytest.approx(base.n, abs=1e-6)
        assert shifted.sigma_db == pytest.approx(base.sigma_db, abs=1e-6)

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(0.0, 6.0),
        st.floats(20.0, 120.0),
        st.lists(st.floats(0.01, 1e4), min_size=2, max_size=30),
    )
    def test_predict_is_monotone_in_distance(self, n, p0, distances):
        model = PathLossModel(n=n, p0_db=p0, sigma_db=0.0, family=ModelFamily.ABG)
        curve = pathloss.predict(model, np.sort(distances))
        assert np.all(np.diff(curve) >= 0)
