import math

import numpy as np
import pytest
from rich.console import Console
from scipy import stats

from bernoulli_sieve.exact import Pmf
from bernoulli_sieve.stats_harness import (
    TestReport,
    any_failed,
    chi_square,
    ks_one_sample,
    ks_statistic,
    ks_two_sample,
    merge_bins,
    moment_z,
    permutation_ks_pvalue,
    print_reports,
    trend_test,
    tv_distance,
)


class TestKs:
    def test_identical_two_samples(self):
        a = np.arange(50, dtype=float)
        report = ks_two_sample(a, a.copy())
        assert report.statistic == 0.0
        assert report.passed

    def test_constant_sample_against_normal(self):
        report = ks_one_sample(np.zeros(100), stats.norm.cdf)
        assert report.statistic >= 0.5
        assert report.status == "fail"

    def test_uniform_sample_passes(self):
        draws = np.random.default_rng(0).random(2000)
        report = ks_one_sample(draws, lambda x: np.clip(x, 0.0, 1.0), max_statistic=0.05)
        assert report.passed
        assert report.p_value > 1e-3

    def test_discrete_uses_left_limit(self):
        # 整数格点上的几何律：左右极限都对上时统计量为 0
        samples = np.array([0] * 2 + [1])
        cdf = lambda x: np.where(np.floor(x) >= 1, 1.0, np.where(np.floor(x) >= 0, 2.0 / 3.0, 0.0))
        assert ks_statistic(samples, cdf, discrete=True) == pytest.approx(0.0, abs=1e-12)

    def test_small_sample_underpowered(self):
        assert ks_one_sample([0.1, 0.2], lambda x: np.clip(x, 0.0, 1.0)).status == "underpowered"

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ks_one_sample([], stats.norm.cdf)

    def test_permutation_matches_exact(self):
        rng = np.random.default_rng(4)
        a, b = rng.normal(size=40), rng.normal(size=40)
        exact = ks_two_sample(a, b).p_value
        permuted = permutation_ks_pvalue(a, b, 10_000, np.random.default_rng(5))
        assert permuted == pytest.approx(exact, abs=0.025)


class TestDiscrete:
    def test_tv_distance_counts_deficit(self):
        pmf = Pmf.from_probs(0, np.array([0.5, 0.4]))
        report = tv_distance(pmf, [0, 1], max_distance=0.2)
        # ½(|0.5−0.5| + |0.4−0.5| + 0.1)
        assert report.statistic == pytest.approx(0.1)
        assert report.passed

    def test_merge_bins(self):
        obs, exp = merge_bins(np.array([1, 2, 10, 1]), np.array([2.0, 3.0, 9.0, 1.0]))
        np.testing.assert_allclose(exp, [5.0, 10.0])
        np.testing.assert_allclose(obs, [3.0, 11.0])

    def test_chi_square_single_bin_underpowered(self):
        assert chi_square([3, 1], [2, 2]).status == "underpowered"

    def test_chi_square_fair_die(self):
        rolls = np.random.default_rng(2).integers(0, 6, 6000)
        report = chi_square(np.bincount(rolls, minlength=6), np.full(6, 1.0))
        assert report.passed


class TestMomentsAndTrend:
    def test_moment_z(self):
        draws = np.random.default_rng(1).standard_normal(5000)
        report = moment_z(draws, [0.0, 1.0, math.inf])
        assert report.passed

    def test_moment_z_underpowered(self):
        assert moment_z(np.ones(10), [1.0]).status == "underpowered"

    def test_constant_sequence_is_not_monotone(self):
        assert trend_test([1.0, 1.0, 1.0], "decreasing").status == "fail"

    def test_decreasing(self):
        report = trend_test([0.3, 0.2, 0.1], "decreasing")
        assert report.passed
        assert report.statistic == pytest.approx(-0.1)

    def test_tolerance_band(self):
        assert trend_test([0.3, 0.31, 0.1], "decreasing", tolerance=0.02).passed

    def test_needs_three_values(self):
        with pytest.raises(ValueError):
            trend_test([1.0, 0.5], "decreasing")
        with pytest.raises(ValueError):
            trend_test([1.0, 0.5, 0.2], "sideways")


class TestReports:
    def test_round_trip(self):
        report = TestReport("x", 0.1, 0.2, "pass", p_value=0.5, sizes=(10, 20), metadata={"n": 5})
        assert TestReport.from_dict(report.to_dict()) == report

    def test_experimental_never_fails(self):
        report = TestReport("x", 1.0, 0.2, "fail", experimental=True)
        assert not report.failed()
        assert not any_failed([report])

    def test_strict_counts_underpowered(self):
        report = TestReport("x", 0.0, 0.2, "underpowered")
        assert not report.failed()
        assert report.failed(strict=True)

    def test_unknown_status(self):
        with pytest.raises(ValueError):
            TestReport("x", 0.0, 0.0, "maybe")

    def test_csv_row(self):
        row = TestReport("x", 0.5, 1.0, "pass", sizes=(3, 4), metadata={"b": 2, "a": 1}).to_csv_row()
        assert row == ["x", "pass", "0.5", "1.0", "", "3x4", "0", "a=1;b=2"]

    def test_print(self):
        console = Console(record=True, width=120)
        print_reports([TestReport("检验一", 0.01, 0.02, "pass")], console=console)
        assert "检验一" in console.export_text()
