"""ξ 模型：构造、解析、矩、μ/ν/σ² 与情形分类。"""

import math

import numpy as np
import pytest

from bernoulli_sieve.errors import ModelError
from bernoulli_sieve.stats_harness import ks_one_sample
from bernoulli_sieve.xi_models import (
    classify_case,
    draw_pair,
    draw_steps,
    make_model,
    moment_by_quadrature,
    moment_table,
    mu,
    nu,
    parse_model_spec,
    quantile_xibar,
    sample_xibar,
    sigma2,
    truncated_mean,
    xi_moment,
    xi_moments,
    xibar_cdf,
    xibar_moment,
)


class TestParsing:
    def test_gem_is_beta_one_theta(self):
        assert parse_model_spec("gem:2") == make_model("beta", (1, 2))

    def test_whitespace_and_case_ignored(self):
        assert parse_model_spec(" Beta: 2 , 3 ") == make_model("beta", (2, 3))

    @pytest.mark.parametrize("text", ["", "beta:1", "beta:1,2,3", "gem:-1", "logpareto:0", "beta:1,", "nope:1", "custom"])
    def test_rejects_bad_specs(self, text):
        with pytest.raises(ModelError):
            parse_model_spec(text)

    def test_custom_needs_quantile_or_atoms(self):
        with pytest.raises(ModelError):
            make_model("custom")


class TestMoments:
    def test_uniform_moments(self):
        model = parse_model_spec("beta:1,1")
        assert xi_moment(model, 3) == pytest.approx(0.25, rel=1e-12)
        np.testing.assert_allclose(xi_moments(model, 5), 1.0 / np.arange(1, 7), rtol=1e-12)

    def test_beta_23_means(self):
        model = parse_model_spec("beta:2,3")
        assert xi_moment(model, 1) == pytest.approx(0.4, rel=1e-12)
        assert xibar_moment(model, 1) == pytest.approx(0.6, rel=1e-12)

    def test_logpareto_moment_matches_quadrature_of_samples(self):
        model = parse_model_spec("logpareto:1.5")
        rng = np.random.default_rng(7)
        samples = sample_xibar(model, rng, 200_000)
        assert xibar_moment(model, 2) == pytest.approx(np.mean(samples**2), abs=5e-3)


class TestLogMoments:
    def test_uniform(self):
        model = parse_model_spec("beta:1,1")
        assert mu(model) == pytest.approx(1.0, rel=1e-12)
        assert nu(model) == pytest.approx(1.0, rel=1e-12)
        assert sigma2(model) == pytest.approx(1.0, rel=1e-12)

    def test_gem_mu_is_harmonic(self):
        # GEM(θ=2)：μ = ψ(3) − ψ(2) = 1/2
        assert mu(parse_model_spec("gem:2")) == pytest.approx(0.5, rel=1e-12)

    def test_logpareto_mu(self):
        assert mu(parse_model_spec("logpareto:1.5")) == pytest.approx(2.0)
        assert math.isinf(mu(parse_model_spec("logpareto:1")))

    def test_example27_has_infinite_nu(self):
        model = parse_model_spec("example27")
        assert math.isinf(nu(model))
        assert math.isfinite(mu(model))


class TestQuantiles:
    def test_logpareto_quantile_value(self):
        model = parse_model_spec("logpareto:1")
        assert float(quantile_xibar(model, math.exp(-1.0))) == pytest.approx(math.exp(1.0 - math.e), rel=1e-12)

    @pytest.mark.parametrize("spec", ["beta:2,3", "logpareto:0.7", "example27"])
    def test_quantile_inverts_cdf(self, spec):
        model = parse_model_spec(spec)
        u = np.array([0.1, 0.37, 0.5, 0.9])
        np.testing.assert_allclose(xibar_cdf(model, quantile_xibar(model, u)), u, atol=1e-10)

    def test_atoms_quantile(self):
        model = make_model("custom", atoms=[(0.2, 0.5), (0.6, 0.5)], case_hint="a")
        np.testing.assert_allclose(quantile_xibar(model, [0.25, 0.75]), [0.2, 0.6])


class TestTruncatedMean:
    def test_logpareto_one_closed_form(self):
        assert truncated_mean(parse_model_spec("logpareto:1"), 4.0) == pytest.approx(math.log(5.0))

    def test_uniform_matches_exponential(self):
        # Beta(1,1)：−log ξ̄ ~ Exp(1)，m(x) = 1 − e^{−x}
        assert truncated_mean(parse_model_spec("beta:1,1"), 2.0) == pytest.approx(1.0 - math.exp(-2.0), rel=1e-8)


class TestClassification:
    @pytest.mark.parametrize(
        "spec, case",
        [
            ("beta:2,3", "a"),
            ("example27", "a"),
            ("logpareto:3", "a"),
            ("logpareto:2", "b"),
            ("logpareto:1.5", "c"),
            ("logpareto:1", "d"),
            ("logpareto:0.5", "e"),
        ],
    )
    def test_cases(self, spec, case):
        assert classify_case(parse_model_spec(spec)).case == case

    def test_custom_without_hint_unsupported(self):
        model = make_model("custom", atoms=[(0.5, 1.0)])
        assert not classify_case(model).supported

    @pytest.mark.parametrize("spec", ["beta:2,3", "gem:0.5", "logpareto:1.5", "example27"])
    def test_builtin_families_nonlattice(self, spec):
        assert parse_model_spec(spec).nonlattice

    def test_custom_nonlattice_is_opt_in(self):
        assert not make_model("custom", atoms=[(0.5, 1.0)]).nonlattice
        assert make_model("custom", quantile=lambda u: u, nonlattice=True).nonlattice


class TestMomentTable:
    def test_shared_and_bucketed(self):
        model = parse_model_spec("beta:2,3")
        table = moment_table(model, 10)
        assert table.k_max == 64
        assert moment_table(model, 50) is table
        assert moment_table(model, 100).k_max == 128
        with pytest.raises(ValueError):
            moment_table(model, -1)

    def test_arrays_read_only(self):
        table = moment_table(parse_model_spec("gem:2"), 8)
        with pytest.raises(ValueError):
            table.xi_moments[1] = 0.0

    def test_delegates_log_moments(self):
        model = parse_model_spec("beta:2,3")
        table = moment_table(model)
        assert (table.mu, table.nu, table.sigma2) == (mu(model), nu(model), sigma2(model))

    @pytest.mark.parametrize("spec", ["beta:2,3", "gem:0.5", "beta:0.7,4"])
    def test_first_moments_sum_to_one_closed_form(self, spec):
        table = moment_table(parse_model_spec(spec), 8)
        assert table.xi_moments[1] + table.xibar_moments[1] == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("spec", ["logpareto:0.7", "logpareto:3", "example27"])
    def test_first_moments_sum_to_one_quadrature(self, spec):
        table = moment_table(parse_model_spec(spec), 8)
        assert table.xi_moments[1] + table.xibar_moments[1] == pytest.approx(1.0, abs=10 * table.tolerance)

    @pytest.mark.parametrize("spec", ["beta:2,3", "gem:1", "logpareto:0.7", "example27"])
    def test_strictly_decreasing(self, spec):
        table = moment_table(parse_model_spec(spec), 64)
        for values in (table.xi_moments, table.xibar_moments):
            assert np.all(np.diff(values[:65]) < 0.0)
            assert np.all(values[1:65] > 0.0)

    def test_uniform_log_series(self):
        # 均匀模型 Eξ^k = 1/(k+1)，Σ_{k≤K} Eξ^k / k = 1 − 1/(K+1)
        table = moment_table(parse_model_spec("beta:1,1"), 100)
        k = np.arange(1, 101)
        assert np.sum(table.xi_moments[1:101] / k) == pytest.approx(1.0 - 1.0 / 101.0, abs=1e-12)

    def test_log_series_recovers_mu_and_nu(self):
        model = parse_model_spec("beta:2,3")
        table = moment_table(model, 4096)
        k = np.arange(1, 4097)
        # Σ Eξ̄^k / k = E(−log ξ) = ν；尾项约 6/K²
        assert np.sum(table.xi_moments[1:4097] / k) == pytest.approx(mu(model), abs=1e-6)
        assert np.sum(table.xibar_moments[1:4097] / k) == pytest.approx(nu(model), abs=1e-6)

    @pytest.mark.parametrize("spec", ["beta:2,3", "gem:0.5"])
    def test_closed_form_matches_quadrature(self, spec):
        model = parse_model_spec(spec)
        table = moment_table(model, 50)
        for k in range(1, 51):
            assert table.xi_moments[k] == pytest.approx(moment_by_quadrature(model, k, side="xi"), rel=1e-8)
            assert table.xibar_moments[k] == pytest.approx(moment_by_quadrature(model, k, side="xibar"), rel=1e-8)


class TestSamplers:
    @pytest.mark.parametrize("spec", ["beta:2,3", "gem:0.5", "logpareto:4", "example27"])
    def test_step_mean_within_four_standard_errors(self, spec):
        model = parse_model_spec(spec)
        size = 200_000
        steps = draw_steps(model, np.random.default_rng(2718), size)
        assert abs(np.mean(steps) - mu(model)) < 4.0 * math.sqrt(sigma2(model) / size)

    def test_example27_log_xi_matches_cdf(self):
        xi, _ = draw_pair(parse_model_spec("example27"), np.random.default_rng(31), 20_000)
        # ξ 下溢为 0 时 −log ξ = ∞，分布函数取 1
        assert ks_one_sample(-np.log(xi), lambda y: 1.0 - 1.0 / (1.0 + y)).passed

    def test_example27_xibar_matches_cdf(self):
        model = parse_model_spec("example27")
        xibar = sample_xibar(model, np.random.default_rng(37), 20_000)
        assert ks_one_sample(xibar, lambda x: xibar_cdf(model, x)).passed
