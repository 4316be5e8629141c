"""极限律、归一化序列与 limit_for 的分派。"""

import math

import numpy as np
import pytest

from bernoulli_sieve.errors import InapplicableError
from bernoulli_sieve.limit_laws import (
    law_cdf,
    law_moment,
    law_sample,
    mittag_leffler,
    mixed_poisson_gem,
    mixed_poisson_gem_mean,
    mixed_poisson_gem_pgf,
    mixed_poisson_gem_pmf,
    normal01,
    one_stable,
    point_mass,
    stable,
    z_limit,
    z_limit_pmf,
    z_limit_remainder,
)
from bernoulli_sieve.normalization import limit_for, normalization, solve_c
from bernoulli_sieve.xi_models import logpareto2_truncated_second_moment, make_model, parse_model_spec


class TestMixedPoisson:
    @pytest.mark.parametrize("k", range(6))
    def test_theta_one_is_geometric(self, k):
        assert mixed_poisson_gem_pmf(1.0, k) == pytest.approx(2.0 ** -(k + 1), rel=1e-8)

    def test_pgf_and_mean(self):
        assert mixed_poisson_gem_pgf(1.0, 0.3) == pytest.approx(1.0 / 1.7, rel=1e-12)
        assert mixed_poisson_gem_mean(1.0) == pytest.approx(1.0, rel=1e-12)

    def test_second_moment(self):
        assert law_moment(mixed_poisson_gem(1.0), 2) == pytest.approx(3.0, rel=1e-8)

    def test_pmf_sums_to_pgf_at_one(self):
        theta = 2.5
        total = sum(mixed_poisson_gem_pmf(theta, k) for k in range(200))
        assert total == pytest.approx(mixed_poisson_gem_pgf(theta, 1.0), abs=1e-8)


class TestMittagLeffler:
    def test_alpha_zero_is_exponential(self):
        law = mittag_leffler(0.0)
        assert law_moment(law, 3) == pytest.approx(6.0, rel=1e-12)
        assert law_cdf(law, 1.0) == pytest.approx(1.0 - math.exp(-1.0), rel=1e-12)

    @pytest.mark.parametrize("y", [0.2, 0.8, 1.5])
    def test_alpha_half_is_half_normal(self, y):
        assert law_cdf(mittag_leffler(0.5), y) == pytest.approx(math.erf(y * math.sqrt(math.pi) / 2.0), abs=1e-6)

    def test_sample_mean(self):
        law = mittag_leffler(0.5)
        draws = law_sample(law, np.random.default_rng(3), 50_000)
        # 均值 1/(Γ(1/2)Γ(3/2)) = 2/π，方差有限
        assert np.mean(draws) == pytest.approx(law_moment(law, 1), abs=0.02)

    def test_rejects_alpha(self):
        with pytest.raises(ValueError):
            mittag_leffler(1.0)


class TestStable:
    def test_moments(self):
        assert law_moment(stable(1.5), 1) == 0.0
        assert math.isinf(law_moment(stable(1.5), 2))
        assert math.isinf(law_moment(one_stable(), 1))

    def test_cdf_monotone(self):
        values = [law_cdf(stable(1.5), x) for x in (-4.0, -1.0, 0.0, 1.0, 4.0)]
        assert all(0.0 <= v <= 1.0 for v in values)
        assert values == sorted(values)

    def test_sampler_matches_cdf(self):
        law = stable(1.5)
        draws = np.sort(law_sample(law, np.random.default_rng(8), 20_000))
        points = draws[np.linspace(200, 19_800, 40).astype(int)]
        ecdf = np.searchsorted(draws, points, side="right") / draws.size
        assert np.max(np.abs(ecdf - law_cdf(law, points))) < 0.02

    def test_rejects_alpha(self):
        with pytest.raises(ValueError):
            stable(2.0)


class TestSimpleLaws:
    def test_normal(self):
        assert law_cdf(normal01(), 0.0) == 0.5
        assert law_moment(normal01(), 4) == pytest.approx(3.0)

    def test_point_mass(self):
        np.testing.assert_array_equal(law_cdf(point_mass(0.0), np.array([-1.0, 0.0, 2.0])), [0.0, 1.0, 1.0])


class TestZLimit:
    def test_uniform_pmf(self):
        model = parse_model_spec("beta:1,1")
        for k in range(1, 8):
            assert z_limit_pmf(model, k) == pytest.approx(1.0 / (k * (k + 1)), rel=1e-12)
        assert z_limit_remainder(model, 9) == pytest.approx(0.1, rel=1e-10)

    def test_cdf_matches_pmf(self):
        model = parse_model_spec("beta:2,3")
        expected = sum(z_limit_pmf(model, k) for k in range(1, 4))
        assert law_cdf(z_limit(model), 3.5) == pytest.approx(expected, rel=1e-12)

    def test_infinite_mu(self):
        with pytest.raises(InapplicableError):
            z_limit(parse_model_spec("logpareto:0.5"))


class TestNormalization:
    def test_case_a_uniform(self):
        schedule = normalization(parse_model_spec("beta:1,1"))
        n = 1e6
        assert schedule.b(n) == pytest.approx(math.log(n))
        assert schedule.a(n) == pytest.approx(math.sqrt(math.log(n)))

    def test_case_e(self):
        schedule = normalization(parse_model_spec("logpareto:0.5"))
        assert schedule.a(1e8) == pytest.approx(math.sqrt(math.log(1e8)))
        assert schedule.b(1e8) == 0.0

    def test_case_c(self):
        schedule = normalization(parse_model_spec("logpareto:1.5"))
        log_n = math.log(1e9)
        assert schedule.b(1e9) == pytest.approx(log_n / 2.0)
        assert schedule.a(1e9) == pytest.approx(2.0 ** (-5.0 / 3.0) * log_n ** (2.0 / 3.0), rel=1e-9)

    def test_case_b_solves_at_floor(self):
        schedule = normalization(parse_model_spec("logpareto:2"))
        c = schedule.values(1e9)["c_n"]
        level = math.floor(math.log(1e9))
        assert level * logpareto2_truncated_second_moment(c) / c**2 == pytest.approx(1.0, rel=1e-9)

    def test_case_d_pinned(self):
        schedule = normalization(parse_model_spec("logpareto:1"))
        log_n = math.log(1e6)
        log_log = math.log(log_n)
        assert schedule.a(1e6) == pytest.approx(log_n / log_log**2)
        assert schedule.a(1e6) == pytest.approx(2.0038, abs=1e-3)
        assert schedule.b(1e6) == pytest.approx(schedule.a(1e6) * (log_log + math.log(log_log)))
        assert schedule.experimental

    @pytest.mark.parametrize("x", [5.0, 50.0, 500.0])
    def test_case_d_inverse(self, x):
        schedule = normalization(parse_model_spec("logpareto:1"))
        assert schedule.b_function(schedule.psi(x)) == pytest.approx(x, rel=1e-8)

    def test_solve_c_power(self):
        assert solve_c(27.0, 1.5, lambda _: 1.0) == pytest.approx(9.0, rel=1e-10)

    def test_unsupported_custom(self):
        with pytest.raises(InapplicableError):
            normalization(make_model("custom", atoms=[(0.5, 1.0)]))


class TestLimitFor:
    def test_w_normal(self):
        result = limit_for(parse_model_spec("beta:2,3"), "w")
        assert result.kind == "normalized"
        assert result.law.variant == "normal01"

    def test_k0_degenerate(self):
        result = limit_for(parse_model_spec("logpareto:1"), "k0")
        assert result.kind == "degenerate"
        assert result.law == point_mass(0.0)

    def test_k0_gem(self):
        result = limit_for(parse_model_spec("gem:2"), "k0")
        assert result.law == mixed_poisson_gem(2.0)

    def test_example27(self):
        model = parse_model_spec("example27")
        with pytest.raises(InapplicableError):
            limit_for(model, "w")
        result = limit_for(model, "k0")
        assert result.kind == "diverges"
        with pytest.raises(InapplicableError):
            result.apply(100, [1, 2])
        assert limit_for(model, "kstar").law.variant == "normal01"

    def test_z_transformed(self):
        result = limit_for(parse_model_spec("logpareto:0.5"), "z")
        assert result.law.variant == "beta"
        assert result.law.params == (0.5, 0.5)
        np.testing.assert_allclose(result.apply(100.0, [10.0]), [0.5])
        assert limit_for(parse_model_spec("logpareto:1"), "z").law.variant == "uniform01"

    def test_case_laws(self):
        assert limit_for(parse_model_spec("logpareto:1.5"), "kstar").law == stable(1.5)
        assert limit_for(parse_model_spec("logpareto:0.5"), "k").law == mittag_leffler(0.5)

    def test_unknown_functional(self):
        with pytest.raises(ValueError):
            limit_for(parse_model_spec("beta:1,1"), "bogus")

    def test_normalize(self):
        result = limit_for(parse_model_spec("beta:1,1"), "kstar")
        n = math.e**4
        np.testing.assert_allclose(result.apply(n, [4.0, 6.0]), [0.0, 1.0])

    def test_unattested_custom_is_experimental(self):
        atoms = [(0.3, 0.5), (0.6, 0.5)]
        plain = limit_for(make_model("custom", atoms=atoms, case_hint="a"), "kstar")
        assert plain.experimental
        assert "非格点" in plain.note
        attested = limit_for(make_model("custom", atoms=atoms, case_hint="a", nonlattice=True), "kstar")
        assert not attested.experimental
        assert attested.law == plain.law

    def test_builtin_results_not_flagged(self):
        assert not limit_for(parse_model_spec("beta:2,3"), "kstar").experimental
