"""蒙特卡洛引擎：组合不变量、统计量、确定性与各构造之间的一致性。"""

import math

import numpy as np
import pytest
from scipy import stats as sps

from bernoulli_sieve.errors import ConfigError
from bernoulli_sieve.exact import Pmf, kstar_pmf
from bernoulli_sieve.rng import stream
from bernoulli_sieve.sieve_sim import (
    SieveStats,
    WeakComposition,
    check_n,
    remove_random_ball,
    resolve_selector,
    run_replicates,
    simulate_composition,
    simulate_composition_walkpoints,
    simulate_kstar_fast,
    simulate_poissonized,
    simulate_renewal_count,
    simulate_undershoot,
    stats_from_composition,
)
from bernoulli_sieve.stats_harness import chi_square, ks_two_sample, tv_distance
from bernoulli_sieve.xi_models import parse_model_spec

UNIFORM = parse_model_spec("beta:1,1")


def _assert_mean_close(samples, expected, n_se=4.0):
    samples = np.asarray(samples, dtype=float)
    se = samples.std(ddof=1) / math.sqrt(samples.size)
    assert abs(samples.mean() - expected) < n_se * se + 1e-12


class TestWeakComposition:
    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            WeakComposition((1, 2), 4)

    def test_rejects_trailing_zero(self):
        with pytest.raises(ValueError):
            WeakComposition((2, 0), 2)

    def test_empty(self):
        stats = stats_from_composition(WeakComposition((), 0))
        assert (stats.kstar, stats.k, stats.w) == (0, 0, 1)


class TestStats:
    def test_known_composition(self):
        stats = stats_from_composition(WeakComposition((2, 0, 1, 0, 3), 6))
        assert stats.kstar == 5
        assert stats.k0 == 2
        assert stats.k == 3
        assert stats.k1 == 1
        assert stats.w == 2
        assert stats.v == 4
        assert stats.z == 3
        assert stats.y == 3

    def test_no_empty_box(self):
        stats = stats_from_composition(WeakComposition((1, 1, 2), 4))
        assert stats.w == 4
        assert stats.v == 0

    @pytest.mark.parametrize("spec", ["beta:1,1", "gem:3", "logpareto:0.7", "example27"])
    def test_invariants_on_random_compositions(self, spec):
        model = parse_model_spec(spec)
        rng = np.random.default_rng(11)
        for _ in range(50):
            comp = simulate_composition(model, 40, rng)
            stats = stats_from_composition(comp)
            assert sum(comp.counts) == 40
            assert stats.kstar == stats.k + stats.k0
            assert stats.z == comp.counts[-1] >= 1
            assert 1 <= stats.w <= stats.kstar + 1


class TestEngines:
    def test_sieve_matches_exact_mean(self):
        rng = np.random.default_rng(1)
        samples = [stats_from_composition(simulate_composition(UNIFORM, 20, rng)).kstar for _ in range(4000)]
        _assert_mean_close(samples, kstar_pmf(UNIFORM, 20).mean())

    def test_walkpoints_matches_exact_mean(self):
        rng = np.random.default_rng(2)
        samples = [
            stats_from_composition(simulate_composition_walkpoints(UNIFORM, 20, rng)).kstar for _ in range(4000)
        ]
        _assert_mean_close(samples, kstar_pmf(UNIFORM, 20).mean())

    def test_fast_path_matches_exact_mean(self):
        model = parse_model_spec("beta:2,3")
        rng = np.random.default_rng(3)
        samples = [simulate_kstar_fast(model, 50, rng) for _ in range(4000)]
        _assert_mean_close(samples, kstar_pmf(model, 50).mean())

    def test_removing_a_ball_gives_smaller_sieve(self):
        rng = np.random.default_rng(4)
        samples = []
        for _ in range(4000):
            comp = remove_random_ball(simulate_composition(UNIFORM, 21, rng), rng)
            samples.append(stats_from_composition(comp).kstar)
        _assert_mean_close(samples, kstar_pmf(UNIFORM, 20).mean())

    def test_renewal_count_at_zero(self):
        assert simulate_renewal_count(UNIFORM, 0.0, np.random.default_rng(0)) == 1

    def test_undershoot_gaps_increase(self):
        sample = simulate_undershoot(UNIFORM, 100, np.random.default_rng(5), k_cap=16)
        assert np.all(np.diff(sample.gaps) > 0)
        assert 0.0 <= sample.undershoot <= sample.e_max
        with pytest.raises(ValueError):
            sample.z_exceeds(17)


class TestReplicates:
    def test_independent_of_workers(self):
        serial = run_replicates(UNIFORM, 30, 300, seed=9, selector="kstar,k0,w", workers=1)
        parallel = run_replicates(UNIFORM, 30, 300, seed=9, selector="kstar,k0,w", workers=2)
        assert list(serial) == ["kstar", "k0", "w"]
        for name in serial:
            np.testing.assert_array_equal(serial[name], parallel[name])

    def test_replicate_uses_its_own_stream(self):
        columns = run_replicates(UNIFORM, 25, 3, seed=5, selector=["k", "kstar", "k0"])
        stats = stats_from_composition(simulate_composition(UNIFORM, 25, stream(5, 2)))
        assert columns["kstar"][2] == stats.kstar
        np.testing.assert_array_equal(columns["kstar"], columns["k"] + columns["k0"])

    def test_fast_path_handles_huge_n(self):
        columns = run_replicates(parse_model_spec("gem:1"), 1e12, 20, seed=1, selector="kstar,nlogn")
        assert np.all(columns["kstar"] >= 1)
        assert np.all(columns["nlogn"] >= 1)

    def test_selector_rejects_unknown(self):
        with pytest.raises(ConfigError):
            resolve_selector("kstar,bogus")

    def test_check_n_limits(self):
        check_n(1e15, ("kstar",))
        with pytest.raises(ConfigError):
            check_n(2e9, ("k",))
        with pytest.raises(ConfigError):
            check_n(2.5, ("k",))
        with pytest.raises(ConfigError):
            check_n(1e16, ("kstar",))


class TestBinomialThinning:
    # 固定的 ξ 序列，第 5 盒起 ξ = 1 接住全部剩余球
    XI = (0.3, 0.5, 0.2, 0.6)
    N = 20
    REPS = 3000

    @pytest.fixture
    def fixed_xi(self, monkeypatch):
        def draw_pair(model, rng, size):
            xi = np.ones(size)
            xi[: len(self.XI)] = self.XI
            return xi, np.zeros(size)

        monkeypatch.setattr("bernoulli_sieve.sieve_sim.draw_pair", draw_pair)

    def _box_probabilities(self):
        probs, left = [], 1.0
        for xi in self.XI:
            probs.append(left * xi)
            left *= 1.0 - xi
        probs.append(left)
        return np.array(probs)

    def test_box_totals(self, fixed_xi):
        rng = np.random.default_rng(41)
        totals = np.zeros(len(self.XI) + 1)
        for _ in range(self.REPS):
            counts = simulate_composition(UNIFORM, self.N, rng).counts
            assert len(counts) <= len(totals)
            totals[: len(counts)] += counts
        expected = self.REPS * self.N * self._box_probabilities()
        assert chi_square(totals, expected).passed

    def test_first_box_is_binomial(self, fixed_xi):
        rng = np.random.default_rng(43)
        first = [simulate_composition(UNIFORM, self.N, rng).counts[0] for _ in range(self.REPS)]
        observed = np.bincount(first, minlength=self.N + 1)
        expected = sps.binom.pmf(np.arange(self.N + 1), self.N, self.XI[0])
        assert chi_square(observed, expected).passed


class TestEquidistribution:
    REPS = 1500

    @pytest.mark.parametrize("n", [10, 100, 1000])
    @pytest.mark.parametrize("spec", ["beta:1,1", "beta:2,3", "gem:3", "logpareto:0.7", "example27"])
    def test_sieve_matches_walkpoints(self, spec, n):
        model = parse_model_spec(spec)
        rng_sieve, rng_walk = np.random.default_rng(100 + n), np.random.default_rng(200 + n)
        sieve = [stats_from_composition(simulate_composition(model, n, rng_sieve)) for _ in range(self.REPS)]
        walk = [
            stats_from_composition(simulate_composition_walkpoints(model, n, rng_walk)) for _ in range(self.REPS)
        ]
        for name in ("kstar", "k", "k0"):
            a = [getattr(stats, name) for stats in sieve]
            b = [getattr(stats, name) for stats in walk]
            report = ks_two_sample(a, b, name=f"{spec}:{n}:{name}", alpha=1e-4)
            assert report.passed, report


class TestPoissonized:
    def test_zero_intensity(self):
        stats = simulate_poissonized(UNIFORM, 0.0, np.random.default_rng(0))
        assert stats == SieveStats(k=0, kstar=0, k0=0, k1=0, w=1, z=0, v=0)
        assert stats == stats_from_composition(WeakComposition((), 0))

    def test_rejects_negative_intensity(self):
        with pytest.raises(ValueError):
            simulate_poissonized(UNIFORM, -1.0, np.random.default_rng(0))

    def test_gem_one_empty_boxes_geometric(self):
        # GEM(1) 下 K_0 的极限为几何律 P{K_0 = k} = 2^{−(k+1)}
        rng = np.random.default_rng(53)
        samples = [simulate_poissonized(parse_model_spec("gem:1"), 1e4, rng).k0 for _ in range(4000)]
        limit = Pmf.from_probs(0, 0.5 ** np.arange(1, 41))
        assert tv_distance(limit, samples).passed

    def test_matches_fixed_n(self):
        model = parse_model_spec("beta:2,3")
        rng_poisson, rng_fixed = np.random.default_rng(59), np.random.default_rng(61)
        poissonized = [simulate_poissonized(model, 200.0, rng_poisson).k for _ in range(3000)]
        fixed = [stats_from_composition(simulate_composition(model, 200, rng_fixed)).k for _ in range(3000)]
        assert ks_two_sample(poissonized, fixed).passed
