"""
verify 子命令的命名套件。套件名是稳定接口。

每个套件接收 SuiteContext，返回 TestReport 列表。--reps 覆盖套件内声明的重复次数；
离散计数与连续极限比较前加 U(−½, ½) 平滑，Z_n 的对数尺度比较用 Z_n + U(0,1)。
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .exact import (
    decrement_table,
    e_k0_alt_sum,
    e_k0_dp,
    gem_k0_exact_pmf,
    k01_limit_tail,
    k0_limit_tail,
    k0_pmf,
    k_pmf,
    kstar_pmf,
    kstar_tail_direct,
    plain_transition,
    visit_probs,
    zn_pmf,
)
from .limit_laws import (
    LimitLaw,
    law_cdf,
    law_moment,
    law_sample,
    mittag_leffler,
    mixed_poisson_gem,
    mixed_poisson_gem_pgf,
    mixed_poisson_gem_pmf,
    one_stable,
    stable,
)
from .normalization import limit_for
from .rng import mix64, stream
from .sieve_sim import run_replicates, simulate_undershoot
from .stats_harness import (
    TestReport,
    ks_one_sample,
    ks_two_sample,
    moment_z,
    trend_test,
    tv_distance,
)
from .storage import render_samples
from .xi_models import mu, nu, parse_model_spec

logger = logging.getLogger(__name__)

ROUTE_MODELS = ("beta:1,1", "beta:2,3", "gem:1", "gem:2")
ROUTE_NS = (1, 2, 5, 10, 25, 50, 100)


@dataclass(frozen=True)
class SuiteContext:
    seed: int
    reps: Optional[int] = None
    workers: int = 1
    engine: str = "sieve"

    def reps_for(self, default: int) -> int:
        return self.reps if self.reps else default

    def seed_for(self, tag: int) -> int:
        """同一套件内不同实验使用互不相关的主种子。"""
        return mix64((self.seed * 1_000_003 + tag) & ((1 << 64) - 1)) >> 1


def _below(name: str, statistic: float, threshold: float, experimental: bool = False, **metadata) -> TestReport:
    status = "pass" if statistic < threshold else "fail"
    return TestReport(name, float(statistic), float(threshold), status, experimental=experimental, metadata=metadata)


def _experimental(report: TestReport, reason: str) -> TestReport:
    """标为实验性；观测到的 KS 值照常写入 metadata 与日志，不计入退出码。"""
    report.experimental = True
    report.metadata["observed_ks"] = f"{report.statistic:.4g}"
    report.metadata["experimental_reason"] = reason
    logger.info("%s：KS = %.4g（阈值 %.4g，实验性：%s）", report.name, report.statistic, report.threshold, reason)
    return report


def _smooth(values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return np.asarray(values, dtype=float) + rng.random(len(values)) - 0.5


def _law_cdf_on(law: LimitLaw, samples: np.ndarray, points: int = 400) -> Callable[[np.ndarray], np.ndarray]:
    """在样本分位范围内的网格上求分布函数再线性插值。"""
    low, high = np.quantile(samples, [1e-4, 1.0 - 1e-4])
    grid = np.linspace(low, high, points)
    values = np.maximum.accumulate(np.asarray(law_cdf(law, grid), dtype=float))

    def cdf(x: np.ndarray) -> np.ndarray:
        return np.interp(x, grid, values, left=0.0, right=1.0)

    return cdf


# ---------------------------------------------------------------------------
# uniform-closed-forms
# ---------------------------------------------------------------------------


def uniform_closed_forms(ctx: SuiteContext) -> List[TestReport]:
    """Beta(1,1)，n ≤ 200 的解析恒等式。"""
    model = parse_model_spec("beta:1,1")
    n_max, tol = 200, 1e-10
    rows = np.arange(n_max + 1)[:, None]
    cols = np.arange(n_max + 1)[None, :]

    table = decrement_table(model, n_max)
    lower = cols <= rows
    qstar_error = float(np.max(np.abs(np.where(lower, table - 1.0 / (rows + 1.0), 0.0))))

    plain = plain_transition(model, n_max)
    strict = (cols < rows) & (rows >= 1)
    q_error = float(np.max(np.abs(np.where(strict, plain - 1.0 / np.maximum(rows, 1), 0.0))))

    visits = visit_probs(model, n_max).table
    inner = strict & (cols >= 1)
    g_error = float(np.max(np.abs(np.where(inner, visits - 1.0 / (cols + 1.0), 0.0))))

    z_error = 0.0
    mean_error = 0.0
    for n in range(1, n_max + 1):
        m = np.arange(1, n + 1, dtype=float)
        expected = 1.0 / (m * (m + 1.0))
        expected[-1] = 1.0 / n
        z_error = max(z_error, float(np.max(np.abs(zn_pmf(model, n).probs - expected))))
        mean_error = max(mean_error, abs(e_k0_dp(model, n) - 1.0))

    meta = {"model": model.label, "n_max": n_max}
    return [
        _below("q*(n:m) = 1/(n+1)", qstar_error, tol, **meta),
        _below("q(n:m) = 1/n", q_error, tol, **meta),
        _below("g(n,m) = 1/(m+1)", g_error, tol, **meta),
        _below("P{Z_n=m} = 1/(m(m+1)), atom 1/n", z_error, tol, **meta),
        _below("E K_{n,0} = 1", mean_error, tol, **meta),
    ]


# ---------------------------------------------------------------------------
# route-equivalence
# ---------------------------------------------------------------------------


def route_equivalence(ctx: SuiteContext, models: Sequence[str] = ROUTE_MODELS, ns: Sequence[int] = ROUTE_NS) -> List[TestReport]:
    tol = 1e-8
    reports: List[TestReport] = []
    for spec in models:
        model = parse_model_spec(spec)
        tail_error = mean_error = gem_error = 0.0
        for n in ns:
            pmf = kstar_pmf(model, n)
            for k in range(min(len(pmf.probs), 40)):
                tail_error = max(tail_error, abs(pmf.tail(k) - kstar_tail_direct(model, n, k)))
            alternating = e_k0_alt_sum(model, n)
            recursive = e_k0_dp(model, n)
            from_pmf = k0_pmf(model, n).mean()
            mean_error = max(mean_error, abs(alternating - recursive), abs(recursive - from_pmf))
            if model.is_gem:
                direct = k0_pmf(model, n).probs
                convolved = gem_k0_exact_pmf(model.gem_theta, n).probs
                size = max(len(direct), len(convolved))
                gem_error = max(
                    gem_error,
                    float(np.max(np.abs(np.pad(direct, (0, size - len(direct))) - np.pad(convolved, (0, size - len(convolved)))))),
                )
        meta = {"model": model.label, "n": ",".join(str(n) for n in ns)}
        reports.append(_below(f"K*_n tail: recursion vs alternating [{model.label}]", tail_error, tol, **meta))
        reports.append(_below(f"E K_n,0: alternating vs DP vs pmf [{model.label}]", mean_error, tol, **meta))
        if model.is_gem:
            reports.append(_below(f"K_n,0 pmf: recursion vs GEM convolution [{model.label}]", gem_error, tol, **meta))
    return reports


# ---------------------------------------------------------------------------
# mc-vs-exact（含确定性检查）
# ---------------------------------------------------------------------------


def mc_vs_exact(ctx: SuiteContext) -> List[TestReport]:
    n = 100
    reps = ctx.reps_for(100_000)
    exact = {"k": k_pmf, "kstar": kstar_pmf, "k0": k0_pmf, "z": zn_pmf}
    reports: List[TestReport] = []
    for tag, spec in enumerate(("beta:1,1", "beta:2,3")):
        model = parse_model_spec(spec)
        for offset, engine in enumerate(("sieve", "walkpoints")):
            seed = ctx.seed_for(10 * tag + offset)
            columns = run_replicates(model, n, reps, seed, tuple(exact), workers=ctx.workers, engine=engine)
            for stat, builder in exact.items():
                reports.append(
                    tv_distance(
                        builder(model, n),
                        columns[stat],
                        name=f"TV {stat} [{model.label}, {engine}]",
                        max_distance=0.02,
                        metadata={"model": model.label, "n": n, "reps": reps, "engine": engine},
                    )
                )
    reports.append(determinism_check(ctx))
    return reports


def determinism_check(ctx: SuiteContext, reps: int = 2000) -> TestReport:
    """workers = 1 与多进程下的输出逐字节一致。"""
    model = parse_model_spec("beta:2,3")
    fields = ("k", "kstar", "k0", "k1", "w", "z", "v")
    seed = ctx.seed_for(99)
    parallel = max(2, ctx.workers)
    serial_text = render_samples(run_replicates(model, 100, reps, seed, fields, workers=1), [])
    parallel_text = render_samples(run_replicates(model, 100, reps, seed, fields, workers=parallel), [])
    differing = sum(a != b for a, b in zip(serial_text.splitlines(), parallel_text.splitlines()))
    differing += abs(len(serial_text.splitlines()) - len(parallel_text.splitlines()))
    return TestReport(
        "determinism: workers 1 vs parallel",
        float(differing),
        0.0,
        "pass" if differing == 0 else "fail",
        sizes=(reps,),
        metadata={"workers": parallel, "model": model.label},
    )


# ---------------------------------------------------------------------------
# clt-trend
# ---------------------------------------------------------------------------


def clt_trend(ctx: SuiteContext) -> List[TestReport]:
    model = parse_model_spec("beta:2,3")
    reps = ctx.reps_for(100_000)
    result = limit_for(model, "kstar")
    cdf = lambda x: law_cdf(result.law, x)  # noqa: E731
    jitter = stream(ctx.seed_for(0), 0)

    distances: List[float] = []
    reports: List[TestReport] = []
    decades = (1e3, 1e6, 1e9, 1e12)
    for index, n in enumerate(decades):
        samples = run_replicates(model, n, reps, ctx.seed_for(1 + index), ("kstar",), workers=ctx.workers)["kstar"]
        report = ks_one_sample(
            result.apply(n, _smooth(samples, jitter)),
            cdf,
            name=f"KS K*_n vs N(0,1) at n={n:.0e}",
            max_statistic=0.08 if n == decades[-1] else None,
            metadata={"model": model.label, "n": n, "reps": reps},
        )
        distances.append(report.statistic)
        if n == decades[-1]:
            reports.append(report)
    reports.append(trend_test(distances, "decreasing", name="KS distance decreasing across decades"))

    # K_n、W_n 与 K_n* 共享极限：同一归一化下比较
    full_n = (100, 10_000, 1_000_000)
    gaps: List[float] = []
    for index, n in enumerate(full_n):
        columns = run_replicates(
            model, n, reps, ctx.seed_for(10 + index), ("k", "kstar", "w"), workers=ctx.workers, engine=ctx.engine
        )
        gaps.append(ks_two_sample(columns["k"], columns["kstar"]).statistic)
        if n == full_n[-1]:
            fast = run_replicates(model, n, reps, ctx.seed_for(20), ("kstar",), workers=ctx.workers)["kstar"]
            reference = result.apply(n, fast)
            for stat in ("w", "k"):
                report = ks_two_sample(
                    result.apply(n, columns[stat]),
                    reference,
                    name=f"KS {stat}_n vs K*_n (same normalization) at n=1e6",
                    max_statistic=0.03,
                    metadata={"model": model.label, "n": n, "offset": "nu/mu"},
                )
                reports.append(_experimental(report, "ν/μ 偏移在桌面规模下不可忽略"))
    reports.append(trend_test(gaps, "decreasing", name="KS(K_n, K*_n) decreasing across decades"))
    return reports


# ---------------------------------------------------------------------------
# mittag-leffler（含稳定律分布函数与抽样器的互校）
# ---------------------------------------------------------------------------


def mittag_leffler_suite(ctx: SuiteContext) -> List[TestReport]:
    model = parse_model_spec("logpareto:0.5")
    n = 1e12
    reps = ctx.reps_for(100_000)
    result = limit_for(model, "kstar")
    samples = run_replicates(model, n, reps, ctx.seed_for(0), ("kstar",), workers=ctx.workers)["kstar"]
    normalized = result.apply(n, _smooth(samples, stream(ctx.seed_for(1), 0)))
    reference = law_sample(result.law, stream(ctx.seed_for(2), 0), reps)
    reports = [
        ks_two_sample(
            normalized,
            reference,
            name="KS K*_n/(log n)^0.5 vs ML(0.5) sampler",
            max_statistic=0.05,
            metadata={"model": model.label, "n": n, "reps": reps},
        )
    ]

    law = mittag_leffler(0.5)
    draws = law_sample(law, stream(ctx.seed_for(3), 0), ctx.reps_for(1_000_000))
    reports.append(
        moment_z(draws, [law_moment(law, k) for k in range(1, 5)], name="ML(0.5) sampler moments k=1..4")
    )
    reports.extend(stable_law_checks(ctx))
    return reports


def stable_law_checks(ctx: SuiteContext) -> List[TestReport]:
    size = ctx.reps_for(100_000)
    reports: List[TestReport] = []
    laws = [stable(alpha) for alpha in (1.25, 1.5, 1.75)] + [one_stable()]
    for index, law in enumerate(laws):
        draws = law_sample(law, stream(ctx.seed_for(40 + index), 0), size)
        reports.append(
            ks_one_sample(
                draws,
                _law_cdf_on(law, draws),
                name=f"KS {law.name} sampler vs inverted CDF",
                max_statistic=0.01,
                metadata={"draws": size},
            )
        )
    return reports


# ---------------------------------------------------------------------------
# gem-k0
# ---------------------------------------------------------------------------


def gem_k0(ctx: SuiteContext) -> List[TestReport]:
    model = parse_model_spec("gem:1")
    reports: List[TestReport] = []

    pmf = k0_pmf(model, 2000)
    geometric = 0.5 ** (np.arange(len(pmf.probs)) + 1.0)
    distance = 0.5 * (float(np.sum(np.abs(pmf.probs - geometric))) + pmf.mass_deficit + 0.5 ** len(pmf.probs))
    reports.append(_below("TV(K_2000,0, geometric(1/2)) [GEM(1)]", distance, 1e-2, model=model.label))

    target = nu(model) / mu(model)
    values, remainder, i = [], 0.0, 1
    while True:
        tail = k0_limit_tail(model, i)
        values.append(tail.value)
        remainder = tail.remainder
        if tail.value < 1e-14 or i > 500:
            break
        i += 1
    total = float(np.sum(values))
    reports.append(
        _below(
            "Σ P{K_∞,0 ≥ i} + remainder = ν/μ [GEM(1)]",
            abs(total + remainder - target),
            1e-4,
            model=model.label,
            remainder=f"{remainder:.3e}",
        )
    )

    values, i = [], 1
    while True:
        tail = k01_limit_tail(model, i)
        values.append(tail.value)
        remainder = tail.remainder
        if tail.value < 1e-14 or i > 500:
            break
        i += 1
    reports.append(
        _below(
            "E K_01 = (ν+1)/μ [GEM(1)]",
            abs(float(np.sum(values)) + remainder - (nu(model) + 1.0) / mu(model)),
            1e-3,
            model=model.label,
            remainder=f"{remainder:.3e}",
        )
    )

    for theta in (1.0, 2.0):
        probs = np.array([mixed_poisson_gem_pmf(theta, k) for k in range(200)])
        worst = max(
            abs(float(np.sum(probs * s ** np.arange(200))) - mixed_poisson_gem_pgf(theta, s))
            for s in (0.0, 0.25, 0.5, 0.75, 1.0)
        )
        reports.append(_below(f"mixed Poisson pmf vs pgf [θ={theta:g}]", worst, 1e-8))
        gem = parse_model_spec(f"gem:{theta:g}")
        reports.append(
            _below(
                f"mixed Poisson mean = ν/μ [θ={theta:g}]",
                abs(law_moment(mixed_poisson_gem(theta), 1) - nu(gem) / mu(gem)),
                1e-8,
            )
        )
    return reports


# ---------------------------------------------------------------------------
# z-limits
# ---------------------------------------------------------------------------


def z_limits(ctx: SuiteContext) -> List[TestReport]:
    n = 1_000_000
    reports: List[TestReport] = []

    uniform = parse_model_spec("beta:1,1")
    reps = ctx.reps_for(1_000_000)
    z = run_replicates(uniform, n, reps, ctx.seed_for(0), ("z",), workers=ctx.workers, engine=ctx.engine)["z"]
    worst = max(abs(float(np.mean(z == k)) - 1.0 / (k * (k + 1.0))) for k in range(1, 11))
    reports.append(_below("max_k≤10 |P̂{Z_n=k} − 1/(k(k+1))| [beta:1,1]", worst, 0.005, n=n, reps=reps))

    jitter = stream(ctx.seed_for(1), 0)
    for tag, (spec, threshold) in enumerate((("logpareto:0.5", 0.05), ("logpareto:1", 0.08)), start=2):
        model = parse_model_spec(spec)
        result = limit_for(model, "z")
        reps_z = ctx.reps_for(100_000)
        values = run_replicates(model, n, reps_z, ctx.seed_for(tag), ("z",), workers=ctx.workers, engine=ctx.engine)["z"]
        smoothed = np.asarray(values, dtype=float) + jitter.random(len(values))
        reports.append(
            ks_one_sample(
                result.apply(n, smoothed),
                lambda x, law=result.law: law_cdf(law, x),
                name=f"KS {result.transform_name} vs {result.law.name} [{model.label}]",
                max_statistic=threshold,
                metadata={"model": model.label, "n": n, "reps": reps_z},
            )
        )

    # 欠冲表示：P{Z_n > 1} 两种估计
    reps_u = ctx.reps_for(100_000)
    exceed = np.array(
        [simulate_undershoot(uniform, n, stream(ctx.seed_for(5), i)).z_exceeds(1) for i in range(reps_u)], dtype=float
    )
    p_under, p_full = float(np.mean(exceed)), float(np.mean(z > 1))
    error = math.sqrt(p_under * (1 - p_under) / reps_u + p_full * (1 - p_full) / len(z))
    score = abs(p_under - p_full) / error if error > 0 else math.inf
    reports.append(_below("undershoot P{Z_n>1} vs simulated Z_n (SE units)", score, 4.0, n=n, reps=reps_u))
    return reports


# ---------------------------------------------------------------------------
# equivalence-kstar-renewal
# ---------------------------------------------------------------------------


def equivalence_kstar_renewal(ctx: SuiteContext) -> List[TestReport]:
    model = parse_model_spec("beta:1,1")
    reps = ctx.reps_for(100_000)
    reports: List[TestReport] = []
    distances: List[float] = []
    for index, n in enumerate((1e3, 1e6, 1e9, 1e12)):
        kstar = run_replicates(model, n, reps, ctx.seed_for(2 * index), ("kstar",), workers=ctx.workers)["kstar"]
        renewal = run_replicates(model, n, reps, ctx.seed_for(2 * index + 1), ("nlogn",), workers=ctx.workers)["nlogn"]
        report = ks_two_sample(
            kstar,
            renewal,
            name=f"KS K*_n vs N_log n at n={n:.0e}",
            max_statistic=0.02,
            metadata={"model": model.label, "n": n, "reps": reps, "offset": "gumbel"},
        )
        distances.append(report.statistic)
        if n <= 1e6:
            reports.append(_experimental(report, "Gumbel 偏移在 n ≤ 1e6 时不可忽略"))
            # K_n* = N_{E_n,n}：完整模拟与快速路径同分布
            full = run_replicates(
                model, int(n), reps, ctx.seed_for(10 + index), ("kstar", "k"), workers=ctx.workers, engine=ctx.engine
            )["kstar"]
            reports.append(
                ks_two_sample(
                    full,
                    kstar,
                    name=f"KS K*_n full simulation vs N_E(n,n) at n={n:.0e}",
                    max_statistic=0.02,
                    metadata={"model": model.label, "n": n, "reps": reps},
                )
            )
    reports.append(trend_test(distances, "decreasing", tolerance=0.005, name="KS(K*_n, N_log n) decreasing"))
    return reports


# ---------------------------------------------------------------------------
# divergence-examples
# ---------------------------------------------------------------------------


def divergence_examples(ctx: SuiteContext) -> List[TestReport]:
    reports: List[TestReport] = []
    example = parse_model_spec("example27")
    means = [e_k0_dp(example, n) for n in (100, 1000, 2000)]
    reports.append(trend_test(means, "increasing", name="E K_n,0 increasing [example27]"))

    model = parse_model_spec("logpareto:1")
    reps = ctx.reps_for(10_000)
    shares = []
    for index, n in enumerate((100, 10_000, 1_000_000)):
        k0 = run_replicates(model, n, reps, ctx.seed_for(index), ("k0",), workers=ctx.workers, engine=ctx.engine)["k0"]
        shares.append(float(np.mean(k0 == 0)))
    reports.append(_below("1 − P̂{K_n,0 = 0} at n=1e6 [logpareto:1]", 1.0 - shares[-1], 0.1, reps=reps))
    reports.append(trend_test(shares, "increasing", tolerance=0.01, name="P̂{K_n,0 = 0} increasing [logpareto:1]"))

    # 情形 (d)：三重对数归一化在桌面尺度上不可检验，只做冒烟检查
    result = limit_for(model, "kstar")
    n = 1e12
    samples = run_replicates(model, n, min(reps, 1000), ctx.seed_for(7), ("kstar",), workers=ctx.workers)["kstar"]
    normalized = result.apply(n, samples)
    bad = float(np.sum(~np.isfinite(normalized)))
    reports.append(_below("case (d) normalized K*_n finite [logpareto:1]", bad, 0.5, experimental=True, n=n))
    return reports


SUITES: Dict[str, Callable[[SuiteContext], List[TestReport]]] = {
    "uniform-closed-forms": uniform_closed_forms,
    "route-equivalence": route_equivalence,
    "mc-vs-exact": mc_vs_exact,
    "clt-trend": clt_trend,
    "mittag-leffler": mittag_leffler_suite,
    "gem-k0": gem_k0,
    "z-limits": z_limits,
    "equivalence-kstar-renewal": equivalence_kstar_renewal,
    "divergence-examples": divergence_examples,
}
