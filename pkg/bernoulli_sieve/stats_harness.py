"""
拟合优度检验：把模拟样本、精确分布与极限律相互对照。

每个检验返回一个 TestReport；status 为 pass / fail / underpowered，
underpowered 只在 --strict 下计为失败。
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from rich import box
from rich.console import Console
from rich.table import Table
from scipy import special, stats

from .config import KS_ALPHA
from .exact import Pmf

logger = logging.getLogger(__name__)

STATUSES = ("pass", "fail", "underpowered")
CSV_FIELDS = ("name", "status", "statistic", "threshold", "p_value", "sizes", "experimental", "metadata")

_MIN_KS_SIZE = 5
_MIN_MOMENT_SIZE = 30
_EXACT_TWO_SAMPLE_LIMIT = 10_000


@dataclass
class TestReport:
    # pytest 不应把它当成测试类收集
    __test__ = False

    name: str
    statistic: float
    threshold: float
    status: str
    p_value: Optional[float] = None
    sizes: Tuple[int, ...] = ()
    experimental: bool = False
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"未知状态 {self.status!r}")
        self.sizes = tuple(int(size) for size in self.sizes)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def failed(self, strict: bool = False) -> bool:
        """是否计入退出码；实验性检验从不计入。"""
        if self.experimental:
            return False
        return self.status == "fail" or (strict and self.status == "underpowered")

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["sizes"] = list(self.sizes)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TestReport":
        values = dict(data)
        values["sizes"] = tuple(values.get("sizes", ()))
        values["metadata"] = dict(values.get("metadata") or {})
        return cls(**values)

    def to_csv_row(self) -> List[str]:
        metadata = ";".join(f"{key}={value}" for key, value in sorted(self.metadata.items()))
        return [
            self.name,
            self.status,
            repr(float(self.statistic)),
            repr(float(self.threshold)),
            "" if self.p_value is None else repr(float(self.p_value)),
            "x".join(str(size) for size in self.sizes),
            "1" if self.experimental else "0",
            metadata,
        ]


def _status(passed: bool, underpowered: bool = False) -> str:
    if underpowered:
        return "underpowered"
    return "pass" if passed else "fail"


# ---------------------------------------------------------------------------
# KS
# ---------------------------------------------------------------------------


def ks_statistic(samples: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray], discrete: bool = False) -> float:
    """
    sup |F_n − F|。discrete=True 表示整数格点：
    同时比较跳点处的右极限 F(u) 与左极限 F(u − 1)。
    """
    values, counts = np.unique(np.asarray(samples, dtype=float), return_counts=True)
    size = float(np.sum(counts))
    right = np.cumsum(counts) / size
    left = right - counts / size
    model_right = np.asarray(cdf(values), dtype=float)
    model_left = np.asarray(cdf(values - 1.0), dtype=float) if discrete else model_right
    return float(max(np.max(np.abs(right - model_right)), np.max(np.abs(left - model_left))))


def kolmogorov_pvalue(statistic: float, size: int) -> float:
    """渐近 Kolmogorov 分布的上尾 P{√n D > λ}。"""
    return float(min(1.0, max(0.0, special.kolmogorov(math.sqrt(size) * statistic))))


def ks_one_sample(
    samples,
    cdf: Callable[[np.ndarray], np.ndarray],
    name: str = "ks_one_sample",
    alpha: float = KS_ALPHA,
    max_statistic: Optional[float] = None,
    discrete: bool = False,
    metadata: Optional[Dict[str, Any]] = None,
) -> TestReport:
    """给 max_statistic 时按统计量判定，否则按 p ≥ alpha 判定。"""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("样本不能为空")
    statistic = ks_statistic(samples, cdf, discrete)
    p_value = kolmogorov_pvalue(statistic, samples.size)
    if max_statistic is not None:
        passed, threshold = statistic < max_statistic, max_statistic
    else:
        passed, threshold = p_value >= alpha, alpha
    return TestReport(
        name,
        statistic,
        threshold,
        _status(passed, samples.size < _MIN_KS_SIZE),
        p_value=p_value,
        sizes=(samples.size,),
        metadata=dict(metadata or {}),
    )


def two_sample_statistic(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.sort(a), np.sort(b)
    grid = np.concatenate([a, b])
    first = np.searchsorted(a, grid, side="right") / a.size
    second = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(first - second)))


def ks_two_sample(
    a,
    b,
    name: str = "ks_two_sample",
    alpha: float = KS_ALPHA,
    max_statistic: Optional[float] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> TestReport:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("两组样本都不能为空")
    method = "exact" if a.size * b.size <= _EXACT_TWO_SAMPLE_LIMIT else "asymp"
    result = stats.ks_2samp(a, b, method=method)
    statistic, p_value = float(result.statistic), float(result.pvalue)
    if max_statistic is not None:
        passed, threshold = statistic < max_statistic, max_statistic
    else:
        passed, threshold = p_value >= alpha, alpha
    return TestReport(
        name,
        statistic,
        threshold,
        _status(passed, min(a.size, b.size) < _MIN_KS_SIZE),
        p_value=p_value,
        sizes=(a.size, b.size),
        metadata=dict(metadata or {}),
    )


def permutation_ks_pvalue(a, b, n_perm: int, rng: np.random.Generator) -> float:
    """两样本 KS 的置换 p 值：打乱合并样本后统计量不小于观测值的比例。"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    observed = two_sample_statistic(a, b)
    pooled = np.concatenate([a, b])
    hits = 0
    for _ in range(n_perm):
        shuffled = rng.permutation(pooled)
        if two_sample_statistic(shuffled[: a.size], shuffled[a.size :]) >= observed - 1e-12:
            hits += 1
    return hits / n_perm


# ---------------------------------------------------------------------------
# 离散分布
# ---------------------------------------------------------------------------


def empirical_pmf(samples) -> Dict[int, float]:
    values, counts = np.unique(np.asarray(samples, dtype=np.int64), return_counts=True)
    return {int(value): count / float(np.sum(counts)) for value, count in zip(values, counts)}


def tv_distance(
    pmf: Pmf,
    samples,
    name: str = "tv_distance",
    max_distance: float = 0.02,
    metadata: Optional[Dict[str, Any]] = None,
) -> TestReport:
    """½ Σ|p_k − p̂_k|，截断余量整体计入（上界）。"""
    observed = empirical_pmf(samples)
    keys = set(int(k) for k in pmf.support) | set(observed)
    distance = 0.5 * (sum(abs(pmf.pmf(k) - observed.get(k, 0.0)) for k in keys) + pmf.mass_deficit)
    size = int(np.asarray(samples).size)
    return TestReport(
        name,
        distance,
        max_distance,
        _status(distance < max_distance, size == 0),
        sizes=(size,),
        metadata=dict(metadata or {}),
    )


def merge_bins(observed: np.ndarray, expected: np.ndarray, minimum: float = 5.0) -> Tuple[np.ndarray, np.ndarray]:
    """从左到右合并相邻格子直到期望频数 ≥ minimum，剩余尾部并入最后一格。"""
    merged_obs: List[float] = []
    merged_exp: List[float] = []
    acc_obs = acc_exp = 0.0
    for obs, exp in zip(observed, expected):
        acc_obs += obs
        acc_exp += exp
        if acc_exp >= minimum:
            merged_obs.append(acc_obs)
            merged_exp.append(acc_exp)
            acc_obs = acc_exp = 0.0
    if acc_exp > 0.0 or acc_obs > 0.0:
        if merged_exp:
            merged_obs[-1] += acc_obs
            merged_exp[-1] += acc_exp
        else:
            merged_obs.append(acc_obs)
            merged_exp.append(acc_exp)
    return np.array(merged_obs), np.array(merged_exp)


def chi_square(
    observed,
    expected,
    name: str = "chi_square",
    alpha: float = KS_ALPHA,
    metadata: Optional[Dict[str, Any]] = None,
) -> TestReport:
    """observed、expected 均为频数；expected 先按 observed 的总数重新缩放。"""
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    if observed.shape != expected.shape:
        raise ValueError("observed 与 expected 的长度不一致")
    expected = expected * (observed.sum() / expected.sum())
    obs, exp = merge_bins(observed, expected)
    if len(obs) < 2:
        return TestReport(name, math.nan, alpha, "underpowered", sizes=(int(observed.sum()),), metadata=dict(metadata or {}))
    result = stats.chisquare(obs, exp)
    return TestReport(
        name,
        float(result.statistic),
        alpha,
        _status(float(result.pvalue) >= alpha),
        p_value=float(result.pvalue),
        sizes=(int(observed.sum()), len(obs)),
        metadata=dict(metadata or {}),
    )


# ---------------------------------------------------------------------------
# 矩与趋势
# ---------------------------------------------------------------------------


def moment_z(
    samples,
    analytic_moments: Sequence[float],
    name: str = "moment_z",
    threshold: float = 4.0,
    metadata: Optional[Dict[str, Any]] = None,
) -> TestReport:
    """analytic_moments[j] 为 j+1 阶原点矩；统计量为 max_k |z_k|，z_k 以样本标准误为单位。"""
    samples = np.asarray(samples, dtype=float)
    scores = []
    for order, target in enumerate(analytic_moments, start=1):
        if not math.isfinite(target):
            continue
        powers = samples**order
        error = float(np.std(powers, ddof=1)) / math.sqrt(samples.size)
        scores.append(abs(float(np.mean(powers)) - target) / error if error > 0.0 else math.inf)
    worst = max(scores) if scores else math.nan
    underpowered = samples.size < _MIN_MOMENT_SIZE or not scores
    return TestReport(
        name,
        worst,
        threshold,
        _status(worst < threshold, underpowered),
        sizes=(samples.size,),
        metadata=dict(metadata or {}),
    )


def trend_test(
    values: Sequence[float],
    direction: str,
    tolerance: float = 0.0,
    name: str = "trend_test",
    metadata: Optional[Dict[str, Any]] = None,
) -> TestReport:
    """
    按 n 递增排列的序列是否严格单调。statistic 为最差一步（朝错误方向为正），
    tolerance 为允许的噪声带；tolerance = 0 即严格单调。
    """
    values = np.asarray(values, dtype=float)
    if values.size < 3:
        raise ValueError("趋势检验至少需要 3 个量级")
    if direction not in ("increasing", "decreasing"):
        raise ValueError(f"direction 只能为 increasing / decreasing，得到 {direction!r}")
    steps = np.diff(values)
    worst = float(np.max(-steps)) if direction == "increasing" else float(np.max(steps))
    passed = worst < tolerance if tolerance > 0.0 else worst < 0.0
    return TestReport(
        name,
        worst,
        tolerance,
        _status(passed),
        sizes=(values.size,),
        metadata={"values": ",".join(f"{v:.6g}" for v in values), **(metadata or {})},
    )


# ---------------------------------------------------------------------------
# 汇总
# ---------------------------------------------------------------------------


def any_failed(reports: Iterable[TestReport], strict: bool = False) -> bool:
    return any(report.failed(strict) for report in reports)


def format_table(reports: Sequence[TestReport], strict: bool = False) -> Table:
    table = Table(title="验证结果", box=box.SIMPLE_HEAVY)
    table.add_column("检验", style="bold")
    table.add_column("状态")
    table.add_column("统计量", justify="right")
    table.add_column("阈值", justify="right")
    table.add_column("p 值", justify="right")
    table.add_column("样本量", justify="right")
    colors = {"pass": "green", "fail": "red", "underpowered": "yellow"}
    for report in reports:
        status = report.status
        if report.experimental:
            status += "（实验）"
        elif strict and report.status == "underpowered":
            status += "→fail"
        table.add_row(
            report.name,
            f"[{colors[report.status]}]{status}[/]",
            f"{report.statistic:.4g}",
            f"{report.threshold:.4g}",
            "-" if report.p_value is None else f"{report.p_value:.3g}",
            "x".join(str(size) for size in report.sizes),
        )
    return table


def print_reports(reports: Sequence[TestReport], strict: bool = False, console: Optional[Console] = None) -> None:
    (console or Console()).print(format_table(reports, strict))
