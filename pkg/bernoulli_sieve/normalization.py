"""
归一化序列 (a_n, b_n) 与各泛函的极限律配对。

情形 (a)–(e) 按 −log ξ̄ 的尾部划分（见 xi_models.classify_case）：

    (a) σ² < ∞：        b_n = log n / μ，a_n = (σ² log n / μ³)^{1/2}，极限 N(0,1)
    (b) α = 2，σ² = ∞：  b_n = log n / μ，a_n = μ^{−3/2} c_{⌊log n⌋}，m L(c_m) / c_m² = 1
    (c) α ∈ (1,2)：      b_n = log n / μ，a_n = μ^{−(α+1)/α} c(log n)，t L(c) / c^α = 1
    (d) α = 1：          LogPareto(1) 用显式序列；其余模型走 ψ 反演（实验性）
    (e) α ∈ [0,1)：      b_n = 0，a_n = (log n)^α / L(log n)，极限 Mittag-Leffler(α)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import optimize

from .errors import InapplicableError, NumericalError
from .limit_laws import (
    LimitLaw,
    beta_law,
    k0_limit,
    mittag_leffler,
    mixed_poisson_gem,
    normal01,
    one_stable,
    point_mass,
    stable,
    uniform01,
    z_limit,
)
from .xi_models import CaseInfo, XiModel, classify_case, mu, nu, sigma2, truncated_mean, xibar_cdf

logger = logging.getLogger(__name__)

FUNCTIONALS = ("kstar", "k", "kminusk1", "w", "z", "k0", "nlogn")

_BISECT_RTOL = 1e-12
_GRID_POINTS = 400
_PSI_GRID = np.geomspace(1e-6, 1e15, 1200)

Sequence1D = Callable[[float], float]


@dataclass(frozen=True)
class NormalizationSchedule:
    """一个模型的 (a_n, b_n)；c、ψ、b(·)、m 只在相应情形下给出。"""

    case: str
    alpha: Optional[float]
    a: Sequence1D = field(repr=False)
    b: Sequence1D = field(repr=False)
    c: Optional[Sequence1D] = field(default=None, repr=False)
    psi: Optional[Sequence1D] = field(default=None, repr=False)
    b_function: Optional[Sequence1D] = field(default=None, repr=False)
    m: Optional[Sequence1D] = field(default=None, repr=False)
    experimental: bool = False
    description: str = ""

    def normalize(self, n: float, samples) -> np.ndarray:
        return (np.asarray(samples, dtype=float) - self.b(n)) / self.a(n)

    def values(self, n: float) -> Dict[str, float]:
        row = {"n": float(n), "a_n": self.a(n), "b_n": self.b(n)}
        if self.c is not None:
            row["c_n"] = self.c(n)
        return row


@dataclass(frozen=True)
class LimitResult:
    """
    limit_for 的结果。kind:
    - normalized：(X_n − b_n)/a_n → law
    - unnormalized：X_n → law
    - transformed：transform(n, X_n) → law（μ = ∞ 时 Z_n 的对数尺度极限）
    - degenerate：X_n → 常数 law
    - diverges：E X_n → ∞，无极限律
    """

    functional: str
    kind: str
    law: Optional[LimitLaw]
    schedule: Optional[NormalizationSchedule] = None
    transform_name: str = ""
    transform: Optional[Callable[[float, np.ndarray], np.ndarray]] = field(default=None, repr=False)
    experimental: bool = False
    note: str = ""

    def apply(self, n: float, samples) -> np.ndarray:
        """把 n 处的样本映到与 law 可比的尺度。"""
        values = np.asarray(samples, dtype=float)
        if self.kind == "normalized":
            return self.schedule.normalize(n, values)
        if self.kind == "transformed":
            return self.transform(n, values)
        if self.kind == "diverges":
            raise InapplicableError(f"{self.functional} 无极限律：{self.note}")
        return values


# ---------------------------------------------------------------------------
# c 的求解
# ---------------------------------------------------------------------------


def solve_c(t: float, alpha: float, slowly_varying: Sequence1D) -> float:
    """t·L(c) / c^α = 1 的最大根；L ≡ 1 时为 t^{1/α}。"""
    if t <= 0.0:
        raise ValueError(f"t 必须为正，得到 {t}")

    def excess(c: float) -> float:
        return t * slowly_varying(c) / c**alpha - 1.0

    lower, upper = 1.0, max(2.0, t ** (2.0 / alpha))
    while excess(upper) > 0.0:
        upper *= 2.0
        if upper > 1e300:
            raise NumericalError(f"t = {t:g} 时找不到 c 的上界")
    if excess(lower) < 0.0:
        grid = np.geomspace(1e-6, upper, _GRID_POINTS)
        signs = np.array([excess(float(c)) for c in grid])
        positive = np.nonzero(signs >= 0.0)[0]
        if len(positive) == 0:
            raise NumericalError(
                f"t = {t:g} 时 t·L(c)/c^{alpha:g} 始终小于 1，c 无解；请增大 n", achieved=float(np.max(signs) + 1.0)
            )
        last = int(positive[-1])
        lower, upper = float(grid[last]), float(grid[min(last + 1, len(grid) - 1)])
    if excess(lower) == 0.0:
        return lower
    return float(optimize.bisect(excess, lower, upper, xtol=1e-300, rtol=_BISECT_RTOL, maxiter=2000))


def _invert_increasing(func: Sequence1D, target: float, grid: np.ndarray) -> float:
    """单调递增函数在对数网格上定括号后二分求逆。"""
    values = np.array([func(float(x)) for x in grid])
    index = int(np.searchsorted(values, target))
    if index == 0 or index >= len(grid):
        raise NumericalError(f"ψ 的反演目标 {target:g} 超出网格范围")
    lower, upper = float(grid[index - 1]), float(grid[index])
    return float(optimize.bisect(lambda x: func(x) - target, lower, upper, rtol=_BISECT_RTOL, maxiter=2000))


def _tail_slowly_varying(model: XiModel, alpha: float) -> Sequence1D:
    """由尾部直接读出 L(x) = x^α P{−log ξ̄ > x}。"""

    def slowly_varying(x: float) -> float:
        return x**alpha * float(xibar_cdf(model, math.exp(-x)))

    return slowly_varying


# ---------------------------------------------------------------------------
# 归一化序列
# ---------------------------------------------------------------------------


def _log(n: float) -> float:
    if n <= 1.0:
        raise ValueError(f"需要 n > 1，得到 {n}")
    return math.log(n)


def _schedule_a(model: XiModel) -> NormalizationSchedule:
    rate, variance = mu(model), sigma2(model)

    def a(n: float) -> float:
        return math.sqrt(variance * _log(n) / rate**3)

    return NormalizationSchedule("a", 2.0, a, lambda n: _log(n) / rate, description="σ² < ∞，正态极限")


def _schedule_b(model: XiModel, info: CaseInfo) -> NormalizationSchedule:
    if info.slowly_varying is None:
        raise InapplicableError(f"{model.label}：情形 (b) 只支持内置 LogPareto(2)，自定义模型未给出 L")
    rate = mu(model)

    @lru_cache(maxsize=256)
    def c(n: float) -> float:
        return solve_c(float(math.floor(_log(n))), 2.0, info.slowly_varying)

    return NormalizationSchedule(
        "b",
        2.0,
        lambda n: rate**-1.5 * c(n),
        lambda n: _log(n) / rate,
        c=c,
        description="σ² = ∞，截断二阶矩慢变，c 取在 ⌊log n⌋",
    )


def _schedule_c(model: XiModel, info: CaseInfo) -> NormalizationSchedule:
    alpha, rate = info.alpha, mu(model)
    slowly_varying = info.slowly_varying or _tail_slowly_varying(model, alpha)

    @lru_cache(maxsize=256)
    def c(n: float) -> float:
        return solve_c(_log(n), alpha, slowly_varying)

    return NormalizationSchedule(
        "c",
        alpha,
        lambda n: rate ** (-(alpha + 1.0) / alpha) * c(n),
        lambda n: _log(n) / rate,
        c=c,
        description=f"α = {alpha:g}，{alpha:g}-稳定极限",
    )


def _schedule_d(model: XiModel, info: CaseInfo) -> NormalizationSchedule:
    slowly_varying = info.slowly_varying or _tail_slowly_varying(model, 1.0)
    pinned = model.family == "logpareto"

    if pinned:
        def c_of(x: float) -> float:
            return x
    else:
        @lru_cache(maxsize=None)
        def c_of(x: float) -> float:
            return solve_c(x, 1.0, slowly_varying)

    def m(x: float) -> float:
        return truncated_mean(model, x)

    def psi(x: float) -> float:
        return x * m(c_of(x))

    @lru_cache(maxsize=256)
    def b_function(y: float) -> float:
        return _invert_increasing(psi, y, _PSI_GRID)

    if pinned:
        def a(n: float) -> float:
            log_n = _log(n)
            return log_n / math.log(log_n) ** 2

        def b(n: float) -> float:
            log_log = math.log(_log(n))
            return a(n) * (log_log + math.log(log_log))

        description = "α = 1，显式序列 a_n = log n/(log log n)²"
    else:
        def a(n: float) -> float:
            level = b_function(_log(n))
            return level * c_of(level) / _log(n)

        def b(n: float) -> float:
            return b_function(_log(n))

        description = "α = 1，ψ 数值反演"
        logger.info("%s: case (d) schedule from numeric ψ inversion (experimental)", model.label)

    return NormalizationSchedule(
        "d",
        1.0,
        a,
        b,
        c=lambda n: c_of(_log(n)),
        psi=psi,
        b_function=b_function,
        m=m,
        experimental=True,
        description=description,
    )


def _schedule_e(model: XiModel, info: CaseInfo) -> NormalizationSchedule:
    alpha = info.alpha
    slowly_varying = info.slowly_varying or _tail_slowly_varying(model, alpha)

    def a(n: float) -> float:
        log_n = _log(n)
        return log_n**alpha / slowly_varying(log_n)

    return NormalizationSchedule("e", alpha, a, lambda n: 0.0, description=f"α = {alpha:g}，Mittag-Leffler 极限")


def normalization(model: XiModel) -> NormalizationSchedule:
    """按情形构造归一化序列；unsupported 抛 InapplicableError。"""
    info = classify_case(model)
    if not info.supported:
        raise InapplicableError(f"{model.label} 未分类（{info.description}），无法给出归一化序列")
    if info.case == "a":
        return _schedule_a(model)
    if info.case == "b":
        return _schedule_b(model, info)
    if info.case == "c":
        return _schedule_c(model, info)
    if info.case == "d":
        return _schedule_d(model, info)
    return _schedule_e(model, info)


def _case_law(schedule: NormalizationSchedule) -> LimitLaw:
    if schedule.case in ("a", "b"):
        return normal01()
    if schedule.case == "c":
        return stable(schedule.alpha)
    if schedule.case == "d":
        return one_stable()
    return mittag_leffler(schedule.alpha)


# ---------------------------------------------------------------------------
# 泛函 → 极限
# ---------------------------------------------------------------------------


def _log_ratio(n: float, values: np.ndarray) -> np.ndarray:
    return np.log(values) / math.log(n)


def _z_result(model: XiModel) -> LimitResult:
    if math.isfinite(mu(model)):
        return LimitResult("z", "unnormalized", z_limit(model), note="P{Z = k} = Eξ^k / (μk)")
    info = classify_case(model)
    if info.case == "e":
        alpha = info.alpha
        return LimitResult(
            "z",
            "transformed",
            beta_law(1.0 - alpha, alpha),
            transform_name="log Z_n / log n",
            transform=_log_ratio,
            note=f"μ = ∞，α = {alpha:g}",
        )
    if info.case == "d":
        def m_ratio(n: float, values: np.ndarray) -> np.ndarray:
            scale = truncated_mean(model, math.log(n))
            return np.array([truncated_mean(model, math.log(v)) for v in values]) / scale

        return LimitResult(
            "z",
            "transformed",
            uniform01(),
            transform_name="m(log Z_n) / m(log n)",
            transform=m_ratio,
            note="μ = ∞，α = 1",
        )
    raise InapplicableError(f"{model.label}：μ = ∞ 但不属于情形 (d)/(e)，Z_n 的极限不适用")


def _k0_result(model: XiModel) -> LimitResult:
    rate, log_xi = mu(model), nu(model)
    if math.isinf(rate):
        return LimitResult("k0", "degenerate", point_mass(0.0), note="μ = ∞，K_{n,0} → δ_0")
    if math.isinf(log_xi):
        return LimitResult("k0", "diverges", None, note="ν = ∞ 且 μ < ∞，E K_{n,0} → ∞")
    if model.is_gem:
        law = mixed_poisson_gem(model.gem_theta)
    else:
        law = k0_limit(model)
    return LimitResult("k0", "unnormalized", law, note=f"E K_{{∞,0}} = ν/μ = {log_xi / rate:.6g}")


def limit_for(model: XiModel, functional: str) -> LimitResult:
    """
    functional 在该模型下的极限。

    非格点条件只对内置分布族成立；自定义模型未声明 nonlattice 时结果照常给出，但标为实验性。
    """
    functional = functional.lower()
    if functional not in FUNCTIONALS:
        raise ValueError(f"未知泛函 {functional!r}，可选：{', '.join(FUNCTIONALS)}")
    result = _dispatch(model, functional)
    if model.nonlattice:
        return result
    logger.warning("%s 未声明非格点，%s 的极限仅供参考", model.label, functional)
    return replace(result, experimental=True, note=f"{result.note}；未声明非格点".lstrip("；"))


def _dispatch(model: XiModel, functional: str) -> LimitResult:
    if functional == "z":
        return _z_result(model)
    if functional == "k0":
        return _k0_result(model)
    if functional not in ("kstar", "nlogn") and math.isinf(nu(model)):
        raise InapplicableError(
            f"{model.label} 的 ν = ∞：{functional} 与 K_n* 共享极限的结论不适用"
        )
    schedule = normalization(model)
    return LimitResult(
        functional,
        "normalized",
        _case_law(schedule),
        schedule=schedule,
        experimental=schedule.experimental,
        note=schedule.description,
    )


def schedule_table(schedule: NormalizationSchedule, n_grid: Sequence[float]) -> List[Dict[str, float]]:
    return [schedule.values(n) for n in n_grid]
