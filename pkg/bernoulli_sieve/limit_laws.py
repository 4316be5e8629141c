"""
极限分布：分布函数、抽样与矩。

连续律：
- normal01；
- stable(α)，α ∈ (1,2)：特征函数 exp{−|t|^α Γ(1−α)(cos(πα/2) + i sin(πα/2) sgn t)}，
  即 S1 参数化下 β = −1、γ^α = Γ(1−α)cos(πα/2) 的完全左偏稳定律；
- one_stable：特征函数 exp{−|t|(π/2 − i log|t| sgn t)}（α = 1，β = −1，γ = π/2）；
- mittag_leffler(α)，α ∈ [0,1)：矩 k! / (Γ(1−α)^k Γ(1+kα))，α = 0 为 Exp(1)；
- beta(a, b)、uniform01。
离散律：point_mass、mixed_poisson_gem(θ)、z_limit(model)、k0_limit(model)。

稳定律的分布函数由 Gil-Pelaez 单积分反演，被积函数包络低于 1e-10 处截断。
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy import integrate, special, stats

from .errors import InapplicableError, NumericalError
from .exact import k0_limit_tail
from .xi_models import XiModel, moment_table, mu

logger = logging.getLogger(__name__)

CONTINUOUS = ("normal01", "stable", "one_stable", "mittag_leffler", "beta", "uniform01")
DISCRETE = ("point_mass", "mixed_poisson_gem", "z_limit", "k0_limit")

_ENVELOPE = 1e-10
_Z_TABLE_START = 4096
_Z_TABLE_MAX = 1 << 20


@dataclass(frozen=True)
class LimitLaw:
    variant: str
    params: Tuple[float, ...] = ()
    tolerance: float = 1e-6
    model: Optional[XiModel] = None

    @property
    def name(self) -> str:
        if self.model is not None:
            return f"{self.variant}[{self.model.label}]"
        if self.params:
            return f"{self.variant}({', '.join(f'{p:g}' for p in self.params)})"
        return self.variant

    @property
    def discrete(self) -> bool:
        return self.variant in DISCRETE


def normal01() -> LimitLaw:
    return LimitLaw("normal01")


def stable(alpha: float) -> LimitLaw:
    if not 1.0 < alpha < 2.0:
        raise ValueError(f"稳定律指数须在 (1,2) 内，得到 {alpha}")
    return LimitLaw("stable", (float(alpha),))


def one_stable() -> LimitLaw:
    return LimitLaw("one_stable")


def mittag_leffler(alpha: float) -> LimitLaw:
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"Mittag-Leffler 指数须在 [0,1) 内，得到 {alpha}")
    return LimitLaw("mittag_leffler", (float(alpha),))


def mixed_poisson_gem(theta: float) -> LimitLaw:
    if theta <= 0.0:
        raise ValueError(f"θ 必须为正，得到 {theta}")
    return LimitLaw("mixed_poisson_gem", (float(theta),))


def beta_law(a: float, b: float) -> LimitLaw:
    return LimitLaw("beta", (float(a), float(b)))


def uniform01() -> LimitLaw:
    return LimitLaw("uniform01")


def point_mass(x: float) -> LimitLaw:
    return LimitLaw("point_mass", (float(x),))


def z_limit(model: XiModel) -> LimitLaw:
    """Z_n 在 μ < ∞ 时的极限：P{Z = k} = Eξ^k / (μ k)。"""
    if math.isinf(mu(model)):
        raise InapplicableError(f"{model.label} 的 μ = ∞，Z_n 无非退化的无归一化极限，请改用 log Z_n / log n 型极限")
    return LimitLaw("z_limit", (), model=model)


def k0_limit(model: XiModel) -> LimitLaw:
    """K_{∞,0}，由尾概率级数给出。"""
    return LimitLaw("k0_limit", (), model=model)


# ---------------------------------------------------------------------------
# 稳定律常数
# ---------------------------------------------------------------------------


def _stable_constants(alpha: float) -> Tuple[float, float]:
    """特征指数 −A t^α − i B t^α（t > 0）中的 (A, B)。"""
    gamma = special.gamma(1.0 - alpha)
    return gamma * math.cos(math.pi * alpha / 2.0), gamma * math.sin(math.pi * alpha / 2.0)


def _checked_quad(func: Callable[[float], float], lower: float, upper: float, tol: float, what: str) -> float:
    value, abserr = integrate.quad(func, lower, upper, epsabs=tol / 10.0, epsrel=1e-10, limit=500)
    if abserr > tol:
        raise NumericalError(f"{what}：积分误差 {abserr:.2e} 超过容差 {tol:.0e}", achieved=abserr)
    return value


def _stable_cdf_scalar(alpha: float, x: float, tol: float) -> float:
    a, b = _stable_constants(alpha)
    upper = (math.log(1.0 / _ENVELOPE) / a) ** (1.0 / alpha)

    def integrand(t: float) -> float:
        if t == 0.0:
            return x
        return math.exp(-a * t**alpha) * math.sin(t * x + b * t**alpha) / t

    return 0.5 + _checked_quad(integrand, 0.0, upper, tol, f"stable({alpha:g}) 分布函数") / math.pi


def _one_stable_cdf_scalar(x: float, tol: float) -> float:
    upper = 2.0 * math.log(1.0 / _ENVELOPE) / math.pi

    def integrand(t: float) -> float:
        return math.exp(-math.pi * t / 2.0) * math.sin(t * (x - math.log(t))) / t

    head = _checked_quad(integrand, 0.0, 1.0, tol / 2.0, "1-稳定律分布函数")
    body = _checked_quad(integrand, 1.0, upper, tol / 2.0, "1-稳定律分布函数")
    return 0.5 + (head + body) / math.pi


def _kanter(alpha: float, u):
    """A(u) = sin(αu)^{α/(1−α)} sin((1−α)u) / sin(u)^{1/(1−α)}，u ∈ (0, π)。"""
    return (
        np.sin(alpha * u) ** (alpha / (1.0 - alpha))
        * np.sin((1.0 - alpha) * u)
        / np.sin(u) ** (1.0 / (1.0 - alpha))
    )


def _ml_cdf_scalar(alpha: float, y: float, tol: float) -> float:
    if y <= 0.0:
        return 0.0
    if alpha == 0.0:
        return -math.expm1(-y)
    scaled = (y * special.gamma(1.0 - alpha)) ** (1.0 / (1.0 - alpha))
    value = _checked_quad(
        lambda u: -math.expm1(-float(_kanter(alpha, u)) * scaled), 0.0, math.pi, tol, f"ML({alpha:g}) 分布函数"
    )
    return value / math.pi


# ---------------------------------------------------------------------------
# 混合泊松（GEM 下 K_{∞,0} 的极限）
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def mixed_poisson_gem_pmf(theta: float, k: int) -> float:
    """E[e^{−λ} λ^k / k!]，λ = θ|log ξ|，ξ ~ beta(1, θ)；在 y = −log ξ 上积分。"""
    if k < 0:
        return 0.0

    def integrand(y: float) -> float:
        if y <= 0.0:
            return 0.0
        log_value = (
            k * math.log(theta * y)
            - theta * y
            - special.gammaln(k + 1.0)
            + math.log(theta)
            + (theta - 1.0) * math.log(-math.expm1(-y))
            - y
        )
        return math.exp(log_value)

    peak = max(k / (theta + 1.0), 1.0)
    options = dict(epsabs=1e-14, epsrel=1e-11, limit=500)
    head, err_head = integrate.quad(integrand, 0.0, peak, **options)
    tail, err_tail = integrate.quad(integrand, peak, math.inf, **options)
    if err_head + err_tail > 1e-9:
        raise NumericalError(f"混合泊松概率 P{{{k}}} 积分未收敛", achieved=err_head + err_tail)
    return head + tail


def mixed_poisson_gem_pgf(theta: float, s: float) -> float:
    """Γ(1+θ)Γ(1+θ−θs) / Γ(1+2θ−θs)。"""
    return math.exp(
        special.gammaln(1.0 + theta) + special.gammaln(1.0 + theta - theta * s) - special.gammaln(1.0 + 2.0 * theta - theta * s)
    )


def mixed_poisson_gem_mean(theta: float) -> float:
    return theta * (special.digamma(1.0 + theta) - special.digamma(1.0))


def _mixed_poisson_factorial_moment(theta: float, r: int) -> float:
    """E[λ^r] = θ^r E(−log ξ)^r。"""
    return theta**r * integrate.quad(
        lambda y: y**r * theta * (-math.expm1(-y)) ** (theta - 1.0) * math.exp(-y), 0.0, math.inf, limit=500
    )[0]


# ---------------------------------------------------------------------------
# Z 极限与 K_{∞,0}
# ---------------------------------------------------------------------------


def z_limit_pmf(model: XiModel, k: int) -> float:
    """P{Z = k} = Eξ^k / (μ k)，k ≥ 1。"""
    rate = mu(model)
    if math.isinf(rate):
        raise InapplicableError(f"{model.label} 的 μ = ∞，请改用 log Z_n / log n 型极限")
    if k < 1:
        return 0.0
    return float(moment_table(model, k).xi_moments[k]) / (rate * k)


def z_limit_remainder(model: XiModel, k_max: int) -> float:
    """1 − Σ_{k ≤ k_max} P{Z = k} = (μ − Σ_{k≤k_max} Eξ^k / k) / μ。"""
    rate = mu(model)
    if math.isinf(rate):
        raise InapplicableError(f"{model.label} 的 μ = ∞")
    moments = moment_table(model, k_max).xi_moments[1 : k_max + 1]
    return max(0.0, (rate - float(np.sum(moments / np.arange(1, k_max + 1)))) / rate)


@lru_cache(maxsize=8)
def _z_cumulative(model: XiModel, k_max: int) -> np.ndarray:
    table = moment_table(model, k_max)
    return np.cumsum(table.xi_moments[1 : k_max + 1] / (np.arange(1, k_max + 1) * table.mu))


@lru_cache(maxsize=8)
def _k0_limit_cumulative(model: XiModel, i_max: int) -> np.ndarray:
    tails = np.array([k0_limit_tail(model, i).value for i in range(1, i_max + 2)])
    return 1.0 - tails


# ---------------------------------------------------------------------------
# 公共接口
# ---------------------------------------------------------------------------


_CLOSED_FORM_CDF: Dict[str, Callable[[LimitLaw, np.ndarray], np.ndarray]] = {
    "normal01": lambda law, x: special.ndtr(x),
    "beta": lambda law, x: stats.beta.cdf(x, *law.params),
    "uniform01": lambda law, x: np.clip(x, 0.0, 1.0),
    "point_mass": lambda law, x: (x >= law.params[0]).astype(float),
}


def law_cdf(law: LimitLaw, x):
    """分布函数；x 可为标量或数组。"""
    if np.ndim(x) > 0 and law.variant in _CLOSED_FORM_CDF:
        return _CLOSED_FORM_CDF[law.variant](law, np.asarray(x, dtype=float))
    if np.ndim(x) > 0:
        return np.array([law_cdf(law, float(value)) for value in np.ravel(x)]).reshape(np.shape(x))
    x = float(x)
    variant = law.variant
    if variant == "normal01":
        return float(special.ndtr(x))
    if variant == "stable":
        return min(1.0, max(0.0, _stable_cdf_scalar(law.params[0], x, law.tolerance)))
    if variant == "one_stable":
        return min(1.0, max(0.0, _one_stable_cdf_scalar(x, law.tolerance)))
    if variant == "mittag_leffler":
        return min(1.0, _ml_cdf_scalar(law.params[0], x, law.tolerance))
    if variant == "beta":
        return float(stats.beta.cdf(x, *law.params))
    if variant == "uniform01":
        return min(1.0, max(0.0, x))
    if variant == "point_mass":
        return 1.0 if x >= law.params[0] else 0.0
    if x < 0.0:
        return 0.0
    top = int(math.floor(x))
    if variant == "mixed_poisson_gem":
        return min(1.0, sum(mixed_poisson_gem_pmf(law.params[0], k) for k in range(top + 1)))
    if variant == "z_limit":
        if top < 1:
            return 0.0
        return float(_z_cumulative(law.model, max(top, _Z_TABLE_START))[top - 1])
    if variant == "k0_limit":
        return 1.0 - k0_limit_tail(law.model, top + 1).value
    raise ValueError(f"未知极限律：{variant}")


def law_sample(law: LimitLaw, rng: np.random.Generator, size: Optional[int] = None):
    """抽样；size 为 None 时返回单个值。"""
    count = 1 if size is None else int(size)
    draws = _sample(law, rng, count)
    return float(draws[0]) if size is None else draws


def _sample(law: LimitLaw, rng: np.random.Generator, size: int) -> np.ndarray:
    variant = law.variant
    if variant == "normal01":
        return rng.standard_normal(size)
    if variant == "stable":
        alpha = law.params[0]
        a, _ = _stable_constants(alpha)
        skew = -1.0
        tangent = math.tan(math.pi * alpha / 2.0)
        shift = math.atan(skew * tangent) / alpha
        factor = (1.0 + (skew * tangent) ** 2) ** (1.0 / (2.0 * alpha))
        v = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size)
        w = rng.standard_exponential(size)
        x = (
            factor
            * np.sin(alpha * (v + shift))
            / np.cos(v) ** (1.0 / alpha)
            * (np.cos(v - alpha * (v + shift)) / w) ** ((1.0 - alpha) / alpha)
        )
        return a ** (1.0 / alpha) * x
    if variant == "one_stable":
        skew = -1.0
        half_pi = math.pi / 2.0
        v = rng.uniform(-half_pi, half_pi, size)
        w = rng.standard_exponential(size)
        shifted = half_pi + skew * v
        x = (shifted * np.tan(v) - skew * np.log(half_pi * w * np.cos(v) / shifted)) / half_pi
        # 尺度 γ = π/2 的 S1 平移项 (2/π)βγ log γ
        return half_pi * x - math.log(half_pi)
    if variant == "mittag_leffler":
        alpha = law.params[0]
        if alpha == 0.0:
            return rng.standard_exponential(size)
        u = rng.uniform(0.0, math.pi, size)
        w = rng.standard_exponential(size)
        return (w / _kanter(alpha, u)) ** (1.0 - alpha) / special.gamma(1.0 - alpha)
    if variant == "beta":
        return rng.beta(law.params[0], law.params[1], size)
    if variant == "uniform01":
        return rng.random(size)
    if variant == "point_mass":
        return np.full(size, law.params[0])
    if variant == "mixed_poisson_gem":
        theta = law.params[0]
        xi = rng.beta(1.0, theta, size)
        return rng.poisson(-theta * np.log(xi)).astype(float)
    if variant == "z_limit":
        u = rng.random(size)
        k_max = _Z_TABLE_START
        cumulative = _z_cumulative(law.model, k_max)
        while np.max(u) > cumulative[-1] and k_max < _Z_TABLE_MAX:
            k_max *= 2
            cumulative = _z_cumulative(law.model, k_max)
        return (np.searchsorted(cumulative, u, side="left") + 1).astype(float)
    if variant == "k0_limit":
        u = rng.random(size)
        cumulative = _k0_limit_cumulative(law.model, 64)
        return np.searchsorted(cumulative, u, side="left").astype(float)
    raise ValueError(f"未知极限律：{variant}")


def law_moment(law: LimitLaw, k: int) -> float:
    """k 阶原点矩；不存在时返回 math.inf。"""
    if k < 0:
        raise ValueError(f"k 必须非负，得到 {k}")
    if k == 0:
        return 1.0
    variant = law.variant
    if variant == "normal01":
        return 0.0 if k % 2 else float(special.factorial2(k - 1))
    if variant == "stable":
        if k >= law.params[0]:
            return math.inf
        return 0.0
    if variant == "one_stable":
        return math.inf
    if variant == "mittag_leffler":
        alpha = law.params[0]
        return math.exp(special.gammaln(k + 1.0) - k * special.gammaln(1.0 - alpha) - special.gammaln(1.0 + k * alpha))
    if variant == "beta":
        return float(stats.beta.moment(k, *law.params))
    if variant == "uniform01":
        return 1.0 / (k + 1.0)
    if variant == "point_mass":
        return law.params[0] ** k
    if variant == "mixed_poisson_gem":
        theta = law.params[0]
        if k == 1:
            return float(mixed_poisson_gem_mean(theta))
        # 原点矩 = Σ_r S(k, r)·E[(K)_r]，阶乘矩 E[(K)_r] = E λ^r
        return float(sum(_stirling2(k, r) * _mixed_poisson_factorial_moment(theta, r) for r in range(1, k + 1)))
    raise InapplicableError(f"{law.name} 的矩未实现")


def _stirling2(n: int, k: int) -> int:
    return int(round(sum((-1) ** i * math.comb(k, i) * (k - i) ** n for i in range(k + 1)) / math.factorial(k)))
