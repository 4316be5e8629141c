"""
ξ 分布族：采样、矩、μ / ν / σ² 与渐近情形分类。

约定：
- ξ̄ = 1 − ξ，随机游走步长 T = −log ξ̄；
- Beta(b, c) 表示 ξ ~ beta(b, c)，因而 ξ̄ ~ beta(c, b)；GEM(θ) 规范化为 Beta(1, θ)；
- LogPareto(α)：P{ξ̄ ≤ x} = (1 − log x)^{−α}，即 P{T > t} = (1 + t)^{−α}；
- Example27：P{ξ̄ ≤ x} = −log(1−x) / (1 − log(1−x))，即 −log ξ 的分布函数为 y / (1 + y)。

无穷矩一律返回 math.inf。
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from scipy import integrate, special, stats

from .config import K_MAX_DEFAULT, QUAD_ATOL, QUAD_LIMIT, QUAD_RTOL
from .errors import ModelError, NumericalError

logger = logging.getLogger(__name__)

FAMILIES = ("beta", "logpareto", "example27", "custom")
CASE_TAGS = ("a", "b", "c", "d", "e", "unsupported")

EXAMPLE27_QUANTILE_TOL = 1e-14
# 只有浮点矩可用的自定义分位数模型，其矩约有这么多有效位
QUADRATURE_MOMENT_BITS = 33

_TINY_UNIFORM = 0.5**54
_MOMENT_BUCKET = 64


@dataclass(frozen=True)
class XiModel:
    """ξ 的分布族。不可变，可作为缓存键，可在进程间传递（自定义分位数函数除外）。"""

    family: str
    params: Tuple[float, ...] = ()
    quantile: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    # 离散 ξ̄ 律：((取值, 权重), ...)
    atoms: Optional[Tuple[Tuple[float, float], ...]] = None
    case_hint: Optional[str] = None
    nonlattice: bool = True
    name: str = ""

    @property
    def label(self) -> str:
        """规范的模型描述串，与命令行语法一致。"""
        if self.family == "beta":
            b, c = self.params
            return f"beta:{b:g},{c:g}"
        if self.family == "logpareto":
            return f"logpareto:{self.params[0]:g}"
        if self.family == "example27":
            return "example27"
        return f"custom:{self.name or 'anonymous'}"

    @property
    def is_gem(self) -> bool:
        return self.family == "beta" and self.params[0] == 1.0

    @property
    def gem_theta(self) -> float:
        if not self.is_gem:
            raise ModelError(f"{self.label} 不是 GEM 模型")
        return self.params[1]


@dataclass(frozen=True)
class MomentTable:
    """
    一个模型的矩表：μ、ν、σ² 与 Eξ^k、Eξ̄^k（k = 0..k_max）。

    两侧矩数组在首次访问时计算并留在表内；通过 moment_table() 取得共享实例。
    """

    model: XiModel = field(repr=False)
    k_max: int
    tolerance: float = QUAD_RTOL

    @property
    def mu(self) -> float:
        return mu(self.model)

    @property
    def nu(self) -> float:
        return nu(self.model)

    @property
    def sigma2(self) -> float:
        return sigma2(self.model)

    @cached_property
    def xi_moments(self) -> np.ndarray:
        values = _xi_moment_array(self.model, self.k_max)
        values.setflags(write=False)
        return values

    @cached_property
    def xibar_moments(self) -> np.ndarray:
        values = _xibar_moment_array(self.model, self.k_max)
        values.setflags(write=False)
        return values


@dataclass(frozen=True)
class CaseInfo:
    """渐近情形标签 (a)–(e)，附带指数 α 与慢变函数 L。"""

    case: str
    alpha: Optional[float] = None
    slowly_varying: Optional[Callable[[float], float]] = field(default=None, compare=False, repr=False)
    description: str = ""

    @property
    def supported(self) -> bool:
        return self.case != "unsupported"


# ---------------------------------------------------------------------------
# 构造与解析
# ---------------------------------------------------------------------------


def make_model(
    family: str,
    params: Sequence[float] = (),
    *,
    quantile: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    atoms: Optional[Sequence[Tuple[float, float]]] = None,
    case_hint: Optional[str] = None,
    nonlattice: bool = False,
    name: str = "",
) -> XiModel:
    """
    构造 ξ 模型。GEM(θ) 规范化为 Beta(1, θ)。

    自定义模型需要提供 quantile（u ↦ ξ̄ 分位数）或 atoms（离散 ξ̄ 律）。
    缺少 case_hint 时模型仍可用于模拟与精确递推，只是极限律分类不可用。
    """
    key = family.strip().lower()
    values = tuple(float(p) for p in params)

    if key == "gem":
        _expect_arity(key, values, 1)
        _check_positive(key, values)
        return XiModel("beta", (1.0, values[0]))
    if key == "beta":
        _expect_arity(key, values, 2)
        _check_positive(key, values)
        return XiModel("beta", values)
    if key == "logpareto":
        _expect_arity(key, values, 1)
        _check_positive(key, values)
        return XiModel("logpareto", values)
    if key == "example27":
        _expect_arity(key, values, 0)
        return XiModel("example27", ())
    if key == "custom":
        if quantile is None and atoms is None:
            raise ModelError("自定义模型必须提供 quantile 或 atoms")
        normalized_atoms = _normalize_atoms(atoms) if atoms is not None else None
        if case_hint is None:
            logger.warning("自定义模型 %s 未提供情形提示，极限律分类不可用", name or "anonymous")
        else:
            _parse_case_hint(case_hint)
        return XiModel(
            "custom",
            (),
            quantile=quantile if normalized_atoms is None else None,
            atoms=normalized_atoms,
            case_hint=case_hint,
            nonlattice=nonlattice,
            name=name,
        )
    raise ModelError(f"未知的分布族：{family}（可选：beta, gem, logpareto, example27, custom）")


def parse_model_spec(text: str) -> XiModel:
    """解析 `beta:<b>,<c>`、`gem:<theta>`、`logpareto:<alpha>`、`example27`；忽略空白，严格检查参数个数。"""
    cleaned = re.sub(r"\s+", "", text or "").lower()
    if not cleaned:
        raise ModelError("模型描述为空")
    family, _, rest = cleaned.partition(":")
    if family == "custom":
        raise ModelError("custom 模型只能通过 Python API 构造")
    parts = rest.split(",") if rest else []
    if any(part == "" for part in parts):
        raise ModelError(f"模型参数中存在空项：{text!r}")
    try:
        values = [float(part) for part in parts]
    except ValueError as exc:
        raise ModelError(f"模型参数不是数字：{text!r}") from exc
    return make_model(family, values)


def _expect_arity(family: str, values: Tuple[float, ...], expected: int) -> None:
    if len(values) != expected:
        raise ModelError(f"{family} 需要 {expected} 个参数，得到 {len(values)} 个")


def _check_positive(family: str, values: Tuple[float, ...]) -> None:
    for value in values:
        if not math.isfinite(value) or value <= 0.0:
            raise ModelError(f"{family} 的参数必须为有限正数，得到 {value}")


def _normalize_atoms(atoms: Sequence[Tuple[float, float]]) -> Tuple[Tuple[float, float], ...]:
    cleaned = []
    for value, weight in atoms:
        value, weight = float(value), float(weight)
        if not 0.0 < value < 1.0:
            raise ModelError(f"ξ̄ 原子必须位于 (0,1)，得到 {value}")
        if not weight > 0.0:
            raise ModelError(f"原子权重必须为正，得到 {weight}")
        cleaned.append((value, weight))
    if not cleaned:
        raise ModelError("atoms 不能为空")
    total = sum(weight for _, weight in cleaned)
    if abs(total - 1.0) > 1e-9:
        raise ModelError(f"原子权重之和必须为 1，得到 {total}")
    return tuple(sorted(cleaned))


def _parse_case_hint(hint: str) -> Tuple[str, Optional[float]]:
    """情形提示：`a`，或 `c:1.5` / `e:0.5` 这类带指数的写法（L ≡ 1）。"""
    tag, _, alpha_text = hint.strip().lower().partition(":")
    if tag not in CASE_TAGS[:-1]:
        raise ModelError(f"未知的情形提示：{hint}")
    alpha = float(alpha_text) if alpha_text else None
    if tag in ("c", "e") and alpha is None:
        raise ModelError(f"情形 {tag} 需要给出指数，例如 {tag}:0.5")
    return tag, alpha


# ---------------------------------------------------------------------------
# 分布函数与采样
# ---------------------------------------------------------------------------


def _open_uniform(rng: np.random.Generator, size: int) -> np.ndarray:
    u = rng.random(size)
    return np.where(u > 0.0, u, _TINY_UNIFORM)


def _example27_cdf(x: np.ndarray) -> np.ndarray:
    level = -np.log1p(-x)
    return level / (1.0 + level)


def _example27_quantile(u: np.ndarray) -> np.ndarray:
    """单调分布函数上的向量化二分，精度 1e-14。"""
    u = np.asarray(u, dtype=float)
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    while np.max(hi - lo, initial=0.0) > EXAMPLE27_QUANTILE_TOL:
        mid = 0.5 * (lo + hi)
        below = _example27_cdf(mid) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def quantile_xibar(model: XiModel, u) -> np.ndarray:
    """ξ̄ 的分位数函数 Q(u)，u ∈ (0,1)。"""
    u = np.asarray(u, dtype=float)
    if model.family == "beta":
        b, c = model.params
        return stats.beta.ppf(u, c, b)
    if model.family == "logpareto":
        return np.exp(1.0 - u ** (-1.0 / model.params[0]))
    if model.family == "example27":
        return _example27_quantile(u)
    if model.atoms is not None:
        values, weights = _atom_arrays(model)
        index = np.searchsorted(np.cumsum(weights), u, side="left")
        return values[np.minimum(index, len(values) - 1)]
    return np.asarray(model.quantile(u), dtype=float)


def xibar_cdf(model: XiModel, x) -> np.ndarray:
    """P{ξ̄ ≤ x}。"""
    x = np.asarray(x, dtype=float)
    if model.family == "beta":
        b, c = model.params
        return stats.beta.cdf(x, c, b)
    if model.family == "logpareto":
        with np.errstate(divide="ignore"):
            return np.where(x > 0.0, (1.0 - np.log(np.where(x > 0.0, x, 1.0))) ** (-model.params[0]), 0.0)
    if model.family == "example27":
        return np.where(x < 1.0, _example27_cdf(np.minimum(x, 1.0 - 1e-300)), 1.0)
    if model.atoms is not None:
        values, weights = _atom_arrays(model)
        return np.sum(weights * (values[:, None] <= np.atleast_1d(x)[None, :]), axis=0).reshape(x.shape)
    raise ModelError("仅由分位数函数给出的自定义模型没有显式分布函数")


def draw_pair(model: XiModel, rng: np.random.Generator, size: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    一次抽取 size 个因子，返回 (ξ, T)，其中 T = −log ξ̄。

    两者分别计算以保留 ξ → 0 与 ξ̄ → 0 两端的相对精度。
    Example27 的 −log ξ 分布函数 y/(1+y) 有显式反函数，这里直接使用；
    quantile_xibar 仍走二分路径，二者在测试中互相校验。
    """
    if model.family == "beta":
        b, c = model.params
        g1 = rng.standard_gamma(b, size)
        g2 = rng.standard_gamma(c, size)
        return g1 / (g1 + g2), np.log1p(g1 / g2)
    if model.family == "logpareto":
        u = _open_uniform(rng, size)
        step = u ** (-1.0 / model.params[0]) - 1.0
        return -np.expm1(-step), step
    if model.family == "example27":
        u = _open_uniform(rng, size)
        y = u / (1.0 - u)
        tail = np.exp(-y)
        step = np.where(y > 0.7, -np.log1p(-tail), -np.log(-np.expm1(-y)))
        return tail, step
    xibar = quantile_xibar(model, _open_uniform(rng, size))
    return 1.0 - xibar, -np.log(xibar)


def sample_xibar(model: XiModel, rng: np.random.Generator, size: Optional[int] = None):
    """ξ̄ 的精确抽样；size 为 None 时返回单个浮点数。"""
    _, step = draw_pair(model, rng, 1 if size is None else size)
    xibar = np.exp(-step)
    return float(xibar[0]) if size is None else xibar


def draw_steps(model: XiModel, rng: np.random.Generator, size: int) -> np.ndarray:
    return draw_pair(model, rng, size)[1]


def _atom_arrays(model: XiModel) -> Tuple[np.ndarray, np.ndarray]:
    values = np.array([value for value, _ in model.atoms], dtype=float)
    weights = np.array([weight for _, weight in model.atoms], dtype=float)
    return values, weights


# ---------------------------------------------------------------------------
# 步长 T = −log ξ̄ 与 −log ξ 的分布函数（数值稳定写法）
# ---------------------------------------------------------------------------


def _step_cdf(model: XiModel, t):
    """P{T ≤ t}。"""
    if model.family == "beta":
        b, c = model.params
        return stats.beta.sf(np.exp(-t), c, b)
    if model.family == "logpareto":
        return -np.expm1(-model.params[0] * np.log1p(t))
    if model.family == "example27":
        return 1.0 / (1.0 + _neglog1m_exp(t))
    raise ModelError("该模型没有步长分布函数")


def _step_survival(model: XiModel, t):
    """P{T > t}。"""
    if model.family == "beta":
        b, c = model.params
        return stats.beta.cdf(np.exp(-t), c, b)
    if model.family == "logpareto":
        return (1.0 + t) ** (-model.params[0])
    if model.family == "example27":
        level = _neglog1m_exp(t)
        return level / (1.0 + level)
    raise ModelError("该模型没有步长分布函数")


def _log_xi_cdf(model: XiModel, y):
    """P{−log ξ ≤ y}。"""
    if model.family == "beta":
        b, c = model.params
        return stats.beta.sf(np.exp(-y), b, c)
    if model.family == "logpareto":
        return np.exp(-model.params[0] * np.log1p(_neglog1m_exp(y)))
    if model.family == "example27":
        return y / (1.0 + y)
    raise ModelError("该模型没有 −log ξ 的分布函数")


def _log_xi_survival(model: XiModel, y):
    """P{−log ξ > y}。"""
    if model.family == "beta":
        b, c = model.params
        return stats.beta.cdf(np.exp(-y), b, c)
    if model.family == "logpareto":
        return -np.expm1(-model.params[0] * np.log1p(_neglog1m_exp(y)))
    if model.family == "example27":
        return 1.0 / (1.0 + y)
    raise ModelError("该模型没有 −log ξ 的分布函数")


def _neglog1m_exp(t):
    """−log(1 − e^{−t})，t > 0。"""
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 0.0, t, 1.0)
    value = np.where(safe > 0.7, -np.log1p(-np.exp(-safe)), -np.log(-np.expm1(-safe)))
    return np.where(t > 0.0, value, np.inf)


# ---------------------------------------------------------------------------
# 数值积分
# ---------------------------------------------------------------------------


def _quad(func: Callable[[float], float], lower: float, upper: float, what: str) -> float:
    result = integrate.quad(
        func, lower, upper, epsabs=QUAD_ATOL, epsrel=QUAD_RTOL, limit=QUAD_LIMIT, full_output=1
    )
    value, abserr = float(result[0]), float(result[1])
    if not math.isfinite(value):
        raise NumericalError(f"{what}：积分结果非有限值", achieved=math.inf)
    achieved = abserr / abs(value) if value != 0.0 else abserr
    if len(result) > 3 and achieved > 100 * QUAD_RTOL:
        raise NumericalError(f"{what}：积分未收敛（{result[3]}）", achieved=achieved)
    return value


def moment_by_quadrature(model: XiModel, k: int, side: str = "xibar") -> float:
    """
    E ξ̄^k（side="xibar"）或 E ξ^k（side="xi"），按分布函数积分。

    变量 t = −log x，再令 s = k t：E ξ̄^k = ∫_0^∞ e^{−s} P{T ≤ s/k} ds。
    """
    if k == 0:
        return 1.0
    if model.family == "custom":
        return _custom_moment(model, k, side)
    cdf = _step_cdf if side == "xibar" else _log_xi_cdf
    return _quad(lambda s: math.exp(-s) * float(cdf(model, s / k)), 0.0, math.inf, f"{model.label} 的 {k} 阶矩")


def _custom_moment(model: XiModel, k: int, side: str) -> float:
    if model.atoms is not None:
        values, weights = _atom_arrays(model)
        base = values if side == "xibar" else 1.0 - values
        return float(np.sum(weights * base**k))
    if side == "xibar":
        return _quad(lambda u: float(model.quantile(np.array([u]))[0]) ** k, 0.0, 1.0, "自定义模型矩")
    return _quad(lambda u: (1.0 - float(model.quantile(np.array([u]))[0])) ** k, 0.0, 1.0, "自定义模型矩")


# ---------------------------------------------------------------------------
# 矩
# ---------------------------------------------------------------------------


def _beta_moments(first: float, second: float, k_max: int) -> np.ndarray:
    """E X^k，X ~ beta(first, second)，k = 0..k_max。"""
    k = np.arange(k_max + 1, dtype=float)
    logs = special.gammaln(first + k) + special.gammaln(first + second) - special.gammaln(first) - special.gammaln(
        first + second + k
    )
    return np.exp(logs)


@lru_cache(maxsize=None)
def _single_moment(model: XiModel, k: int, side: str) -> float:
    return moment_by_quadrature(model, k, side)


def xi_moment(model: XiModel, k: int) -> float:
    """E ξ^k；k = 0 时恰为 1。Beta 族用伽马函数比，其余用积分。"""
    if k < 0:
        raise ValueError(f"k 必须非负，得到 {k}")
    if k == 0:
        return 1.0
    if model.family == "beta":
        b, c = model.params
        return float(_beta_moments(b, c, k)[k])
    return _single_moment(model, k, "xi")


def xibar_moment(model: XiModel, k: int) -> float:
    """E ξ̄^k。"""
    if k < 0:
        raise ValueError(f"k 必须非负，得到 {k}")
    if k == 0:
        return 1.0
    if model.family == "beta":
        b, c = model.params
        return float(_beta_moments(c, b, k)[k])
    return _single_moment(model, k, "xibar")


def _xi_moment_array(model: XiModel, k_max: int) -> np.ndarray:
    if model.family == "beta":
        b, c = model.params
        return _beta_moments(b, c, k_max)
    return np.array([xi_moment(model, k) for k in range(k_max + 1)])


def _xibar_moment_array(model: XiModel, k_max: int) -> np.ndarray:
    if model.family == "beta":
        b, c = model.params
        return _beta_moments(c, b, k_max)
    if model.family == "logpareto":
        # 闭式 α e^k E_{α+1}(k)，比逐个积分快得多
        with mpmath.workdps(30):
            return np.array([float(value) for value in xibar_moments_mp(model, k_max)])
    return np.array([xibar_moment(model, k) for k in range(k_max + 1)])


def xi_moments(model: XiModel, k_max: int) -> np.ndarray:
    """(Eξ^k)_{k=0..k_max}，取自共享矩表。"""
    return moment_table(model, k_max).xi_moments[: k_max + 1].copy()


def xibar_moments(model: XiModel, k_max: int) -> np.ndarray:
    """(Eξ̄^k)_{k=0..k_max}，取自共享矩表。"""
    return moment_table(model, k_max).xibar_moments[: k_max + 1].copy()


@lru_cache(maxsize=32)
def _moment_table(model: XiModel, k_max: int) -> MomentTable:
    logger.debug("moment table for %s up to k=%d", model.label, k_max)
    return MomentTable(model, k_max)


def moment_table(model: XiModel, k_max: int = K_MAX_DEFAULT) -> MomentTable:
    """缓存的矩表；k_max 按 2 的幂向上取整（至少 _MOMENT_BUCKET）。"""
    if k_max < 0:
        raise ValueError(f"k_max 必须非负，得到 {k_max}")
    bucket = _MOMENT_BUCKET
    while bucket < k_max:
        bucket *= 2
    return _moment_table(model, bucket)


# ---------------------------------------------------------------------------
# 高精度矩（mpmath，使用调用方设定的 mp.prec）
# ---------------------------------------------------------------------------


def native_moment_side(model: XiModel) -> Optional[str]:
    """高精度闭式所在的一侧；自定义分位数模型没有。"""
    if model.family == "example27":
        return "xi"
    if model.family == "custom" and model.atoms is None:
        return None
    return "xibar"


def moment_bits(model: XiModel) -> float:
    """高精度矩的可用有效位；闭式族不受限。"""
    return math.inf if native_moment_side(model) is not None else QUADRATURE_MOMENT_BITS


def xibar_moments_mp(model: XiModel, k_max: int) -> List[mpmath.mpf]:
    """E ξ̄^k（k = 0..k_max）的高精度序列。"""
    return _moments_mp(model, k_max, "xibar")


def xi_moments_mp(model: XiModel, k_max: int) -> List[mpmath.mpf]:
    """E ξ^k（k = 0..k_max）的高精度序列。"""
    return _moments_mp(model, k_max, "xi")


def xi_moment_mp(model: XiModel, k: int) -> mpmath.mpf:
    return _moments_mp(model, k, "xi")[k]


def _moments_mp(model: XiModel, k_max: int, side: str) -> List[mpmath.mpf]:
    native = native_moment_side(model)
    if native is None:
        getter = xibar_moment if side == "xibar" else xi_moment
        return [mpmath.mpf(getter(model, k)) for k in range(k_max + 1)]
    if model.family == "beta":
        b, c = (mpmath.mpf(p) for p in model.params)
        first, total = (c, b + c) if side == "xibar" else (b, b + c)
        values = [mpmath.mpf(1)]
        for k in range(k_max):
            values.append(values[-1] * (first + k) / (total + k))
        return values
    if model.atoms is not None:
        points = [(mpmath.mpf(v) if side == "xibar" else 1 - mpmath.mpf(v), mpmath.mpf(w)) for v, w in model.atoms]
        return [mpmath.fsum(w * x**k for x, w in points) for k in range(k_max + 1)]
    if side == native:
        return [_native_mp(model, k) for k in range(k_max + 1)]
    # 另一侧由二项变换得到，抵消约 k_max 位，临时加精度
    with mpmath.workprec(mpmath.mp.prec + k_max + 16):
        base = [_native_mp(model, k) for k in range(k_max + 1)]
        derived = []
        for k in range(k_max + 1):
            derived.append(mpmath.fsum((-1) ** j * mpmath.binomial(k, j) * base[j] for j in range(k + 1)))
    return [+value for value in derived]


def _native_mp(model: XiModel, k: int) -> mpmath.mpf:
    if k == 0:
        return mpmath.mpf(1)
    if model.family == "logpareto":
        alpha = mpmath.mpf(model.params[0])
        return alpha * mpmath.exp(k) * mpmath.expint(alpha + 1, k)
    if model.family == "example27":
        return 1 - k * mpmath.exp(k) * mpmath.e1(k)
    raise ModelError(f"{model.label} 没有高精度闭式矩")


# ---------------------------------------------------------------------------
# μ, ν, σ²
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def mu(model: XiModel) -> float:
    """μ = E(−log ξ̄)。"""
    if model.family == "beta":
        b, c = model.params
        return float(special.digamma(b + c) - special.digamma(c))
    if model.family == "logpareto":
        alpha = model.params[0]
        return 1.0 / (alpha - 1.0) if alpha > 1.0 else math.inf
    if model.family == "example27":
        return _quad(lambda t: float(_step_survival(model, t)), 0.0, math.inf, "Example27 的 μ")
    return _custom_log_moment(model, "xibar", 1)


@lru_cache(maxsize=None)
def nu(model: XiModel) -> float:
    """ν = E(−log ξ)。"""
    if model.family == "beta":
        b, c = model.params
        return float(special.digamma(b + c) - special.digamma(b))
    if model.family == "logpareto":
        return _quad(lambda y: float(_log_xi_survival(model, y)), 0.0, math.inf, "LogPareto 的 ν")
    if model.family == "example27":
        # P{−log ξ > y} = 1/(1+y) 不可积
        return math.inf
    return _custom_log_moment(model, "xi", 1)


@lru_cache(maxsize=None)
def sigma2(model: XiModel) -> float:
    """σ² = var(−log ξ̄)。"""
    if model.family == "beta":
        b, c = model.params
        return float(special.polygamma(1, c) - special.polygamma(1, b + c))
    if model.family == "logpareto":
        alpha = model.params[0]
        return alpha / ((alpha - 1.0) ** 2 * (alpha - 2.0)) if alpha > 2.0 else math.inf
    if model.family == "example27":
        second = _quad(lambda t: 2.0 * t * float(_step_survival(model, t)), 0.0, math.inf, "Example27 的二阶矩")
        return second - mu(model) ** 2
    return _custom_log_moment(model, "xibar", 2) - _custom_log_moment(model, "xibar", 1) ** 2


def _custom_log_moment(model: XiModel, side: str, power: int) -> float:
    if model.atoms is not None:
        values, weights = _atom_arrays(model)
        base = values if side == "xibar" else 1.0 - values
        return float(np.sum(weights * (-np.log(base)) ** power))

    def integrand(u: float) -> float:
        xibar = float(model.quantile(np.array([u]))[0])
        value = xibar if side == "xibar" else 1.0 - xibar
        return (-math.log(value)) ** power

    return _quad(integrand, 0.0, 1.0, "自定义模型的对数矩")


def truncated_mean(model: XiModel, x: float) -> float:
    """m(x) = ∫_0^x P{−log ξ̄ > y} dy = E min(T, x)。"""
    if x <= 0.0:
        return 0.0
    if model.family == "logpareto":
        alpha = model.params[0]
        if alpha == 1.0:
            return math.log1p(x)
        return ((1.0 + x) ** (1.0 - alpha) - 1.0) / (1.0 - alpha)
    if model.family == "custom":
        if model.atoms is not None:
            values, weights = _atom_arrays(model)
            return float(np.sum(weights * np.minimum(-np.log(values), x)))
        return _quad(
            lambda u: min(-math.log(float(model.quantile(np.array([u]))[0])), x), 0.0, 1.0, "自定义模型的 m(x)"
        )
    return _quad(lambda y: float(_step_survival(model, y)), 0.0, x, f"{model.label} 的 m(x)")


# ---------------------------------------------------------------------------
# 渐近情形
# ---------------------------------------------------------------------------


def _unit(_: float) -> float:
    return 1.0


def logpareto2_truncated_second_moment(x: float) -> float:
    """LogPareto(2) 的 E[T² 1{T ≤ x}]，情形 (b) 的慢变函数。"""
    u = 1.0 + x
    return 2.0 * (math.log(u) + 2.0 / u - 1.0 / (2.0 * u * u) - 1.5)


def classify_case(model: XiModel) -> CaseInfo:
    """按 −log ξ̄ 的尾部把模型归入情形 (a)–(e)。"""
    if model.family in ("beta", "example27"):
        return CaseInfo("a", 2.0, None, "σ² < ∞，正态极限")
    if model.family == "logpareto":
        alpha = model.params[0]
        if alpha > 2.0:
            return CaseInfo("a", 2.0, None, "σ² < ∞，正态极限")
        if alpha == 2.0:
            return CaseInfo("b", 2.0, logpareto2_truncated_second_moment, "σ² = ∞，截断二阶矩慢变")
        if alpha > 1.0:
            return CaseInfo("c", alpha, _unit, "1 < α < 2，L ≡ 1")
        if alpha == 1.0:
            return CaseInfo("d", 1.0, _unit, "α = 1，μ = ∞，L ≡ 1")
        return CaseInfo("e", alpha, _unit, "0 < α < 1，L ≡ 1")
    if model.case_hint is None:
        return CaseInfo("unsupported", None, None, "自定义模型未提供情形提示")
    tag, alpha = _parse_case_hint(model.case_hint)
    if tag == "a":
        return CaseInfo("a", 2.0, None, "用户提示：σ² < ∞")
    if tag in ("c", "e"):
        return CaseInfo(tag, alpha, _unit, f"用户提示：α = {alpha:g}，L ≡ 1")
    return CaseInfo(tag, alpha, None, "用户提示；慢变函数未给出")
