"""
递减矩阵：q*(n:m) = C(n,m)·E[ξ^m ξ̄^{n−m}]（第一盒恰好接住 m 个球的概率），
q(n:m) = q*(n:m) / (1 − Eξ̄^n)，m = 1..n。

P{A_n* = n − m} = q*(n:m)，其中 A_n* 为经过一盒后剩余的球数。

三种算法：
- closed_form：Beta 族用 log-Beta 闭式直接计算；
- fixed_point：有高精度闭式矩的族（LogPareto、Example27、离散原子），
  以 P = 2·n_max + 64 位定点整数表示基础矩序列，
  按 M(a+1, b) = M(a, b) − M(a, b+1) 逐层差分，
  差分本身在整数上精确，误差只来自基础矩的一次舍入；
- quadrature：只给出分位数函数的自定义模型，整张表一次向量积分
  q*(n:m) = ∫_0^1 Binom(m; n, 1 − Q(u)) du，被积函数非负，没有抵消。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate, special, stats

from ..config import DECREMENT_QUAD_TOL
from ..errors import NumericalError, PrecisionError
from ..xi_models import (
    XiModel,
    moment_bits,
    native_moment_side,
    quantile_xibar,
    xi_moments_mp,
    xibar_moments_mp,
)

logger = logging.getLogger(__name__)

METHODS = ("closed_form", "fixed_point", "quadrature")

_BUCKET = 64
_GUARD_BITS = 64
# quad_vec 的状态码：0 收敛，2 已到舍入误差下限
_QUAD_VEC_ACCEPTED = (0, 2)


@dataclass(frozen=True)
class DecrementRow:
    n: int
    kind: str  # "starred"：m = 0..n；"plain"：m = 1..n
    probs: np.ndarray = field(repr=False)

    @property
    def support(self) -> np.ndarray:
        start = 0 if self.kind == "starred" else 1
        return np.arange(start, self.n + 1)

    def prob(self, m: int) -> float:
        index = m if self.kind == "starred" else m - 1
        if 0 <= index < len(self.probs):
            return float(self.probs[index])
        return 0.0


def _bucket(n: int) -> int:
    return _BUCKET * max(1, -(-n // _BUCKET))


def _beta_table(model: XiModel, n_max: int) -> np.ndarray:
    b, c = model.params
    n = np.arange(n_max + 1, dtype=float)[:, None]
    m = np.arange(n_max + 1, dtype=float)[None, :]
    valid = m <= n
    rest = np.where(valid, n - m, 0.0)
    logs = (
        special.gammaln(n + 1.0)
        - special.gammaln(m + 1.0)
        - special.gammaln(rest + 1.0)
        + special.betaln(b + m, c + rest)
        - special.betaln(b, c)
    )
    return np.where(valid, np.exp(np.where(valid, logs, 0.0)), 0.0)


def _fixed_point_table(model: XiModel, n_max: int) -> np.ndarray:
    side = native_moment_side(model)
    available = moment_bits(model)
    # 差分放大误差约 2^ℓ，二项系数再放大至多 2^n
    if available < 2 * n_max + 30:
        raise PrecisionError(
            f"{model.label} 只有约 {available:g} 位矩精度，无法精确计算 n = {n_max} 的递减行", bits=int(available)
        )
    bits = 2 * n_max + _GUARD_BITS
    logger.debug("fixed-point decrement table for %s: n_max=%d, %d bits", model.label, n_max, bits)
    with mpmath.workprec(bits + 32):
        base = xibar_moments_mp(model, n_max) if side == "xibar" else xi_moments_mp(model, n_max)
        scale = mpmath.mpf(2) ** bits
        level = [int(mpmath.nint(value * scale)) for value in base]

    unit = 1 << bits
    table = np.zeros((n_max + 1, n_max + 1))
    for depth in range(n_max + 1):
        binom = 1
        slack = 1 << (depth + 1)
        for pos, entry in enumerate(level):
            n = depth + pos
            value = binom * entry
            if value < 0:
                if -value > binom * slack:
                    raise PrecisionError(f"{model.label} 的递减行在 n = {n} 出现负值", bits=bits)
                value = 0
            m = depth if side == "xibar" else pos
            table[n, m] = value / unit
            binom = binom * (n + 1) // (pos + 1)
        level = [level[i] - level[i + 1] for i in range(len(level) - 1)]
    return table


def _quadrature_table(model: XiModel, n_max: int) -> np.ndarray:
    n = np.arange(n_max + 1)[:, None]
    m = np.arange(n_max + 1)[None, :]

    def rows(u: float) -> np.ndarray:
        xi = 1.0 - float(quantile_xibar(model, np.array([u]))[0])
        return stats.binom.pmf(m, n, xi)

    logger.debug("quadrature decrement table for %s: n_max=%d", model.label, n_max)
    table, error, info = integrate.quad_vec(
        rows, 0.0, 1.0, epsabs=DECREMENT_QUAD_TOL, epsrel=0.0, norm="max", full_output=True
    )
    if info.status not in _QUAD_VEC_ACCEPTED:
        raise NumericalError(f"{model.label} 的递减表积分未收敛（{info.message}）", achieved=float(error))
    return np.tril(np.clip(table, 0.0, 1.0))


@lru_cache(maxsize=8)
def _starred_table(model: XiModel, n_cap: int, method: str) -> np.ndarray:
    if method == "closed_form":
        return _beta_table(model, n_cap)
    if method == "quadrature":
        return _quadrature_table(model, n_cap)
    return _fixed_point_table(model, n_cap)


def default_method(model: XiModel) -> str:
    if model.family == "beta":
        return "closed_form"
    return "fixed_point" if native_moment_side(model) is not None else "quadrature"


def decrement_table(model: XiModel, n_max: int, method: str = "auto") -> np.ndarray:
    """D[n, m] = q*(n:m)，0 ≤ m ≤ n ≤ n_max（下三角）。"""
    if method == "auto":
        method = default_method(model)
    if method not in METHODS:
        raise ValueError(f"未知方法：{method}")
    if method == "closed_form" and model.family != "beta":
        raise ValueError("闭式递减行只适用于 Beta 族")
    table = _starred_table(model, _bucket(n_max), method)
    return table[: n_max + 1, : n_max + 1]


def qstar_row(model: XiModel, n: int) -> DecrementRow:
    if n < 0:
        raise ValueError(f"n 必须非负，得到 {n}")
    return DecrementRow(n, "starred", decrement_table(model, n)[n, : n + 1].copy())


def q_row(model: XiModel, n: int) -> DecrementRow:
    if n < 1:
        raise ValueError(f"n 必须 ≥ 1，得到 {n}")
    starred = decrement_table(model, n)[n, 1 : n + 1]
    return DecrementRow(n, "plain", starred / np.sum(starred))


@lru_cache(maxsize=4)
def _transitions(model: XiModel, n_cap: int) -> tuple:
    table = decrement_table(model, n_cap)
    starred = np.zeros_like(table)
    plain = np.zeros_like(table)
    for n in range(n_cap + 1):
        starred[n, : n + 1] = table[n, n::-1]
        if n >= 1:
            moved = table[n, 1 : n + 1]
            plain[n, :n] = moved[::-1] / np.sum(moved)
    return starred, plain


def starred_transition(model: XiModel, n_max: int) -> np.ndarray:
    """T[n, j] = P{A_n* = j}；T[0, 0] = 1。"""
    return _transitions(model, _bucket(n_max))[0][: n_max + 1, : n_max + 1]


def plain_transition(model: XiModel, n_max: int) -> np.ndarray:
    """P[n, j] = P{A_n = j}（j < n）；第 0 行为零。"""
    return _transitions(model, _bucket(n_max))[1][: n_max + 1, : n_max + 1]
