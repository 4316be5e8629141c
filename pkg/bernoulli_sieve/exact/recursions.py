"""
基于剩余球数马尔可夫链的有限 n 精确递推。

- K_n* =d K*_{A_n*} + 1：按 k 递增做矩阵-向量乘，自环项 j = n 引用上一层；
- K_n =d K_{A_n} + 1：A_n 严格递减，至多 n 步；
- K_{n,0} =d K_{A_n*,0} + 1{A_n* = n}：每层 i 解一个单位下三角方程组
  (I − L) a^{(i)} = D a^{(i−1)}，D 为自环系数 Eξ̄^n；
- Y_n =d Y_{A_n*} + 1{A_n* ≥ n − 1}：同上，进位发生在 A_n* ∈ {n−1, n}；
- 访问概率 g(n, m)、Z_n 的分布、E K_{n,0} 的非交替递推、两个极限尾概率级数。
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import solve_triangular

from ..config import K_MAX_DEFAULT, PMF_TOL
from ..xi_models import XiModel, moment_table, mu
from .decrement import decrement_table, plain_transition, starred_transition
from .pmf import Pmf, TailValue

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VisitTable:
    """g(n, m)：从 n 出发的剩余球数链访问 m 的概率，下三角存储，g(n, n) = 1。"""

    n_max: int
    table: np.ndarray = field(repr=False)

    def g(self, n: int, m: int) -> float:
        if not 0 <= m <= n <= self.n_max:
            raise IndexError(f"需要 0 ≤ m ≤ n ≤ {self.n_max}，得到 n = {n}, m = {m}")
        return float(self.table[n, m])

    def row(self, n: int) -> np.ndarray:
        return self.table[n, : n + 1]


def _warn_truncation(what: str, deficit: float, tol: float) -> None:
    if deficit > tol:
        logger.warning("%s truncated with mass deficit %.3e (tolerance %.1e)", what, deficit, tol)


# ---------------------------------------------------------------------------
# K_n*、K_n
# ---------------------------------------------------------------------------


def kstar_pmf(model: XiModel, n: int, k_max: Optional[int] = None, tol: float = PMF_TOL) -> Pmf:
    """K_n* 的分布；在 k_max 处截断并给出 mass_deficit。"""
    if n < 0:
        raise ValueError(f"n 必须非负，得到 {n}")
    if n == 0:
        return Pmf.point_mass(0)
    transition = starred_transition(model, n).copy()
    transition[0, 0] = 0.0
    state = np.zeros(n + 1)
    state[0] = 1.0
    probs = []
    limit = k_max if k_max is not None else K_MAX_DEFAULT
    total = 0.0
    for _ in range(limit):
        state = transition @ state
        probs.append(state[n])
        total += state[n]
        if 1.0 - total < tol:
            break
    pmf = Pmf.from_probs(1, np.array(probs))
    _warn_truncation(f"K*_{n}", pmf.mass_deficit, tol)
    return pmf


def k_pmf(model: XiModel, n: int) -> Pmf:
    """K_n 的分布，支撑 {1..n}。"""
    if n < 0:
        raise ValueError(f"n 必须非负，得到 {n}")
    if n == 0:
        return Pmf.point_mass(0)
    transition = plain_transition(model, n)
    state = np.zeros(n + 1)
    state[0] = 1.0
    probs = []
    total = 0.0
    for _ in range(n):
        state = transition @ state
        probs.append(state[n])
        total += state[n]
        # 剩余质量已低于双精度分辨率
        if 1.0 - total < 1e-15:
            break
    return Pmf.from_probs(1, np.array(probs))


# ---------------------------------------------------------------------------
# K_{n,0}、Y_n：逐层三角求解
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _level_table(model: XiModel, n: int, kind: str, i_max: int, tol: float, all_rows: bool) -> np.ndarray:
    """第 i 行为 (P{X_j = i})_{j=0..n}；X 为 K_{·,0}（kind="k0"）或 Y（kind="y"）。"""
    transition = starred_transition(model, n)
    offset = -1 if kind == "k0" else -2
    system = -np.tril(transition, offset)
    carry = transition - np.tril(transition, offset)
    carry[0, :] = 0.0

    rhs = np.zeros(n + 1)
    rhs[0] = 1.0
    rows = []
    cumulative = np.zeros(n + 1)
    watch = slice(1, n + 1) if all_rows else slice(n, n + 1)
    current = None
    for level in range(i_max + 1):
        if level > 0:
            rhs = carry @ current
        current = solve_triangular(system, rhs, lower=True, unit_diagonal=True)
        rows.append(current)
        cumulative += current
        if n == 0 or np.max(1.0 - cumulative[watch]) < tol:
            break
    return np.array(rows)


def _levels(model: XiModel, n: int, kind: str, i_max: Optional[int], tol: float, all_rows: bool = False) -> np.ndarray:
    return _level_table(model, n, kind, K_MAX_DEFAULT if i_max is None else int(i_max), float(tol), all_rows)


def k0_pmf(model: XiModel, n: int, i_max: Optional[int] = None, tol: float = PMF_TOL) -> Pmf:
    """K_{n,0}（K_n* 之前的空盒数）的分布。"""
    if n < 0:
        raise ValueError(f"n 必须非负，得到 {n}")
    if n == 0:
        return Pmf.point_mass(0)
    table = _levels(model, n, "k0", i_max, tol)
    pmf = Pmf.from_probs(0, table[:, n])
    _warn_truncation(f"K_{{{n},0}}", pmf.mass_deficit, tol)
    return pmf


def y_pmf(model: XiModel, n: int, i_max: Optional[int] = None, tol: float = PMF_TOL) -> Pmf:
    """Y_n = K_{n,0} + K_{n,1} 的分布。"""
    if n < 0:
        raise ValueError(f"n 必须非负，得到 {n}")
    if n == 0:
        return Pmf.point_mass(0)
    table = _levels(model, n, "y", i_max, tol)
    pmf = Pmf.from_probs(0, table[:, n])
    _warn_truncation(f"Y_{n}", pmf.mass_deficit, tol)
    return pmf


# ---------------------------------------------------------------------------
# 访问概率、Z_n、E K_{n,0}
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4)
def visit_probs(model: XiModel, n_max: int) -> VisitTable:
    """g(n, m) = Σ_j P{A_n = j} g(j, m)，整表下三角，按 (模型, n_max) 缓存。"""
    if n_max < 1:
        raise ValueError(f"n_max 必须 ≥ 1，得到 {n_max}")
    transition = plain_transition(model, n_max)
    table = np.eye(n_max + 1)
    for n in range(1, n_max + 1):
        table[n, :n] = transition[n, :n] @ table[:n, :n]
    logger.debug("visit table for %s up to n=%d", model.label, n_max)
    return VisitTable(n_max, table)


def visit_row(model: XiModel, n: int) -> np.ndarray:
    """单行 g(n, ·)：从 n 向下推进访问概率，O(n²)。"""
    transition = plain_transition(model, n)
    row = np.zeros(n + 1)
    row[n] = 1.0
    for state in range(n, 0, -1):
        if row[state] > 0.0:
            row[:state] += row[state] * transition[state, :state]
    return row


def visit_limit(model: XiModel, m: int) -> float:
    """n → ∞ 时 g(n, m) 的极限 (1 − Eξ̄^m) / (μ m)；μ = ∞ 时为 0。"""
    rate = mu(model)
    if math.isinf(rate):
        return 0.0
    moved = float(np.sum(decrement_table(model, m)[m, 1 : m + 1]))
    return moved / (rate * m)


def zn_pmf(model: XiModel, n: int) -> Pmf:
    """P{Z_n = m} = g(n, m)·P{A_m = 0}，m = 1..n。"""
    if n < 1:
        raise ValueError(f"n 必须 ≥ 1，得到 {n}")
    row = visit_row(model, n)
    emptied = plain_transition(model, n)[1 : n + 1, 0]
    return Pmf.from_probs(1, row[1:] * emptied)


def _stay_ratios(model: XiModel, n: int) -> np.ndarray:
    """r_m = Eξ̄^m / (1 − Eξ̄^m)，m = 0..n（r_0 置 0）。"""
    table = decrement_table(model, n)
    stay = table[:, 0]
    moved = np.array([np.sum(table[m, 1 : m + 1]) for m in range(n + 1)])
    ratios = np.zeros(n + 1)
    ratios[1:] = stay[1:] / moved[1:]
    return ratios


def e_k0_dp(model: XiModel, n: int) -> float:
    """ϰ_n = Σ_{m=1}^{n−1} g(n, m) r_m + r_n：只含非负项，无抵消。"""
    if n < 0:
        raise ValueError(f"n 必须非负，得到 {n}")
    if n == 0:
        return 0.0
    row = visit_row(model, n)
    return float(np.dot(row[1:], _stay_ratios(model, n)[1:]))


# ---------------------------------------------------------------------------
# 极限尾概率级数
# ---------------------------------------------------------------------------


def _level_column(table: np.ndarray, level: int) -> Tuple[np.ndarray, bool]:
    if level < len(table):
        return table[level], True
    return np.zeros(table.shape[1]), False


def k0_limit_tail(model: XiModel, i: int, j_max: int = 2000, tol: float = PMF_TOL) -> TailValue:
    """
    P{K_{∞,0} ≥ i} = μ^{−1} Σ_{j≥1} (Eξ̄^j / j)·P{K_{j,0} = i − 1}。

    级数在 j_max 处截断，余量上界 μ^{−1}(ν − Σ_{j≤j_max} Eξ̄^j / j)。μ = ∞ 时 K_{∞,0} = 0。
    """
    if i <= 0:
        return TailValue(1.0, 0.0)
    moments = moment_table(model, j_max)
    rate = moments.mu
    if math.isinf(rate):
        return TailValue(0.0, 0.0)
    table = _levels(model, j_max, "k0", None, tol, all_rows=True)
    stay = decrement_table(model, j_max)[1 : j_max + 1, 0]
    weights = stay / np.arange(1, j_max + 1)
    column, complete = _level_column(table, i - 1)
    value = float(np.dot(weights, column[1:])) / rate
    remainder = (moments.nu - float(np.sum(weights))) / rate
    if not complete:
        remainder += tol * float(np.sum(weights)) / rate
    return TailValue(value, max(0.0, remainder))


def k01_limit_tail(model: XiModel, i: int, j_max: int = 2000, tol: float = PMF_TOL) -> TailValue:
    """
    P{K_{01} ≥ i}，K_{01} 为 K_{n,0} + K_{n,1} 的极限：
    μ^{−1}[Eξ·1{i = 1} + Σ_{j≥1} (Eξ̄^j / j + Eξ̄^j − Eξ̄^{j+1})·P{Y_j = i − 1}]。
    """
    if i <= 0:
        return TailValue(1.0, 0.0)
    moments = moment_table(model, j_max)
    rate = moments.mu
    if math.isinf(rate):
        return TailValue(0.0, 0.0)
    table = _levels(model, j_max, "y", None, tol, all_rows=True)
    decrement = decrement_table(model, j_max + 1)
    stay = decrement[1 : j_max + 2, 0]
    index = np.arange(1, j_max + 1)
    logarithmic = stay[:-1] / index
    weights = logarithmic + stay[:-1] - stay[1:]
    column, complete = _level_column(table, i - 1)
    head = float(np.sum(decrement[1, 1:2])) if i == 1 else 0.0
    value = (head + float(np.dot(weights, column[1:]))) / rate
    remainder = (moments.nu - float(np.sum(logarithmic)) + float(stay[-1])) / rate
    if not complete:
        remainder += tol * float(np.sum(weights)) / rate
    return TailValue(value, max(0.0, remainder))
