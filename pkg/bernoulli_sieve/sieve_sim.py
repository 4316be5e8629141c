"""
伯努利筛的蒙特卡洛引擎。

- simulate_composition：逐盒二项稀释（精确二项抽样），O(K_n*) 次抽样；
- simulate_composition_walkpoints：n 个标准指数点落入随机游走区间 (S_{k−1}, S_k]；
- simulate_kstar_fast：K_n* = N_{E_{n,n}}，只需最大值 E_{n,n} 与一次首达；
- simulate_renewal_count / simulate_undershoot / simulate_poissonized；
- run_replicates：第 i 次重复固定使用 stream(seed, i)，结果与并行度无关。
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .config import CHUNK_SIZE, FAST_SIM_MAX_N, FULL_SIM_MAX_N, UNDERSHOOT_K_CAP
from .errors import ConfigError, SimulationError
from .rng import stream
from .xi_models import XiModel, draw_pair, draw_steps

logger = logging.getLogger(__name__)

STAT_FIELDS = ("k", "kstar", "k0", "k1", "w", "z", "v")
DERIVED_FIELDS = ("y", "nlogn")
SELECTABLE = STAT_FIELDS + DERIVED_FIELDS
FAST_FIELDS = frozenset({"kstar", "nlogn"})

ENGINES = ("sieve", "walkpoints")

_BLOCK_START = 16
_BLOCK_MAX = 4096


@dataclass(frozen=True)
class WeakComposition:
    """各盒球数，截止到最后一个非空盒。"""

    counts: Tuple[int, ...]
    n: int

    def __post_init__(self) -> None:
        if sum(self.counts) != self.n:
            raise ValueError(f"盒内球数之和 {sum(self.counts)} 与 n = {self.n} 不符")
        if self.counts and self.counts[-1] <= 0:
            raise ValueError("组合必须止于最后一个非空盒")
        if any(count < 0 for count in self.counts):
            raise ValueError("盒内球数不能为负")


@dataclass(frozen=True)
class SieveStats:
    k: int
    kstar: int
    k0: int
    k1: int
    w: int
    z: int
    v: int

    @property
    def y(self) -> int:
        return self.k0 + self.k1

    def as_dict(self) -> Dict[str, int]:
        return {name: getattr(self, name) for name in STAT_FIELDS}


@dataclass(frozen=True)
class UndershootSample:
    """Ũ(E_max)、E_max 与前 k_cap 个顶端间隔 E_max − E_{n−k,n}。"""

    undershoot: float
    e_max: float
    gaps: np.ndarray = field(repr=False)

    def z_exceeds(self, k: int) -> bool:
        """事件 Ũ > E_max − E_{n−k,n}，与 {Z_n > k} 同分布。"""
        if k < 1 or k > len(self.gaps):
            raise ValueError(f"k 必须位于 1..{len(self.gaps)}")
        return bool(self.undershoot > self.gaps[k - 1])


# ---------------------------------------------------------------------------
# 单次实现
# ---------------------------------------------------------------------------


def simulate_composition(model: XiModel, n: int, rng: np.random.Generator) -> WeakComposition:
    """逐盒二项稀释：第 j 盒获得 Binomial(剩余, ξ_j) 个球，直到球分完。"""
    if n < 0:
        raise ValueError(f"n 必须非负，得到 {n}")
    counts: List[int] = []
    remaining = int(n)
    block = _BLOCK_START
    while remaining > 0:
        xi, _ = draw_pair(model, rng, block)
        for p in xi:
            caught = int(rng.binomial(remaining, p))
            counts.append(caught)
            remaining -= caught
            if remaining == 0:
                break
        block = min(2 * block, _BLOCK_MAX)
    return WeakComposition(tuple(counts), int(n))


def simulate_composition_walkpoints(model: XiModel, n: int, rng: np.random.Generator) -> WeakComposition:
    """n 个标准指数点按游走区间 (S_{k−1}, S_k] 分箱。"""
    if n < 0:
        raise ValueError(f"n 必须非负，得到 {n}")
    if n == 0:
        return WeakComposition((), 0)
    points = np.sort(rng.standard_exponential(int(n)))
    levels = _walk_until(model, rng, float(points[-1]))
    edges = np.searchsorted(points, levels, side="right")
    counts = np.diff(np.concatenate(([0], edges)))
    return WeakComposition(tuple(int(c) for c in counts), int(n))


def stats_from_composition(comp: WeakComposition) -> SieveStats:
    counts = comp.counts
    kstar = len(counts)
    if kstar == 0:
        return SieveStats(k=0, kstar=0, k0=0, k1=0, w=1, z=0, v=0)
    k0 = sum(1 for c in counts if c == 0)
    k1 = sum(1 for c in counts if c == 1)
    first_zero = next((i for i, c in enumerate(counts) if c == 0), None)
    if first_zero is None:
        w, v = kstar + 1, 0
    else:
        w, v = first_zero + 1, sum(counts[first_zero + 1 :])
    return SieveStats(k=kstar - k0, kstar=kstar, k0=k0, k1=k1, w=w, z=counts[-1], v=v)


def remove_random_ball(comp: WeakComposition, rng: np.random.Generator) -> WeakComposition:
    """随机删去一个球并去掉尾部空盒，用于抽样一致性检查。"""
    if comp.n == 0:
        raise ValueError("空组合无法删球")
    ball = int(rng.integers(comp.n))
    box = int(np.searchsorted(np.cumsum(comp.counts), ball, side="right"))
    counts = list(comp.counts)
    counts[box] -= 1
    while counts and counts[-1] == 0:
        counts.pop()
    return WeakComposition(tuple(counts), comp.n - 1)


def _first_passage(model: XiModel, rng: np.random.Generator, level: float) -> Tuple[int, float]:
    """返回 (N_level, S_{N−1})，其中 N_level = inf{k ≥ 1 : S_k ≥ level}，S_0 = 0。"""
    total = 0.0
    count = 0
    block = _BLOCK_START
    while True:
        partial = total + np.cumsum(draw_steps(model, rng, block))
        hit = int(np.searchsorted(partial, level, side="left"))
        if hit < block:
            previous = float(partial[hit - 1]) if hit > 0 else total
            return count + hit + 1, previous
        total = float(partial[-1])
        count += block
        block = min(2 * block, _BLOCK_MAX)


def _walk_until(model: XiModel, rng: np.random.Generator, level: float) -> np.ndarray:
    """游走点 S_1, ..., S_N，其中 S_N 为首个 ≥ level 的点。"""
    pieces: List[np.ndarray] = []
    total = 0.0
    block = _BLOCK_START
    while True:
        partial = total + np.cumsum(draw_steps(model, rng, block))
        hit = int(np.searchsorted(partial, level, side="left"))
        if hit < block:
            pieces.append(partial[: hit + 1])
            return np.concatenate(pieces)
        pieces.append(partial)
        total = float(partial[-1])
        block = min(2 * block, _BLOCK_MAX)


def _max_exponential(n: float, rng: np.random.Generator) -> float:
    """n 个标准指数的最大值 E_{n,n} = −log(1 − U^{1/n})。"""
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return -math.log(-math.expm1(math.log(u) / n))


def simulate_kstar_fast(model: XiModel, n: float, rng: np.random.Generator) -> int:
    """K_n* = N_{E_{n,n}}；n 可为实数（只用到 log n 的量级），上限 1e15。"""
    if n < 1:
        raise ValueError(f"n 必须 ≥ 1，得到 {n}")
    count, _ = _first_passage(model, rng, _max_exponential(float(n), rng))
    return count


def simulate_renewal_count(model: XiModel, t: float, rng: np.random.Generator) -> int:
    """N_t = inf{k ≥ 1 : S_k ≥ t}；N_0 = 1。"""
    if t < 0:
        raise ValueError(f"t 必须非负，得到 {t}")
    count, _ = _first_passage(model, rng, float(t))
    return count


def simulate_undershoot(
    model: XiModel, n: int, rng: np.random.Generator, k_cap: int = UNDERSHOOT_K_CAP
) -> UndershootSample:
    """
    Rényi 表示：顶端间隔 E_{n−j+1,n} − E_{n−j,n} ~ Exp(1)/j 相互独立，
    剩余部分 E_{n−k_cap,n} 为 n − k_cap 个指数的最大值。
    """
    if n < 1:
        raise ValueError(f"n 必须 ≥ 1，得到 {n}")
    k_cap = min(int(k_cap), int(n))
    spacings = rng.standard_exponential(k_cap) / np.arange(1, k_cap + 1)
    gaps = np.cumsum(spacings)
    rest = _max_exponential(float(n - k_cap), rng) if n > k_cap else 0.0
    e_max = float(gaps[-1]) + rest
    _, previous = _first_passage(model, rng, e_max)
    return UndershootSample(undershoot=e_max - previous, e_max=e_max, gaps=gaps)


def simulate_poissonized(model: XiModel, t: float, rng: np.random.Generator) -> SieveStats:
    """球数 n ~ Poisson(t)，再做完整模拟。"""
    if t < 0:
        raise ValueError(f"t 必须非负，得到 {t}")
    n = int(rng.poisson(t)) if t > 0 else 0
    return stats_from_composition(simulate_composition(model, n, rng))


# ---------------------------------------------------------------------------
# 批量重复
# ---------------------------------------------------------------------------


def resolve_selector(selector: Iterable[str]) -> Tuple[str, ...]:
    """统计量选择器：去空白、小写、保序去重。"""
    if isinstance(selector, str):
        selector = selector.replace(",", " ").split()
    chosen: List[str] = []
    for name in selector:
        cleaned = name.strip().lower()
        if not cleaned:
            continue
        if cleaned not in SELECTABLE:
            raise ConfigError(f"未知统计量：{cleaned}（可选：{', '.join(SELECTABLE)}）")
        if cleaned not in chosen:
            chosen.append(cleaned)
    if not chosen:
        raise ConfigError("至少需要选择一个统计量")
    return tuple(chosen)


def uses_fast_path(fields: Sequence[str]) -> bool:
    return set(fields) <= FAST_FIELDS


def check_n(n: float, fields: Sequence[str]) -> None:
    if uses_fast_path(fields):
        if not 1 <= n <= FAST_SIM_MAX_N:
            raise ConfigError(f"快速路径要求 1 ≤ n ≤ {FAST_SIM_MAX_N:.0e}，得到 {n:g}")
        return
    if n < 0 or n != int(n):
        raise ConfigError(f"完整模拟要求 n 为非负整数，得到 {n:g}")
    if n > FULL_SIM_MAX_N:
        raise ConfigError(
            f"完整模拟的 n 上限为 {FULL_SIM_MAX_N:.0e}（得到 {n:g}）；"
            "若只需要 kstar 或 nlogn，请只选这两个统计量以使用快速路径"
        )


def _replicate(model: XiModel, n: float, fields: Sequence[str], engine: str, rng: np.random.Generator) -> List[float]:
    values: Dict[str, float] = {}
    if uses_fast_path(fields):
        if "kstar" in fields:
            values["kstar"] = simulate_kstar_fast(model, n, rng)
    else:
        simulate = simulate_composition if engine == "sieve" else simulate_composition_walkpoints
        stats = stats_from_composition(simulate(model, int(n), rng))
        values.update(stats.as_dict())
        values["y"] = stats.y
    if "nlogn" in fields:
        values["nlogn"] = simulate_renewal_count(model, math.log(n) if n > 1 else 0.0, rng)
    return [values[name] for name in fields]


def _run_chunk(
    model: XiModel, n: float, seed: int, fields: Tuple[str, ...], engine: str, start: int, stop: int
) -> np.ndarray:
    rows = [_replicate(model, n, fields, engine, stream(seed, index)) for index in range(start, stop)]
    return np.asarray(rows, dtype=np.int64).reshape(stop - start, len(fields))


def run_replicates(
    model: XiModel,
    n: float,
    reps: int,
    seed: int,
    selector: Iterable[str],
    workers: int = 1,
    engine: str = "sieve",
) -> Dict[str, np.ndarray]:
    """
    第 i 次重复使用 stream(seed, i)；按重复编号排序合并，结果与 workers 无关。

    仅选 kstar / nlogn 时走 O(log n) 快速路径（n ≤ 1e15），否则完整模拟（n ≤ 1e9）。
    """
    if reps < 1:
        raise ConfigError(f"reps 必须 ≥ 1，得到 {reps}")
    if engine not in ENGINES:
        raise ConfigError(f"未知模拟构造：{engine}（可选：{', '.join(ENGINES)}）")
    fields = resolve_selector(selector)
    check_n(n, fields)

    bounds = [(start, min(start + CHUNK_SIZE, reps)) for start in range(0, reps, CHUNK_SIZE)]
    blocks: List[np.ndarray] = []
    try:
        if workers <= 1:
            for start, stop in bounds:
                blocks.append(_run_chunk(model, n, seed, fields, engine, start, stop))
                logger.debug("replicates %d..%d done", start, stop)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(_run_chunk, model, n, seed, fields, engine, start, stop) for start, stop in bounds
                ]
                for future in futures:
                    blocks.append(future.result())
    except MemoryError as exc:
        completed = sum(len(block) for block in blocks)
        raise SimulationError(f"内存不足，已完成前 {completed} 次重复", completed=completed) from exc

    table = np.concatenate(blocks, axis=0)
    return {name: table[:, column] for column, name in enumerate(fields)}
