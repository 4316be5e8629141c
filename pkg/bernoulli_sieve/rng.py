"""
基于计数器的可复现随机流。

stream(seed, i) 用 splitmix64 终结器分别打散主种子与重复编号，拼成 Philox 的 128 位密钥；
同一 (seed, i) 在任何平台、任何并行调度下产生相同序列。

固定测试向量（tests/test_rng.py）：
    mix64(0) == 0xE220A8397B1DCDAF
"""

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(value: int) -> int:
    """splitmix64：先加黄金比例增量，再做两轮 xor-shift-multiply。64 位上的双射。"""
    z = (value + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RngStream:
    seed: int
    index: int

    @property
    def key(self) -> np.ndarray:
        return np.array([mix64(self.seed & MASK64), mix64(self.index & MASK64)], dtype=np.uint64)

    def generator(self) -> np.random.Generator:
        # 计数器从 0 开始，由 Philox 内部维护
        return np.random.Generator(np.random.Philox(key=self.key))


def stream(seed: int, index: int) -> np.random.Generator:
    return RngStream(seed, index).generator()
