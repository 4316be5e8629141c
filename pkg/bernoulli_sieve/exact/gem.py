from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from ..config import PMF_TOL
from .pmf import Pmf

logger = logging.getLogger(__name__)

_MAX_LENGTH = 1 << 16


def _convolve_components(theta: float, n: int, length: int) -> np.ndarray:
    ks = np.arange(length, dtype=float)
    result = np.zeros(length)
    result[0] = 1.0
    for j in range(1, n + 1):
        success = j / (theta + j)
        failure = theta / (theta + j)
        if j < n:
            # (M_j − 1)_+：P{0} = P{M_j ≤ 1}，P{k} = P{M_j = k + 1}
            component = success * failure ** (ks + 1.0)
            component[0] = success + success * failure
        else:
            component = success * failure**ks
        result = np.convolve(result, component)[:length]
    return result


def gem_k0_exact_pmf(theta: float, n: int, i_max: Optional[int] = None, tol: float = PMF_TOL) -> Pmf:
    """
    GEM(θ) 下 K_{n,0} 的精确分布：

        K_{n,0} =d (M_1 − 1)_+ + ... + (M_{n−1} − 1)_+ + M_n，

    M_j 相互独立，取值 {0, 1, ...} 的几何分布，成功概率 j / (θ + j)。
    未给 i_max 时支撑长度自动加倍，直到截断余量低于 tol。
    """
    if theta <= 0.0:
        raise ValueError(f"θ 必须为正，得到 {theta}")
    if n < 1:
        raise ValueError(f"n 必须 ≥ 1，得到 {n}")
    length = (i_max + 1) if i_max is not None else 64
    while True:
        probs = _convolve_components(theta, n, length)
        deficit = 1.0 - float(np.sum(probs))
        if i_max is not None or deficit < tol or length >= _MAX_LENGTH:
            break
        length *= 2
    if deficit > tol:
        logger.warning("GEM K_{%d,0} truncated with mass deficit %.3e", n, deficit)
    return Pmf(0, probs, deficit)
