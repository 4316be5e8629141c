"""
交替二项和的高精度求值。

从 BASE_PRECISION_BITS 起步；若估计的抵消位数 log2(max|项| / |和|) 使剩余有效位
不足 64，则精度翻倍重算，超过上限（默认 1024 位）时抛出 PrecisionError。
"""

from __future__ import annotations

import logging
import math
from typing import Callable, List, Optional

import mpmath

from .. import config
from ..errors import PrecisionError
from ..xi_models import XiModel, moment_bits, xi_moments_mp, xibar_moments_mp

logger = logging.getLogger(__name__)

_KEEP_BITS = 64


def _escalating_sum(
    build_terms: Callable[[], List[mpmath.mpf]], label: str, start_bits: int, max_bits: Optional[int], model: XiModel
) -> float:
    cap = max_bits or config.MAX_PRECISION_BITS
    bits = max(config.BASE_PRECISION_BITS, start_bits)
    if bits > cap:
        raise PrecisionError(f"{label}：至少需要 {bits} 位，超过上限 {cap}", bits=cap)
    lost = math.inf
    while True:
        with mpmath.workprec(bits):
            terms = build_terms()
            total = mpmath.fsum(terms)
            largest = max(abs(term) for term in terms)
            if total > 0 and largest > 0:
                lost = max(0.0, float(mpmath.log(largest / abs(total), 2)))
                if lost > moment_bits(model) - 20:
                    raise PrecisionError(f"{label}：抵消 {lost:.0f} 位，超出矩的可用精度", bits=bits)
                if bits - lost >= _KEEP_BITS:
                    return float(total)
        if bits >= cap:
            raise PrecisionError(f"{label}：{bits} 位下仍有灾难性抵消（约 {lost:.0f} 位）", bits=bits)
        logger.info("%s: escalating precision %d -> %d bits", label, bits, min(2 * bits, cap))
        bits = min(2 * bits, cap)


def kstar_tail_direct(model: XiModel, n: int, k: int, max_bits: Optional[int] = None) -> float:
    """P{K_n* > k} = −Σ_{i=1}^{n} C(n,i) (−1)^i (Eξ̄^i)^k。"""
    if n < 1 or k < 0:
        raise ValueError(f"需要 n ≥ 1、k ≥ 0，得到 n = {n}, k = {k}")
    if k == 0:
        return 1.0

    def terms() -> List[mpmath.mpf]:
        moments = xibar_moments_mp(model, n)
        return [-((-1) ** i) * mpmath.binomial(n, i) * moments[i] ** k for i in range(1, n + 1)]

    return min(1.0, _escalating_sum(terms, f"P{{K*_{n} > {k}}}", 0, max_bits, model))


def e_k0_alt_sum(model: XiModel, n: int, max_bits: Optional[int] = None) -> float:
    """E K_{n,0} = Σ_{k=1}^{n} (−1)^{k+1} C(n,k) (1 − Eξ^k) / (1 − Eξ̄^k)，工作精度至少 4n 位。"""
    if n < 0:
        raise ValueError(f"n 必须非负，得到 {n}")
    if n == 0:
        return 0.0

    def terms() -> List[mpmath.mpf]:
        xi = xi_moments_mp(model, n)
        xibar = xibar_moments_mp(model, n)
        return [(-1) ** (k + 1) * mpmath.binomial(n, k) * (1 - xi[k]) / (1 - xibar[k]) for k in range(1, n + 1)]

    return _escalating_sum(terms, f"E K_{{{n},0}}", 4 * n, max_bits, model)
