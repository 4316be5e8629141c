from .alternating import e_k0_alt_sum, kstar_tail_direct
from .decrement import (
    DecrementRow,
    decrement_table,
    plain_transition,
    q_row,
    qstar_row,
    starred_transition,
)
from .gem import gem_k0_exact_pmf
from .pmf import Pmf, TailValue
from .recursions import (
    VisitTable,
    e_k0_dp,
    k01_limit_tail,
    k0_limit_tail,
    k0_pmf,
    k_pmf,
    kstar_pmf,
    visit_limit,
    visit_probs,
    visit_row,
    y_pmf,
    zn_pmf,
)

__all__ = [
    "Pmf",
    "TailValue",
    "DecrementRow",
    "VisitTable",
    "qstar_row",
    "q_row",
    "decrement_table",
    "starred_transition",
    "plain_transition",
    "kstar_pmf",
    "kstar_tail_direct",
    "k_pmf",
    "k0_pmf",
    "y_pmf",
    "visit_probs",
    "visit_row",
    "visit_limit",
    "zn_pmf",
    "e_k0_alt_sum",
    "e_k0_dp",
    "gem_k0_exact_pmf",
    "k0_limit_tail",
    "k01_limit_tail",
]
