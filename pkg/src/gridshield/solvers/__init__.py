"""In-house dense optimization: QP (operator splitting), LP (simplex), KKT."""

from .kkt import reduce_equalities, solve_kkt_equality
from .lp import LPSolution, solve_lp
from .qp import QPProblem, QPSolution, solve_qp

__all__ = [
    "reduce_equalities",
    "solve_kkt_equality",
    "LPSolution",
    "solve_lp",
    "QPProblem",
    "QPSolution",
    "solve_qp",
]
