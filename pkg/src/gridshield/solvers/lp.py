"""Dense linear programming via two-phase simplex with Bland's rule.

Problem form: ``minimize cost·x`` over free (sign-unrestricted) variables
subject to ``A_eq x = b_eq`` and ``A_ineq x ≤ b_ineq``.  Free variables are
split into positive parts internally; slack variables complete the standard
form; phase 1 minimizes artificial variables.  Bland's anti-cycling rule makes
every pivot choice deterministic and guarantees termination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SolverError

__all__ = ["LPSolution", "solve_lp"]

_PIVOT_TOL = 1e-9
_FEAS_TOL = 1e-7


@dataclass(frozen=True)
class LPSolution:
    x: np.ndarray | None
    objective: float | None
    status: str  # "optimal" | "infeasible" | "unbounded"


def solve_lp(
    cost: np.ndarray,
    A_eq: np.ndarray | None = None,
    b_eq: np.ndarray | None = None,
    A_ineq: np.ndarray | None = None,
    b_ineq: np.ndarray | None = None,
    max_iter: int | None = None,
) -> LPSolution:
    """Solve the LP; ``status`` is ``optimal``, ``infeasible`` or ``unbounded``."""
    cost = np.asarray(cost, dtype=float).ravel()
    n = cost.shape[0]
    A_eq, b_eq = _normalize(A_eq, b_eq, n, "eq")
    A_ineq, b_ineq = _normalize(A_ineq, b_ineq, n, "ineq")

    m_eq, m_in = A_eq.shape[0], A_ineq.shape[0]
    m = m_eq + m_in
    if m == 0:
        # No constraints: bounded only for zero cost.
        if np.all(cost == 0):
            return LPSolution(np.zeros(n), 0.0, "optimal")
        return LPSolution(None, None, "unbounded")

    # Standard form columns: x+ (n), x- (n), slacks (m_in).
    n_cols = 2 * n + m_in
    A = np.zeros((m, n_cols))
    b = np.concatenate([b_eq, b_ineq]).astype(float)
    A[:m_eq, :n] = A_eq
    A[:m_eq, n : 2 * n] = -A_eq
    A[m_eq:, :n] = A_ineq
    A[m_eq:, n : 2 * n] = -A_ineq
    for i in range(m_in):
        A[m_eq + i, 2 * n + i] = 1.0

    # Make every right-hand side nonnegative.
    negative = b < 0
    A[negative] *= -1.0
    b[negative] *= -1.0

    scale = max(1.0, float(np.abs(A).max()), float(np.abs(b).max()))
    tol = _PIVOT_TOL * scale
    if max_iter is None:
        max_iter = 2000 + 100 * (m + n_cols)

    # Phase 1: slacks with +1 coefficient start in the basis; everything else
    # gets an artificial variable.
    basis = np.empty(m, dtype=int)
    artificial_rows = []
    for i in range(m):
        slack_col = 2 * n + (i - m_eq) if i >= m_eq else -1
        if slack_col >= 0 and A[i, slack_col] == 1.0:
            basis[i] = slack_col
        else:
            artificial_rows.append(i)
    n_art = len(artificial_rows)
    if n_art:
        art_block = np.zeros((m, n_art))
        for j, row in enumerate(artificial_rows):
            art_block[row, j] = 1.0
            basis[row] = n_cols + j
        T = np.hstack([A, art_block, b[:, None]])
        cost1 = np.zeros(n_cols + n_art)
        cost1[n_cols:] = 1.0
        status = _simplex(T, basis, cost1, tol, max_iter)
        if status == "unbounded":  # cannot happen: phase-1 objective >= 0
            raise SolverError("phase-1 simplex reported unbounded")
        phase1_obj = _objective(T, basis, cost1)
        if phase1_obj > _FEAS_TOL * scale:
            return LPSolution(None, None, "infeasible")
        redundant = _drive_out_artificials(T, basis, n_cols, tol)
        if redundant:
            keep = np.setdiff1d(np.arange(T.shape[0]), redundant)
            T = T[keep]
            basis = basis[keep]
        T = np.hstack([T[:, :n_cols], T[:, -1:]])
    else:
        T = np.hstack([A, b[:, None]])

    cost2 = np.concatenate([cost, -cost, np.zeros(m_in)])
    status = _simplex(T, basis, cost2, tol, max_iter)
    if status == "unbounded":
        return LPSolution(None, None, "unbounded")

    values = np.zeros(n_cols)
    for i, col in enumerate(basis):
        if col < n_cols:
            values[col] = T[i, -1]
    x = values[:n] - values[n : 2 * n]
    return LPSolution(x, float(cost @ x), "optimal")


def _normalize(
    A: np.ndarray | None, b: np.ndarray | None, n: int, label: str
) -> tuple[np.ndarray, np.ndarray]:
    if A is None:
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[1] != n:
        raise ValueError(f"A_{label} width {A.shape[1]} does not match n={n}")
    if A.shape[0] != b.shape[0]:
        raise ValueError(f"A_{label}/b_{label} row counts differ")
    return A, b


def _reduced_costs(T: np.ndarray, basis: np.ndarray, cost: np.ndarray) -> np.ndarray:
    return cost - cost[basis] @ T[:, :-1]


def _objective(T: np.ndarray, basis: np.ndarray, cost: np.ndarray) -> float:
    return float(cost[basis] @ T[:, -1])


def _simplex(
    T: np.ndarray, basis: np.ndarray, cost: np.ndarray, tol: float, max_iter: int
) -> str:
    """Run simplex pivots in place; returns "optimal" or "unbounded"."""
    for _ in range(max_iter):
        reduced = _reduced_costs(T, basis, cost)
        entering_candidates = np.flatnonzero(reduced < -tol)
        if entering_candidates.size == 0:
            return "optimal"
        j = int(entering_candidates[0])  # Bland: lowest index
        column = T[:, j]
        positive = np.flatnonzero(column > tol)
        if positive.size == 0:
            return "unbounded"
        ratios = T[positive, -1] / column[positive]
        best = ratios.min()
        # Bland tie-break: among minimal ratios choose the row whose basic
        # variable has the smallest column index.
        tied = positive[ratios <= best + tol * (1.0 + abs(best))]
        leave = int(tied[np.argmin(basis[tied])])
        _pivot(T, leave, j)
        basis[leave] = j
    raise SolverError(f"simplex exceeded {max_iter} pivots")


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])


def _drive_out_artificials(
    T: np.ndarray, basis: np.ndarray, n_cols: int, tol: float
) -> list[int]:
    """Pivot basic artificials onto structural columns; list redundant rows.

    A row whose artificial cannot be driven out is linearly dependent on the
    others (all-zero over structural columns with zero right-hand side after a
    feasible phase 1) and can be dropped.
    """
    redundant: list[int] = []
    for i in range(basis.shape[0]):
        if basis[i] < n_cols:
            continue
        structural = np.flatnonzero(np.abs(T[i, :n_cols]) > tol)
        if structural.size:
            j = int(structural[0])
            _pivot(T, i, j)
            basis[i] = j
        else:
            redundant.append(i)
    return redundant
