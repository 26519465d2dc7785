"""Exact solution of equality-constrained convex quadratic minimization.

Solves ``minimize x^T Q x  subject to  A x = b`` through the KKT linear
system.  Dependent constraint rows are eliminated first (they are common when
constraint blocks share structure); inconsistent systems and genuinely
singular KKT matrices raise :class:`SingularKKTError`.
"""

from __future__ import annotations

import numpy as np

from ..errors import SingularKKTError

__all__ = ["reduce_equalities", "solve_kkt_equality"]


def reduce_equalities(
    A: np.ndarray, b: np.ndarray, tol: float = 1e-10
) -> tuple[np.ndarray, np.ndarray]:
    """Row-reduce ``A x = b`` to an equivalent independent-row system.

    Gaussian elimination with partial pivoting on the augmented matrix; rows
    that vanish must have vanishing right-hand side, otherwise the system is
    inconsistent and :class:`SingularKKTError` is raised.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    m, n = A.shape
    if b.shape[0] != m:
        raise ValueError(f"b has {b.shape[0]} entries for {m} constraint rows")
    if m == 0:
        return A.copy(), b.copy()
    scale = max(1.0, float(np.abs(A).max()), float(np.abs(b).max()))
    work = np.hstack([A, b[:, None]])
    rank = 0
    for col in range(n):
        if rank == m:
            break
        pivot = rank + int(np.argmax(np.abs(work[rank:, col])))
        if abs(work[pivot, col]) <= tol * scale:
            continue
        work[[rank, pivot]] = work[[pivot, rank]]
        factors = work[rank + 1 :, col] / work[rank, col]
        work[rank + 1 :] -= np.outer(factors, work[rank])
        rank += 1
    if rank < m:
        tail = work[rank:]
        if np.any(np.abs(tail[:, -1]) > 10 * tol * scale):
            raise SingularKKTError(
                f"inconsistent equality constraints "
                f"(rank {rank} of {m} rows, residual "
                f"{float(np.abs(tail[:, -1]).max()):.3e})"
            )
    return work[:rank, :-1].copy(), work[:rank, -1].copy()


def solve_kkt_equality(
    Q: np.ndarray,
    A_eq: np.ndarray,
    b_eq: np.ndarray,
    tol: float = 1e-10,
) -> np.ndarray:
    """Minimizer of ``x^T Q x`` subject to ``A_eq x = b_eq``.

    Stationarity gives ``2Qx + A^T λ = 0`` together with feasibility; both are
    solved as one dense linear system after dropping dependent constraint
    rows.  Raises :class:`SingularKKTError` when the reduced KKT matrix is
    singular (the quadratic form has a flat direction the constraints do not
    pin down) or the constraints are inconsistent.
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    if Q.shape != (n, n):
        raise ValueError(f"Q must be square, got shape {Q.shape}")
    A_red, b_red = reduce_equalities(A_eq, b_eq, tol=tol)
    m = A_red.shape[0]
    if A_red.size and A_red.shape[1] != n:
        raise ValueError(
            f"constraint width {A_red.shape[1]} does not match n={n}"
        )
    if m == 0:
        return np.zeros(n)

    K = np.zeros((n + m, n + m))
    K[:n, :n] = 2.0 * Q
    K[:n, n:] = A_red.T
    K[n:, :n] = A_red
    rhs = np.concatenate([np.zeros(n), b_red])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularKKTError(
            f"singular KKT system ({m} independent constraints, n={n})"
        ) from exc
    residual = float(np.abs(K @ sol - rhs).max())
    bound = 1e-7 * (1.0 + float(np.abs(K).max()) * float(np.abs(sol).max()))
    if residual > bound:
        raise SingularKKTError(
            f"ill-conditioned KKT system (solve residual {residual:.3e})"
        )
    return sol[:n]
