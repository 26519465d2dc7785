"""Convex quadratic programming by operator splitting with active-set polish.

Problem form: ``minimize x^T Q x`` (note: no ½ factor, no linear term) subject
to ``A_eq x = b_eq`` and ``A_ineq x ≤ b_ineq`` with ``Q`` symmetric positive
semidefinite.

The solver runs an ADMM iteration on the constraint form ``l ≤ Ax ≤ u``
(equalities get both bounds equal), with over-relaxation, per-row penalty
weights, periodic penalty rescaling, and a polish step that re-solves the
detected active set as an equality-constrained problem for high accuracy.
Primal infeasibility is declared when the standard certificate built from the
dual increments holds for a sustained run of iterations.  All schedules are
fixed, so results are deterministic for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import SolverError
from .kkt import solve_kkt_equality
from ..errors import SingularKKTError

__all__ = ["QPProblem", "QPSolution", "solve_qp"]

_SIGMA = 1e-6
_ALPHA = 1.6
_RHO_INIT = 0.1
_RHO_EQ_SCALE = 1e3
_RHO_MIN = 1e-6
_RHO_MAX = 1e6
_RHO_ADAPT_FACTOR = 5.0
_CHECK_EVERY = 25
_PINF_EPS = 1e-6
_PINF_RUN = 1000
_POLISH_TRIGGER = 1e-4


@dataclass(frozen=True)
class QPProblem:
    """Data of one QP; arrays are normalized and Q symmetrized on creation."""

    Q: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ineq: np.ndarray | None = None
    b_ineq: np.ndarray | None = None

    def __post_init__(self) -> None:
        Q = np.asarray(self.Q, dtype=float)
        n = Q.shape[0]
        if Q.shape != (n, n):
            raise ValueError(f"Q must be square, got shape {Q.shape}")
        scale = max(1.0, float(np.abs(Q).max())) if Q.size else 1.0
        asym = float(np.abs(Q - Q.T).max()) if n else 0.0
        if asym > 1e-10 * scale:
            raise ValueError(f"Q is not symmetric (asymmetry {asym:.3e})")
        object.__setattr__(self, "Q", (Q + Q.T) / 2.0)
        for attr_a, attr_b, label in (
            ("A_eq", "b_eq", "eq"),
            ("A_ineq", "b_ineq", "ineq"),
        ):
            A = getattr(self, attr_a)
            b = getattr(self, attr_b)
            if A is None:
                A = np.zeros((0, n))
                b = np.zeros(0)
            else:
                A = np.atleast_2d(np.asarray(A, dtype=float))
                b = np.asarray(b, dtype=float).ravel()
                if A.shape[1] != n:
                    raise ValueError(
                        f"A_{label} width {A.shape[1]} does not match n={n}"
                    )
                if A.shape[0] != b.shape[0]:
                    raise ValueError(f"A_{label}/b_{label} row counts differ")
            object.__setattr__(self, attr_a, A)
            object.__setattr__(self, attr_b, b)

    @property
    def n(self) -> int:
        return self.Q.shape[0]


@dataclass(frozen=True)
class QPSolution:
    x: np.ndarray
    objective: float
    status: str  # "optimal" | "infeasible" | "max_iter"
    primal_residual: float
    dual_residual: float
    iterations: int


def solve_qp(
    problem: QPProblem,
    tol: float = 1e-8,
    max_iter: int = 50000,
    trace_path: str | Path | None = None,
) -> QPSolution:
    """Solve the QP; see module docstring for the algorithm."""
    n = problem.n
    Q = problem.Q
    P = 2.0 * Q
    m_eq = problem.A_eq.shape[0]
    m_in = problem.A_ineq.shape[0]
    m = m_eq + m_in
    if m == 0:
        # PSD objective with no constraints is minimized at the origin.
        return QPSolution(np.zeros(n), 0.0, "optimal", 0.0, 0.0, 0)

    A = np.vstack([problem.A_eq, problem.A_ineq])
    AT = A.T
    lower = np.concatenate([problem.b_eq, np.full(m_in, -np.inf)])
    upper = np.concatenate([problem.b_eq, problem.b_ineq])
    eq_mask = np.zeros(m, dtype=bool)
    eq_mask[:m_eq] = True
    ineq_slice = slice(m_eq, m)

    rho_scalar = _RHO_INIT
    rho = _rho_vector(rho_scalar, eq_mask)
    M_inv = _factor(P, A, rho, n)

    x = np.zeros(n)
    z = np.clip(np.zeros(m), lower, upper)
    y = np.zeros(m)

    trace_file = open(trace_path, "w", encoding="utf-8") if trace_path else None
    if trace_file:
        trace_file.write("iter,primal_res,dual_res,obj\n")

    pinf_run = 0
    r_prim = r_dual = np.inf
    try:
        for k in range(1, max_iter + 1):
            rhs = _SIGMA * x + AT @ (rho * z - y)
            x_half = M_inv @ rhs
            z_half = A @ x_half
            x = _ALPHA * x_half + (1.0 - _ALPHA) * x
            z_relax = _ALPHA * z_half + (1.0 - _ALPHA) * z
            z_new = np.clip(z_relax + y / rho, lower, upper)
            dy = rho * (z_relax - z_new)
            y = y + dy
            z = z_new

            if _primal_infeasibility_certificate(AT, dy, lower, upper):
                pinf_run += 1
                if pinf_run >= _PINF_RUN:
                    obj = float(x @ Q @ x)
                    return QPSolution(x, obj, "infeasible", r_prim, r_dual, k)
            else:
                pinf_run = 0

            if k % _CHECK_EVERY == 0 or k == max_iter:
                Ax = A @ x
                r_prim = float(np.abs(Ax - z).max())
                r_dual = float(np.abs(P @ x + AT @ y).max())
                obj = float(x @ Q @ x)
                if trace_file:
                    trace_file.write(f"{k},{r_prim!r},{r_dual!r},{obj!r}\n")
                x_scale = 1.0 + float(np.abs(x).max())
                if max(r_prim, r_dual) <= _POLISH_TRIGGER * x_scale or k == max_iter:
                    polished = _polish(problem, P, A, Ax, y, ineq_slice, tol)
                    if polished is not None:
                        return QPSolution(
                            polished[0],
                            float(polished[0] @ Q @ polished[0]),
                            "optimal",
                            polished[1],
                            polished[2],
                            k,
                        )
                if r_prim <= tol * x_scale and r_dual <= tol * x_scale:
                    return QPSolution(x, obj, "optimal", r_prim, r_dual, k)
                rho_scalar, rho, M_inv = _adapt_rho(
                    rho_scalar, eq_mask, P, A, AT, x, y, Ax, z, rho, M_inv, n
                )
        obj = float(x @ Q @ x)
        return QPSolution(x, obj, "max_iter", r_prim, r_dual, max_iter)
    finally:
        if trace_file:
            trace_file.close()


def _rho_vector(rho_scalar: float, eq_mask: np.ndarray) -> np.ndarray:
    rho = np.full(eq_mask.shape[0], rho_scalar)
    rho[eq_mask] *= _RHO_EQ_SCALE
    return rho


def _factor(P: np.ndarray, A: np.ndarray, rho: np.ndarray, n: int) -> np.ndarray:
    M = P + _SIGMA * np.eye(n) + AT_rho_A(A, rho)
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise SolverError(
            "objective matrix is not positive semidefinite "
            "(shifted factorization failed)"
        ) from exc
    return np.linalg.inv(M)


def AT_rho_A(A: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return A.T @ (rho[:, None] * A)


def _primal_infeasibility_certificate(
    AT: np.ndarray, dy: np.ndarray, lower: np.ndarray, upper: np.ndarray
) -> bool:
    norm_dy = float(np.abs(dy).max()) if dy.size else 0.0
    if norm_dy <= 1e-14:
        return False
    if float(np.abs(AT @ dy).max()) > _PINF_EPS * norm_dy:
        return False
    pos = np.maximum(dy, 0.0)
    neg = np.minimum(dy, 0.0)
    unbounded_below = np.isinf(lower)
    if np.any(neg[unbounded_below] < -1e-12 * norm_dy):
        return False  # support value would be +inf
    value = float(upper @ pos)
    finite = ~unbounded_below
    value += float(lower[finite] @ neg[finite])
    return value <= -_PINF_EPS * norm_dy


def _adapt_rho(
    rho_scalar: float,
    eq_mask: np.ndarray,
    P: np.ndarray,
    A: np.ndarray,
    AT: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    Ax: np.ndarray,
    z: np.ndarray,
    rho: np.ndarray,
    M_inv: np.ndarray,
    n: int,
) -> tuple[float, np.ndarray, np.ndarray]:
    prim_scale = max(float(np.abs(Ax).max()), float(np.abs(z).max()), 1e-12)
    dual_scale = max(
        float(np.abs(P @ x).max()), float(np.abs(AT @ y).max()), 1e-12
    )
    r_prim = float(np.abs(Ax - z).max()) / prim_scale
    r_dual = float(np.abs(P @ x + AT @ y).max()) / dual_scale
    if r_dual <= 0 or r_prim <= 0:
        return rho_scalar, rho, M_inv
    proposal = rho_scalar * np.sqrt(r_prim / r_dual)
    proposal = float(np.clip(proposal, _RHO_MIN, _RHO_MAX))
    ratio = proposal / rho_scalar
    if ratio < _RHO_ADAPT_FACTOR and ratio > 1.0 / _RHO_ADAPT_FACTOR:
        return rho_scalar, rho, M_inv
    new_rho = _rho_vector(proposal, eq_mask)
    return proposal, new_rho, _factor(P, A, new_rho, n)


def _polish(
    problem: QPProblem,
    P: np.ndarray,
    A: np.ndarray,
    Ax: np.ndarray,
    y: np.ndarray,
    ineq_slice: slice,
    tol: float,
) -> tuple[np.ndarray, float, float] | None:
    """Re-solve on the detected active set; returns (x, r_prim, r_dual) or None."""
    m_eq = ineq_slice.start
    y_in = y[ineq_slice]
    slack = problem.b_ineq - Ax[ineq_slice]
    y_scale = 1e-9 * (1.0 + float(np.abs(y).max()))
    active = (y_in > y_scale) | (slack <= 1e-6 * (1.0 + np.abs(problem.b_ineq)))
    A_act = np.vstack([problem.A_eq, problem.A_ineq[active]])
    b_act = np.concatenate([problem.b_eq, problem.b_ineq[active]])
    if A_act.shape[0] == 0:
        x_p = np.zeros(problem.n)
    else:
        try:
            x_p = solve_kkt_equality(problem.Q, A_act, b_act)
        except SingularKKTError:
            return None

    x_scale = 1.0 + float(np.abs(x_p).max())
    viol_eq = (
        float(np.abs(problem.A_eq @ x_p - problem.b_eq).max()) if m_eq else 0.0
    )
    if problem.A_ineq.shape[0]:
        viol_in = float(np.maximum(problem.A_ineq @ x_p - problem.b_ineq, 0).max())
    else:
        viol_in = 0.0
    r_prim = max(viol_eq, viol_in)
    if r_prim > tol * x_scale:
        return None

    grad = P @ x_p
    if A_act.shape[0]:
        lam, *_ = np.linalg.lstsq(A_act.T, -grad, rcond=None)
        r_dual = float(np.abs(grad + A_act.T @ lam).max())
        lam_in = lam[m_eq:]
        lam_floor = -1e-6 * (1.0 + float(np.abs(lam).max()))
        if np.any(lam_in < lam_floor):
            return None
    else:
        r_dual = float(np.abs(grad).max())
    if r_dual > tol * x_scale:
        return None
    return x_p, r_prim, r_dual
