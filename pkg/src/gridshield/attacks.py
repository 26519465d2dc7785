"""Synthesis of unobservable false-data attacks on DC state estimation.

An attack is a pair ``(c, a)``: a state perturbation ``c`` and the measurement
falsification ``a = H·c`` that hides it from residual-based bad-data checks.
Entries of ``a`` on secured (tamper-proof) measurement rows are forced to
zero; the norm of what was zeroed is reported as ``unobs_residual`` — when it
is nonzero the attack is only approximately hidden.

Attack kinds:

* ``gfdi`` — the low-TV attack: for each candidate pinned bus ``i`` solve a
  convex relaxation (ℓ1 sparsity budget) of the minimum-graph-TV problem with
  ``c_i = τ`` and the secured-row null-space constraint, hard-threshold to the
  ``k`` largest-magnitude entries, and keep the lowest-TV thresholded result.
* ``rand`` — random support, Gaussian values.
* ``rand_gfdi`` — the gfdi support with Gaussian values.
* ``sparse_low`` / ``sparse_avg`` — minimum-support attacks found by per-bus
  ℓ1 minimization, picking the lowest-TV / nearest-to-average-TV candidate.

The exact combinatorial optimum (:func:`gfdi_oracle`) is provided for small
systems as a test reference and for exhaustive protection planning.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import InfeasibleAttackError, SolverError
from .solvers import QPProblem, solve_qp, solve_lp, solve_kkt_equality
from .errors import SingularKKTError

__all__ = [
    "AttackVector",
    "ATTACK_KINDS",
    "gfdi_attack",
    "gfdi_oracle",
    "attack_rand",
    "attack_rand_gfdi",
    "attack_sparsest",
    "sparsest_min_support",
]

ATTACK_KINDS = ("gfdi", "rand", "rand_gfdi", "sparse_low", "sparse_avg")

_ORACLE_MAX_N = 12
_SPARSE_ZERO_RATIO = 1e-8


@dataclass(frozen=True)
class AttackVector:
    """One constructed attack.

    ``support`` lists the 1-based buses where ``c`` is nonzero; ``target_bus``
    is the pinned bus for kinds that pin one (``gfdi``, ``sparse_*``);
    ``tv`` is the graph total variation ``c^T L c``; ``unobs_residual`` is the
    norm of the measurement-attack entries that were zeroed on secured rows.
    """

    c: np.ndarray
    a: np.ndarray
    support: tuple[int, ...]
    target_bus: int | None
    tv: float
    unobs_residual: float
    kind: str


def _as_rng(seed: int | np.random.Generator) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _secured_index_array(secured_rows, n_rows: int) -> np.ndarray:
    idx = np.array(sorted(int(r) for r in set(secured_rows)), dtype=int)
    if idx.size and (idx[0] < 0 or idx[-1] >= n_rows):
        raise ValueError(
            f"secured row index out of range 0..{n_rows - 1}: {idx.tolist()}"
        )
    return idx


def _finalize(
    c: np.ndarray,
    L: np.ndarray,
    H: np.ndarray,
    secured_idx: np.ndarray,
    kind: str,
    target_bus: int | None,
) -> AttackVector:
    a = H @ c
    eps = float(np.linalg.norm(a[secured_idx])) if secured_idx.size else 0.0
    a[secured_idx] = 0.0
    support = tuple(int(j) + 1 for j in np.flatnonzero(c))
    return AttackVector(
        c=c,
        a=a,
        support=support,
        target_bus=target_bus,
        tv=float(c @ L @ c),
        unobs_residual=eps,
        kind=kind,
    )


def _hard_threshold(c: np.ndarray, k: int) -> np.ndarray:
    """Keep the k largest-magnitude entries; ties keep the lower bus index."""
    order = sorted(range(c.shape[0]), key=lambda j: (-abs(c[j]), j))
    kept = order[:k]
    out = np.zeros_like(c)
    out[kept] = c[kept]
    return out


def _row_normalized(rows: np.ndarray) -> np.ndarray:
    """Scale each row to unit ∞-norm (pure conditioning; same constraint set)."""
    if rows.size == 0:
        return rows
    scales = np.abs(rows).max(axis=1)
    scales[scales == 0] = 1.0
    return rows / scales[:, None]


def gfdi_attack(
    L: np.ndarray,
    H: np.ndarray,
    secured_rows,
    k: int,
    tau: float,
    l1_budget: float | None = None,
    skip_targets=(),
    tol: float = 1e-8,
    max_iter: int = 50000,
) -> AttackVector | None:
    """Lowest-TV sparse unobservable attack via per-bus convex relaxations.

    Returns ``None`` when no pinned bus admits a feasible relaxation (for
    example when every measurement row is secured).  ``l1_budget`` defaults to
    ``k``; ``skip_targets`` removes buses from the pinned-bus loop (used by
    the protection planner to force progress).
    """
    L = np.asarray(L, dtype=float)
    H = np.asarray(H, dtype=float)
    n = L.shape[0]
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < {n}, got {k}")
    budget = float(k) if l1_budget is None else float(l1_budget)
    if budget < tau:
        raise ValueError(
            f"l1 budget {budget} cannot accommodate a pinned entry of {tau}"
        )
    secured_idx = _secured_index_array(secured_rows, H.shape[0])
    H_S = _row_normalized(H[secured_idx])
    skip = {int(b) for b in skip_targets}

    best: tuple[float, int, np.ndarray] | None = None
    for i in range(1, n + 1):
        if i in skip:
            continue
        problem = _gfdi_qp(L, H_S, i, tau, budget)
        sol = solve_qp(problem, tol=tol, max_iter=max_iter)
        if sol.status == "infeasible":
            continue
        if sol.status != "optimal":
            raise SolverError(
                f"relaxation at pinned bus {i} ended with status "
                f"{sol.status!r} (primal {sol.primal_residual:.2e}, "
                f"dual {sol.dual_residual:.2e})"
            )
        c_hat = _hard_threshold(sol.x[:n], k)
        tv = float(c_hat @ L @ c_hat)
        if best is None or tv < best[0]:
            best = (tv, i, c_hat)
    if best is None:
        return None
    _, target, c_hat = best
    return _finalize(c_hat, L, H, secured_idx, "gfdi", target)


def _gfdi_qp(
    L: np.ndarray, H_S: np.ndarray, pinned_bus: int, tau: float, budget: float
) -> QPProblem:
    """Stack x = (c, u, v) with c = u − v, u,v ≥ 0, 1·(u+v) ≤ budget."""
    n = L.shape[0]
    m_s = H_S.shape[0]
    Q = np.zeros((3 * n, 3 * n))
    Q[:n, :n] = L

    A_eq = np.zeros((1 + m_s + n, 3 * n))
    b_eq = np.zeros(1 + m_s + n)
    A_eq[0, pinned_bus - 1] = 1.0
    b_eq[0] = tau
    A_eq[1 : 1 + m_s, :n] = H_S
    split = np.s_[1 + m_s :]
    A_eq[split, :n] = np.eye(n)
    A_eq[split, n : 2 * n] = -np.eye(n)
    A_eq[split, 2 * n :] = np.eye(n)

    A_ineq = np.zeros((1 + 2 * n, 3 * n))
    b_ineq = np.zeros(1 + 2 * n)
    A_ineq[0, n:] = 1.0
    b_ineq[0] = budget
    A_ineq[1 : 1 + n, n : 2 * n] = -np.eye(n)
    A_ineq[1 + n :, 2 * n :] = -np.eye(n)
    return QPProblem(Q=Q, A_eq=A_eq, b_eq=b_eq, A_ineq=A_ineq, b_ineq=b_ineq)


def gfdi_oracle(
    L: np.ndarray,
    H: np.ndarray,
    secured_rows,
    k: int,
    tau: float,
) -> AttackVector | None:
    """Exact minimum-TV attack by exhaustive support enumeration (small N).

    Enumerates every support of size ≤ k and every pinned bus within it,
    solving each equality-constrained subproblem exactly.  ``tau = 0`` is
    admitted and yields the zero attack.  Deterministic tie-breaking: first
    optimum found in (support size, support lexicographic, pinned bus) order.
    """
    L = np.asarray(L, dtype=float)
    H = np.asarray(H, dtype=float)
    n = L.shape[0]
    if n > _ORACLE_MAX_N:
        raise ValueError(f"exhaustive oracle capped at N <= {_ORACLE_MAX_N}")
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < {n}, got {k}")
    secured_idx = _secured_index_array(secured_rows, H.shape[0])
    if tau == 0.0:
        return _finalize(np.zeros(n), L, H, secured_idx, "gfdi", None)
    H_S = _row_normalized(H[secured_idx])

    best: tuple[float, int, np.ndarray] | None = None
    for size in range(1, k + 1):
        for support in combinations(range(n), size):
            cols = list(support)
            Q_T = L[np.ix_(cols, cols)]
            H_T = H_S[:, cols] if H_S.size else np.zeros((0, size))
            for i in support:
                pin = np.zeros((1, size))
                pin[0, cols.index(i)] = 1.0
                A = np.vstack([pin, H_T])
                b = np.zeros(1 + H_T.shape[0])
                b[0] = tau
                try:
                    c_T = solve_kkt_equality(Q_T, A, b)
                except SingularKKTError:
                    continue
                tv = float(c_T @ Q_T @ c_T)
                if best is None or tv < best[0] - 1e-15:
                    c = np.zeros(n)
                    c[cols] = c_T
                    best = (tv, i + 1, c)
    if best is None:
        return None
    _, target, c = best
    return _finalize(c, L, H, secured_idx, "gfdi", target)


def attack_rand(
    L: np.ndarray,
    H: np.ndarray,
    k: int,
    tau: float,
    seed: int | np.random.Generator,
    secured_rows=(),
) -> AttackVector:
    """Random support of size k, i.i.d. Gaussian values, scaled to ‖c‖∞ = τ."""
    L = np.asarray(L, dtype=float)
    H = np.asarray(H, dtype=float)
    n = L.shape[0]
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= {n}, got {k}")
    rng = _as_rng(seed)
    secured_idx = _secured_index_array(secured_rows, H.shape[0])
    support = rng.choice(n, size=k, replace=False)
    values = rng.standard_normal(k)
    while not np.abs(values).max() > 0:
        values = rng.standard_normal(k)
    c = np.zeros(n)
    c[support] = values * (tau / np.abs(values).max())
    return _finalize(c, L, H, secured_idx, "rand", None)


def attack_rand_gfdi(
    L: np.ndarray,
    H: np.ndarray,
    secured_rows,
    k: int,
    tau: float,
    seed: int | np.random.Generator,
    base: AttackVector | None = None,
) -> AttackVector | None:
    """Gaussian values on the gfdi support, scaled to ‖c‖∞ = τ.

    ``base`` may supply a precomputed gfdi attack; otherwise one is computed.
    Returns ``None`` when the gfdi attack itself is infeasible.
    """
    L = np.asarray(L, dtype=float)
    H = np.asarray(H, dtype=float)
    rng = _as_rng(seed)
    secured_idx = _secured_index_array(secured_rows, H.shape[0])
    if base is None:
        base = gfdi_attack(L, H, secured_rows, k, tau)
    if base is None:
        return None
    idx = [b - 1 for b in base.support]
    values = rng.standard_normal(len(idx))
    while not np.abs(values).max() > 0:
        values = rng.standard_normal(len(idx))
    c = np.zeros(L.shape[0])
    c[idx] = values * (tau / np.abs(values).max())
    return _finalize(c, L, H, secured_idx, "rand_gfdi", None)


def _sparsest_candidates(
    H_S: np.ndarray, n: int, tau: float
) -> list[tuple[int, np.ndarray]]:
    """Per pinned bus, the ℓ1-minimal state attack (split-variable LP)."""
    m_s = H_S.shape[0]
    candidates: list[tuple[int, np.ndarray]] = []
    cost = np.ones(2 * n)
    for i in range(n):
        A_eq = np.zeros((1 + m_s, 2 * n))
        b_eq = np.zeros(1 + m_s)
        A_eq[0, i] = 1.0
        A_eq[0, n + i] = -1.0
        b_eq[0] = tau
        A_eq[1:, :n] = H_S
        A_eq[1:, n:] = -H_S
        sol = solve_lp(
            cost,
            A_eq=A_eq,
            b_eq=b_eq,
            A_ineq=-np.eye(2 * n),
            b_ineq=np.zeros(2 * n),
        )
        if sol.status != "optimal":
            continue
        c = sol.x[:n] - sol.x[n:]
        c[np.abs(c) < _SPARSE_ZERO_RATIO * tau] = 0.0
        candidates.append((i + 1, c))
    return candidates


def attack_sparsest(
    L: np.ndarray,
    H: np.ndarray,
    secured_rows,
    tau: float,
    variant: str = "low",
) -> AttackVector:
    """Minimum-support attack; ``variant`` picks among the sparsest candidates.

    ``low`` keeps the lowest-TV candidate, ``avg`` the candidate whose TV is
    closest to the candidates' mean TV.  Ties keep the lowest pinned bus.
    Raises :class:`InfeasibleAttackError` when no pinned bus is feasible.
    """
    if variant not in ("low", "avg"):
        raise ValueError(f"variant must be 'low' or 'avg', got {variant!r}")
    L = np.asarray(L, dtype=float)
    H = np.asarray(H, dtype=float)
    n = L.shape[0]
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    secured_idx = _secured_index_array(secured_rows, H.shape[0])
    H_S = _row_normalized(H[secured_idx])

    candidates = _sparsest_candidates(H_S, n, tau)
    if not candidates:
        raise InfeasibleAttackError(
            "no pinned bus admits an attack in the secured-row null space"
        )
    min_support = min(int(np.count_nonzero(c)) for _, c in candidates)
    finalists: list[tuple[int, np.ndarray, float]] = []
    for bus, c in candidates:
        if int(np.count_nonzero(c)) != min_support:
            continue
        scaled = c * (tau / np.abs(c).max())
        finalists.append((bus, scaled, float(scaled @ L @ scaled)))

    if variant == "low":
        bus, c, _ = min(finalists, key=lambda t: (t[2], t[0]))
    else:
        mean_tv = float(np.mean([t[2] for t in finalists]))
        bus, c, _ = min(finalists, key=lambda t: (abs(t[2] - mean_tv), t[0]))
    return _finalize(c, L, H, secured_idx, f"sparse_{variant}", bus)


def sparsest_min_support(H: np.ndarray, secured_rows, tau: float) -> int | None:
    """Smallest support size over the per-bus ℓ1-minimal attacks, or ``None``.

    ``None`` means no pinned bus is feasible (the attacker is fully blocked).
    """
    H = np.asarray(H, dtype=float)
    n = H.shape[1]
    secured_idx = _secured_index_array(secured_rows, H.shape[0])
    H_S = _row_normalized(H[secured_idx])
    candidates = _sparsest_candidates(H_S, n, tau)
    if not candidates:
        return None
    return min(int(np.count_nonzero(c)) for _, c in candidates)
