"""Independent reference computations used to cross-check the package.

Every oracle here deliberately takes a different numerical route than the
implementation it checks (normal equations vs. iterative solves, exhaustive
enumeration vs. relaxation, dense numpy factorizations vs. in-house
routines), so agreement is meaningful evidence rather than a tautology.
"""

from itertools import combinations

import numpy as np

from gridshield.cases import parse_native_case

_FEAS_TOL = 1e-9


def wls_oracle(H, noise_var, z, slack):
    """Weighted least squares via explicit normal equations, slack pinned 0."""
    H = np.asarray(H, dtype=float)
    z = np.asarray(z, dtype=float).ravel()
    n = H.shape[1]
    keep = [j for j in range(n) if j != slack - 1]
    w = np.sqrt(np.asarray(noise_var, dtype=float))
    Hr = H[:, keep] / w[:, None]
    zr = z / w
    theta_r = np.linalg.solve(Hr.T @ Hr, Hr.T @ zr)
    theta = np.zeros(n)
    theta[keep] = theta_r
    return theta


def kkt_oracle(Q, A, b):
    """Minimizer of x^T Q x s.t. A x = b via one dense least-squares solve.

    Returns ``None`` when the combination is infeasible (the computed point
    violates the constraints) or the system is numerically degenerate.
    """
    Q = np.asarray(Q, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    n = Q.shape[0]
    m = A.shape[0]
    M = np.zeros((n + m, n + m))
    M[:n, :n] = 2.0 * Q
    M[:n, n:] = A.T
    M[n:, :n] = A
    rhs = np.concatenate([np.zeros(n), b])
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    x = sol[:n]
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if np.max(np.abs(A @ x - b), initial=0.0) > 1e-7 * scale:
        return None
    return x


def brute_force_min_tv(L, H_S, k, tau):
    """Exhaustive minimum-TV sparse attack with impact floor ``tau``.

    Enumerates every support of size <= k, every in-support entry pinned to
    +/- tau, and minimizes the quadratic form subject to the secured-row
    equalities restricted to the support.  Returns the smallest TV found, or
    ``None`` when no combination is feasible.
    """
    L = np.asarray(L, dtype=float)
    H_S = np.atleast_2d(np.asarray(H_S, dtype=float))
    if H_S.size == 0:
        H_S = H_S.reshape(0, L.shape[0])
    n = L.shape[0]
    best = None
    for size in range(1, k + 1):
        for support in combinations(range(n), size):
            cols = list(support)
            Q_T = L[np.ix_(cols, cols)]
            H_T = H_S[:, cols]
            for j in support:
                pin = np.zeros((1, size))
                pin[0, cols.index(j)] = 1.0
                for sign in (1.0, -1.0):
                    A = np.vstack([pin, H_T])
                    b = np.zeros(1 + H_T.shape[0])
                    b[0] = sign * tau
                    c_T = kkt_oracle(Q_T, A, b)
                    if c_T is None:
                        continue
                    tv = float(c_T @ Q_T @ c_T)
                    if best is None or tv < best:
                        best = tv
    return best


def lp_vertex_oracle(cost, A_eq, b_eq, A_ineq, b_ineq):
    """Optimal LP objective by enumerating basic feasible points.

    Every vertex of a (bounded, full-dimensional-enough) polyhedron solves
    ``n`` linearly independent active constraints; equalities are always
    active.  Returns ``(objective, x)`` or ``None`` when no feasible vertex
    exists.
    """
    cost = np.asarray(cost, dtype=float).ravel()
    n = cost.shape[0]
    A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float)) if A_eq is not None else np.zeros((0, n))
    b_eq = np.asarray(b_eq, dtype=float).ravel() if b_eq is not None else np.zeros(0)
    A_in = np.atleast_2d(np.asarray(A_ineq, dtype=float)) if A_ineq is not None else np.zeros((0, n))
    b_in = np.asarray(b_ineq, dtype=float).ravel() if b_ineq is not None else np.zeros(0)

    m_eq = A_eq.shape[0]
    best = None
    need = n - min(m_eq, n)
    for active in combinations(range(A_in.shape[0]), need):
        A = np.vstack([A_eq, A_in[list(active)]])
        b = np.concatenate([b_eq, b_in[list(active)]])
        if A.shape[0] < n or np.linalg.matrix_rank(A) < n:
            continue
        x, *_ = np.linalg.lstsq(A, b, rcond=None)
        if np.max(np.abs(A @ x - b), initial=0.0) > _FEAS_TOL * max(
            1.0, float(np.abs(b).max(initial=0.0))
        ):
            continue
        if m_eq and np.max(np.abs(A_eq @ x - b_eq), initial=0.0) > 1e-8:
            continue
        if A_in.size and np.max(A_in @ x - b_in, initial=-np.inf) > 1e-8:
            continue
        obj = float(cost @ x)
        if best is None or obj < best[0] - 1e-12:
            best = (obj, x)
    return best


def laplacian_by_hand(case):
    """Graph Laplacian assembled entry-by-entry from the branch list."""
    n = case.n_bus
    L = np.zeros((n, n))
    for br in case.branches:
        i, j, b = br.from_bus - 1, br.to_bus - 1, br.b
        L[i, i] += b
        L[j, j] += b
        L[i, j] -= b
        L[j, i] -= b
    return L


def tv_by_edges(case, s):
    """Total variation as the branch-wise sum of squared differences."""
    s = np.asarray(s, dtype=float)
    return float(
        sum(
            br.b * (s[br.from_bus - 1] - s[br.to_bus - 1]) ** 2
            for br in case.branches
        )
    )


def random_connected_case(rng, n, extra_edges=0, name="random"):
    """Random connected grid built through the native-format parser."""
    edges = {}
    for bus in range(2, n + 1):
        parent = int(rng.integers(1, bus))
        edges[(parent, bus)] = float(rng.uniform(0.5, 2.0))
    attempts = 0
    while len(edges) < n - 1 + extra_edges and attempts < 50 * (extra_edges + 1):
        attempts += 1
        a, b = sorted(rng.choice(n, size=2, replace=False) + 1)
        if (a, b) in edges:
            continue
        edges[(a, b)] = float(rng.uniform(0.5, 2.0))
    lines = [f"grid {name} {n} 1"]
    for (a, b), w in sorted(edges.items()):
        lines.append(f"branch {a} {b} {w!r}")
    return parse_native_case("\n".join(lines) + "\n")
