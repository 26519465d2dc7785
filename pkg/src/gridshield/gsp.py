"""Spectral machinery on graph Laplacians.

Provides the eigendecomposition (:func:`eig_sym`), the graph Fourier transform
and its inverse, the graph total variation quadratic form, and high-pass graph
filters used both as detector statistics and as the attack objective.

The eigensolver is self-contained: Householder tridiagonalization followed by
implicit-shift QL iteration with eigenvector accumulation.  Eigenvalues are
returned ascending; round-off negatives above ``−1e−9`` are clamped to zero so
Laplacians never report a negative bottom eigenvalue.  Each eigenvector's
first nonzero entry is normalized positive, making the basis deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SolverError

__all__ = [
    "SpectralBasis",
    "FilterSpec",
    "tv_sqrt_filter",
    "ideal_highpass_filter",
    "default_cutoff",
    "eig_sym",
    "gft",
    "igft",
    "graph_tv",
    "filter_response",
    "apply_filter",
    "smoothness",
]

_EIG_TOL = 1e-12
_CLAMP_FLOOR = -1e-9


@dataclass(frozen=True)
class SpectralBasis:
    """Ordered eigendecomposition ``L = U diag(eigenvalues) U^T``."""

    L: np.ndarray
    eigenvalues: np.ndarray
    U: np.ndarray

    @property
    def n_vertices(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])


@dataclass(frozen=True)
class FilterSpec:
    """A graph high-pass filter: ``tv_sqrt`` (f(λ)=√λ) or an ideal 0/1 step.

    The ideal filter passes frequencies strictly above ``cutoff``.
    """

    kind: str
    cutoff: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("tv_sqrt", "ideal_highpass"):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.kind == "ideal_highpass":
            if self.cutoff is None or self.cutoff < 0:
                raise ValueError("ideal_highpass needs a nonnegative cutoff")
        elif self.cutoff is not None:
            raise ValueError("tv_sqrt takes no cutoff")


def tv_sqrt_filter() -> FilterSpec:
    return FilterSpec("tv_sqrt")


def ideal_highpass_filter(cutoff: float) -> FilterSpec:
    return FilterSpec("ideal_highpass", float(cutoff))


def default_cutoff(basis: SpectralBasis) -> float:
    """Midpoint-by-index cutoff: the ``⌈N/2⌉``-th smallest eigenvalue."""
    n = basis.n_vertices
    return float(basis.eigenvalues[(n + 1) // 2 - 1])


# ---------------------------------------------------------------------------
# Eigendecomposition
# ---------------------------------------------------------------------------

def _householder_tridiagonalize(A: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reduce symmetric A to tridiagonal T = Q^T A Q; returns (diag, subdiag, Q)."""
    n = A.shape[0]
    T = A.copy()
    Q = np.eye(n)
    for k in range(n - 2):
        x = T[k + 1 :, k]
        norm_x = np.linalg.norm(x)
        if norm_x == 0.0:
            continue
        alpha = -math.copysign(norm_x, x[0] if x[0] != 0 else 1.0)
        v = x.copy()
        v[0] -= alpha
        v_norm = np.linalg.norm(v)
        if v_norm == 0.0:
            continue
        v /= v_norm
        # Apply P = I − 2vv^T on both sides of the trailing block.
        T[k + 1 :, k:] -= 2.0 * np.outer(v, v @ T[k + 1 :, k:])
        T[:, k + 1 :] -= 2.0 * np.outer(T[:, k + 1 :] @ v, v)
        Q[:, k + 1 :] -= 2.0 * np.outer(Q[:, k + 1 :] @ v, v)
    d = np.diag(T).copy()
    e = np.diag(T, -1).copy() if n > 1 else np.zeros(0)
    return d, e, Q


def _ql_implicit_shift(
    d: np.ndarray, e: np.ndarray, Z: np.ndarray, max_sweeps: int
) -> tuple[np.ndarray, np.ndarray]:
    """Implicit-shift QL on a tridiagonal matrix, rotations applied to Z."""
    n = d.shape[0]
    if n == 1:
        return d, Z
    e = np.append(e, 0.0)
    sweeps = 0
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EIG_TOL * dd:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                raise SolverError(
                    f"eigendecomposition stalled after {max_sweeps} QL sweeps; "
                    f"matrix scale {np.abs(d).max():.3e}, "
                    f"stuck off-diagonal {abs(e[l]):.3e}"
                )
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                col_next = Z[:, i + 1].copy()
                Z[:, i + 1] = s * Z[:, i] + c * col_next
                Z[:, i] = c * Z[:, i] - s * col_next
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return d, Z


def eig_sym(L: np.ndarray) -> SpectralBasis:
    """Full eigendecomposition of a symmetric matrix, ascending eigenvalues.

    Asymmetry up to ``1e−12`` (relative to the largest entry) is symmetrized
    away; worse asymmetry is an error.  Raises :class:`SolverError` if the QL
    iteration exceeds ``100·N`` sweeps.
    """
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError(f"expected square matrix, got shape {L.shape}")
    n = L.shape[0]
    scale = max(1.0, float(np.abs(L).max())) if L.size else 1.0
    asymmetry = float(np.abs(L - L.T).max()) if n > 1 else 0.0
    if asymmetry > 1e-12 * scale:
        raise ValueError(f"matrix is not symmetric (asymmetry {asymmetry:.3e})")
    sym = (L + L.T) / 2.0

    d, e, Q = _householder_tridiagonalize(sym)
    d, Z = _ql_implicit_shift(d, e, Q, max_sweeps=100 * max(n, 1))

    order = np.argsort(d, kind="stable")
    eigenvalues = d[order]
    U = Z[:, order]
    eigenvalues[(eigenvalues < 0) & (eigenvalues >= _CLAMP_FLOOR)] = 0.0

    for j in range(n):
        col = U[:, j]
        nonzero = np.flatnonzero(np.abs(col) > 1e-12)
        if nonzero.size and col[nonzero[0]] < 0:
            U[:, j] = -col

    return SpectralBasis(L=sym, eigenvalues=eigenvalues, U=U)


# ---------------------------------------------------------------------------
# Transforms, TV, filters
# ---------------------------------------------------------------------------

def _check_length(basis: SpectralBasis, s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.shape != (basis.n_vertices,):
        raise ValueError(
            f"signal length {s.shape} does not match {basis.n_vertices} vertices"
        )
    return s


def gft(basis: SpectralBasis, s: np.ndarray) -> np.ndarray:
    """Graph Fourier transform: coordinates of ``s`` in the eigenbasis."""
    return basis.U.T @ _check_length(basis, s)


def igft(basis: SpectralBasis, s_hat: np.ndarray) -> np.ndarray:
    """Inverse graph Fourier transform."""
    return basis.U @ _check_length(basis, s_hat)


def graph_tv(basis_or_L: SpectralBasis | np.ndarray, s: np.ndarray) -> float:
    """Graph total variation ``s^T L s`` (small for smooth signals)."""
    if isinstance(basis_or_L, SpectralBasis):
        L = basis_or_L.L
    else:
        L = np.asarray(basis_or_L, dtype=float)
    s = np.asarray(s, dtype=float)
    if s.shape != (L.shape[0],):
        raise ValueError(
            f"signal length {s.shape} does not match matrix size {L.shape[0]}"
        )
    return float(s @ L @ s)


def filter_response(spec: FilterSpec, eigenvalues: np.ndarray) -> np.ndarray:
    """Frequency response ``f(λ)`` evaluated on an eigenvalue vector."""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if spec.kind == "tv_sqrt":
        if np.any(eigenvalues < 0):
            raise ValueError("tv_sqrt filter needs nonnegative eigenvalues")
        return np.sqrt(eigenvalues)
    return (eigenvalues > spec.cutoff).astype(float)


def apply_filter(basis: SpectralBasis, spec: FilterSpec, s: np.ndarray) -> np.ndarray:
    """Filter a vertex signal: ``U f(Λ) U^T s``."""
    response = filter_response(spec, basis.eigenvalues)
    return basis.U @ (response * gft(basis, s))


def smoothness(basis: SpectralBasis, spec: FilterSpec, s: np.ndarray) -> float:
    """Squared norm of the filtered signal; for ``tv_sqrt`` equals graph TV."""
    response = filter_response(spec, basis.eigenvalues)
    s_hat = gft(basis, s)
    return float(np.sum((response * s_hat) ** 2))
