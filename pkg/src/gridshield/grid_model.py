"""Grid matrices: Laplacian, DC measurement model, secured sets, AC admittance.

The DC measurement matrix ``H`` stacks two row kinds:

* an *injection* row for bus ``k`` equals row ``k`` of the weighted graph
  Laplacian (diagonal ``Σ b_kn``, off-diagonal ``−b_kn`` at neighbours);
* a *flow* row for a branch ``(f, t, b)`` has ``+b`` at ``f`` and ``−b`` at
  ``t`` (measured at the "from" end).

Every row sums to zero, so ``H`` annihilates constant state vectors; with
enough meters its rank is ``N−1`` and the state is observable once one bus is
pinned as phase reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .cases import GridCase
from .errors import UnobservableModelError

__all__ = [
    "MeasurementTag",
    "MeterConfig",
    "MeasurementModel",
    "SecuredSets",
    "build_laplacian",
    "build_measurement_model",
    "derive_secured_rows",
    "build_complex_admittance",
]


class MeasurementTag(NamedTuple):
    """Identity of one measurement row.

    ``location`` is a 1-based bus index for ``kind="injection"`` and a 1-based
    branch index (into ``GridCase.branches``) for ``kind="flow"``.
    """

    kind: str
    location: int


@dataclass(frozen=True)
class MeterConfig:
    """Which meters exist.  ``None`` means "all buses" / "all branches"."""

    injection_buses: tuple[int, ...] | None = None
    flow_branches: tuple[int, ...] | None = None

    def resolve(self, case: GridCase) -> tuple[tuple[int, ...], tuple[int, ...]]:
        buses = (
            tuple(range(1, case.n_bus + 1))
            if self.injection_buses is None
            else tuple(sorted(set(self.injection_buses)))
        )
        branches = (
            tuple(range(1, case.n_branch + 1))
            if self.flow_branches is None
            else tuple(sorted(set(self.flow_branches)))
        )
        for bus in buses:
            if not 1 <= bus <= case.n_bus:
                raise ValueError(f"injection meter at unknown bus {bus}")
        for br in branches:
            if not 1 <= br <= case.n_branch:
                raise ValueError(f"flow meter on unknown branch index {br}")
        return buses, branches


@dataclass(frozen=True)
class MeasurementModel:
    """Dense DC measurement model ``z = Hθ + noise``.

    ``noise_var`` holds the diagonal of the (diagonal) noise covariance; the
    full matrix is available as :attr:`noise_cov`.  Row order: injection rows
    in ascending bus order, then flow rows in ascending branch order; row
    indices used throughout the package (secured sets, CSV dumps) are 0-based
    positions into this ordering.
    """

    H: np.ndarray
    rows: tuple[MeasurementTag, ...]
    noise_var: np.ndarray
    n_state: int

    def __post_init__(self) -> None:
        if self.H.shape != (len(self.rows), self.n_state):
            raise ValueError(
                f"H shape {self.H.shape} inconsistent with "
                f"{len(self.rows)} rows / {self.n_state} states"
            )
        if self.noise_var.shape != (len(self.rows),):
            raise ValueError("noise_var must have one entry per row")
        if np.any(self.noise_var <= 0):
            raise ValueError("noise variances must be strictly positive")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def noise_cov(self) -> np.ndarray:
        return np.diag(self.noise_var)


@dataclass(frozen=True)
class SecuredSets:
    """Secured buses ``D`` (1-based) and the measurement rows ``S`` they induce."""

    buses: frozenset[int]
    rows: frozenset[int]


def build_laplacian(case: GridCase) -> np.ndarray:
    """Weighted graph Laplacian with branch susceptances as edge weights."""
    n = case.n_bus
    L = np.zeros((n, n))
    for br in case.branches:
        f, t = br.from_bus - 1, br.to_bus - 1
        L[f, f] += br.b
        L[t, t] += br.b
        L[f, t] -= br.b
        L[t, f] -= br.b
    return L


def build_measurement_model(
    case: GridCase,
    config: MeterConfig | None = None,
    noise_var: float = 0.001,
) -> MeasurementModel:
    """Assemble ``H`` and its row registry for the given meter configuration.

    Raises :class:`UnobservableModelError` when the configuration leaves
    ``rank(H) < N−1``.
    """
    if noise_var <= 0:
        raise ValueError(f"noise_var must be positive, got {noise_var}")
    config = config or MeterConfig()
    buses, branch_indices = config.resolve(case)
    n = case.n_bus
    L = build_laplacian(case)

    rows: list[MeasurementTag] = []
    blocks: list[np.ndarray] = []
    for bus in buses:
        rows.append(MeasurementTag("injection", bus))
        blocks.append(L[bus - 1])
    for idx in branch_indices:
        br = case.branches[idx - 1]
        row = np.zeros(n)
        row[br.from_bus - 1] = br.b
        row[br.to_bus - 1] = -br.b
        rows.append(MeasurementTag("flow", idx))
        blocks.append(row)

    if not blocks:
        raise UnobservableModelError("no meters configured")
    H = np.vstack(blocks)
    rank = np.linalg.matrix_rank(H)
    if rank < n - 1:
        raise UnobservableModelError(
            f"meter configuration gives rank {rank} < {n - 1}; "
            "state not observable up to the reference"
        )
    return MeasurementModel(
        H=H,
        rows=tuple(rows),
        noise_var=np.full(len(rows), float(noise_var)),
        n_state=n,
    )


def derive_secured_rows(
    secured_buses: Iterable[int], model: MeasurementModel, case: GridCase
) -> SecuredSets:
    """Rows protected when the buses in ``secured_buses`` are secured.

    A secured bus protects its injection measurement and the flow measurements
    on every branch touching it.  Monotone in the bus set.
    """
    buses = frozenset(int(b) for b in secured_buses)
    for bus in buses:
        if not 1 <= bus <= case.n_bus:
            raise ValueError(f"secured bus {bus} out of range 1..{case.n_bus}")
    secured: set[int] = set()
    for row_idx, tag in enumerate(model.rows):
        if tag.kind == "injection":
            if tag.location in buses:
                secured.add(row_idx)
        else:
            br = case.branches[tag.location - 1]
            if br.from_bus in buses or br.to_bus in buses:
                secured.add(row_idx)
    return SecuredSets(buses=buses, rows=frozenset(secured))


def build_complex_admittance(case: GridCase, r_over_x: float = 0.0) -> np.ndarray:
    """Complex bus admittance matrix from branch susceptances.

    Each branch's reactance is ``x = 1/b``; its resistance is taken as a
    uniform fraction ``r_over_x`` of that, giving the series admittance
    ``y = 1/(r + jx) = b·(r_over_x − j)/(r_over_x² + 1)``.  With
    ``r_over_x = 0`` this is the lossless ``Y = −j·L``.
    """
    if r_over_x < 0:
        raise ValueError(f"r_over_x must be nonnegative, got {r_over_x}")
    scale = (r_over_x - 1j) / (r_over_x**2 + 1)
    return scale * build_laplacian(case).astype(complex)
