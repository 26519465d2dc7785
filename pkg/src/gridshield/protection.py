"""Secured-sensor planning: force the best smooth attack above a TV threshold.

Securing a set of buses D secures the measurement rows touching them; the
attacker must then satisfy extra null-space constraints, which raises the
minimum achievable graph TV or removes feasibility altogether.  The greedy
planner repeatedly secures the pinned bus of the current best low-TV attack
until that attack's TV exceeds the threshold δ (or no attack remains).

Also provided: the exact minimum-cardinality plan by subset enumeration
(small systems), and two baseline policies used in experiments — random bus
selection, and greedily maximizing the minimum support size of the sparsest
feasible attacks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .attacks import gfdi_attack, gfdi_oracle, sparsest_min_support
from .cases import GridCase
from .grid_model import MeasurementModel, derive_secured_rows

__all__ = [
    "ProtectionPlan",
    "protect_greedy",
    "protect_exhaustive",
    "protect_random",
    "protect_sparsest_baseline",
]


@dataclass(frozen=True)
class ProtectionPlan:
    """An ordered secured-bus selection and its outcome.

    ``final_tv`` is the TV of the best remaining attack under the full plan
    (+inf when no attack is feasible; nan for baseline policies that do not
    evaluate attacks).  ``history`` records, per added bus, the best-attack TV
    right after that addition.  ``converged`` is False when the planner hit
    its size cap or could not make progress.
    """

    buses: tuple[int, ...]
    secured_rows: frozenset[int]
    final_tv: float
    delta: float
    iterations: int
    history: tuple[tuple[int, float], ...]
    converged: bool


def _plan_rows(buses, model: MeasurementModel, case: GridCase) -> frozenset[int]:
    return derive_secured_rows(buses, model, case).rows


def protect_greedy(
    L: np.ndarray,
    model: MeasurementModel,
    case: GridCase,
    k: int,
    tau: float,
    delta: float,
    max_secured: int | None = None,
    l1_budget: float | None = None,
) -> ProtectionPlan:
    """Secure the pinned bus of the current best attack until its TV > δ.

    Success: the best attack's TV exceeds δ, or no attack is feasible
    (``final_tv`` = +inf).  Failure (``converged=False``): ``max_secured``
    buses were secured without reaching δ, or the best attack pins only
    already-secured buses and no alternative pin exists.

    ``delta=inf`` never triggers the TV stop rule, so the planner runs until
    infeasibility or the size cap — useful for extracting the full greedy
    securing order.
    """
    n = L.shape[0]
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    cap = n if max_secured is None else int(max_secured)
    if not 0 <= cap <= n:
        raise ValueError(f"max_secured must be in 0..{n}, got {cap}")

    secured: list[int] = []
    history: list[tuple[int, float]] = []
    converged = True

    def best_attack(skip=()):
        rows = _plan_rows(secured, model, case)
        return gfdi_attack(
            L, model.H, rows, k, tau, l1_budget=l1_budget, skip_targets=skip
        )

    att = best_attack()
    tv = math.inf if att is None else att.tv
    while att is not None and not tv > delta:
        if len(secured) >= cap:
            converged = False
            break
        target = att.target_bus
        if target in secured:
            # the best attack pins a bus we already secured; securing it again
            # is a no-op, so take the best attack pinned elsewhere
            alt = best_attack(skip=secured)
            if alt is None:
                converged = False
                break
            target = alt.target_bus
        secured.append(target)
        att = best_attack()
        tv = math.inf if att is None else att.tv
        history.append((target, tv))

    return ProtectionPlan(
        buses=tuple(secured),
        secured_rows=_plan_rows(secured, model, case),
        final_tv=tv,
        delta=float(delta),
        iterations=len(secured),
        history=tuple(history),
        converged=converged,
    )


def protect_exhaustive(
    L: np.ndarray,
    model: MeasurementModel,
    case: GridCase,
    k: int,
    tau: float,
    delta: float,
) -> ProtectionPlan:
    """Minimum-cardinality secured set via subset enumeration (N ≤ 10).

    Ties are broken by lexicographic subset order.  Success is guaranteed: in
    the worst case securing every bus makes any attack with k < N infeasible.
    """
    n = L.shape[0]
    if n > 10:
        raise ValueError(f"exhaustive planning capped at N <= 10, got {n}")
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    examined = 0
    for size in range(n + 1):
        for subset in combinations(range(1, n + 1), size):
            examined += 1
            rows = _plan_rows(subset, model, case)
            att = gfdi_oracle(L, model.H, rows, k, tau)
            tv = math.inf if att is None else att.tv
            if att is None or tv > delta:
                return ProtectionPlan(
                    buses=subset,
                    secured_rows=rows,
                    final_tv=tv,
                    delta=float(delta),
                    iterations=examined,
                    history=(),
                    converged=True,
                )
    raise AssertionError("unreachable: securing all buses blocks every attack")


def protect_random(
    model: MeasurementModel,
    case: GridCase,
    size: int,
    seed: int,
) -> ProtectionPlan:
    """Baseline: secure a seed-determined random bus selection.

    Plans of growing ``size`` under the same seed are nested (permutation
    prefixes), matching how protection-ratio sweeps grow a plan.
    """
    n = case.n_bus
    if not 0 <= size <= n:
        raise ValueError(f"size must be in 0..{n}, got {size}")
    rng = np.random.default_rng(seed)
    order = [int(b) for b in rng.permutation(n) + 1]
    buses = tuple(order[:size])
    return ProtectionPlan(
        buses=buses,
        secured_rows=_plan_rows(buses, model, case),
        final_tv=math.nan,
        delta=math.nan,
        iterations=size,
        history=(),
        converged=True,
    )


def protect_sparsest_baseline(
    model: MeasurementModel,
    case: GridCase,
    tau: float,
    size: int,
) -> ProtectionPlan:
    """Baseline: greedily secure the bus maximizing the sparsest-attack cost.

    Each round adds the bus whose securing maximizes the minimum support size
    over the per-bus ℓ1-minimal attacks (infeasible counts as +inf, i.e. the
    attacker is fully blocked).  Ties keep the lowest bus index.
    """
    n = case.n_bus
    if not 0 <= size <= n:
        raise ValueError(f"size must be in 0..{n}, got {size}")
    secured: list[int] = []
    for _ in range(size):
        best_bus = None
        best_score = -math.inf
        for bus in range(1, n + 1):
            if bus in secured:
                continue
            rows = _plan_rows(secured + [bus], model, case)
            support = sparsest_min_support(model.H, rows, tau)
            score = math.inf if support is None else float(support)
            if score > best_score:
                best_bus, best_score = bus, score
        secured.append(best_bus)
    buses = tuple(secured)
    return ProtectionPlan(
        buses=buses,
        secured_rows=_plan_rows(buses, model, case),
        final_tv=math.nan,
        delta=math.nan,
        iterations=size,
        history=(),
        converged=True,
    )
