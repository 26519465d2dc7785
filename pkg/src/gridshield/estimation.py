"""State estimation and attack detection.

DC estimation is weighted least squares with the slack phase pinned to zero.
AC estimation is damped Gauss–Newton on the complex power-injection model
``z = v ⊙ (Y v)*`` in polar coordinates.

Detectors:

* ``detect_bdd`` — classical bad-data detection: squared residual norm
  against a calibrated threshold.
* ``detect_gsp`` — graph-spectral smoothness statistic of a bus signal
  (high-pass filtered energy) against a calibrated threshold.
* ``detect_ac_ensemble`` — OR-combination of per-branch smoothness detectors
  on signals derived from the complex voltage estimate.

Thresholds are empirical null quantiles from :func:`calibrate_threshold`.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import CalibrationError, SolverError, UnobservableModelError
from .grid_model import MeasurementModel
from .gsp import FilterSpec, SpectralBasis, smoothness

__all__ = [
    "EstimationResult",
    "DetectorThreshold",
    "DetectionOutcome",
    "EnsembleOutcome",
    "GTV_AC_BRANCHES",
    "IDEAL_AC_BRANCHES",
    "psse_dc",
    "psse_ac",
    "detect_bdd",
    "detect_gsp",
    "detect_ac_ensemble",
    "ac_branch_signal",
    "calibrate_threshold",
]

GTV_AC_BRANCHES = ("gtv_ac:phase", "gtv_ac:mag")
IDEAL_AC_BRANCHES = (
    "ideal_ac:reY_re",
    "ideal_ac:reY_im",
    "ideal_ac:imY_re",
    "ideal_ac:imY_im",
)


@dataclass(frozen=True)
class EstimationResult:
    """State estimate: real phase vector (DC) or complex voltages (AC).

    ``residual_norm`` is the noise-weighted residual for DC and the plain
    residual of the stacked real/imaginary measurement mismatch for AC.
    """

    state: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class DetectorThreshold:
    """Calibrated decision threshold for one detector."""

    detector_id: str
    gamma: float
    target_pfa: float
    calibration_size: int
    seed: int


@dataclass(frozen=True)
class DetectionOutcome:
    statistic: float
    alarm: bool


@dataclass(frozen=True)
class EnsembleOutcome:
    alarm: bool
    statistics: dict[str, float]
    fired: tuple[str, ...]


def psse_dc(model: MeasurementModel, z: np.ndarray, slack: int) -> EstimationResult:
    """Weighted least-squares phase estimate with the slack phase fixed to 0."""
    z = np.asarray(z, dtype=float)
    if z.shape != (model.n_rows,):
        raise ValueError(f"z has shape {z.shape}, expected ({model.n_rows},)")
    n = model.n_state
    if not 1 <= slack <= n:
        raise ValueError(f"slack bus {slack} out of range 1..{n}")
    keep = [j for j in range(n) if j != slack - 1]
    w = 1.0 / np.sqrt(model.noise_var)
    H_w = w[:, None] * model.H[:, keep]
    z_w = w * z
    sol, _, rank, _ = np.linalg.lstsq(H_w, z_w, rcond=None)
    if rank < n - 1:
        raise UnobservableModelError(
            f"reduced measurement matrix has rank {rank} < {n - 1}; "
            "the state is not observable"
        )
    theta = np.zeros(n)
    theta[keep] = sol
    residual = w * (z - model.H @ theta)
    return EstimationResult(
        state=theta,
        residual_norm=float(np.linalg.norm(residual)),
        iterations=0,
        converged=True,
    )


def _ac_injections(v: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return v * np.conj(Y @ v)


def _ac_jacobian(
    v: np.ndarray, Y: np.ndarray, magnitudes: np.ndarray, slack: int
) -> np.ndarray:
    """Stacked real Jacobian of v⊙(Yv)* w.r.t. (non-slack phases, magnitudes)."""
    n = v.shape[0]
    w = np.conj(Y @ v)
    phase = v / magnitudes
    vY = v[:, None] * np.conj(Y)
    J_theta = np.diag(1j * v * w) - 1j * vY * np.conj(v)[None, :]
    J_m = np.diag(phase * w) + vY * np.conj(phase)[None, :]
    keep = [j for j in range(n) if j != slack - 1]
    J = np.hstack([J_theta[:, keep], J_m])
    return np.vstack([J.real, J.imag])


def psse_ac(
    case,
    Y: np.ndarray,
    z_ac: np.ndarray,
    slack: int,
    tol: float = 1e-10,
    max_iter: int = 50,
    v0: np.ndarray | None = None,
) -> EstimationResult:
    """Gauss–Newton AC state estimate, by default from a flat start.

    The state is parametrized as (non-slack phases, all magnitudes); the slack
    phase stays 0.  Steps that increase the residual are halved up to 10
    times.  ``v0`` warm-starts the iteration from a known operating point
    (standard practice when tracking a running system); its slack phase is
    rotated to zero.  Raises :class:`SolverError` if not converged after
    ``max_iter`` iterations.
    """
    Y = np.asarray(Y, dtype=complex)
    z_ac = np.asarray(z_ac, dtype=complex)
    n = Y.shape[0]
    if z_ac.shape != (n,):
        raise ValueError(f"z_ac has shape {z_ac.shape}, expected ({n},)")
    if not 1 <= slack <= n:
        raise ValueError(f"slack bus {slack} out of range 1..{n}")

    if v0 is None:
        theta = np.zeros(n)
        mags = np.ones(n)
    else:
        v0 = np.asarray(v0, dtype=complex)
        theta = np.angle(v0) - np.angle(v0[slack - 1])
        mags = np.abs(v0)
    keep = [j for j in range(n) if j != slack - 1]

    def residual_vec(th, m):
        v = m * np.exp(1j * th)
        r = z_ac - _ac_injections(v, Y)
        return v, np.concatenate([r.real, r.imag])

    v, r = residual_vec(theta, mags)
    r_norm = float(np.linalg.norm(r))
    recent = collections.deque([r_norm], maxlen=11)
    for iteration in range(1, max_iter + 1):
        J = _ac_jacobian(v, Y, mags, slack)
        # rcond truncates directions the injection data cannot resolve (the
        # voltage-scale mode near zero injection); they stay at their start.
        step, *_ = np.linalg.lstsq(J, r, rcond=1e-4)
        scale = 1.0
        improved = False
        for _ in range(10):
            th_new = theta.copy()
            th_new[keep] += scale * step[: n - 1]
            m_new = mags + scale * step[n - 1 :]
            v_new, r_new = residual_vec(th_new, m_new)
            r_new_norm = float(np.linalg.norm(r_new))
            if r_new_norm <= r_norm:
                improved = True
                break
            scale *= 0.5
        if not improved:
            # no step length improves the residual: numerically stationary
            return EstimationResult(
                state=mags * np.exp(1j * theta),
                residual_norm=r_norm,
                iterations=iteration,
                converged=True,
            )
        step_norm = float(np.linalg.norm(scale * step))
        drop = r_norm - r_new_norm
        recent.append(r_new_norm)
        # negligible total improvement across the last ten accepted steps
        # means the iteration is creeping along the flat approach to a
        # stationary point
        window_stalled = len(recent) == recent.maxlen and (
            recent[0] - r_new_norm <= 1e-2 * max(r_new_norm, 1e-12)
        )
        stationary = drop <= 1e-9 * (1.0 + r_norm) or window_stalled
        theta, mags, v, r, r_norm = th_new, m_new, v_new, r_new, r_new_norm
        if step_norm < tol or stationary:
            return EstimationResult(
                state=mags * np.exp(1j * theta),
                residual_norm=r_norm,
                iterations=iteration,
                converged=True,
            )
    raise SolverError(
        f"AC estimation did not converge in {max_iter} iterations "
        f"(last residual norm {r_norm:.6e})"
    )


def detect_bdd(
    estimate: EstimationResult, threshold: DetectorThreshold
) -> DetectionOutcome:
    """Bad-data detection: squared residual norm against the threshold."""
    if not threshold.detector_id.startswith("bdd"):
        raise ValueError(
            f"threshold {threshold.detector_id!r} is not a bdd threshold"
        )
    statistic = float(estimate.residual_norm) ** 2
    return DetectionOutcome(statistic=statistic, alarm=statistic > threshold.gamma)


def detect_gsp(
    signal: np.ndarray,
    basis: SpectralBasis,
    spec: FilterSpec,
    threshold: DetectorThreshold,
) -> DetectionOutcome:
    """High-pass smoothness statistic of a bus signal against the threshold."""
    statistic = smoothness(basis, spec, signal)
    return DetectionOutcome(statistic=statistic, alarm=statistic > threshold.gamma)


def ac_branch_signal(branch_id: str, v_hat: np.ndarray) -> np.ndarray:
    """Real bus signal examined by one AC ensemble branch.

    ``*:phase`` uses the voltage phases; ``*:mag`` the magnitude offset
    |v̂| − |v̂₁|; ``*_re`` / ``*_im`` the real / imaginary voltage parts.
    """
    v_hat = np.asarray(v_hat, dtype=complex)
    if branch_id.endswith(":phase"):
        return np.angle(v_hat)
    if branch_id.endswith(":mag"):
        mags = np.abs(v_hat)
        return mags - mags[0]
    if branch_id.endswith("_re"):
        return v_hat.real.copy()
    if branch_id.endswith("_im"):
        return v_hat.imag.copy()
    raise ValueError(f"unknown ensemble branch id {branch_id!r}")


def detect_ac_ensemble(
    v_hat: np.ndarray,
    branches: Mapping[str, tuple[SpectralBasis, FilterSpec, DetectorThreshold]],
) -> EnsembleOutcome:
    """OR-combination of per-branch smoothness detectors on the AC estimate.

    ``branches`` maps branch id to its (basis, filter, threshold) triple; an
    id with a missing or ``None`` threshold raises
    :class:`CalibrationError`.  The ensemble alarms when any branch fires.
    """
    statistics: dict[str, float] = {}
    fired: list[str] = []
    for branch_id in sorted(branches):
        basis, spec, threshold = branches[branch_id]
        if threshold is None:
            raise CalibrationError(f"branch {branch_id!r} has no threshold")
        signal = ac_branch_signal(branch_id, v_hat)
        outcome = detect_gsp(signal, basis, spec, threshold)
        statistics[branch_id] = outcome.statistic
        if outcome.alarm:
            fired.append(branch_id)
    return EnsembleOutcome(
        alarm=bool(fired), statistics=statistics, fired=tuple(fired)
    )


def calibrate_threshold(
    detector_id: str,
    null_sampler: Callable[[np.random.Generator], float],
    target_pfa: float,
    n_trials: int = 10000,
    seed: int = 0,
) -> DetectorThreshold:
    """Empirical (1 − pfa) quantile of the null statistic.

    ``null_sampler`` receives a per-trial generator derived from ``seed`` and
    returns one null statistic; results are reproducible and independent of
    evaluation order.
    """
    if not 0.0 < target_pfa < 1.0:
        raise ValueError(f"target_pfa must be in (0, 1), got {target_pfa}")
    if n_trials < 100:
        raise ValueError(f"need at least 100 calibration trials, got {n_trials}")
    samples = np.empty(n_trials)
    for t in range(n_trials):
        rng = np.random.default_rng((seed, 0, t))
        samples[t] = float(null_sampler(rng))
    if np.all(samples == samples[0]):
        raise CalibrationError(
            f"null sample for {detector_id!r} is degenerate "
            f"(all values equal {samples[0]!r})"
        )
    gamma = float(np.quantile(samples, 1.0 - target_pfa, method="linear"))
    return DetectorThreshold(
        detector_id=detector_id,
        gamma=gamma,
        target_pfa=target_pfa,
        calibration_size=n_trials,
        seed=seed,
    )
