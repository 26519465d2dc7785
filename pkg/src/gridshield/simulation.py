"""Monte-Carlo detection experiments on synthetic smooth grid states.

States are drawn with spectrally-shaped Gaussian coefficients (variance
β/λ_i on eigenvector i, zero on the constant mode), giving expected graph TV
of β(N−1).  DC measurements add Gaussian noise; AC measurements are complex
power injections of voltages with those phases and near-unit magnitudes.

A trial draws one state and one noise realization, applies each configured
attack to the same base measurements (paired comparison), runs the state
estimator, and evaluates every detector statistic.  Deterministic attack
kinds are synthesized once per configuration; random kinds are redrawn per
trial from trial-derived seeds.  Everything is reproducible from the
configuration seed, independent of worker count.

Detector ids: DC ``bdd``, ``gtv``, ``ideal``; AC ``bdd_ac`` plus the OR
ensembles ``gtv_ac`` (2 branches) and ``ideal_ac`` (4 branches), whose
branches are calibrated at target_pfa / n_branches each.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .attacks import (
    ATTACK_KINDS,
    AttackVector,
    attack_rand,
    attack_rand_gfdi,
    attack_sparsest,
    gfdi_attack,
)
from .cases import GridCase, load_case
from .errors import ConfigError, InfeasibleAttackError
from .estimation import (
    GTV_AC_BRANCHES,
    IDEAL_AC_BRANCHES,
    DetectorThreshold,
    ac_branch_signal,
    psse_ac,
    psse_dc,
)
from .grid_model import (
    MeasurementModel,
    build_complex_admittance,
    build_laplacian,
    build_measurement_model,
    derive_secured_rows,
)
from .gsp import (
    FilterSpec,
    SpectralBasis,
    default_cutoff,
    eig_sym,
    smoothness,
)
from .protection import protect_greedy, protect_random, protect_sparsest_baseline

__all__ = [
    "DC_DETECTORS",
    "AC_DETECTORS",
    "ExperimentConfig",
    "ExperimentContext",
    "DetectionStats",
    "MonteCarloResult",
    "SweepRow",
    "build_context",
    "gen_smooth_state",
    "gen_dc_measurements",
    "gen_ac_measurements",
    "build_attacks",
    "calibrate_detectors",
    "run_monte_carlo",
    "roc_table",
    "sweep",
    "wilson_interval",
]

DC_DETECTORS = ("bdd", "gtv", "ideal")
AC_DETECTORS = ("bdd_ac", "gtv_ac", "ideal_ac")

_ENSEMBLE_BRANCHES = {
    "gtv_ac": GTV_AC_BRANCHES,
    "ideal_ac": IDEAL_AC_BRANCHES,
}

SWEEP_AXES = ("tau", "pfa", "protection_ratio")
PROTECTION_POLICIES = ("gsp", "random", "sparsest")

# rng stream tags: (seed, stream, ...) keeps calibration, trials, and
# per-trial attack draws on non-overlapping deterministic streams
_STREAM_CALIBRATION = 0
_STREAM_TRIAL = 1
_STREAM_ATTACK = 2


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one experiment; everything derives from it."""

    case: str = "ieee57"
    model: str = "dc"
    tau: float = 0.2
    k: int = 5
    beta: float = 0.05
    noise_var: float = 0.001
    target_pfa: float = 0.05
    trials: int = 1000
    seed: int = 0
    attacks: tuple[str, ...] = ATTACK_KINDS
    detectors: tuple[str, ...] = ()
    secured_buses: tuple[int, ...] = ()
    lambda_cut: float | None = None
    l1_budget: float | None = None
    calibration_trials: int = 10000
    mag_std: float = 0.1
    r_over_x: float = 0.5
    ac_max_iter: int = 200
    workers: int = 1

    def __post_init__(self) -> None:
        if self.model not in ("dc", "ac"):
            raise ConfigError(f"model must be 'dc' or 'ac', got {self.model!r}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.beta <= 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if self.noise_var <= 0:
            raise ConfigError(f"noise_var must be positive, got {self.noise_var}")
        if not 0.0 < self.target_pfa < 1.0:
            raise ConfigError(
                f"target_pfa must be in (0, 1), got {self.target_pfa}"
            )
        if self.tau <= 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.calibration_trials < 100:
            raise ConfigError(
                f"calibration_trials must be >= 100, got {self.calibration_trials}"
            )
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        allowed = set(ATTACK_KINDS) | {"none"}
        unknown = [a for a in self.attacks if a not in allowed]
        if unknown:
            raise ConfigError(
                f"unknown attack kinds {unknown}; choose from "
                f"{sorted(allowed)}"
            )
        object.__setattr__(self, "attacks", tuple(self.attacks))
        object.__setattr__(self, "detectors", tuple(self.detectors))
        object.__setattr__(
            self, "secured_buses", tuple(int(b) for b in self.secured_buses)
        )
        expected = AC_DETECTORS if self.model == "ac" else DC_DETECTORS
        if not self.detectors:
            object.__setattr__(self, "detectors", expected)
        else:
            bad = [d for d in self.detectors if d not in expected]
            if bad:
                raise ConfigError(
                    f"detectors {bad} not available for model "
                    f"{self.model!r}; choose from {expected}"
                )

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        for key in ("attacks", "detectors", "secured_buses"):
            if key in kwargs and kwargs[key] is not None:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


class ExperimentContext:
    """Derived per-configuration state: topology, spectra, secured rows."""

    def __init__(self, config: ExperimentConfig, case: GridCase):
        if not config.k < case.n_bus:
            raise ConfigError(
                f"k={config.k} needs a case with more than {config.k} buses; "
                f"{case.name!r} has {case.n_bus}"
            )
        budget = config.k if config.l1_budget is None else config.l1_budget
        if budget < config.tau:
            raise ConfigError(
                f"l1 budget {budget} cannot accommodate a pinned entry of "
                f"tau={config.tau}"
            )
        for bus in config.secured_buses:
            if not 1 <= bus <= case.n_bus:
                raise ConfigError(
                    f"secured bus {bus} out of range 1..{case.n_bus}"
                )
        self.config = config
        self.case = case
        self.slack = case.slack_bus
        self.L = build_laplacian(case)
        self.model = build_measurement_model(case, noise_var=config.noise_var)
        self.basis = eig_sym(self.L)
        self.secured = derive_secured_rows(config.secured_buses, self.model, case)
        cutoff = (
            default_cutoff(self.basis)
            if config.lambda_cut is None
            else float(config.lambda_cut)
        )
        self.cutoff = cutoff
        self.tv_spec = FilterSpec("tv_sqrt")
        self.ideal_spec = FilterSpec("ideal_highpass", cutoff=cutoff)

        n = case.n_bus
        inj_rows = [
            r for r, tag in enumerate(self.model.rows) if tag.kind == "injection"
        ]
        self.injection_rows = inj_rows

        if config.model == "ac":
            if inj_rows != list(range(n)):
                raise ConfigError(
                    "AC experiments need the default meter layout with an "
                    "injection measurement at every bus"
                )
            self.Y = build_complex_admittance(case, r_over_x=config.r_over_x)
            re_basis = eig_sym(self.Y.real)
            im_basis = eig_sym(-self.Y.imag)
            self.branch_setup = {
                "gtv_ac:phase": (self.basis, FilterSpec("tv_sqrt")),
                "gtv_ac:mag": (self.basis, FilterSpec("tv_sqrt")),
                "ideal_ac:reY_re": (
                    re_basis,
                    FilterSpec("ideal_highpass", cutoff=default_cutoff(re_basis)),
                ),
                "ideal_ac:reY_im": (
                    re_basis,
                    FilterSpec("ideal_highpass", cutoff=default_cutoff(re_basis)),
                ),
                "ideal_ac:imY_re": (
                    im_basis,
                    FilterSpec("ideal_highpass", cutoff=default_cutoff(im_basis)),
                ),
                "ideal_ac:imY_im": (
                    im_basis,
                    FilterSpec("ideal_highpass", cutoff=default_cutoff(im_basis)),
                ),
            }
        else:
            self.Y = None
            self.branch_setup = {}

    def sample_ids(self) -> tuple[str, ...]:
        """Ids of the statistics produced per trial (branches, not ensembles)."""
        ids: list[str] = []
        for det in self.config.detectors:
            if det in _ENSEMBLE_BRANCHES:
                ids.extend(
                    b for b in _ENSEMBLE_BRANCHES[det] if b in self.branch_setup
                )
            else:
                ids.append(det)
        return tuple(ids)


def build_context(config: ExperimentConfig) -> ExperimentContext:
    return ExperimentContext(config, load_case(config.case))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gen_smooth_state(basis: SpectralBasis, beta: float, seed) -> np.ndarray:
    """Spectral Gaussian state: coefficient i ~ N(0, β/λ_i), none on λ₁=0."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    lam = basis.eigenvalues
    if lam.shape[0] < 2 or lam[1] <= 0:
        raise ValueError("smooth states need a connected graph (lambda_2 > 0)")
    rng = _as_rng(seed)
    coeffs = np.zeros(basis.n_vertices)
    coeffs[1:] = rng.standard_normal(basis.n_vertices - 1) * np.sqrt(
        beta / lam[1:]
    )
    return basis.U @ coeffs


def gen_dc_measurements(
    model: MeasurementModel,
    theta: np.ndarray,
    attack_a: np.ndarray | None,
    noise_var: float,
    seed,
) -> np.ndarray:
    """z = Hθ + a + ν with i.i.d. Gaussian noise of the given variance."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.n_state,):
        raise ValueError(
            f"theta has shape {theta.shape}, expected ({model.n_state},)"
        )
    rng = _as_rng(seed)
    z = model.H @ theta
    if attack_a is not None:
        a = np.asarray(attack_a, dtype=float)
        if a.shape != (model.n_rows,):
            raise ValueError(
                f"attack has shape {a.shape}, expected ({model.n_rows},)"
            )
        z = z + a
    return z + rng.standard_normal(model.n_rows) * math.sqrt(noise_var)


def gen_ac_measurements(
    basis: SpectralBasis,
    Y: np.ndarray,
    beta: float,
    seed,
    attack_inj: np.ndarray | None = None,
    noise_var: float = 0.001,
    mag_std: float = 0.1,
) -> tuple[np.ndarray, np.ndarray]:
    """Complex injections of a smooth-phase near-unit-magnitude voltage.

    Returns ``(v_true, z_ac)`` where ``z_ac = v(Yv)* + a + e_c``; the real
    attack vector (active-power falsification) adds to the real part, and the
    complex noise splits its variance evenly between real and imaginary
    parts.  Draw order: phases, magnitudes, noise — fixed for pairing.
    """
    rng = _as_rng(seed)
    n = basis.n_vertices
    theta = gen_smooth_state(basis, beta, rng)
    mags = 1.0 + mag_std * rng.standard_normal(n)
    v = mags * np.exp(1j * theta)
    half = math.sqrt(noise_var / 2.0)
    noise = half * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    z = v * np.conj(Y @ v)
    if attack_inj is not None:
        z = z + np.asarray(attack_inj, dtype=float)
    return v, z + noise


def build_attacks(ctx: ExperimentContext) -> dict[str, AttackVector | None]:
    """Deterministic attack vectors for the configuration (one synthesis).

    Returns a value for every configured kind: deterministic kinds map to
    their vector or ``None`` when infeasible; random kinds map to ``None``
    here (they are drawn per trial) — except the gfdi base needed by
    ``rand_gfdi``, stored under ``"gfdi"`` whenever either kind is configured.
    """
    cfg = ctx.config
    out: dict[str, AttackVector | None] = {}
    needs_gfdi = {"gfdi", "rand_gfdi"} & set(cfg.attacks)
    if needs_gfdi:
        out["gfdi"] = gfdi_attack(
            ctx.L,
            ctx.model.H,
            ctx.secured.rows,
            cfg.k,
            cfg.tau,
            l1_budget=cfg.l1_budget,
        )
    for variant in ("low", "avg"):
        kind = f"sparse_{variant}"
        if kind in cfg.attacks:
            try:
                out[kind] = attack_sparsest(
                    ctx.L, ctx.model.H, ctx.secured.rows, cfg.tau, variant
                )
            except InfeasibleAttackError:
                out[kind] = None
    return out


def _trial_attack(
    ctx: ExperimentContext,
    kind: str,
    det_attacks: dict[str, AttackVector | None],
    trial: int,
) -> AttackVector | None:
    cfg = ctx.config
    if kind == "none":
        return None
    if kind in ("gfdi", "sparse_low", "sparse_avg"):
        return det_attacks[kind]
    rng = np.random.default_rng(
        (cfg.seed, _STREAM_ATTACK, trial, ATTACK_KINDS.index(kind))
    )
    if kind == "rand":
        return attack_rand(
            ctx.L, ctx.model.H, cfg.k, cfg.tau, rng, ctx.secured.rows
        )
    if kind == "rand_gfdi":
        base = det_attacks.get("gfdi")
        if base is None:
            return None
        return attack_rand_gfdi(
            ctx.L, ctx.model.H, ctx.secured.rows, cfg.k, cfg.tau, rng, base=base
        )
    raise ValueError(f"unknown attack kind {kind!r}")


def _dc_statistics(ctx: ExperimentContext, z: np.ndarray) -> dict[str, float]:
    est = psse_dc(ctx.model, z, ctx.slack)
    signal = est.state - est.state[ctx.slack - 1]
    stats: dict[str, float] = {}
    for det in ctx.config.detectors:
        if det == "bdd":
            stats[det] = est.residual_norm**2
        elif det == "gtv":
            stats[det] = smoothness(ctx.basis, ctx.tv_spec, signal)
        elif det == "ideal":
            stats[det] = smoothness(ctx.basis, ctx.ideal_spec, signal)
    return stats


def _ac_statistics(ctx: ExperimentContext, z: np.ndarray) -> dict[str, float]:
    est = psse_ac(
        ctx.case,
        ctx.Y,
        z,
        ctx.slack,
        max_iter=ctx.config.ac_max_iter,
    )
    stats: dict[str, float] = {}
    for det in ctx.config.detectors:
        if det == "bdd_ac":
            stats[det] = est.residual_norm**2
        else:
            for branch in _ENSEMBLE_BRANCHES[det]:
                basis, spec = ctx.branch_setup[branch]
                signal = ac_branch_signal(branch, est.state)
                stats[branch] = smoothness(basis, spec, signal)
    return stats


def _null_statistics(ctx: ExperimentContext, rng) -> dict[str, float]:
    """One null trial: state + noise, no attack, estimator, all statistics."""
    cfg = ctx.config
    if cfg.model == "dc":
        theta = gen_smooth_state(ctx.basis, cfg.beta, rng)
        z = gen_dc_measurements(ctx.model, theta, None, cfg.noise_var, rng)
        return _dc_statistics(ctx, z)
    _, z = gen_ac_measurements(
        ctx.basis,
        ctx.Y,
        cfg.beta,
        rng,
        noise_var=cfg.noise_var,
        mag_std=cfg.mag_std,
    )
    return _ac_statistics(ctx, z)


def _branch_pfa(ctx: ExperimentContext, sample_id: str) -> float:
    target = ctx.config.target_pfa
    for det, branches in _ENSEMBLE_BRANCHES.items():
        if sample_id in branches:
            return target / len(branches)
    return target


def _null_sample_matrix(ctx: ExperimentContext) -> dict[str, np.ndarray]:
    """Null statistic samples per id (one shared pass over null trials)."""
    cfg = ctx.config
    ids = ctx.sample_ids()
    n = cfg.calibration_trials
    samples = {i: np.empty(n) for i in ids}
    for t in range(n):
        rng = np.random.default_rng((cfg.seed, _STREAM_CALIBRATION, t))
        stats = _null_statistics(ctx, rng)
        for i in ids:
            samples[i][t] = stats[i]
    return samples


def calibrate_detectors(
    ctx: ExperimentContext,
    null_stats: dict[str, np.ndarray] | None = None,
) -> dict[str, DetectorThreshold]:
    """Empirical null thresholds for every configured statistic.

    One pass over the null trials evaluates all statistics; ensemble branches
    are calibrated at target_pfa divided by their branch count.  Identical to
    calibrating each id separately with :func:`estimation.calibrate_threshold`
    under the same seed.
    """
    cfg = ctx.config
    if null_stats is None:
        null_stats = _null_sample_matrix(ctx)
    thresholds: dict[str, DetectorThreshold] = {}
    for i in ctx.sample_ids():
        pfa = _branch_pfa(ctx, i)
        gamma = float(np.quantile(null_stats[i], 1.0 - pfa, method="linear"))
        thresholds[i] = DetectorThreshold(
            detector_id=i,
            gamma=gamma,
            target_pfa=pfa,
            calibration_size=cfg.calibration_trials,
            seed=cfg.seed,
        )
    return thresholds


@dataclass(frozen=True)
class DetectionStats:
    """Detection probability of one detector against one attack kind."""

    attack: str
    detector: str
    pfa: float
    pd: float
    ci_lo: float
    ci_hi: float
    trials: int
    alarms: int
    seed: int


@dataclass(frozen=True)
class MonteCarloResult:
    config: ExperimentConfig
    stats: tuple[DetectionStats, ...]
    thresholds: dict[str, DetectorThreshold]
    null_stats: dict[str, np.ndarray]
    trial_stats: dict[tuple[str, str], np.ndarray]
    tv_by_kind: dict[str, np.ndarray]
    infeasible_kinds: tuple[str, ...]


def wilson_interval(alarms: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score 95% interval for a binomial proportion."""
    if trials == 0:
        return (math.nan, math.nan)
    p = alarms / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials**2))
    return (max(0.0, center - half), min(1.0, center + half))


def _trial_range_stats(
    ctx: ExperimentContext,
    det_attacks: dict[str, AttackVector | None],
    lo: int,
    hi: int,
) -> tuple[dict[tuple[str, str], np.ndarray], dict[str, np.ndarray]]:
    """Statistics and attack TVs for trials lo..hi-1 (worker unit)."""
    cfg = ctx.config
    ids = ctx.sample_ids()
    kinds = [
        kind
        for kind in cfg.attacks
        if kind == "none"
        or kind in ("rand", "rand_gfdi")
        or det_attacks.get(kind) is not None
    ]
    if "rand_gfdi" in kinds and det_attacks.get("gfdi") is None:
        kinds.remove("rand_gfdi")
    count = hi - lo
    stats = {(kind, i): np.empty(count) for kind in kinds for i in ids}
    tvs = {kind: np.empty(count) for kind in kinds}
    n = ctx.case.n_bus
    for idx, t in enumerate(range(lo, hi)):
        rng = np.random.default_rng((cfg.seed, _STREAM_TRIAL, t))
        if cfg.model == "dc":
            theta = gen_smooth_state(ctx.basis, cfg.beta, rng)
            z_base = gen_dc_measurements(
                ctx.model, theta, None, cfg.noise_var, rng
            )
            for kind in kinds:
                att = _trial_attack(ctx, kind, det_attacks, t)
                z = z_base if att is None else z_base + att.a
                row = _dc_statistics(ctx, z)
                for i in ids:
                    stats[(kind, i)][idx] = row[i]
                tvs[kind][idx] = 0.0 if att is None else att.tv
        else:
            _, z_base = gen_ac_measurements(
                ctx.basis,
                ctx.Y,
                cfg.beta,
                rng,
                noise_var=cfg.noise_var,
                mag_std=cfg.mag_std,
            )
            for kind in kinds:
                att = _trial_attack(ctx, kind, det_attacks, t)
                z = z_base if att is None else z_base + att.a[:n]
                row = _ac_statistics(ctx, z)
                for i in ids:
                    stats[(kind, i)][idx] = row[i]
                tvs[kind][idx] = 0.0 if att is None else att.tv
    return stats, tvs


def _worker_run(payload) -> tuple[dict, dict]:
    config_dict, det_attacks, lo, hi = payload
    config = ExperimentConfig.from_dict(config_dict)
    ctx = build_context(config)
    return _trial_range_stats(ctx, det_attacks, lo, hi)


def _ensemble_alarms(
    ctx: ExperimentContext,
    trial_stats: dict[tuple[str, str], np.ndarray],
    kind: str,
    detector: str,
    thresholds: dict[str, DetectorThreshold],
) -> np.ndarray:
    if detector in _ENSEMBLE_BRANCHES:
        fired = None
        for branch in _ENSEMBLE_BRANCHES[detector]:
            hit = trial_stats[(kind, branch)] > thresholds[branch].gamma
            fired = hit if fired is None else (fired | hit)
        return fired
    return trial_stats[(kind, detector)] > thresholds[detector].gamma


def run_monte_carlo(
    config: ExperimentConfig,
    thresholds: dict[str, DetectorThreshold] | None = None,
    null_stats: dict[str, np.ndarray] | None = None,
) -> MonteCarloResult:
    """Paired detection experiment over all configured attacks and detectors.

    Calibrates thresholds from the configuration unless provided.  Results
    are bit-identical for a given configuration regardless of ``workers``.
    """
    ctx = build_context(config)
    if null_stats is None:
        null_stats = _null_sample_matrix(ctx)
    if thresholds is None:
        thresholds = calibrate_detectors(ctx, null_stats)
    det_attacks = build_attacks(ctx)
    infeasible = tuple(
        kind
        for kind in config.attacks
        if kind != "none"
        and (
            (kind in ("gfdi", "sparse_low", "sparse_avg") and det_attacks.get(kind) is None)
            or (kind == "rand_gfdi" and det_attacks.get("gfdi") is None)
        )
    )

    if config.workers > 1:
        chunk = math.ceil(config.trials / config.workers)
        ranges = [
            (lo, min(lo + chunk, config.trials))
            for lo in range(0, config.trials, chunk)
        ]
        payloads = [
            (config.to_dict(), det_attacks, lo, hi) for lo, hi in ranges
        ]
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(_worker_run, payloads))
        trial_stats: dict[tuple[str, str], np.ndarray] = {}
        tv_by_kind: dict[str, np.ndarray] = {}
        for key in parts[0][0]:
            trial_stats[key] = np.concatenate([p[0][key] for p in parts])
        for kind in parts[0][1]:
            tv_by_kind[kind] = np.concatenate([p[1][kind] for p in parts])
    else:
        trial_stats, tv_by_kind = _trial_range_stats(
            ctx, det_attacks, 0, config.trials
        )

    rows: list[DetectionStats] = []
    for kind in config.attacks:
        for det in config.detectors:
            if kind in infeasible:
                rows.append(
                    DetectionStats(
                        attack=kind,
                        detector=det,
                        pfa=config.target_pfa,
                        pd=math.nan,
                        ci_lo=math.nan,
                        ci_hi=math.nan,
                        trials=0,
                        alarms=0,
                        seed=config.seed,
                    )
                )
                continue
            fired = _ensemble_alarms(ctx, trial_stats, kind, det, thresholds)
            alarms = int(fired.sum())
            lo, hi = wilson_interval(alarms, config.trials)
            rows.append(
                DetectionStats(
                    attack=kind,
                    detector=det,
                    pfa=config.target_pfa,
                    pd=alarms / config.trials,
                    ci_lo=lo,
                    ci_hi=hi,
                    trials=config.trials,
                    alarms=alarms,
                    seed=config.seed,
                )
            )
    return MonteCarloResult(
        config=config,
        stats=tuple(rows),
        thresholds=thresholds,
        null_stats=null_stats,
        trial_stats=trial_stats,
        tv_by_kind=tv_by_kind,
        infeasible_kinds=infeasible,
    )


@dataclass(frozen=True)
class SweepRow:
    """One sweep table entry: a detection result at one axis value."""

    axis: str
    value: float
    attack: str
    detector: str
    pfa: float
    pd: float
    ci_lo: float
    ci_hi: float
    trials: int
    alarms: int
    seed: int
    tv_median: float
    secured_count: int


def _gamma_at(null_sample: np.ndarray, pfa: float) -> float:
    if pfa <= 0.0:
        return math.inf
    if pfa >= 1.0:
        return -math.inf
    return float(np.quantile(null_sample, 1.0 - pfa, method="linear"))


def roc_table(result: MonteCarloResult, pfa_grid) -> tuple[SweepRow, ...]:
    """Re-threshold one trial set at each false-alarm level (no re-simulation)."""
    pfa_grid = [float(p) for p in pfa_grid]
    if not pfa_grid:
        raise ValueError("empty pfa grid")
    config = result.config
    rows: list[SweepRow] = []
    for pfa in pfa_grid:
        for kind in config.attacks:
            tvs = result.tv_by_kind.get(kind)
            tv_median = float(np.median(tvs)) if tvs is not None else math.nan
            for det in config.detectors:
                if kind in result.infeasible_kinds:
                    rows.append(
                        SweepRow(
                            axis="pfa",
                            value=pfa,
                            attack=kind,
                            detector=det,
                            pfa=pfa,
                            pd=math.nan,
                            ci_lo=math.nan,
                            ci_hi=math.nan,
                            trials=0,
                            alarms=0,
                            seed=config.seed,
                            tv_median=math.nan,
                            secured_count=len(config.secured_buses),
                        )
                    )
                    continue
                if det in _ENSEMBLE_BRANCHES:
                    branches = _ENSEMBLE_BRANCHES[det]
                    branch_pfa = pfa / len(branches)
                    fired = None
                    for b in branches:
                        g = _gamma_at(result.null_stats[b], branch_pfa)
                        hit = result.trial_stats[(kind, b)] > g
                        fired = hit if fired is None else (fired | hit)
                else:
                    g = _gamma_at(result.null_stats[det], pfa)
                    fired = result.trial_stats[(kind, det)] > g
                alarms = int(fired.sum())
                lo, hi = wilson_interval(alarms, config.trials)
                rows.append(
                    SweepRow(
                        axis="pfa",
                        value=pfa,
                        attack=kind,
                        detector=det,
                        pfa=pfa,
                        pd=alarms / config.trials,
                        ci_lo=lo,
                        ci_hi=hi,
                        trials=config.trials,
                        alarms=alarms,
                        seed=config.seed,
                        tv_median=tv_median,
                        secured_count=len(config.secured_buses),
                    )
                )
    return tuple(rows)


def _protection_prefixes(
    config: ExperimentConfig, sizes: list[int], policy: str, policy_seed: int
) -> dict[int, tuple[int, ...]]:
    base = replace(config, secured_buses=())
    ctx = build_context(base)
    max_size = max(sizes)
    if policy == "gsp":
        plan = protect_greedy(
            ctx.L,
            ctx.model,
            ctx.case,
            base.k,
            base.tau,
            delta=math.inf,
            max_secured=max_size,
            l1_budget=base.l1_budget,
        )
        order = plan.buses
    elif policy == "random":
        order = protect_random(ctx.model, ctx.case, max_size, policy_seed).buses
    elif policy == "sparsest":
        order = protect_sparsest_baseline(
            ctx.model, ctx.case, base.tau, max_size
        ).buses
    else:
        raise ConfigError(
            f"unknown protection policy {policy!r}; choose from "
            f"{PROTECTION_POLICIES}"
        )
    # a planner may stop early (attack already infeasible); the final plan
    # then serves every larger requested size
    return {size: tuple(order[: min(size, len(order))]) for size in sizes}


def sweep(
    config: ExperimentConfig,
    axis: str,
    values,
    policy: str = "gsp",
    policy_seed: int | None = None,
) -> tuple[SweepRow, ...]:
    """Detection table along one experiment axis.

    ``tau`` re-runs the experiment per impact value; ``pfa`` re-thresholds a
    single run (ROC); ``protection_ratio`` grows a secured set with the given
    policy and re-runs per prefix.  Calibration is shared across points
    (the null distribution does not depend on τ or the secured set).
    """
    values = list(values)
    if not values:
        raise ValueError("empty sweep grid")
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}, got {axis!r}")

    if axis == "pfa":
        result = run_monte_carlo(config)
        return roc_table(result, values)

    base_ctx = build_context(config)
    null_stats = _null_sample_matrix(base_ctx)
    rows: list[SweepRow] = []
    if axis == "tau":
        for value in values:
            point_cfg = replace(config, tau=float(value))
            result = run_monte_carlo(point_cfg, null_stats=null_stats)
            for s in result.stats:
                tvs = result.tv_by_kind.get(s.attack)
                rows.append(
                    SweepRow(
                        axis="tau",
                        value=float(value),
                        attack=s.attack,
                        detector=s.detector,
                        pfa=s.pfa,
                        pd=s.pd,
                        ci_lo=s.ci_lo,
                        ci_hi=s.ci_hi,
                        trials=s.trials,
                        alarms=s.alarms,
                        seed=s.seed,
                        tv_median=(
                            float(np.median(tvs)) if tvs is not None and tvs.size else math.nan
                        ),
                        secured_count=len(config.secured_buses),
                    )
                )
        return tuple(rows)

    # protection_ratio sweep
    n = base_ctx.case.n_bus
    sizes = [int(round(float(r) * n)) for r in values]
    for size in sizes:
        if not 0 <= size <= n:
            raise ConfigError(f"protection ratio maps to invalid size {size}")
    seed = config.seed if policy_seed is None else policy_seed
    prefixes = _protection_prefixes(config, sizes, policy, seed)
    for value, size in zip(values, sizes):
        secured = prefixes[size]
        point_cfg = replace(config, secured_buses=secured)
        result = run_monte_carlo(point_cfg, null_stats=null_stats)
        for s in result.stats:
            tvs = result.tv_by_kind.get(s.attack)
            rows.append(
                SweepRow(
                    axis="protection_ratio",
                    value=float(value),
                    attack=s.attack,
                    detector=s.detector,
                    pfa=s.pfa,
                    pd=s.pd,
                    ci_lo=s.ci_lo,
                    ci_hi=s.ci_hi,
                    trials=s.trials,
                    alarms=s.alarms,
                    seed=s.seed,
                    tv_median=(
                        float(np.median(tvs)) if tvs is not None and tvs.size else math.nan
                    ),
                    secured_count=len(secured),
                )
            )
    return tuple(rows)
