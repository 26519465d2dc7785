"""Graph-spectral security analysis for power-grid state estimation.

The package covers the full loop: load a grid case, build its Laplacian and
measurement model, synthesize unobservable false-data attacks that stay
spectrally smooth, run residual and graph-spectral detectors over Monte-Carlo
experiments, and plan secured sensor sets that force attacks back into
detectability.
"""

from .attacks import (
    ATTACK_KINDS,
    AttackVector,
    attack_rand,
    attack_rand_gfdi,
    attack_sparsest,
    gfdi_attack,
    gfdi_oracle,
    sparsest_min_support,
)
from .cases import (
    Branch,
    CASE_DIR_ENV,
    DuplicateBranchWarning,
    GridCase,
    bundled_case_names,
    load_case,
    load_case_file,
    parse_matpower_case,
    parse_native_case,
    parse_secure_fragment,
    resolve_case_source,
    serialize_native_case,
)
from .errors import (
    CalibrationError,
    CaseFormatError,
    ConfigError,
    GridShieldError,
    InfeasibleAttackError,
    SingularKKTError,
    SolverError,
    UnobservableModelError,
)
from .estimation import (
    DetectionOutcome,
    DetectorThreshold,
    EnsembleOutcome,
    EstimationResult,
    GTV_AC_BRANCHES,
    IDEAL_AC_BRANCHES,
    ac_branch_signal,
    calibrate_threshold,
    detect_ac_ensemble,
    detect_bdd,
    detect_gsp,
    psse_ac,
    psse_dc,
)
from .grid_model import (
    MeasurementModel,
    MeasurementTag,
    MeterConfig,
    SecuredSets,
    build_complex_admittance,
    build_laplacian,
    build_measurement_model,
    derive_secured_rows,
)
from .gsp import (
    FilterSpec,
    SpectralBasis,
    apply_filter,
    default_cutoff,
    eig_sym,
    filter_response,
    gft,
    graph_tv,
    ideal_highpass_filter,
    igft,
    smoothness,
    tv_sqrt_filter,
)
from .protection import (
    ProtectionPlan,
    protect_exhaustive,
    protect_greedy,
    protect_random,
    protect_sparsest_baseline,
)
from .simulation import (
    AC_DETECTORS,
    DC_DETECTORS,
    DetectionStats,
    ExperimentConfig,
    MonteCarloResult,
    SweepRow,
    build_context,
    calibrate_detectors,
    gen_ac_measurements,
    gen_dc_measurements,
    gen_smooth_state,
    roc_table,
    run_monte_carlo,
    sweep,
    wilson_interval,
)

__version__ = "1.0.0"

__all__ = [
    "__version__",
    # errors
    "GridShieldError",
    "CaseFormatError",
    "UnobservableModelError",
    "SolverError",
    "SingularKKTError",
    "InfeasibleAttackError",
    "CalibrationError",
    "ConfigError",
    # cases
    "Branch",
    "GridCase",
    "DuplicateBranchWarning",
    "CASE_DIR_ENV",
    "load_case",
    "load_case_file",
    "resolve_case_source",
    "bundled_case_names",
    "parse_native_case",
    "parse_matpower_case",
    "serialize_native_case",
    "parse_secure_fragment",
    # grid model
    "MeasurementTag",
    "MeterConfig",
    "MeasurementModel",
    "SecuredSets",
    "build_laplacian",
    "build_measurement_model",
    "build_complex_admittance",
    "derive_secured_rows",
    # spectral toolkit
    "SpectralBasis",
    "FilterSpec",
    "eig_sym",
    "gft",
    "igft",
    "graph_tv",
    "tv_sqrt_filter",
    "ideal_highpass_filter",
    "default_cutoff",
    "filter_response",
    "apply_filter",
    "smoothness",
    # attacks
    "ATTACK_KINDS",
    "AttackVector",
    "gfdi_attack",
    "gfdi_oracle",
    "attack_rand",
    "attack_rand_gfdi",
    "attack_sparsest",
    "sparsest_min_support",
    # estimation and detection
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
    # protection
    "ProtectionPlan",
    "protect_greedy",
    "protect_exhaustive",
    "protect_random",
    "protect_sparsest_baseline",
    # simulation
    "DC_DETECTORS",
    "AC_DETECTORS",
    "ExperimentConfig",
    "DetectionStats",
    "MonteCarloResult",
    "SweepRow",
    "build_context",
    "calibrate_detectors",
    "gen_smooth_state",
    "gen_dc_measurements",
    "gen_ac_measurements",
    "run_monte_carlo",
    "roc_table",
    "sweep",
    "wilson_interval",
]
