"""Command-line front end.

Subcommands: ``spectrum`` (graph spectrum and signal dumps), ``attack``
(synthesize one attack vector), ``protect`` (plan a secured-sensor set),
``calibrate`` (detector thresholds), ``roc`` (detection vs false-alarm
level), and ``sweep`` (detection along an experiment axis).

Settings resolve as command-line flags over config-file entries over
defaults.  Every run writes its outputs plus a ``manifest.json`` recording
the command, resolved configuration, input digests, and output digests, so
a run can be reproduced and verified byte-for-byte.

Exit codes: 0 success, 2 bad configuration, 3 no feasible attack,
4 numerical failure, 5 input/output failure.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time

import numpy as np

from . import __version__
from .attacks import (
    ATTACK_KINDS,
    AttackVector,
    attack_rand,
    attack_rand_gfdi,
    attack_sparsest,
    gfdi_attack,
)
from .cases import parse_secure_fragment, resolve_case_source
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
from .gsp import gft, graph_tv
from .protection import (
    ProtectionPlan,
    protect_exhaustive,
    protect_greedy,
    protect_random,
    protect_sparsest_baseline,
)
from .reports import (
    RunManifest,
    atomic_write_text,
    fmt,
    read_config_file,
    sha256_file,
    write_attack_files,
    write_config_file,
    write_manifest,
    write_meter_registry,
    write_plan_csv,
    write_signal_csv,
    write_spectrum_csv,
    write_sweep_csv,
    write_thresholds_csv,
)
from .simulation import (
    PROTECTION_POLICIES,
    SWEEP_AXES,
    ExperimentConfig,
    build_context,
    calibrate_detectors,
    gen_smooth_state,
    roc_table,
    run_monte_carlo,
    sweep,
    _STREAM_ATTACK,
    _STREAM_TRIAL,
)

_FLAG_TO_KEY = {
    "case": "case",
    "model": "model",
    "tau": "tau",
    "k": "k",
    "beta": "beta",
    "noise_var": "noise_var",
    "pfa": "target_pfa",
    "trials": "trials",
    "seed": "seed",
    "attacks": "attacks",
    "detector": "detectors",
    "secure": "secured_buses",
    "lambda_cut": "lambda_cut",
    "l1_budget": "l1_budget",
    "calibration_trials": "calibration_trials",
    "r_over_x": "r_over_x",
    "ac_max_iter": "ac_max_iter",
    "workers": "workers",
}


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--case", help="bundled case name or case file path")
    sub.add_argument("--config", help="flat key=value configuration file")
    sub.add_argument("--model", choices=("dc", "ac"), help="measurement model")
    sub.add_argument("--tau", type=float, help="attack impact floor (rad)")
    sub.add_argument("--k", type=int, help="attack sparsity budget")
    sub.add_argument("--beta", type=float, help="state smoothness level")
    sub.add_argument("--noise-var", dest="noise_var", type=float, help="measurement noise variance")
    sub.add_argument("--pfa", type=float, help="target false-alarm probability")
    sub.add_argument("--trials", type=int, help="Monte-Carlo trials")
    sub.add_argument("--seed", type=int, help="experiment seed")
    sub.add_argument("--attacks", help="comma-separated attack kinds")
    sub.add_argument(
        "--detector",
        action="append",
        help="detector id (repeatable); defaults to all for the model",
    )
    sub.add_argument("--secure", help="comma-separated bus ids to secure")
    sub.add_argument(
        "--secure-file",
        dest="secure_file",
        help="file of 'secure <bus>' lines (protect output) to apply",
    )
    sub.add_argument("--lambda-cut", dest="lambda_cut", type=float, help="high-pass cutoff override")
    sub.add_argument("--l1-budget", dest="l1_budget", type=float, help="attack l1 relaxation budget")
    sub.add_argument(
        "--calibration-trials",
        dest="calibration_trials",
        type=int,
        help="null trials used for threshold calibration",
    )
    sub.add_argument("--r-over-x", dest="r_over_x", type=float, help="branch R/X ratio (AC model)")
    sub.add_argument(
        "--ac-max-iter", dest="ac_max_iter", type=int, help="AC estimator iteration cap"
    )
    sub.add_argument("--workers", type=int, help="parallel worker processes")
    sub.add_argument("--out-dir", default="out", help="output directory (default: ./out)")


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides: dict = {}
    if getattr(args, "config", None):
        overrides.update(read_config_file(args.config))
    for flag, key in _FLAG_TO_KEY.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        if flag == "attacks":
            value = tuple(v.strip() for v in value.split(",") if v.strip())
        elif flag == "detector":
            value = tuple(value)
        elif flag == "secure":
            value = _parse_bus_list(value)
        overrides[key] = value
    secure_file = getattr(args, "secure_file", None)
    if secure_file:
        with open(secure_file, "r") as handle:
            from_file = parse_secure_fragment(handle.read(), origin=secure_file)
        merged = list(overrides.get("secured_buses", ())) + from_file
        overrides["secured_buses"] = tuple(dict.fromkeys(merged))
    try:
        return ExperimentConfig(**overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_bus_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad bus list {text!r}: {exc}") from exc


class _Run:
    """Collects inputs/outputs and writes the manifest on completion."""

    def __init__(self, args: argparse.Namespace, config: ExperimentConfig):
        self.args = args
        self.config = config
        self.out_dir = args.out_dir
        self.started = time.monotonic()
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        os.makedirs(self.out_dir, exist_ok=True)
        origin, text = resolve_case_source(config.case)
        self.inputs[origin] = hashlib.sha256(text.encode("utf-8")).hexdigest()
        if getattr(args, "config", None):
            self.inputs[args.config] = sha256_file(args.config)

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def record(self, *paths: str) -> None:
        for p in paths:
            self.outputs[p] = sha256_file(p)

    def finish(self, argv: list[str]) -> None:
        config_path = self.path("config.txt")
        write_config_file(config_path, self.config)
        self.record(config_path)
        manifest = RunManifest(
            command=("gridshield", *argv),
            version=__version__,
            seed=self.config.seed,
            config=self.config.to_dict(),
            inputs=dict(sorted(self.inputs.items())),
            outputs=dict(sorted(self.outputs.items())),
            wall_clock_s=round(time.monotonic() - self.started, 3),
        )
        write_manifest(self.path("manifest.json"), manifest)


def _synthesize_attack(
    config: ExperimentConfig, kind: str
) -> AttackVector | None:
    ctx = build_context(config)
    rows = ctx.secured.rows
    if kind == "gfdi":
        return gfdi_attack(
            ctx.L, ctx.model.H, rows, config.k, config.tau, l1_budget=config.l1_budget
        )
    if kind in ("rand", "rand_gfdi"):
        rng = np.random.default_rng(
            (config.seed, _STREAM_ATTACK, 0, ATTACK_KINDS.index(kind))
        )
        if kind == "rand":
            return attack_rand(ctx.L, ctx.model.H, config.k, config.tau, rng, rows)
        base = gfdi_attack(
            ctx.L, ctx.model.H, rows, config.k, config.tau, l1_budget=config.l1_budget
        )
        if base is None:
            return None
        return attack_rand_gfdi(
            ctx.L, ctx.model.H, rows, config.k, config.tau, rng, base=base
        )
    if kind in ("sparse_low", "sparse_avg"):
        return attack_sparsest(
            ctx.L, ctx.model.H, rows, config.tau, kind.removeprefix("sparse_")
        )
    raise ConfigError(f"unknown attack kind {kind!r}")


def _cmd_spectrum(args: argparse.Namespace, argv: list[str]) -> int:
    config = _resolve_config(args)
    run = _Run(args, config)
    ctx = build_context(config)
    attack = _synthesize_attack(config, args.kind)
    if attack is None:
        print(f"no feasible {args.kind} attack under the secured set", file=sys.stderr)
        return 3
    state = gen_smooth_state(
        ctx.basis, config.beta, np.random.default_rng((config.seed, _STREAM_TRIAL, 0))
    )
    contaminated = state + attack.c

    spectrum_path = run.path("spectrum.csv")
    write_spectrum_csv(spectrum_path, ctx.basis)
    paths = [spectrum_path]
    for name, signal in (
        ("signal_state.csv", state),
        ("signal_attack.csv", attack.c),
        ("signal_contaminated.csv", contaminated),
    ):
        p = run.path(name)
        write_signal_csv(p, ctx.basis, signal)
        paths.append(p)
    run.record(*paths)
    run.finish(argv)

    lam = ctx.basis.eigenvalues
    coeffs = gft(ctx.basis, attack.c)
    quartile = max(1, ctx.basis.n_vertices // 4)
    low_energy = float(np.sum(coeffs[:quartile] ** 2) / np.sum(coeffs**2))
    print(f"case {config.case}: {ctx.basis.n_vertices} buses")
    print(f"eigenvalues lambda_1={fmt(lam[0])} .. lambda_N={fmt(lam[-1])}; cutoff {fmt(ctx.cutoff)}")
    print(f"state TV {fmt(graph_tv(ctx.L, state))}")
    print(
        f"{args.kind} attack TV {fmt(attack.tv)}; low-band energy fraction "
        f"{low_energy:.4f} (lowest {quartile} modes)"
    )
    return 0


def _cmd_attack(args: argparse.Namespace, argv: list[str]) -> int:
    config = _resolve_config(args)
    run = _Run(args, config)
    ctx = build_context(config)
    attack = _synthesize_attack(config, args.kind)
    if attack is None:
        print(f"no feasible {args.kind} attack under the secured set", file=sys.stderr)
        return 3
    c_path, a_path = write_attack_files(
        run.out_dir,
        attack,
        extra={"case": config.case, "tau": fmt(config.tau), "k": config.k},
    )
    meters_path = run.path("meters.csv")
    write_meter_registry(meters_path, ctx.model, ctx.case)
    run.record(c_path, a_path, meters_path)
    run.finish(argv)

    print(f"kind {attack.kind}")
    if attack.target_bus is not None:
        print(f"target bus {attack.target_bus}")
    print(f"support {','.join(str(b) for b in attack.support)}")
    print(f"tv {fmt(attack.tv)}")
    print(f"unobservability residual {fmt(attack.unobs_residual)}")
    return 0


def _cmd_protect(args: argparse.Namespace, argv: list[str]) -> int:
    config = _resolve_config(args)
    run = _Run(args, config)
    ctx = build_context(config)
    method = args.method
    if method in ("greedy", "exhaustive") and args.delta is None:
        raise ConfigError(f"--delta is required for method {method!r}")
    if method in ("random", "sparsest") and args.size is None:
        raise ConfigError(f"--size is required for method {method!r}")

    plan: ProtectionPlan
    if method == "greedy":
        plan = protect_greedy(
            ctx.L,
            ctx.model,
            ctx.case,
            config.k,
            config.tau,
            delta=args.delta,
            max_secured=args.max_secured,
            l1_budget=config.l1_budget,
        )
    elif method == "exhaustive":
        plan = protect_exhaustive(
            ctx.L, ctx.model, ctx.case, config.k, config.tau, delta=args.delta
        )
    elif method == "random":
        plan = protect_random(ctx.model, ctx.case, args.size, config.seed)
    else:
        plan = protect_sparsest_baseline(ctx.model, ctx.case, config.tau, args.size)

    plan_path = run.path("plan.csv")
    write_plan_csv(plan_path, plan)
    fragment_path = run.path("secure.txt")
    atomic_write_text(
        fragment_path, "".join(f"secure {bus}\n" for bus in plan.buses)
    )
    run.record(plan_path, fragment_path)
    run.finish(argv)

    for bus in plan.buses:
        print(f"secure {bus}")
    if not plan.buses:
        print("no securing needed")
    print(f"final gfdi tv {fmt(plan.final_tv)}")
    if method in ("greedy", "exhaustive"):
        print("target reached" if plan.converged else "target NOT reached")
        if not plan.converged:
            return 3
    return 0


def _cmd_calibrate(args: argparse.Namespace, argv: list[str]) -> int:
    config = _resolve_config(args)
    run = _Run(args, config)
    ctx = build_context(config)
    thresholds = calibrate_detectors(ctx)
    out = run.path("thresholds.csv")
    write_thresholds_csv(out, thresholds)
    run.record(out)
    run.finish(argv)
    for name in sorted(thresholds):
        t = thresholds[name]
        print(f"{name}: gamma={fmt(t.gamma)} (pfa {fmt(t.target_pfa)}, n={t.calibration_size})")
    return 0


def _parse_float_list(text: str, flag: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad {flag} list {text!r}: {exc}") from exc
    if not values:
        raise ConfigError(f"{flag} list is empty")
    return values


def _cmd_roc(args: argparse.Namespace, argv: list[str]) -> int:
    config = _resolve_config(args)
    run = _Run(args, config)
    grid = _parse_float_list(args.pfa_grid, "--pfa-grid")
    result = run_monte_carlo(config)
    rows = roc_table(result, grid)
    roc_path = run.path("roc.csv")
    write_sweep_csv(roc_path, rows, config)
    thr_path = run.path("thresholds.csv")
    write_thresholds_csv(thr_path, result.thresholds)
    run.record(roc_path, thr_path)
    run.finish(argv)
    if result.infeasible_kinds:
        print(f"infeasible attack kinds: {','.join(result.infeasible_kinds)}")
    print(f"wrote {len(rows)} ROC points to {roc_path}")
    return 0


def _cmd_sweep(args: argparse.Namespace, argv: list[str]) -> int:
    config = _resolve_config(args)
    run = _Run(args, config)
    values = _parse_float_list(args.values, "--values")
    rows = sweep(
        config,
        args.axis,
        values,
        policy=args.policy,
        policy_seed=args.policy_seed,
    )
    sweep_path = run.path("sweep.csv")
    write_sweep_csv(sweep_path, rows, config)
    run.record(sweep_path)
    run.finish(argv)
    print(f"wrote {len(rows)} rows to {sweep_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridshield",
        description="Graph-spectral attack synthesis, detection, and sensor protection for grid state estimation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("spectrum", help="dump graph spectrum and signal transforms")
    sp.add_argument("--kind", default="gfdi", choices=ATTACK_KINDS, help="attack signal to analyze")
    _add_common_flags(sp)
    sp.set_defaults(func=_cmd_spectrum)

    at = subs.add_parser("attack", help="synthesize one attack vector")
    at.add_argument("--kind", default="gfdi", choices=ATTACK_KINDS, help="attack kind")
    _add_common_flags(at)
    at.set_defaults(func=_cmd_attack)

    pr = subs.add_parser("protect", help="plan a secured sensor set")
    pr.add_argument(
        "--method",
        default="greedy",
        choices=("greedy", "exhaustive", "random", "sparsest"),
        help="planning method",
    )
    pr.add_argument("--delta", type=float, help="detectability target for greedy/exhaustive")
    pr.add_argument("--size", type=int, help="secured-set size for random/sparsest")
    pr.add_argument("--max-secured", dest="max_secured", type=int, help="greedy size cap")
    _add_common_flags(pr)
    pr.set_defaults(func=_cmd_protect)

    ca = subs.add_parser("calibrate", help="calibrate detector thresholds")
    _add_common_flags(ca)
    ca.set_defaults(func=_cmd_calibrate)

    ro = subs.add_parser("roc", help="detection probability vs false-alarm level")
    ro.add_argument(
        "--pfa-grid",
        dest="pfa_grid",
        default="0,0.01,0.02,0.05,0.1,0.2,0.5,1",
        help="comma-separated false-alarm levels",
    )
    _add_common_flags(ro)
    ro.set_defaults(func=_cmd_roc)

    sw = subs.add_parser("sweep", help="detection along an experiment axis")
    sw.add_argument("--axis", required=True, choices=SWEEP_AXES, help="sweep axis")
    sw.add_argument("--values", required=True, help="comma-separated axis values")
    sw.add_argument(
        "--policy",
        default="gsp",
        choices=PROTECTION_POLICIES,
        help="secured-set policy for protection sweeps",
    )
    sw.add_argument("--policy-seed", dest="policy_seed", type=int, help="seed for the random policy")
    _add_common_flags(sw)
    sw.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, list(argv))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleAttackError as exc:
        print(f"no feasible attack: {exc}", file=sys.stderr)
        return 3
    except (
        SolverError,
        SingularKKTError,
        CalibrationError,
        UnobservableModelError,
        np.linalg.LinAlgError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except CaseFormatError as exc:
        print(f"bad case file: {exc}", file=sys.stderr)
        return 5
    except (FileNotFoundError, OSError) as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 5
    except GridShieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
