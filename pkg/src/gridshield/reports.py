"""File outputs: CSV tables, flat config files, and run manifests.

All writers are atomic (temp file + rename) and emit deterministic bytes for
deterministic inputs, so identical runs reproduce identical files.  Numeric
values are formatted with repr-faithful precision.  Result tables carry the
full experiment configuration as ``# key=value`` comment lines so any file
is self-describing.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Mapping, Sequence

import numpy as np

from .attacks import AttackVector
from .cases import GridCase
from .errors import ConfigError
from .estimation import DetectorThreshold
from .grid_model import MeasurementModel
from .gsp import SpectralBasis, gft
from .protection import ProtectionPlan
from .simulation import DetectionStats, ExperimentConfig, SweepRow

__all__ = [
    "RunManifest",
    "fmt",
    "atomic_write_text",
    "sha256_file",
    "write_meter_registry",
    "write_attack_files",
    "write_plan_csv",
    "write_results_csv",
    "write_sweep_csv",
    "write_thresholds_csv",
    "write_spectrum_csv",
    "write_signal_csv",
    "write_trace_csv",
    "write_config_file",
    "read_config_file",
    "write_manifest",
    "read_manifest",
]


def fmt(value) -> str:
    """Shortest round-trippable text for a scalar."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def atomic_write_text(path: str, text: str) -> None:
    """Write text to ``path`` via a same-directory temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def _render_csv(
    header: Sequence[str],
    rows: Iterable[Sequence],
    comments: Sequence[str] = (),
) -> str:
    buffer = io.StringIO()
    for line in comments:
        buffer.write(f"# {line}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(cell) for cell in row])
    return buffer.getvalue()


def _config_comments(config: ExperimentConfig) -> list[str]:
    out = []
    for key, value in config.to_dict().items():
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        out.append(f"{key}={'' if value is None else value}")
    return out


def write_meter_registry(path: str, model: MeasurementModel, case: GridCase) -> None:
    """Measurement rows: ``row,kind,location`` (bus id or from-to pair)."""
    rows = []
    for index, tag in enumerate(model.rows):
        if tag.kind == "injection":
            location = str(tag.location)
        else:
            branch = case.branches[tag.location - 1]
            location = f"{branch.from_bus}-{branch.to_bus}"
        rows.append((index, tag.kind, location))
    atomic_write_text(path, _render_csv(("row", "kind", "location"), rows))


def _attack_comments(attack: AttackVector, extra: Mapping[str, object]) -> list[str]:
    lines = [f"{k}={v}" for k, v in extra.items()]
    lines.append(f"kind={attack.kind}")
    lines.append(f"target_bus={'' if attack.target_bus is None else attack.target_bus}")
    lines.append(f"support={','.join(str(b) for b in attack.support)}")
    lines.append(f"tv={fmt(attack.tv)}")
    lines.append(f"unobs_residual={fmt(attack.unobs_residual)}")
    return lines


def write_attack_files(
    out_dir: str,
    attack: AttackVector,
    extra: Mapping[str, object] | None = None,
) -> tuple[str, str]:
    """State-falsification and measurement-injection dumps for one attack.

    Writes ``attack_c.csv`` (``bus,c_value``) and ``attack_a.csv``
    (``row,a_value``), both carrying the same metadata comment block.
    Returns the two paths.
    """
    comments = _attack_comments(attack, extra or {})
    c_path = os.path.join(out_dir, "attack_c.csv")
    a_path = os.path.join(out_dir, "attack_a.csv")
    atomic_write_text(
        c_path,
        _render_csv(
            ("bus", "c_value"),
            [(i + 1, v) for i, v in enumerate(attack.c)],
            comments,
        ),
    )
    atomic_write_text(
        a_path,
        _render_csv(
            ("row", "a_value"),
            [(i, v) for i, v in enumerate(attack.a)],
            comments,
        ),
    )
    return c_path, a_path


def write_plan_csv(path: str, plan: ProtectionPlan) -> None:
    """Securing schedule: ``step,bus_added,gfdi_tv`` plus summary comments."""
    comments = [
        f"delta={fmt(plan.delta)}",
        f"final_tv={fmt(plan.final_tv)}",
        f"converged={fmt(plan.converged)}",
        f"iterations={plan.iterations}",
    ]
    rows = [
        (step + 1, bus, tv) for step, (bus, tv) in enumerate(plan.history)
    ]
    if not rows:
        rows = [(step + 1, bus, "") for step, bus in enumerate(plan.buses)]
    atomic_write_text(
        path, _render_csv(("step", "bus_added", "gfdi_tv"), rows, comments)
    )


_RESULT_HEADER = (
    "attack",
    "detector",
    "pfa",
    "pd",
    "ci_lo",
    "ci_hi",
    "trials",
    "seed",
    "alarms",
)


def write_results_csv(
    path: str, stats: Sequence[DetectionStats], config: ExperimentConfig
) -> None:
    """Single-point detection table with the full config as comments."""
    rows = [
        (s.attack, s.detector, s.pfa, s.pd, s.ci_lo, s.ci_hi, s.trials, s.seed, s.alarms)
        for s in stats
    ]
    atomic_write_text(
        path, _render_csv(_RESULT_HEADER, rows, _config_comments(config))
    )


def write_sweep_csv(
    path: str, rows: Sequence[SweepRow], config: ExperimentConfig
) -> None:
    """Sweep table: axis and value columns ahead of the detection columns."""
    header = ("axis", "value") + _RESULT_HEADER + ("tv_median", "secured_count")
    table = [
        (
            r.axis,
            r.value,
            r.attack,
            r.detector,
            r.pfa,
            r.pd,
            r.ci_lo,
            r.ci_hi,
            r.trials,
            r.seed,
            r.alarms,
            r.tv_median,
            r.secured_count,
        )
        for r in rows
    ]
    atomic_write_text(path, _render_csv(header, table, _config_comments(config)))


def write_thresholds_csv(
    path: str, thresholds: Mapping[str, DetectorThreshold]
) -> None:
    rows = [
        (t.detector_id, t.gamma, t.target_pfa, t.calibration_size, t.seed)
        for _, t in sorted(thresholds.items())
    ]
    atomic_write_text(
        path, _render_csv(("detector_id", "gamma", "pfa", "n", "seed"), rows)
    )


def write_spectrum_csv(path: str, basis: SpectralBasis) -> None:
    rows = [(i + 1, lam) for i, lam in enumerate(basis.eigenvalues)]
    atomic_write_text(path, _render_csv(("index", "lambda"), rows))


def write_signal_csv(path: str, basis: SpectralBasis, signal: np.ndarray) -> None:
    """Vertex values alongside their spectral coefficients."""
    coeffs = gft(basis, signal)
    rows = [
        (i + 1, signal[i], coeffs[i]) for i in range(basis.n_vertices)
    ]
    atomic_write_text(path, _render_csv(("bus", "value", "gft_value"), rows))


def write_trace_csv(
    path: str, statistics: np.ndarray, gamma: float
) -> None:
    """Per-trial statistic values with their alarm decisions."""
    rows = [
        (t, s, s > gamma) for t, s in enumerate(np.asarray(statistics, dtype=float))
    ]
    atomic_write_text(
        path, _render_csv(("trial", "statistic", "alarm"), rows, [f"gamma={fmt(gamma)}"])
    )


_LIST_KEYS = {"attacks", "detectors", "secured_buses"}
_INT_KEYS = {"k", "trials", "seed", "calibration_trials", "ac_max_iter", "workers"}
_FLOAT_KEYS = {
    "tau",
    "beta",
    "noise_var",
    "target_pfa",
    "mag_std",
    "r_over_x",
}
_OPT_FLOAT_KEYS = {"lambda_cut", "l1_budget"}


def write_config_file(path: str, config: ExperimentConfig) -> None:
    """Flat ``key=value`` config file, one setting per line."""
    lines = []
    for key, value in config.to_dict().items():
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        elif value is None:
            value = ""
        lines.append(f"{key}={value}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_config_file(path: str) -> dict:
    """Parse a flat ``key=value`` file into typed config overrides.

    Blank lines and ``#`` comments are ignored.  Unknown keys, duplicate
    keys, and malformed values raise :class:`ConfigError`.
    """
    known = {f.name for f in fields(ExperimentConfig)}
    out: dict = {}
    try:
        with open(path, "r") as handle:
            raw_lines = handle.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(raw_lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(
                f"{path}:{lineno}: expected key=value, got {line!r}"
            )
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate config key {key!r}")
        try:
            out[key] = _coerce(key, value)
        except ValueError as exc:
            raise ConfigError(
                f"{path}:{lineno}: bad value for {key!r}: {exc}"
            ) from exc
    return out


def _coerce(key: str, value: str):
    if key in _LIST_KEYS:
        items = [v.strip() for v in value.split(",") if v.strip()]
        if key == "secured_buses":
            return tuple(int(v) for v in items)
        return tuple(items)
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _OPT_FLOAT_KEYS:
        return None if value == "" else float(value)
    return value


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a command-line run.

    ``inputs`` and ``outputs`` map paths to SHA-256 digests; re-running the
    recorded command against inputs with matching digests must reproduce
    outputs with matching digests.
    """

    command: tuple[str, ...]
    version: str
    seed: int
    config: dict
    inputs: dict
    outputs: dict
    wall_clock_s: float

    def to_json(self) -> str:
        data = asdict(self)
        data["command"] = list(self.command)
        return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_manifest(path: str, manifest: RunManifest) -> None:
    atomic_write_text(path, manifest.to_json())


def read_manifest(path: str) -> RunManifest:
    with open(path, "r") as handle:
        data = json.load(handle)
    data["command"] = tuple(data["command"])
    return RunManifest(**data)
