"""End-to-end command-line behavior: exit codes, outputs, reproducibility."""

import csv
import json
import os

import pytest

import gridshield.cli as cli
from gridshield.cli import main
from gridshield.errors import SolverError
from gridshield.reports import read_manifest


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def basename_digests(manifest_outputs):
    return {os.path.basename(path): digest for path, digest in manifest_outputs.items()}


SPECTRUM_FILES = (
    "config.txt",
    "manifest.json",
    "signal_attack.csv",
    "signal_contaminated.csv",
    "signal_state.csv",
    "spectrum.csv",
)


def test_spectrum_default_attack(capsys, tmp_path):
    code, out, _ = run(
        capsys, "spectrum", "--case", "ieee57", "--out-dir", str(tmp_path)
    )
    assert code == 0
    assert "case ieee57: 57 buses" in out
    assert "lambda_N=168.42395" in out
    assert "cutoff 15.998817" in out
    assert "state TV 3.379725" in out
    assert "gfdi attack TV 0.06532955" in out
    assert "low-band energy fraction 0.9968" in out
    assert sorted(p.name for p in tmp_path.iterdir()) == sorted(SPECTRUM_FILES)


def test_spectrum_rand_is_high_frequency(capsys, tmp_path):
    code, out, _ = run(
        capsys,
        "spectrum",
        "--case",
        "ieee57",
        "--kind",
        "rand",
        "--out-dir",
        str(tmp_path),
    )
    assert code == 0
    assert "rand attack TV 3.9502" in out
    assert "low-band energy fraction 0.2515" in out


def test_attack_outputs(capsys, tmp_path):
    code, out, _ = run(
        capsys,
        "attack",
        "--case",
        "path3",
        "--k",
        "2",
        "--tau",
        "1.0",
        "--out-dir",
        str(tmp_path),
    )
    assert code == 0
    assert "kind gfdi" in out
    assert "target bus 1" in out
    assert "support 1,2" in out
    assert "tv 0.5199999" in out
    assert "unobservability residual 0.0" in out
    for name in ("attack_c.csv", "attack_a.csv", "meters.csv", "manifest.json"):
        assert (tmp_path / name).exists()


def test_attack_fully_secured_exits_3(capsys, tmp_path):
    code, _, err = run(
        capsys,
        "attack",
        "--case",
        "path3",
        "--k",
        "2",
        "--tau",
        "1.0",
        "--secure",
        "1,2,3",
        "--out-dir",
        str(tmp_path),
    )
    assert code == 3
    assert "no feasible gfdi attack" in err


def test_protect_greedy_reaches_target(capsys, tmp_path):
    code, out, _ = run(
        capsys,
        "protect",
        "--case",
        "path3",
        "--k",
        "2",
        "--tau",
        "1.0",
        "--method",
        "greedy",
        "--delta",
        "1.5",
        "--out-dir",
        str(tmp_path),
    )
    assert code == 0
    assert "secure 1\nsecure 2\n" in out
    assert "final gfdi tv inf" in out
    assert "target reached" in out
    assert (tmp_path / "secure.txt").read_text() == "secure 1\nsecure 2\n"
    with open(tmp_path / "plan.csv", newline="") as handle:
        rows = [r for r in csv.reader(handle) if not r[0].startswith("#")]
    assert rows[0] == ["step", "bus_added", "gfdi_tv"]
    assert len(rows) == 3


def test_protect_size_cap_blocks_target(capsys, tmp_path):
    code, out, _ = run(
        capsys,
        "protect",
        "--case",
        "path3",
        "--k",
        "2",
        "--tau",
        "1.0",
        "--method",
        "greedy",
        "--delta",
        "1.5",
        "--max-secured",
        "1",
        "--out-dir",
        str(tmp_path),
    )
    assert code == 3
    assert "target NOT reached" in out


def test_protect_requires_method_parameters(capsys, tmp_path):
    code, _, err = run(
        capsys,
        "protect",
        "--case",
        "path3",
        "--k",
        "2",
        "--method",
        "greedy",
        "--out-dir",
        str(tmp_path),
    )
    assert code == 2
    assert "--delta is required" in err
    code, _, err = run(
        capsys,
        "protect",
        "--case",
        "path3",
        "--k",
        "2",
        "--method",
        "random",
        "--out-dir",
        str(tmp_path),
    )
    assert code == 2
    assert "--size is required" in err


def test_secure_file_round_trip(capsys, tmp_path):
    plan_dir = tmp_path / "plan"
    code, _, _ = run(
        capsys,
        "protect",
        "--case",
        "path3",
        "--k",
        "2",
        "--tau",
        "1.0",
        "--method",
        "greedy",
        "--delta",
        "1.5",
        "--out-dir",
        str(plan_dir),
    )
    assert code == 0
    # the planned set blocks a fresh synthesis attempt
    code, _, err = run(
        capsys,
        "attack",
        "--case",
        "path3",
        "--k",
        "2",
        "--tau",
        "1.0",
        "--secure-file",
        str(plan_dir / "secure.txt"),
        "--out-dir",
        str(tmp_path / "atk"),
    )
    assert code == 3
    assert "no feasible" in err


def test_calibrate_writes_thresholds(capsys, tmp_path):
    code, out, _ = run(
        capsys,
        "calibrate",
        "--case",
        "test6",
        "--k",
        "2",
        "--calibration-trials",
        "200",
        "--seed",
        "3",
        "--out-dir",
        str(tmp_path),
    )
    assert code == 0
    for detector in ("bdd", "gtv", "ideal"):
        assert f"{detector}: gamma=" in out
    assert (tmp_path / "thresholds.csv").exists()


def test_roc_and_trials_validation(capsys, tmp_path):
    code, _, err = run(
        capsys,
        "roc",
        "--case",
        "test6",
        "--k",
        "2",
        "--trials",
        "0",
        "--out-dir",
        str(tmp_path),
    )
    assert code == 2
    assert "configuration error" in err
    code, out, _ = run(
        capsys,
        "roc",
        "--case",
        "test6",
        "--k",
        "2",
        "--tau",
        "0.5",
        "--trials",
        "30",
        "--calibration-trials",
        "200",
        "--seed",
        "3",
        "--attacks",
        "gfdi",
        "--pfa-grid",
        "0.05,0.2",
        "--out-dir",
        str(tmp_path),
    )
    assert code == 0
    assert "wrote" in out
    assert (tmp_path / "roc.csv").exists()
    assert (tmp_path / "thresholds.csv").exists()


def test_sweep_runs(capsys, tmp_path):
    code, out, _ = run(
        capsys,
        "sweep",
        "--axis",
        "tau",
        "--values",
        "0.4,0.8",
        "--case",
        "test6",
        "--k",
        "2",
        "--trials",
        "20",
        "--calibration-trials",
        "200",
        "--seed",
        "3",
        "--attacks",
        "gfdi",
        "--out-dir",
        str(tmp_path),
    )
    assert code == 0
    assert "wrote" in out
    with open(tmp_path / "sweep.csv", newline="") as handle:
        rows = [r for r in csv.reader(handle) if not r[0].startswith("#")]
    assert rows[0][:2] == ["axis", "value"]
    assert {r[1] for r in rows[1:]} == {"0.4", "0.8"}


def test_sweep_rejects_empty_values(capsys, tmp_path):
    code, _, err = run(
        capsys,
        "sweep",
        "--axis",
        "tau",
        "--values",
        ",",
        "--case",
        "test6",
        "--k",
        "2",
        "--out-dir",
        str(tmp_path),
    )
    assert code == 2
    assert "list is empty" in err


def test_manifest_digests_reproduce(capsys, tmp_path):
    args = ("attack", "--case", "path3", "--k", "2", "--tau", "1.0", "--seed", "9")
    dirs = (tmp_path / "one", tmp_path / "two")
    for out_dir in dirs:
        code, _, _ = run(capsys, *args, "--out-dir", str(out_dir))
        assert code == 0
    first = read_manifest(str(dirs[0] / "manifest.json"))
    second = read_manifest(str(dirs[1] / "manifest.json"))
    assert basename_digests(first.outputs) == basename_digests(second.outputs)
    assert first.inputs == second.inputs
    assert first.config == second.config
    assert first.seed == 9


def test_manifest_records_case_digest(capsys, tmp_path):
    code, _, _ = run(
        capsys,
        "attack",
        "--case",
        "path3",
        "--k",
        "2",
        "--out-dir",
        str(tmp_path),
    )
    assert code == 0
    with open(tmp_path / "manifest.json") as handle:
        raw = json.load(handle)
    assert raw["command"][0] == "gridshield"
    assert any("path3" in key for key in raw["inputs"])
    digests = basename_digests(raw["outputs"])
    assert {"attack_c.csv", "attack_a.csv", "meters.csv", "config.txt"} <= set(digests)


def test_flag_beats_config_file_beats_default(capsys, tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("case=path3\nk=2\ntau=0.9\n")

    def resolved_tau(out_dir, *extra):
        code, _, _ = run(
            capsys, "attack", *extra, "--out-dir", str(out_dir)
        )
        assert code == 0
        text = (out_dir / "config.txt").read_text()
        return dict(
            line.split("=", 1) for line in text.splitlines() if "=" in line
        )["tau"]

    assert resolved_tau(tmp_path / "a", "--config", str(cfg), "--tau", "0.3") == "0.3"
    assert resolved_tau(tmp_path / "b", "--config", str(cfg)) == "0.9"
    assert resolved_tau(tmp_path / "c", "--case", "path3", "--k", "2") == "0.2"


def test_missing_case_exits_5(capsys, tmp_path):
    code, _, err = run(
        capsys,
        "attack",
        "--case",
        str(tmp_path / "nope.grid"),
        "--out-dir",
        str(tmp_path),
    )
    assert code == 5
    assert "i/o failure" in err


def test_malformed_case_exits_5(capsys, tmp_path):
    bad = tmp_path / "bad.grid"
    bad.write_text("case broken\nbus 1\nbranch 1 9 1.0\nend\n")
    code, _, err = run(
        capsys, "attack", "--case", str(bad), "--out-dir", str(tmp_path / "o")
    )
    assert code == 5
    assert "bad case file" in err


def test_numerical_failure_exits_4(capsys, tmp_path, monkeypatch):
    def explode(config):
        raise SolverError("synthetic failure")

    monkeypatch.setattr(cli, "build_context", explode)
    code, _, err = run(
        capsys,
        "attack",
        "--case",
        "path3",
        "--k",
        "2",
        "--out-dir",
        str(tmp_path),
    )
    assert code == 4
    assert "numerical failure: synthetic failure" in err


def test_bad_secure_list_exits_2(capsys, tmp_path):
    code, _, err = run(
        capsys,
        "attack",
        "--case",
        "path3",
        "--k",
        "2",
        "--secure",
        "1,x",
        "--out-dir",
        str(tmp_path),
    )
    assert code == 2
    assert "bad bus list" in err


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "gridshield" in capsys.readouterr().out
