import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from artifact import cli

FIX = Path(__file__).parent / "fixtures"


def run(sub, fixture, out, *extra):
    return cli.run([sub, "--config", str(FIX / fixture), "--out-dir", str(out), *extra])


def load(path):
    return json.loads(Path(path).read_text())


def table(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_evolve_valid(tmp_path):
    assert run("evolve", "evolve_valid.json", tmp_path) == cli.EXIT_OK
    s = load(tmp_path / "summary.json")
    assert all(c["pass"] for c in s["checks"]) and s["checks"]
    assert (tmp_path / "trajectory.csv").read_text().splitlines()[0] == cli.FERMI_CSV_HEADER
    snaps = sorted((tmp_path / "snapshots").glob("snapshot_*.json"))
    assert len(snaps) == 5
    assert not (tmp_path / "error.json").exists()


def test_evolve_malformed(tmp_path):
    assert run("evolve", "evolve_malformed.json", tmp_path) == cli.EXIT_INVALID
    e = load(tmp_path / "error.json")
    assert e["exit_code"] == 2 and e["field"] == "grid.n_per_dim"


def test_evolve_tolerance_violation(tmp_path):
    assert run("evolve", "evolve_tolerance_violation.json", tmp_path) == cli.EXIT_CHECK
    e = load(tmp_path / "error.json")
    assert e["exit_code"] == 4 and e["residual"] > e["tolerance"]
    assert e["check"] in e["failed"]
    assert (tmp_path / "summary.json").exists()


def test_free_slater_energy_constant(tmp_path):
    assert run("evolve", "free_slater.json", tmp_path) == cli.EXIT_OK
    rows = table(tmp_path / "trajectory.csv")
    E = np.array([float(r["energy"]) for r in rows])
    N = np.array([float(r["tr_gamma"]) for r in rows])
    assert np.abs(E - E[0]).max() < 1e-12
    assert np.abs(N - 3).max() < 1e-12


def test_verify(tmp_path):
    assert run("verify", "verify_n4.json", tmp_path) == cli.EXIT_OK
    s = load(tmp_path / "summary.json")
    names = {c["name"] for c in s["checks"]}
    assert {"car", "wick", "reduction_mb_vs_proj", "reduction_mb_vs_bdg",
            "reduction_proj_vs_bdg", "projection_idempotence", "projection_range",
            "projection_orthogonality"} == names
    assert all(c["residual"] < 1e-9 for c in s["checks"])


def test_bose(tmp_path):
    assert run("bose-evolve", "bose.json", tmp_path) == cli.EXIT_OK
    assert (tmp_path / "trajectory.csv").read_text().splitlines()[0] == cli.BOSE_CSV_HEADER
    rows = table(tmp_path / "trajectory.csv")
    assert all(r["energy_placeholder"] == "" for r in rows)
    s = load(tmp_path / "summary.json")
    assert all(c["pass"] for c in s["checks"])


def test_picard_short_and_long(tmp_path):
    assert run("picard", "picard.json", tmp_path / "a") == cli.EXIT_OK
    assert run("picard", "picard_long.json", tmp_path / "b") == cli.EXIT_NUMERICAL
    e = load(tmp_path / "b" / "error.json")
    assert e["error"] == "NoContraction" and e["check"] == "picard_contraction"
    d = e["differences"]
    assert len(d) >= 2 and d[-1] > d[-2]


def test_cutoff_sweep(tmp_path):
    assert run("cutoff-sweep", "cutoff_sweep.json", tmp_path) == cli.EXIT_OK
    rows = table(tmp_path / "cutoff_table.csv")
    err = [float(r["error"]) for r in rows]
    assert all(b <= a for a, b in zip(err, err[1:]))
    assert err[-1] < 1e-8


def test_norms_zero_state(tmp_path):
    assert run("norms", "norms_zero.json", tmp_path) == cli.EXIT_OK
    s = load(tmp_path / "summary.json")
    assert all(v == 0 for v in s["norms"].values()) and s["alpha_h1"] == 0
    assert s["c_v"] > 0


def test_byte_identical_reruns(tmp_path):
    for d in ("a", "b"):
        assert run("evolve", "evolve_valid.json", tmp_path / d) == cli.EXIT_OK
    for f in sorted((tmp_path / "a").rglob("*")):
        if f.is_file():
            assert f.read_bytes() == (tmp_path / "b" / f.relative_to(tmp_path / "a")).read_bytes()


def test_seed_override(tmp_path):
    run("norms", "evolve_valid.json", tmp_path / "a")
    run("norms", "evolve_valid.json", tmp_path / "b", "--seed", "7")
    run("norms", "evolve_valid.json", tmp_path / "c", "--seed", "8")
    a, b, c = (load(tmp_path / d / "summary.json") for d in "abc")
    assert a["norms"] == b["norms"] and a["norms"] != c["norms"]
    assert c["seed"] == 8


def test_bad_arguments(tmp_path):
    assert run("nonsense", "evolve_valid.json", tmp_path) == cli.EXIT_INVALID
    assert load(tmp_path / "error.json")["field"] == "subcommand"
    assert cli.run(["evolve"]) == cli.EXIT_INVALID
    assert run("norms", "evolve_valid.json", tmp_path, "--seed", "-1") == cli.EXIT_INVALID


def test_config_errors(tmp_path):
    cfg = load(FIX / "evolve_valid.json")
    cfg["potential"]["profile"] = "cubic"
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(cfg))
    assert cli.run(["evolve", "--config", str(p), "--out-dir", str(tmp_path / "o")]) == cli.EXIT_INVALID
    assert cli.run(["evolve", "--config", str(tmp_path / "missing.json"),
                    "--out-dir", str(tmp_path / "m")]) == cli.EXIT_INVALID


def test_default_output_directory(tmp_path):
    cfg = load(FIX / "norms_zero.json")
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert cli.run(["norms", "--config", str(p)]) == cli.EXIT_OK
    assert (tmp_path / "out" / "summary.json").exists()


def test_dumps_round_trip():
    x = [0.1, 1 / 3, np.pi * 1e-300, float("nan"), None, 2]
    back = json.loads(cli.dumps(x))
    assert back[:3] == x[:3] and back[3] is None and back[5] == 2


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "artifact", "norms", "--config",
                        str(FIX / "norms_zero.json"), "--out-dir", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0
