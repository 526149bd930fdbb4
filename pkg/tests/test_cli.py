import csv
import io
import json

import numpy as np
import pytest

from cohrelkit import cohrel as cr
from cohrelkit import linalg as la
from cohrelkit import process as proc
from cohrelkit.cli import main

GAMMA = np.diag([1.0, 0.5]).astype(complex)


@pytest.fixture
def files(tmp_path):
    """A Gamma operator, its Gibbs state, and a generic process on disk."""
    paths = {k: str(tmp_path / f"{k}.json") for k in ("gamma", "gibbs", "process", "gamma_in", "gamma_out", "channel")}
    la.save_matrix(paths["gamma"], GAMMA)
    la.save_matrix(paths["gibbs"], GAMMA / 1.5)
    pm, gi, go = cr._random_instance(proc.rng_from_seed(5), 2, 2)
    proc.save_process(paths["process"], pm)
    la.save_matrix(paths["gamma_in"], gi)
    la.save_matrix(paths["gamma_out"], go)
    proc.save_channel(paths["channel"], proc.identity_channel(2))
    paths["objects"] = (pm, gi, go)
    return paths


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_compute_d_max_of_gibbs_state(files, capsys):
    assert main(["compute", "d_max", "--rho", files["gibbs"], "--gamma", files["gamma"]]) == 0
    out = _json(capsys)
    assert out["value_bits"] == pytest.approx(-np.log2(1.5), abs=1e-10)


def test_compute_cohrel_matches_library(files, capsys):
    argv = ["compute", "cohrel", "--process", files["process"], "--gamma-in", files["gamma_in"],
            "--gamma-out", files["gamma_out"], "--eps", "0.1"]
    assert main(argv) == 0
    out = _json(capsys)
    pm, gi, go = files["objects"]
    lib = cr.cohrel_smooth_z(pm, gi, go, 0.1)
    assert out["value_bits"] == pytest.approx(lib.value_bits, abs=1e-9)
    assert out["status"] == "optimal"


def test_compute_cohrel_work_units(files, capsys):
    argv = ["compute", "cohrel", "--process", files["process"], "--gamma-in", files["gamma_in"],
            "--gamma-out", files["gamma_out"], "--work-temperature", "300"]
    assert main(argv) == 0
    out = _json(capsys)
    assert out["work_joules"] == pytest.approx(cr.work_from_bits(out["value_bits"], 300.0), rel=1e-9)


def test_compute_output_is_deterministic(files, tmp_path):
    argv = ["compute", "bounds", "--process", files["process"], "--gamma-in", files["gamma_in"],
            "--gamma-out", files["gamma_out"]]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_compute_gamma_factor(files, capsys):
    argv = ["compute", "gamma_factor", "--channel", files["channel"], "--gamma-in", files["gamma"],
            "--gamma-out", files["gamma"]]
    assert main(argv) == 0
    assert _json(capsys)["value"] == pytest.approx(1.0)


def test_malformed_json_is_usage_error(tmp_path, files):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["compute", "d_max", "--rho", str(bad), "--gamma", files["gamma"]]) == 2


def test_missing_flag_is_usage_error(files):
    assert main(["compute", "d_max", "--rho", files["gibbs"]]) == 2


def test_unknown_measure_is_usage_error():
    assert main(["compute", "nonsense"]) == 2


def test_support_leak_is_precondition_error(tmp_path, files):
    leak = tmp_path / "g.json"
    la.save_matrix(str(leak), np.diag([1.0, 0.0]).astype(complex))
    assert main(["compute", "d_max", "--rho", files["gibbs"], "--gamma", str(leak)]) == 3


def test_eps_out_of_range_is_precondition_error(files):
    argv = ["compute", "cohrel", "--process", files["process"], "--gamma-in", files["gamma_in"],
            "--gamma-out", files["gamma_out"], "--eps", "1.5"]
    assert main(argv) == 3


def test_verify_zero_trials_and_unknown_suite(capsys):
    assert main(["verify", "linalg", "--trials", "0"]) == 0
    assert main(["verify", "nonsense"]) == 2


def test_verify_runs_and_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert main(["verify", "linalg", "--trials", "2", "--seed", "3", "--out", str(a)]) == 0
    assert main(["verify", "linalg", "--trials", "2", "--seed", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().strip().splitlines()[-1].startswith("OK")


@pytest.mark.parametrize("scenario", ["szilard", "observer"])
def test_demos(scenario, capsys):
    assert main(["demo", scenario]) == 0
    out = _json(capsys)
    assert out["ok"]
    if scenario == "szilard":
        assert out["expansion_known_position_bits"] == pytest.approx(1.0, abs=1e-6)
        assert out["erasure_bits"] == pytest.approx(-1.0, abs=1e-6)


def test_aep_identity_is_flat_zero(capsys):
    assert main(["aep", "--instance", "identity", "--eps", "0", "--n-max", "2"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [int(r["n"]) for r in rows] == [1, 2]
    for r in rows:
        assert abs(float(r["value_per_n"])) <= 1e-5
        assert r["runtime_ms"] == ""


def test_aep_guard_is_precondition_error():
    assert main(["aep", "--instance", "gibbs", "--n-max", "5"]) == 3
