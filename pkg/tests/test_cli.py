import csv
import io
import json
import subprocess
import sys

import pytest

from cliffdesign import __version__
from cliffdesign.cli import COMMANDS, EXPLAIN, dispatch, to_json


def run(capsys, *argv):
    code = dispatch(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_enumerate(capsys):
    doc = run_json(capsys, "enumerate", "--t", "4")
    assert doc["schema"] == "cliffdesign/1" and doc["version"] == __version__
    assert doc["result"]["count"] == 30 and doc["result"]["permutations"] == 24
    assert doc["config"]["t"] == 4


def test_converge_t3_is_zero(capsys):
    doc = run_json(capsys, "converge", "--t", "3", "--n", "4", "--gate", "T", "--k-max", "5")
    assert [r["norm"] for r in doc["result"]["rows"]] == [0.0] * 5


def test_converge_csv(capsys):
    code, out, _ = run(capsys, "converge", "--t", "4", "--n", "5", "--k-max", "4", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(r["k"]) for r in rows] == [1, 2, 3, 4]
    norms = [float(r["norm"]) for r in rows]
    assert norms == sorted(norms, reverse=True)


@pytest.mark.parametrize("argv, code", [
    (["enumerate", "--t", "4", "--bogus"], 2),
    (["enumerate"], 2),
    (["nosuchcommand"], 2),
    (["enumerate", "--t", "7"], 3),
    (["enumerate", "--t", "0"], 2),
    (["converge", "--t", "4", "--n", "2", "--k-max", "3"], 4),
    (["bound", "--t", "4", "--n", "10", "--k", "3"], 2),
    (["eta", "--t", "4", "--gate", "nonsense"], 2),
    (["enumerate", "--t", "3", "--format", "tableau-json"], 2),
])
def test_exit_codes(capsys, argv, code):
    got, _, err = run(capsys, *argv)
    assert got == code
    assert err


def test_explain_every_subcommand(capsys):
    assert set(EXPLAIN) == set(COMMANDS)
    for name in COMMANDS:
        code, out, _ = run(capsys, name, "--explain")
        assert code == 0 and out.strip() == EXPLAIN[name]


def test_hamming_anti_identity(capsys):
    doc = run_json(capsys, "hamming", "--t", "6", "--anti-id")
    assert doc["result"]["anti_identity"]["probability_exact"] == "13/16"
    doc = run_json(capsys, "hamming", "--t", "4")
    assert doc["result"]["defect_pair"]["probability_exact"] == "7/8"
    assert doc["result"]["defect_shift"]["probability_exact"] == "3/4"


def test_haar_overlap_t6(capsys):
    doc = run_json(capsys, "haar-overlap", "--t", "6")
    assert doc["result"]["max_nonpermutation"] == pytest.approx(4 / 7, abs=1e-10)


def test_gram_rowsums(capsys):
    doc = run_json(capsys, "gram", "--t", "4", "--n", "6", "--check-rowsums")
    assert doc["result"]["rowsum_max_rel_error"] < 1e-12
    assert doc["result"]["rank"] == 30


def test_eta_and_bound(capsys):
    doc = run_json(capsys, "eta", "--t", "4", "--gate", "T")
    assert doc["result"]["eta"] == pytest.approx(5 / 6)
    doc = run_json(capsys, "bound", "--t", "4", "--n", "600", "--k", "100000", "--eta-bar", "0.25",
                   "--eps", "0.001")
    assert doc["result"]["log2_bound"] < 0
    assert doc["result"]["haar_interleaved_depth"] == 308434


def test_gap(capsys):
    doc = run_json(capsys, "gap", "--t", "2", "--n", "2")
    assert doc["result"]["ground_dim"] == 2
    assert doc["result"]["lambda2"] == pytest.approx(doc["result"]["one_minus_gap_over_n"], abs=1e-10)


def test_frame_potential_deterministic(capsys, tmp_path):
    argv = ["frame-potential", "--t", "3", "--n", "2", "--family", "interleaved", "--k", "2",
            "--samples", "256", "--block", "16", "--seed", "5"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert dispatch(argv + ["--output", str(a)]) == 0
    assert dispatch(argv + ["--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.json"
    assert dispatch(argv + ["--output", str(c), "--threads", "3"]) == 0
    assert json.loads(c.read_text())["result"] == json.loads(a.read_text())["result"]
    assert json.loads(a.read_text())["result"]["estimate"] == pytest.approx(6, rel=0.2)


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("CDL_SEED", "17")
    doc = run_json(capsys, "sample-clifford", "--n", "2")
    assert doc["config"]["seed"] == 17
    monkeypatch.setenv("CDL_SEED", "x")
    assert run(capsys, "sample-clifford", "--n", "2")[0] == 2


def test_sample_clifford_tableau_json(capsys):
    doc = run_json(capsys, "sample-clifford", "--n", "3", "--count", "4", "--format", "tableau-json",
                   "--seed", "2")
    tabs = doc["result"]["tableaux"]
    assert len(tabs) == 4
    assert all(len(t["x"]) == 6 and len(t["x"][0]) == 3 for t in tabs)
    again = run_json(capsys, "sample-clifford", "--n", "3", "--count", "4", "--seed", "2")
    assert again["result"] == doc["result"]


def test_json_float_format():
    assert to_json({"a": 0.1, "b": float("nan"), "c": [1, True]}) == \
        '{"a": 0.10000000000000001, "b": "nan", "c": [1, true]}'


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "cliffdesign.cli", "--version"],
                         capture_output=True, text=True, check=True)
    assert __version__ in out.stdout
