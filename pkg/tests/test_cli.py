import csv
import io
import json
import math
import subprocess
import sys

import pytest

from lpconv import __version__
from lpconv.alpha_solver import delta_lemma2, replay_chain, ConvexityBudget
from lpconv.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def doc_of(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    return json.loads(out)


def test_envelope_fields(capsys):
    doc = doc_of(capsys, "alpha", "--p", "2", "--eps", "0.5", "--safety", "1", "--seed", "4")
    assert set(doc) == {"command", "parameters", "results", "version", "seed"}
    assert doc["version"] == __version__ and doc["seed"] == 4
    assert abs(doc["results"]["alpha"] - 1.0) <= 1e-9


def test_alpha_p4_baseline(capsys):
    doc = doc_of(capsys, "alpha", "--p", "4", "--eps", "0.5")
    assert doc["results"]["alpha"] == pytest.approx(3.15, rel=1e-6)


def test_alpha_csv(capsys):
    code, out, _ = run(capsys, "alpha", "--p", "3", "--eps", "0.5", "--format", "csv", "--grid", "64x32")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1 and float(rows[0]["alpha"]) > 1
    assert rows[0]["grid_resolution"] == "64x32"


@pytest.mark.parametrize(
    "argv",
    [
        ["alpha", "--p", "0.5", "--eps", "0.1"],
        ["alpha", "--p", "2", "--eps", "-1"],
        ["alpha", "--p", "2"],
        ["delta", "--statement", "lemma9", "--p", "2", "--eps", "0.1"],
        ["delta", "--statement", "lemma1", "--p", "2", "--eps", "2.0"],
        ["verify", "--statement", "theorem", "--p", "2"],
        ["verify", "--statement", "theorem", "--p", "2", "--eps", "0.5", "--restarts", "0"],
        ["table", "--p-list", "2,x", "--eps-list", "0.1"],
        ["modulus", "--eps", "3"],
        ["nonsense"],
        ["alpha", "--p", "2", "--eps", "0.5", "--grid", "12"],
    ],
)
def test_invalid_input_exits_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == ""
    assert err


def test_delta_lemma1_p2(capsys):
    doc = doc_of(capsys, "delta", "--statement", "lemma1", "--p", "2", "--eps", "0.1", "--safety", "1")
    assert doc["results"]["delta"] == pytest.approx(0.0025, rel=1e-9)
    names = [k for k, _ in doc["results"]["chain"]]
    assert names == ["p", "epsilon", "epsilon_prime", "alpha", "delta"]


def test_delta_theorem_is_lemma2_chain(capsys):
    doc = doc_of(capsys, "delta", "--statement", "theorem", "--p", "2", "--eps", "0.2")
    assert doc["results"]["delta"] == delta_lemma2(0.1, 2.0).delta


def test_delta_chain_replays(capsys):
    doc = doc_of(capsys, "delta", "--statement", "lemma2", "--p", "3", "--eps", "0.5")
    b = ConvexityBudget.from_dict(doc["results"])
    assert replay_chain(b) == doc["results"]["delta"]


def test_delta_csv(capsys):
    code, out, _ = run(capsys, "delta", "--statement", "Theorem", "--p", "1.5", "--eps", "0.5", "--format", "csv")
    assert code == 0
    assert out.splitlines()[0] == "statement,p,epsilon,delta"


def test_table_rows_and_determinism(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        code, out, _ = run(
            capsys, "table", "--p-list", "2", "--eps-list", "0.1,0.2", "--safety", "1", "--out", str(path)
        )
        assert code == 0 and out == ""
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.DictReader(io.StringIO(a.read_text())))
    assert [float(r["delta"]) for r in rows] == pytest.approx([0.0025, 0.01], rel=1e-9)


def test_table_columns_monotone(capsys):
    code, out, _ = run(capsys, "table", "--statement", "lemma2", "--p-list", "1.5,3",
                       "--eps-list", "0.1,0.3,0.7,1.2,1.9", "--grid", "256x128")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    for p in ("1.5", "3.0"):
        col = [float(r["delta"]) for r in rows if r["p"] == p]
        assert len(col) == 5
        assert all(y >= x for x, y in zip(col, col[1:]))


def test_verify_theorem_passes(capsys):
    code, out, _ = run(capsys, "verify", "--statement", "theorem", "--p", "2", "--eps", "0.5",
                       "--atoms", "4", "--restarts", "1000", "--seed", "7")
    assert code == 0
    res = json.loads(out)["results"]
    assert res["status"] == "pass" and res["passed"] and res["margin"] > 0
    assert res["seed"] == 7


def test_verify_is_byte_identical(capsys, tmp_path, monkeypatch):
    outs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("LPCONV_THREADS", threads)
        path = tmp_path / f"r{threads}.json"
        code, _, _ = run(capsys, "verify", "--statement", "lemma2", "--p", "1.5", "--eps", "0.5",
                         "--atoms", "3", "--restarts", "1200", "--max-evals", "80",
                         "--seed", "2", "--out", str(path))
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_verify_replay(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, _, _ = run(capsys, "verify", "--statement", "lemma1", "--p", "3", "--eps", "0.5",
                     "--atoms", "2", "--restarts", "50", "--out", str(path))
    assert code == 0
    saved = json.loads(path.read_text())["results"]
    code, out, _ = run(capsys, "verify", "--replay", str(path))
    assert code == 0
    again = json.loads(out)["results"]
    assert again["measured_quantity"] == saved["measured_quantity"]
    assert again["budget"] == saved["budget"]


def test_verify_replay_counterexample(capsys, tmp_path):
    # the pair (1, 0), (0, 1) with a huge saved delta is a genuine counterexample
    wit = {
        "statement": "Theorem",
        "functions": {
            "x": {"weights": [1, 1], "values": [[1, 0], [0, 0]]},
            "y": {"weights": [1, 1], "values": [[0.6, 0], [0.8, 0]]},
        },
    }
    b = delta_lemma2(0.25, 2.0)
    budget = {"statement": "Theorem", "epsilon": 0.5, "delta": 0.9, "p": 2.0,
              "chain": [["delta", 0.9]]}
    path = tmp_path / "w.json"
    path.write_text(json.dumps({"budget": budget, "witness": wit}))
    code, out, _ = run(capsys, "verify", "--replay", str(path))
    assert code == 1
    res = json.loads(out)["results"]
    assert res["status"] == "fail"
    assert res["measured_quantity"] == pytest.approx(math.sqrt(0.8), abs=1e-12)
    assert b.delta < 0.9


def test_verify_replay_not_applicable(capsys, tmp_path):
    wit = {
        "statement": "Theorem",
        "functions": {
            "x": {"weights": [1, 1], "values": [[1, 0], [0, 0]]},
            "y": {"weights": [1, 1], "values": [[0, 0], [1, 0]]},
        },
    }
    path = tmp_path / "w.json"
    path.write_text(json.dumps(wit))
    code, out, err = run(capsys, "verify", "--replay", str(path), "--p", "2", "--eps", "0.5")
    assert code == 2
    assert json.loads(out)["results"]["status"] == "not-applicable"
    assert "not applicable" in err


def test_slice_diameter_cli(capsys):
    doc = doc_of(capsys, "slice-diameter", "--p", "2", "--atoms", "2", "--delta", "0.5")
    assert doc["results"]["value"] == pytest.approx(math.sqrt(3), abs=1e-6)
    assert doc["results"]["side"] == "lower"
    doc = doc_of(capsys, "slice-diameter", "--delta", "0")
    assert doc["results"]["value"] == 0 and "empty slice" in doc["results"]["note"]


def test_slice_diameter_functional_file(capsys, tmp_path):
    path = tmp_path / "phi.json"
    path.write_text(json.dumps({"weights": [1, 1], "values": [[0, 1], [0, 0]]}))
    doc = doc_of(capsys, "slice-diameter", "--delta", "0.5", "--functional", str(path),
                 "--restarts", "50")
    assert doc["results"]["value"] == pytest.approx(math.sqrt(3), abs=1e-6)


def test_modulus_cli(capsys):
    doc = doc_of(capsys, "modulus", "--p", "2", "--atoms", "3", "--eps", "1.0")
    assert doc["results"]["value"] == pytest.approx(1 - math.sqrt(0.75), abs=1e-6)
    assert doc["results"]["side"] == "upper"


def test_reruns_are_byte_identical(capsys):
    argv = ("modulus", "--p", "1.5", "--eps", "0.7", "--restarts", "40", "--seed", "3")
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "lpconv", "delta", "--statement", "lemma1", "--p", "2",
         "--eps", "0.1", "--safety", "1", "--format", "csv"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1].startswith("Lemma1,2.0,0.1,")
