import csv
import json

import numpy as np
import pytest

from randsys import rank_one_identity, zero_diag_hermitian
from interlace import io
from interlace.cli import main

SWAP = {"dim": 2, "entries": [[0, 1], [1, 0]]}
DIAG12 = {"matrices": [{"dim": 2, "entries": [[1, 0], [0, 2]]}]}
E1E2 = {"matrices": [{"dim": 2, "entries": [[1, 0], [0, 0]]},
                     {"dim": 2, "entries": [[0, 0], [0, 1]]}]}


def cli(tmp_path, *args, name="out.json"):
    out = tmp_path / name
    code = main([*args, "--output", str(out)])
    return code, json.loads(out.read_text())


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def test_mixed_char_diag(tmp_path):
    code, rep = cli(tmp_path, "mixed-char", "--input", write(tmp_path, "s.json", DIAG12))
    assert code == 0 and rep["exit_code"] == 0
    assert np.allclose(rep["result"]["coefficients"], [0, -3, 1], atol=1e-10)
    assert rep["result"]["bound"] is None


def test_mixed_char_csv(tmp_path):
    path = tmp_path / "roots.csv"
    code, rep = cli(tmp_path, "mixed-char", "--input", json.dumps(E1E2), "--csv", str(path))
    assert code == 0
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["index", "root", "bound"]
    assert [r[0] for r in rows[1:]] == ["1", "2"]
    assert all(float(r[1]) == pytest.approx(1, abs=1e-6) and float(r[2]) == pytest.approx(4)
               for r in rows[1:])


def test_mixed_char_csv_shapes(tmp_path):
    empty = tmp_path / "empty.csv"
    io.write_roots_csv([], None, empty)
    assert empty.read_text() == "index,root,bound\n"
    rng = np.random.default_rng(0)
    payload = io.system_to_json(rank_one_identity(rng, 3, 4))
    path = tmp_path / "three.csv"
    code, _ = cli(tmp_path, "mixed-char", "--input", json.dumps(payload), "--csv", str(path))
    rows = list(csv.reader(path.open()))
    assert code == 0 and len(rows) == 4
    roots = [float(r[1]) for r in rows[1:]]
    assert roots == sorted(roots, reverse=True)


def test_pave_swap(tmp_path):
    code, rep = cli(tmp_path, "pave", "--input", json.dumps(SWAP), "--epsilon", "0.99")
    res = rep["result"]
    assert code == 0
    assert res["kind"] == "selfadjoint" and res["r"] == 12 and res["total_blocks"] == 144
    assert sorted(res["blocks"]) == [[1], [2]]
    assert res["max_ratio"] == 0.0 and res["status"] == "certified"


def test_pave_projection_and_general(tmp_path):
    P = {"dim": 2, "entries": [[0.5, 0.5], [0.5, 0.5]]}
    code, rep = cli(tmp_path, "pave", "--input", json.dumps(P), "--r", "2")
    assert code == 0 and rep["result"]["kind"] == "projection"
    assert rep["result"]["blocks"] == [[1], [2]]
    T = {"dim": 2, "entries": [[0, [1, 1]], [0, 0]]}
    code, rep = cli(tmp_path, "pave", "--input", json.dumps(T), "--epsilon", "0.99")
    assert code == 0 and rep["result"]["kind"] == "general"


def test_pave_uncertified_exits_one(tmp_path):
    D = {"dim": 2, "entries": [[1, 0], [0, 0.5]]}
    code, rep = cli(tmp_path, "pave", "--input", json.dumps(D), "--epsilon", "0.99")
    assert code == 1 and rep["result"]["status"] == "bound_not_certified"


def test_partition_search(tmp_path):
    half = lambda i: {"dim": 2, "entries": [[0.5 * (i == 0), 0], [0, 0.5 * (i == 1)]]}
    payload = {"matrices": [half(0), half(0), half(1), half(1)]}
    code, rep = cli(tmp_path, "partition-search", "--input", json.dumps(payload), "--r", "2")
    res = rep["result"]
    assert code == 0 and res["strategy"] == "exhaustive"
    assert res["blocks"] == [[1, 3], [2, 4]]
    assert res["objective"] == pytest.approx(0.5) and res["bound"] == pytest.approx(2)


def test_barrier(tmp_path):
    args = ["barrier", "--input", json.dumps(E1E2), "--point", "2,5", "--i", "1", "--j", "2",
            "--delta", "2.0"]
    code, rep = cli(tmp_path, *args)
    res = rep["result"]
    assert code == 0 and res["passed"] and res["status"] == "pass"
    assert res["report"]["value"] == pytest.approx(0.5)
    assert all(v >= 0 for v in res["shift"]["margins"])
    code, rep = cli(tmp_path, "barrier", "--input", json.dumps(E1E2), "--point", "1,0")
    assert code == 2 and rep["error"]["error"] == "singular_point"
    code, rep = cli(tmp_path, "barrier", "--input", json.dumps(E1E2), "--point", "1,1",
                    "--i", "3")
    assert code == 2


def test_nice_family(tmp_path):
    fam = {"polynomials": [[0, -1, 1], [0, -2, 1]], "weights": [0.5, 0.5]}
    code, rep = cli(tmp_path, "nice-family", "--input", json.dumps(fam), "--trials", "200")
    res = rep["result"]
    assert code == 0 and res["nice"] and res["bracket_holds"]
    # x^2 - 1 and x^2 - 4x + 3 share no interlacing partner
    bad = {"polynomials": [[-1, 0, 1], [4, -4, 1]]}
    code, rep = cli(tmp_path, "nice-family", "--input", json.dumps(bad), "--trials", "200")
    assert code == 0 and not rep["result"]["nice"]


@pytest.mark.parametrize("text", ["{not json", '{"matrices": [1, 2', ""])
def test_malformed_json_exits_two(tmp_path, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    code, rep = cli(tmp_path, "mixed-char", "--input", str(path))
    assert code == 2 and rep["error"]["error"] == "input_error"
    assert "line" in rep["error"]


@pytest.mark.parametrize("payload", [
    {"matrices": [{"dim": 2}]},
    {"matrices": [{"dim": 2, "entries": [[1, 0]]}]},
    {"matrices": [{"dim": 2, "entries": [[1, 0], [0, "x"]]}]},
    {"matrices": [{"dim": 1, "entries": [[-1]]}]},
    {"matrices": []},
])
def test_schema_and_value_errors_exit_two(tmp_path, payload):
    code, rep = cli(tmp_path, "mixed-char", "--input", json.dumps(payload))
    assert code == 2 and "error" in rep and "result" not in rep


def test_argument_errors_exit_two(capsys):
    assert main(["mixed-char"]) == 2
    assert main(["no-such-command", "--input", "{}"]) == 2
    assert main(["pave", "--input", "{}", "--r", "two"]) == 2


def test_tolerance_precedence(tmp_path, monkeypatch):
    cfg = write(tmp_path, "cfg.json", {"tolerances": {"fd_tol": 1e-3, "root_tol": 1e-6}})
    monkeypatch.setenv("INTERLACE_CONFIG", cfg)
    _, rep = cli(tmp_path, "mixed-char", "--input", json.dumps(DIAG12))
    assert rep["tolerances"]["fd_tol"] == 1e-3 and rep["tolerances"]["root_tol"] == 1e-6
    _, rep = cli(tmp_path, "mixed-char", "--input", json.dumps(DIAG12), "--tol-fd", "1e-4")
    assert rep["tolerances"]["fd_tol"] == 1e-4 and rep["tolerances"]["root_tol"] == 1e-6
    yml = tmp_path / "cfg.yaml"
    yml.write_text("fd_tol: 0.002\n")
    _, rep = cli(tmp_path, "mixed-char", "--input", json.dumps(DIAG12), "--config", str(yml))
    assert rep["tolerances"]["fd_tol"] == 0.002 and rep["tolerances"]["root_tol"] == 1e-7
    bad = write(tmp_path, "bad.json", {"no_such_tol": 1})
    code, rep = cli(tmp_path, "mixed-char", "--input", json.dumps(DIAG12), "--config", bad)
    assert code == 2


def round_trip(tmp_path, *args):
    code, _ = cli(tmp_path, *args, name="first.json")
    vcode, audit = cli(tmp_path, "verify", "--input", str(tmp_path / "first.json"),
                       name="audit.json")
    return code, vcode, audit["result"]


def test_verify_round_trips(tmp_path):
    rng = np.random.default_rng(1)
    system = json.dumps(io.system_to_json(rank_one_identity(rng, 2, 4)))
    T = json.dumps(io.matrix_to_json(zero_diag_hermitian(rng, 3)))
    P = json.dumps({"dim": 2, "entries": [[0.5, 0.5], [0.5, 0.5]]})
    fam = json.dumps({"polynomials": [[0, -1, 1], [0, -2, 1]], "weights": [0.3, 0.7]})
    jobs = [
        ("mixed-char", "--input", system),
        ("pave", "--input", T, "--epsilon", "0.99"),
        ("pave", "--input", P, "--r", "2"),
        ("partition-search", "--input", system, "--r", "2"),
        ("barrier", "--input", system, "--point", "3,4,3.5,5", "--i", "2", "--j", "3",
         "--delta", "3.0"),
        ("nice-family", "--input", fam, "--trials", "100"),
    ]
    for args in jobs:
        code, vcode, audit = round_trip(tmp_path, *args)
        assert code == 0 and vcode == 0, (args, audit)
        assert audit["claims_match"] and audit["checks"]


def test_verify_catches_tampering(tmp_path):
    code, rep = cli(tmp_path, "mixed-char", "--input", json.dumps(E1E2))
    rep["result"]["coefficients"][0] += 0.1
    path = write(tmp_path, "tampered.json", rep)
    code, audit = cli(tmp_path, "verify", "--input", path, name="audit.json")
    assert code == 1 and not audit["result"]["claims_match"]
    failed = [c["claim"] for c in audit["result"]["checks"] if not c["ok"]]
    assert failed == ["coefficients"]


def test_verify_rejects_non_reports(tmp_path):
    code, rep = cli(tmp_path, "verify", "--input", json.dumps(DIAG12))
    assert code == 2


@pytest.mark.parametrize("args", [
    ("partition-search", "--r", "3"),
    ("pave", "--epsilon", "0.99", "--strategy", "local", "--restarts", "20"),
])
def test_output_is_independent_of_workers(tmp_path, args):
    rng = np.random.default_rng(2)
    payload = (io.system_to_json(rank_one_identity(rng, 3, 7)) if args[0] == "partition-search"
               else io.matrix_to_json(zero_diag_hermitian(rng, 5)))
    src = write(tmp_path, "in.json", payload)
    outs = []
    for w in (1, 2, 8):
        out = tmp_path / f"w{w}.json"
        main([args[0], "--input", src, *args[1:], "--seed", "5", "--workers", str(w),
              "--output", str(out)])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]
