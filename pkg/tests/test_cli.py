import json
import subprocess
import sys

import pytest

from speedmeasure import SpeedMeasure, validate
from speedmeasure.cli import main

from .conftest import FIXTURES

MANIFEST = json.loads((FIXTURES / "manifest.json").read_text())


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name", sorted(MANIFEST))
def test_validate_every_fixture(name, capsys):
    code, out, err = run(["validate", "--measure", FIXTURES / f"{name}.json"], capsys)
    want = MANIFEST[name]["violations"]
    if want:
        assert code == 1
        assert sorted({v["invariant"] for v in json.loads(out)}) == want
        assert json.loads(err)["error"] == "invalid_measure"
    else:
        assert code == 0 and out == "[]\n"


@pytest.mark.parametrize("name", sorted(MANIFEST))
def test_classify_every_fixture(name, capsys):
    code, out, _ = run(["classify", "--measure", FIXTURES / f"{name}.json"], capsys)
    assert code == 0
    assert json.loads(out) == MANIFEST[name]["classify"]


def test_green_example(capsys):
    code, out, _ = run(["green", "--kind", "open", "--a", 0, "--b", 1, "--x", 0.5, "--y", 0.5], capsys)
    assert code == 0 and json.loads(out) == {"value": 0.25}


def test_green_outside_domain(capsys):
    code, _, err = run(["green", "--kind", "open", "--a", 0, "--b", 1, "--x", 2, "--y", 0.5], capsys)
    assert code == 1 and json.loads(err)["error"] == "domain"


def test_usage_errors(capsys, tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["green", "--kind", "open", "--a", "0", "--b", "1", "--x", "0", "--y", "0", "--bogus"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 2
    assert json.loads(capsys.readouterr().err.splitlines()[-1])["error"] == "usage"
    code, _, err = run(["validate", "--measure", tmp_path / "missing.json"], capsys)
    assert code == 2 and json.loads(err)["error"] == "usage"


def test_schema_error_pointer(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"interval": {"left": 0, "right": 1, "left_closed": True, "right_closed": "yes"},
                               "pieces": [{"from": 0, "to": 1, "coeffs": ["two"]}]}))
    code, _, err = run(["validate", "--measure", bad], capsys)
    assert code == 1
    pointers = {v["pointer"] for v in json.loads(err)["violations"]}
    assert pointers == {"/interval/right_closed", "/pieces/0/coeffs/0"}


def test_simulate_then_exit_stats(tmp_path, capsys):
    out = tmp_path / "paths.csv"
    code, _, _ = run(["simulate", "--measure", FIXTURES / "good.json", "--engine", "chain", "--x0", 0.3,
                      "--horizon", 5, "--paths", 500, "--seed", 11, "--grid-h", 0.02, "--stop-window", "0,1", "--out", out], capsys)
    assert code == 0
    assert out.read_text().startswith("path_id,t,x\n")
    meta = json.loads((tmp_path / "paths.csv.meta.json").read_text())
    assert meta["seed"] == 11 and meta["n_paths"] == 500
    code, text, _ = run(["exit-stats", "--paths", out, "--a", 0, "--b", 1, "--x0", 0.3], capsys)
    assert code == 0
    st = json.loads(text)
    assert abs(st["p_hit_upper"] - 0.3) < 0.07
    assert abs(st["mean_exit"] - 0.21) < 0.03


def test_simulate_timechange(tmp_path, capsys):
    out = tmp_path / "tc.csv"
    code, _, _ = run(["simulate", "--measure", FIXTURES / "sticky_point.json", "--engine", "timechange",
                      "--x0", 0.5, "--horizon", 0.1, "--paths", 3, "--seed", 1, "--dt", 1e-4, "--bin", 0.02,
                      "--n-out", 11, "--out", out], capsys)
    assert code == 0
    assert len(out.read_text().splitlines()) == 1 + 3 * 11


def test_simulate_missing_engine_flags(capsys):
    code, _, _ = run(["simulate", "--measure", FIXTURES / "good.json", "--engine", "timechange",
                      "--x0", 0.5, "--horizon", 1, "--paths", 1], capsys)
    assert code == 2


def test_simulate_rejects_invalid_measure(capsys):
    code, _, err = run(["simulate", "--measure", FIXTURES / "open_accessible.json", "--x0", 0.5,
                        "--horizon", 1, "--paths", 1, "--grid-h", 0.1], capsys)
    assert code == 1 and json.loads(err)["error"] == "invalid_measure"


def test_exit_stats_start_mismatch(tmp_path, capsys):
    p = tmp_path / "p.csv"
    p.write_text("path_id,t,x\n0,0.0,0.5\n0,1.0,1.0\n")
    code, _, err = run(["exit-stats", "--paths", p, "--a", 0, "--b", 1, "--x0", 0.3], capsys)
    assert code == 1 and json.loads(err)["error"] == "start_mismatch"


def test_estimate_output_is_measure(tmp_path, capsys):
    out = tmp_path / "mhat.json"
    code, _, _ = run(["estimate", "--measure", FIXTURES / "good.json", "--engine", "chain", "--grid-from", 0,
                      "--grid-to", 1, "--grid-h", 0.1, "--paths-per-node", 300, "--seed", 4, "--out", out], capsys)
    assert code == 0
    d = json.loads(out.read_text())
    assert len(d["stderr_per_cell"]) == 9 and d["seed"] == 4
    m = SpeedMeasure.from_dict(d)
    assert validate(m) == []
    code, _, _ = run(["validate", "--measure", out], capsys)
    assert code == 0


def test_converge_speed(tmp_path, capsys):
    files = ",".join(str(FIXTURES / f"sticky_n{n}.json") for n in (1, 2, 4, 8, 16))
    out, curves = tmp_path / "r.json", tmp_path / "c.csv"
    code, _, _ = run(["converge", "--mode", "speed", "--measures", files, "--limit", FIXTURES / "sticky_limit.json",
                      "--indices", "1,2,4,8,16", "--out", out, "--curves", curves], capsys)
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["verdict"] is True and rep["seed"] == 0
    assert curves.read_text().startswith("n,distance,family\n")


def _determinism_cases(tmp):
    files = ",".join(str(FIXTURES / f"sticky_n{n}.json") for n in (1, 4))
    return {
        "simulate": ["simulate", "--measure", FIXTURES / "sticky_point.json", "--x0", 0.4, "--horizon", 0.5,
                     "--paths", 50, "--grid-h", 0.05, "--seed", 9],
        "simulate_tc": ["simulate", "--measure", FIXTURES / "sticky_point.json", "--engine", "timechange",
                        "--x0", 0.4, "--horizon", 0.05, "--paths", 8, "--dt", 1e-4, "--bin", 0.02, "--n-out", 17,
                        "--seed", 9],
        "estimate": ["estimate", "--measure", FIXTURES / "sticky_point.json", "--grid-from", 0, "--grid-to", 1,
                     "--grid-h", 0.25, "--paths-per-node", 100, "--seed", 9],
        "converge": ["converge", "--mode", "stone", "--measures", files, "--limit", FIXTURES / "sticky_limit.json",
                     "--indices", "1,4", "--x0", 0.5, "--paths", 200, "--grid-h", 0.05, "--seed", 9],
        "converse": ["converge", "--mode", "converse", "--measures", files, "--limit",
                     FIXTURES / "sticky_limit.json", "--indices", "1,4", "--grid-from", 0, "--grid-to", 1,
                     "--est-grid-h", 0.25, "--paths-per-node", 100, "--grid-h", 0.05, "--seed", 9],
        "classify": ["classify", "--measure", FIXTURES / "cubic_tail.json"],
        "green": ["green", "--kind", "left", "--a", 0, "--b", 1, "--x", 0.2, "--y", 0.7],
        "validate": ["validate", "--measure", FIXTURES / "good.json"],
    }


@pytest.mark.parametrize("case", ["simulate", "simulate_tc", "estimate", "converge", "converse", "classify",
                                  "green", "validate"])
def test_byte_identical_across_threads(case, tmp_path, capsys):
    argv = _determinism_cases(tmp_path)[case]
    blobs = []
    for threads in (1, 4, 1):
        out = tmp_path / f"{case}_{threads}_{len(blobs)}.out"
        code, _, _ = run([*argv, "--threads", threads, "--out", out], capsys)
        assert code == 0
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1] == blobs[2]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "speedmeasure", "green", "--kind", "open", "--a", "0", "--b", "1",
                        "--x", "0.5", "--y", "0.5"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout) == {"value": 0.25}
