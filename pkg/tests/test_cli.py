import json
import math

import numpy as np
import pytest

from lagstab.cli import dispatch, dumps
from lagstab.curves import DiscreteCurve, circle, perturbed_line


def run(capsys, *argv):
    code = dispatch(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_no_args_is_usage_error(capsys):
    assert dispatch([]) == 1
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["bogus"], ["phase"], ["phase", "--class", "0,0"],
                                  ["phase", "--class", "1"], ["stability", "--class", "3,1", "--bound", "1"],
                                  ["twist", "(sum L1"], ["phase", "--class", "1,0", "--nope"],
                                  ["surgery", "line:1,0", "line:1,2,0"], ["flow", "line:x"]])
def test_usage_errors_exit_1(argv, capsys):
    assert dispatch(argv) == 1


def test_phase(capsys):
    code, doc = run(capsys, "phase", "--class", "2,1")
    assert code == 0
    assert doc["phi"] == math.atan(0.5)
    assert doc["mu"] == 0.5
    assert doc["manifest"]["seed"] == 0
    code, doc = run(capsys, "phase", "--class", "0,-1")
    assert doc["mu"] == "inf" and doc["phi"] == -math.pi / 2


def test_stability_and_mirror(capsys):
    code, doc = run(capsys, "stability", "--class", "2,1", "--bound", "3")
    assert code == 0 and doc["verdict"]["status"] == "stable"
    assert doc["manifest"]["flags"]["bound"] == 3
    code, doc = run(capsys, "mirror", "--class", "2,1")
    assert doc["sheaf"]["rank"] == 2 and doc["sheaf"]["stable"] is True
    assert dispatch(["mirror", "--class", "-1,0"]) == 1
    code, doc = run(capsys, "mirror", "--class", "-1,0", "--allow-shift")
    assert code == 0 and doc["sheaf"]["shift"] == 1


def test_wall_and_twist(capsys):
    _, doc = run(capsys, "wall", "--mu", "0.5", "--t", "-0.01")
    assert doc["verdict"]["status"] == "unstable"
    _, doc = run(capsys, "twist", "(T L1 2 (sum L1 L2))")
    assert doc["result"] == "(sum L2 L1)"
    _, doc = run(capsys, "twist", "--n", "3", "(T L1 1 (sum L1 L2))")
    assert doc["result"] == "L2" and doc["result_class"] == [0, 1]
    _, doc = run(capsys, "twist", "--audit", "L1=0.01,L2=0", "(sum L2 L1[-1])")
    assert doc["audit"]["pass"] is False


def test_monodromy(capsys):
    _, doc = run(capsys, "monodromy", "--model", "k3", "--samples", "128")
    assert doc["winding"] == 1 and len(doc["walls"]) == 1


def test_surgery(capsys, tmp_path):
    out_curve = tmp_path / "sum.json"
    code, doc = run(capsys, "surgery", "line:1,0", "line:1,1", "--samples", "64", "--out-curve", str(out_curve))
    assert code == 0
    assert doc["report"]["components"][0]["closure"] == [2, 1]
    c = DiscreteCurve.from_json(json.loads(out_curve.read_text()))
    assert c.closure == (2, 1)
    code, doc = run(capsys, "surgery", "line:1,1", "line:1,0", "--samples", "64")
    assert code == 1 and "does not exist" in doc["error"]
    code, doc = run(capsys, "surgery", "line:1,1", "line:1,0:1", "--samples", "64")
    assert code == 0 and doc["report"]["components"][0]["closure"] == [0, 1]


def test_flow_exit_codes(capsys, tmp_path):
    path = tmp_path / "circle.json"
    path.write_text(dumps(circle(0.2, 64).to_json()))
    code, doc = run(capsys, "flow", str(path))
    assert code == 2 and doc["result"]["status"] == "singular"
    code, doc = run(capsys, "flow", "--line", "2,1", "--perturb", "0.1", "--samples", "64", "--max-time", "1e-4")
    assert code == 3 and doc["result"]["status"] == "timeout"
    csv = tmp_path / "diag.csv"
    code, doc = run(capsys, "flow", "--line", "1,1", "--perturb", "0.05", "--samples", "64",
                    "--out-csv", str(csv))
    assert code == 0 and doc["result"]["status"] == "converged_to_line"
    assert csv.read_text().startswith("time,length")
    path.write_text("{not json")
    assert dispatch(["flow", str(path)]) == 1
    assert dispatch(["flow", str(tmp_path / "missing.json")]) == 1


def test_flow_seed_controls_perturbation(capsys):
    # the same seed reproduces the same perturbation as the library generator
    _, a = run(capsys, "flow", "--line", "1,0", "--perturb", "0.05", "--samples", "64", "--seed", "5",
               "--max-time", "1e-5")
    c = perturbed_line(1, 0, 64, 0.05, np.random.default_rng(5))
    assert a["manifest"]["seed"] == 5
    assert a["result"]["initial_length"] == c.length


def test_out_file_is_byte_identical(tmp_path, capsys):
    out = tmp_path / "fig.json"
    argv = ["--seed", "3", "flow", "--line", "2,1", "--perturb", "0.1", "--samples", "64",
            "--max-time", "0.002", "--out", str(out)]
    assert dispatch(argv) == 3
    first = out.read_bytes()
    assert dispatch(argv) == 3
    assert out.read_bytes() == first
    assert json.loads(first)["manifest"]["outputs"] == []
    assert capsys.readouterr().out == ""


def test_dumps_format():
    assert dumps(0.0) == "0.0"
    assert dumps(0.1) == "0.10000000000000001"
    assert dumps([1, 2.5]) == "[1, 2.5]"
    assert dumps({"a": math.inf, "b": -math.inf, "c": math.nan}) == '{\n  "a": "inf",\n  "b": "-inf",\n  "c": "nan"\n}'
    assert float(dumps(1e300)) == 1e300
