import json
import subprocess
import sys

import numpy as np
import pytest

from dnlab import fileio
from dnlab.cli import main
from dnlab.errors import SpecError
from dnlab.graph import Tail, VertexFunction
from dnlab.star import StarGraph


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def star_spec(tmp_path):
    return write(tmp_path, "star.json", {"generator": "star", "N": 3, "weights": "geometric:2", "depth": 20})


def test_star_qdn(capsys):
    code, out, _ = run(capsys, "star", "qdn", "--depth", "40")
    assert code == 0
    A = np.array(json.loads(out)["matrix"])
    assert np.allclose(A, np.eye(3) - 1 / 3, atol=1e-9)


def test_star_measure_with_spec(capsys, star_spec, tmp_path):
    out_file = tmp_path / "mu.json"
    code, out, _ = run(capsys, "star", "measure", "--spec", star_spec, "--vertex", "0", "--out", str(out_file))
    assert code == 0
    data = json.loads(out_file.read_text())
    assert data == json.loads(out)
    assert np.allclose(data["weights"], 1 / 3, atol=1e-12)


def test_star_trace(capsys, star_spec, tmp_path):
    f = write(tmp_path, "f.json", {"values": {"0": 1.0}, "default": 0.0, "tail": {"rule": "constant-per-ray",
                                                                                 "values": [1, 2, 3]}})
    code, out, _ = run(capsys, "star", "trace", "--spec", star_spec, "--f", f)
    assert code == 0
    assert json.loads(out)["trace"] == [0.0, 0.0, 0.0]


def test_green_on_path_and_lattice(capsys, tmp_path):
    spec = write(tmp_path, "z3.json", {"generator": "lattice", "params": {"d": 3, "radius": 6}})
    code, out, _ = run(capsys, "green", "--spec", spec, "--levels", "5")
    data = json.loads(out)
    assert code == 0 and data["monotone"] and abs(data["sup_minus_diagonal"]) <= 1e-10


def test_decompose(capsys, tmp_path):
    spec = write(tmp_path, "s.json", {"generator": "star", "N": 3, "weights": "geometric:2", "depth": 12})
    f = write(tmp_path, "f.json", {"values": {"0": 2.0}})
    code, out, _ = run(capsys, "decompose", "--spec", spec, "--f", f)
    data = json.loads(out)
    assert code == 0
    assert abs(data["energy_f"] - data["energy_f0"] - data["energy_fh"]) <= 1e-8 * (1 + data["energy_f"])


def test_forms_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "forms", "trace", "--depth", "40", "--form", "dirichlet-part")
    assert code == 0 and np.max(np.abs(json.loads(out)["matrix"])) <= 1e-9
    q = write(tmp_path, "q.json", {"matrix": (2 * (np.eye(3) - 1 / 3)).tolist()})
    code, out, _ = run(capsys, "forms", "compose", "--depth", "40", "--q", q, "--verify")
    data = json.loads(out)
    assert code == 0 and data["admissible"]
    assert np.allclose(data["trace_matrix"], 2 * (np.eye(3) - 1 / 3), atol=1e-8)


def test_compose_rejects_non_markov(capsys, tmp_path):
    v = np.array([1.0, 1.0, -2.0])
    q = write(tmp_path, "q.json", {"matrix": (np.eye(3) - 1 / 3 + np.outer(v, v)).tolist()})
    code, out, _ = run(capsys, "forms", "compose", "--q", q, "--verify")
    assert code == 1 and json.loads(out)["admissible"] is False
    code, _, err = run(capsys, "forms", "trace", "--form", "composed", "--q", q)
    assert code == 1 and "NotAdmissible" in err


def test_forms_check_suites(capsys):
    code, out, _ = run(capsys, "forms", "check", "--suite", "star-toy")
    assert code == 0 and "PASS" in out
    code, out, _ = run(capsys, "forms", "check", "--suite", "markov", "--samples", "200")
    assert code == 0 and json.loads(out) == {"energy": True, "composed": True}


def test_approx_commands(capsys, tmp_path):
    spec = write(tmp_path, "tv.json", {"vertices": ["a", "b"], "edges": [{"u": "a", "v": "b", "w": 1}],
                                       "killing": [{"v": "a", "c": 1}]})
    f = write(tmp_path, "f.json", {"values": {"b": 1.0}})
    code, out, _ = run(capsys, "approx", "sweep", "--spec", spec, "--f", f, "--alphas", "1,10")
    data = json.loads(out)
    assert code == 0 and abs(data["values"][0] - 0.4) <= 1e-15 and data["target"] == 1.0
    code, out, _ = run(capsys, "approx", "parts", "--spec", spec, "--f", f)
    data = json.loads(out)
    assert code == 0 and (data["QM"], data["Qk"]) == (1.0, 0.0)


def test_scenario_all_with_csv(capsys, tmp_path):
    csv_path, txt = tmp_path / "s.csv", tmp_path / "s.txt"
    code, out, _ = run(capsys, "scenario", "all", "--parallel", "--csv", str(csv_path), "--out", str(txt))
    assert code == 0
    assert out.count("== scenario") == 5
    assert txt.read_text().strip() == out.strip()
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "scenario,series,parameter,value" and len(lines) > 1
    assert sum(line.startswith("scenario,") for line in lines) == 1


@pytest.mark.parametrize("argv", [
    ["green", "--spec", "/nonexistent/graph.json"],
    ["scenario", "bogus"],
    ["star", "qdn", "--N", "1"],
    ["star", "qdn", "--weights", "constant"],
    [],
])
def test_bad_input_exit_code(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_bad_json_and_unknown_vertex(capsys, tmp_path):
    bad = write(tmp_path, "bad.json", "{not json")
    assert run(capsys, "green", "--spec", bad)[0] == 2
    spec = write(tmp_path, "p.json", {"generator": "path", "depth": 4})
    f = write(tmp_path, "f.json", {"values": {"zz": 1.0}})
    code, _, err = run(capsys, "decompose", "--spec", spec, "--f", f)
    assert code == 2 and "zz" in err


def test_help_exits_zero(capsys):
    assert run(capsys, "--help")[0] == 0


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "dnlab.cli", "star", "qdn", "--depth", "10"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "eigenvalues" in r.stdout


# file helpers


def test_function_json_round_trip():
    s = StarGraph.uniform(3, "geometric:2", 5)
    f = VertexFunction(s.graph, np.linspace(0, 1, s.graph.n), Tail.per_ray([0.1, 0.2, 0.3]))
    back = fileio.function_from_json(s.graph, json.loads(fileio.dump(fileio.function_to_json(f))))
    assert np.array_equal(back.ext, f.ext)


@pytest.mark.parametrize("data", [{"rule": "sideways"}, "zero", {"values": [1]}])
def test_bad_tails(data):
    with pytest.raises(SpecError):
        fileio.parse_tail(data)


def test_star_from_spec_variants():
    assert fileio.star_from_spec({"generator": {"type": "star", "N": 2, "depth": 4}}).N == 2
    assert fileio.star_from_spec({"generator": "star", "params": {"N": 4, "depth": 3}}).depth == 3
    with pytest.raises(SpecError):
        fileio.star_from_spec({"generator": "star", "N": 3})
    with pytest.raises(SpecError):
        fileio.star_from_spec({"generator": "path", "depth": 3})


def test_dump_handles_numpy(tmp_path):
    p = tmp_path / "x.json"
    fileio.dump({"a": np.arange(3), "b": np.float64(0.1), "c": np.bool_(True)}, p)
    assert json.loads(p.read_text()) == {"a": [0, 1, 2], "b": 0.1, "c": True}
    with pytest.raises(TypeError):
        fileio.dump({"x": object()})
