import csv
import io
import json
import subprocess
import sys

import pytest

from qgrf.bench.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_frobenius_csv(capsys):
    code, out, _ = run(["frobenius", "--generator", "er:20:0.4", "--walks", "2,4,8,16", "--repeats", "5"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [(r["m"], r["scheme"]) for r in rows] == [(m, s) for m in ("2", "4", "8", "16")
                                                      for s in ("iid", "antithetic")]
    assert all(float(r["std"]) > 0 for r in rows)


def test_diffuse_json(capsys):
    code, out, _ = run(["diffuse", "--generator", "tree:6", "--p", "0.5", "--walks", "10", "--repeats", "3"], capsys)
    assert code == 0
    doc = json.loads(out)
    schemes = {r["scheme"] for r in doc["rows"] if r["metric"] == "mse"}
    assert schemes == {"iid", "antithetic"}
    assert doc["config"]["m"] == 10


def test_theory_check_half(capsys):
    code, out, _ = run(["theory-check", "--p", "0.5"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["summary"] == {"D_is_zero": True, "E_nsd": True}
    e = next(r for r in doc["records"] if r["matrix"] == "E")
    assert e["verdict"] == "nsd"


def test_cluster_and_regress(capsys, tmp_path):
    edges = tmp_path / "g.txt"
    edges.write_text("".join(f"{i} {j}\n" for i in range(4) for j in range(i + 1, 4)) + "3 4\n"
                     + "".join(f"{i} {j}\n" for i in range(4, 8) for j in range(i + 1, 8)))
    code, out, _ = run(["cluster", "--graph", str(edges), "--repeats", "2", "--sigma", "0.5"], capsys)
    assert code == 0 and json.loads(out)["experiment"] == "cluster"
    code, out, _ = run(["regress", "--generator", "torus:20:10", "--repeats", "2", "--format", "csv"], capsys)
    assert code == 0 and out.startswith("experiment,scheme,repeats,mean,std,sem")


def test_output_file_deterministic(tmp_path, capsys):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(["frobenius", "--generator", "ladder:8", "--repeats", "4", "--scheme", "iid,antithetic,ensemble",
                     "--delta", "0.5", "--output", str(p), "--workers", "3"]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert "ensemble(delta=0.5,k=2)" in paths[0].read_text()
    assert capsys.readouterr().out == ""


@pytest.mark.parametrize("argv", [
    ["frobenius", "--generator", "er:20:0.4", "--scheme", "iid", "--delta", "0.3"],
    ["frobenius", "--generator", "er:20:0.4", "--bogus"],
    ["frobenius", "--generator", "er:20"],
    ["frobenius", "--generator", "er:20:0.4", "--graph", "x.txt"],
    ["frobenius", "--graph", "/nonexistent/file.txt"],
    ["frobenius", "--generator", "er:20:0.4", "--p", "0.7", "--scheme", "antithetic"],
    ["frobenius", "--generator", "er:20:0.4", "--walks", "3", "--scheme", "antithetic"],
    ["frobenius", "--generator", "er:20:0.4", "--sigma", "1.5"],
    ["diffuse", "--generator", "tree:3", "--steps", "7"],
    ["diffuse", "--generator", "tree:3", "--walks", "2,4"],
    ["regress", "--generator", "er:20:0.4"],
    ["theory-check", "--p", "0.5", "--format", "csv"],
    ["theory-check", "--w", "2.0"],
    ["nope"],
    [],
])
def test_config_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert "error" in err


def test_runtime_error_exit_1(capsys):
    # sigma is validated lazily inside the run for this path: oracle size exceeded
    code, _, err = run(["frobenius", "--generator", "path:6000", "--repeats", "1"], capsys)
    assert code == 1
    assert "runtime error" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qgrf", "theory-check", "--p", "0.25", "--w", "0.2"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["params"]["p"] == 0.25
