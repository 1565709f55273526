import csv
import io
import json
import math
import subprocess
import sys

import pytest

from heiscurv.cli import format_csv, format_json, main

EUCLID = '{"kind": "euclidean"}'
L4 = '{"kind": "lp", "params": {"p": 4}}'
FAST = ["--resolution", "512"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_unknown_subcommand_is_usage_error(capsys):
    code, out, err = run(capsys, "frobnicate")
    assert code == 1
    assert "usage" in err.lower()


def test_missing_subcommand(capsys):
    code, _, err = run(capsys)
    assert code == 1 and "usage" in err.lower()


def test_bad_norm_spec(capsys):
    code, _, err = run(capsys, "trig", "--norm", '{"kind": "nonsense"}', *FAST)
    assert code == 1 and "error" in err


def test_bad_grid(capsys):
    code, _, _ = run(capsys, "ncurv", "--norm", EUCLID, "--grid", "12by4")
    assert code == 1


def test_trig_csv(capsys):
    code, out, err = run(capsys, "trig", "--norm", EUCLID, "--n", "8", *FAST)
    assert code == 0 and "pi_omega" in err
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][:3] == ["theta", "cosOmega", "sinOmega"]
    assert len(rows) == 9
    # euclidean: cos^2 + sin^2 = 1
    for r in rows[1:]:
        c, s = float(r[1]), float(r[2])
        assert abs(c * c + s * s - 1) < 1e-9


def test_ncurv_json(capsys):
    code, out, _ = run(capsys, "ncurv", "--norm", EUCLID, "--grid", "64x128", *FAST)
    assert code == 0
    rep = json.loads(out)
    assert abs(rep["n_curv"] - 5) < 1e-2
    assert set(rep["argmax"]) == {"phi", "omega"}
    assert rep["grid"] == {"s": 64, "r": 128}


def test_ncurv_not_strongly_convex_is_null(capsys):
    code, out, _ = run(capsys, "ncurv", "--norm", L4, "--grid", "64x128", *FAST)
    assert code == 0
    rep = json.loads(out)
    assert rep["n_curv"] is None and rep["note"]


def test_mcp_exit_codes(capsys):
    code, out, _ = run(capsys, "mcp", "--norm", EUCLID, "--N", "4.9", *FAST)
    assert code == 2 and json.loads(out)["passed"] is False
    code, out, _ = run(capsys, "mcp", "--norm", EUCLID, "--N", "5.1", *FAST)
    assert code == 0 and json.loads(out)["passed"] is True


def test_rigidity_refuses_inner_product(capsys):
    code, out, _ = run(capsys, "rigidity", "--norm", EUCLID, *FAST)
    assert code == 2
    assert json.loads(out)["status"] == "affine"


def test_hfamily_last_row(capsys):
    code, out, err = run(capsys, "hfamily", "--h", "8", "--n", "16")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["y", "JR", "wdJR", "ratio"]
    assert len(rows) == 17
    assert float(rows[-1][0]) == pytest.approx(1 / 8, rel=1e-15)


def test_distance_euclid_axis(capsys):
    code, out, _ = run(capsys, "distance", "--norm", EUCLID, "--to", "1", "0", "0", *FAST)
    assert code == 0
    assert json.loads(out)["distance"] == pytest.approx(1.0, abs=1e-8)


def test_output_file_is_atomic_and_deterministic(capsys, tmp_path):
    target = tmp_path / "out.json"
    argv = ["ncurv", "--norm", EUCLID, "--grid", "64x128", *FAST, "-o", str(target)]
    assert run(capsys, *argv)[0] == 0
    first = target.read_bytes()
    assert run(capsys, *argv)[1] == ""
    assert target.read_bytes() == first
    assert list(tmp_path.iterdir()) == [target]


def test_norm_from_file(capsys, tmp_path):
    spec = tmp_path / "norm.json"
    spec.write_text(EUCLID)
    code, out, _ = run(capsys, "trig", "--norm", str(spec), "--n", "4", *FAST)
    assert code == 0 and out.count("\n") == 5


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"resolution": 256, "grid_s": 64, "grid_r": 128}))
    code, out, _ = run(capsys, "ncurv", "--norm", EUCLID, "--config", str(cfg))
    assert code == 0
    rep = json.loads(out)
    assert rep["resolution"] == 256 and rep["grid"] == {"s": 64, "r": 128}


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"nope": 1}')
    assert run(capsys, "trig", "--norm", EUCLID, "--config", str(cfg))[0] == 1


def test_formatters():
    assert json.loads(format_json({"a": math.inf, "b": [math.nan, 1.0]})) == {"a": None, "b": [None, 1.0]}
    assert format_csv(["x"], [[0.1]]) == "x\n0.10000000000000001\n"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "heiscurv", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "ncurv" in proc.stdout
