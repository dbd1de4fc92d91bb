import csv
import json
import math
import shutil
from pathlib import Path

import pytest

from virtual_axis.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fk_reference(capsys):
    code, out, _ = run(capsys, "fk", "0", "0", "0", "0", "0", "0", "--json")
    assert code == 0
    d = json.loads(out)
    assert d["wcp"]["position"] == pytest.approx([315, 0, 365], abs=1e-9)
    assert d["tcp"]["position"] == pytest.approx([315, 0, 465], abs=1e-9)


def test_fk_degrees_and_virtual(capsys):
    code, out, _ = run(capsys, "fk", "0", "0", "-90", "20", "0", "0", "0", "--virtual", "--deg", "--json")
    assert code == 0
    assert json.loads(out)["wcp"]["position"] == pytest.approx([700, 0, 0], abs=1e-9)


def test_fk_wrong_count(capsys):
    code, _, err = run(capsys, "fk", "0", "0", "0")
    assert code == 2
    assert "usage:" in err and "6 joint values" in err


def test_ik_roundtrip(capsys):
    code, out, _ = run(capsys, "ik", "400", "100", "200", "0.3", "-0.2", "2.9", "-s", "3", "--json")
    assert code == 0
    q = json.loads(out)["q"]
    code, out, _ = run(capsys, "fk", *map(str, q), "--json")
    pos = json.loads(out)["tcp"]["position"]
    assert pos == pytest.approx([400, 100, 200], abs=1e-8)


def test_ik_out_of_reach_exit_3(capsys):
    code, out, _ = run(capsys, "ik", "700", "0", "315", "0", "0", "0", "--wcp", "--json")
    assert code == 3
    d = json.loads(out)
    assert d["error"] == "OutOfReach"
    assert d["defect"] == pytest.approx(87.6099269811458, abs=1e-9)


def test_ik_virtual_total(capsys):
    code, out, _ = run(capsys, "ik", "1300", "0", "215", "0", "180", "0", "--deg", "--virtual", "--json")
    assert code == 0
    d = json.loads(out)
    assert d["v"] == pytest.approx(657.619153571001, abs=1e-9)
    assert len(d["q_tilde"]) == 7


def test_ik_bad_config(capsys):
    code, _, err = run(capsys, "ik", "400", "0", "0", "0", "0", "0", "-s", "9")
    assert code == 2 and "0..7" in err


def test_sweep_outputs(capsys, tmp_path):
    code, out, _ = run(capsys, "sweep", str(CONFIGS / "sweep_boundary.json"), "--out", str(tmp_path))
    assert code == 0
    with open(tmp_path / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["x", "q1", "q2", "q3", "q4", "q5", "q6", "v"]
    assert len(rows) == 801
    assert float(rows[-1]["v"]) == pytest.approx(657.619153571001, abs=1e-6)
    summary = json.loads((tmp_path / "sweep.json").read_text())
    assert summary["boundary_x"] == pytest.approx(602.640025222354, abs=1e-6)
    assert summary["config"]["samples"] == 801


def test_sweep_bad_config(capsys, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"L0": [0, 0], "L1": [1, 0, 0]}))
    code, _, err = run(capsys, "sweep", str(cfg), "--out", str(tmp_path))
    assert code == 2 and "L0" in err


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "optimize", str(tmp_path / "nope.json"))
    assert code == 2 and "usage:" in err


def test_optimize_acceptance_scene(capsys, tmp_path):
    shutil.copy(CONFIGS / "robot.json", tmp_path)
    shutil.copy(CONFIGS / "scene_5x6.json", tmp_path)
    out = tmp_path / "out"
    code, text, _ = run(capsys, "optimize", str(tmp_path / "scene_5x6.json"), "--out", str(out))
    assert code == 0 and text.startswith("Optimal")
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "Optimal"
    assert report["objective"] < 1e-9
    assert report["max_violation"] <= 1e-6
    assert len(report["v"]) == 30
    with open(out / "points.csv") as fh:
        points = list(csv.DictReader(fh))
    assert len(points) == 30
    assert all(p["limits_ok"] == "1" for p in points)
    for p in points:
        d = math.dist((0, 0, 0), (float(p["wcp_x"]), float(p["wcp_y"]), float(p["wcp_z"])))
        assert 50 - 1e-6 <= d <= 680 + 1e-6
    with open(out / "iterations.csv") as fh:
        it = list(csv.DictReader(fh))
    assert list(it[0]) == ["iteration", "x", "y", "z", "alpha", "beta", "gamma", "objective", "max_violation"]
    assert len(it) == report["iterations"] + 1


def test_optimize_impossible_exit_4(capsys, tmp_path):
    code, text, _ = run(capsys, "optimize", str(CONFIGS / "scene_impossible.json"), "--out", str(tmp_path))
    assert code == 4
    assert json.loads((tmp_path / "report.json").read_text())["status"] != "Optimal"


def test_optimize_scene_errors(capsys, tmp_path):
    scene = json.loads((CONFIGS / "scene_5x6.json").read_text())
    scene["model"] = str(CONFIGS / "robot.json")
    for key, value in (("gradient", "magic"), ("free", ["x", "w"]), ("box", {"bx": 1})):
        bad = {**scene, key: value}
        path = tmp_path / "scene.json"
        path.write_text(json.dumps(bad))
        code, _, err = run(capsys, "optimize", str(path), "--out", str(tmp_path))
        assert code == 2, key


def test_optimize_multistart_partial_free(capsys, tmp_path):
    scene = {
        "model": str(CONFIGS / "robot.json"),
        "box": {"bx": 2, "by": 2, "dx": 50.0, "dy": 50.0, "configuration": 2},
        "start": [900, 0, 0, 0, 0, 0],
        "free": ["x"],
        "bounds": {"x": [300, 1000]},
        "starts": [[950, 0, 0, 0, 0, 0]],
        "random_starts": 2,
        "seed": 3,
    }
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(scene))
    code, _, _ = run(capsys, "optimize", str(path), "--out", str(tmp_path))
    report = json.loads((tmp_path / "report.json").read_text())
    assert len(report["starts"]) == 4
    assert report["variables"] == ["x"]
    assert 300 <= report["corner"]["x"] <= 1000
    assert code in (0, 4)
