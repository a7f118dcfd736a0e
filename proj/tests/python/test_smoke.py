"""Smoke tests for the compiled module and the CLI contract."""

import json
import math
import os
import subprocess
import sys

import pytest

_pkg_dir = os.environ.get("COILSIM_PKG_DIR")
if _pkg_dir and _pkg_dir not in sys.path:
    sys.path.insert(0, _pkg_dir)

coilsim = pytest.importorskip("coilsim")


def test_parallel_transport_quarter_turn():
    r = coilsim.parallel_transport([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    out = [r[0][0], r[1][0], r[2][0]]  # image of e_x
    assert abs(out[1] - 1.0) < 1e-12
    assert abs(out[0]) < 1e-12 and abs(out[2]) < 1e-12


def test_curvature_binormal_right_angle():
    kb = coilsim.curvature_binormal([1, 0, 0], [0, 1, 0])
    assert abs(kb[2] - 2.0) < 1e-12


def test_spring_constants_appendix_values():
    spec = coilsim.CoilSpec()
    k = coilsim.spring_constants(spec)
    assert abs(k.bend - 3.3753e-9) / 3.3753e-9 < 1e-3
    assert abs(k.twist / k.bend - 1.2) < 1e-12


def test_helix_natural_shape_energy_zero():
    pts = coilsim.make_helix(4e-3, 1.2 * 305e-6, 0.01, 305e-6)
    nat = coilsim.build_natural_shape(pts)
    state = coilsim.make_rod_state(pts)
    k = coilsim.spring_constants(coilsim.CoilSpec())
    assert coilsim.total_energy(state, nat, k) < 1e-14


def test_segment_distance_skew():
    d, s, t = coilsim.segment_segment_distance(
        [0, 0, 0], [1, 0, 0], [0.5, -1, 1], [0.5, 1, 1]
    )
    assert abs(d - 1.0) < 1e-12
    assert abs(s - 0.5) < 1e-9 and abs(t - 0.5) < 1e-9


def test_mesh_volume_icosphere():
    mesh = coilsim.make_icosphere(0.5, 3)
    vol = coilsim.mesh_volume(mesh)
    assert abs(vol - 4.0 / 3.0 * math.pi * 0.125) / vol < 0.01


def test_classifier_table():
    assert coilsim.classify(0.25, 0.20, 0.19) == "I"
    assert coilsim.classify(0.25, 0.20, 0.10) == "II"
    assert coilsim.classify(0.05, 0.05, 0.50) == "Fail"


def test_voxelize_tube_volume():
    cavity = coilsim.make_icosphere(3e-3, 3)
    line = [[-2e-3, 0.0, 0.0], [2e-3, 0.0, 0.0]]
    d2 = 6.1e-4  # ~3 cells radius at 70 voxels per axis
    out = coilsim.voxelize(line, d2, cavity, 70)
    r = d2 / 2
    capsule = math.pi * r * r * 4e-3 + 4.0 / 3.0 * math.pi * r**3
    assert abs(out["volume"] - capsule) / capsule < 0.2


def _write_mini_config(tmp_path, psi=0.06):
    cfg = {
        "coil": {"D1": 50e-6, "D2": 305e-6, "D3": 0.9e-3, "shape": "helix"},
        "cavity": {
            "synthetic": {
                "type": "sphere_with_neck",
                "radius": 1.2e-3,
                "neck_radius": 5e-4,
                "neck_length": 1.2e-3,
                "edge_length": 5.5e-4,
            }
        },
        "neck": {"point": [0, 0, 1.4e-3], "normal": [0, 0, 1]},
        "catheter": {
            "points": [[0, 0, 3.3e-3], [0, 0, 1.95e-3], [0, 0, 0.54e-3]],
            "radius": 2.3e-4,
        },
        "sim": {"push_speed": 0.06, "psi_target": psi, "settle_time": 0.05},
        "nv": 40,
        "seed": 7,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_run_deployment_end_to_end(tmp_path):
    cfg = _write_mini_config(tmp_path)
    out = coilsim.run_deployment(str(cfg))
    assert out["inserted_length"] > 0
    assert out["max_containment_violation"] < 305e-6 / 2
    assert out["report"]["class"] in ("I", "II", "IIIa", "IIIb", "Fail")


@pytest.fixture(scope="module")
def cli():
    path = os.environ.get("COILSIM_CLI")
    if not path or not os.path.exists(path):
        pytest.skip("COILSIM_CLI not set")
    return path


def test_cli_exit_code_bad_config(cli, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"coil": {}, "cavity": {"stl": "missing.stl"}}))
    proc = subprocess.run(
        [cli, "simulate", "--config", str(bad)], capture_output=True, text=True
    )
    assert proc.returncode == 2
    assert "missing.stl" in proc.stderr or "cavity" in proc.stderr


def test_cli_simulate_and_reports(cli, tmp_path):
    cfg = _write_mini_config(tmp_path)
    proc = subprocess.run(
        [
            cli, "simulate", "--config", str(cfg),
            "--seed", "3", "--out", str(tmp_path / "runs"),
        ],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    run_dir = proc.stdout.strip()
    for artifact in (
        "manifest.json", "summary.json", "report.json",
        "centerline_final.csv", "voxels.raw", "voxels.json",
    ):
        assert os.path.exists(os.path.join(run_dir, artifact)), artifact

    report = json.loads(open(os.path.join(run_dir, "report.json")).read())
    assert report["class"] in ("I", "II", "IIIa", "IIIb", "Fail")

    # classify the stored grid with an extreme threshold: class must worsen
    out_json = tmp_path / "reclass.json"
    proc2 = subprocess.run(
        [
            cli, "classify", "--config", str(cfg),
            "--grid", os.path.join(run_dir, "voxels"),
            "--core-th", "0.99", "--out", str(out_json),
        ],
        capture_output=True, text=True,
    )
    assert proc2.returncode == 0, proc2.stderr
    reclass = json.loads(out_json.read_text())
    assert reclass["class"] in ("IIIa", "Fail")

    # nonsense threshold -> validation error
    proc3 = subprocess.run(
        [
            cli, "classify", "--config", str(cfg),
            "--grid", os.path.join(run_dir, "voxels"),
            "--core-th", "1.5", "--out", str(out_json),
        ],
        capture_output=True, text=True,
    )
    assert proc3.returncode == 2


def test_cli_determinism(cli, tmp_path):
    cfg = _write_mini_config(tmp_path)
    dirs = []
    for sub in ("a", "b"):
        proc = subprocess.run(
            [
                cli, "simulate", "--config", str(cfg),
                "--seed", "7", "--out", str(tmp_path / sub),
            ],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        dirs.append(proc.stdout.strip())
    a = open(os.path.join(dirs[0], "centerline_final.csv"), "rb").read()
    b = open(os.path.join(dirs[1], "centerline_final.csv"), "rb").read()
    assert a == b
