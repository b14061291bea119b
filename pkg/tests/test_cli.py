import json
import math
import subprocess
import sys

import numpy as np
import pytest

from autoik.chain import fk
from autoik.cli import main
from autoik.geom import normalize_angle
from autoik.robot_io import serialize_chain
from autoik import bench


@pytest.fixture(scope="module")
def robot_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("robots")
    paths = {}
    for name, chain in {**bench.named_robots(),
                        "panda7_like": bench.panda7_like()}.items():
        p = d / f"{name}.json"
        p.write_text(serialize_chain(chain))
        paths[name] = str(p)
    bad = d / "bad.json"
    bad.write_text("{not json")
    paths["bad"] = str(bad)
    skew = d / "skew.json"
    rng = np.random.default_rng(99)
    from autoik.chain import JointAxis, KinematicChain
    from autoik.geom import Pose, unit

    joints = []
    prev = None
    while len(joints) < 6:
        h = unit(rng.normal(size=3))
        if prev is not None and 1.0 - abs(h @ prev) < 1e-2:
            continue
        prev = h
        joints.append(JointAxis(h, rng.uniform(-1, 1, 3)))
    skew.write_text(serialize_chain(KinematicChain(tuple(joints),
                                                   Pose.identity())))
    paths["skew"] = str(skew)
    return paths


def pose_arg(pose):
    vals = list(pose.rotation.flatten()) + list(pose.translation)
    return " ".join(format(v, ".17g") for v in vals)


def test_derive_ur5_native(robot_files, capsys):
    rc = main(["derive", robot_files["ur5_like"]])
    out = capsys.readouterr().out
    assert rc == 0
    assert "class: ThreeParallel_234" in out
    assert "inverted: false" in out
    assert "derivation_us:" in out


def test_derive_urdf():
    rc = main(["derive", "robots/ur5.urdf", "--base", "base_link",
               "--tip", "ee_link"])
    assert rc == 0


def test_derive_unsolvable_exit_2(robot_files, capsys):
    rc = main(["derive", robot_files["skew"]])
    assert rc == 2
    assert "Unsolvable" in capsys.readouterr().out


def test_derive_malformed_exit_1(robot_files, capsys):
    rc = main(["derive", robot_files["bad"]])
    assert rc == 1
    assert "error" in capsys.readouterr().err


def test_solve_roundtrip_contains_truth(robot_files, capsys):
    c = bench.ur5_like()
    q = np.array([0.4, -0.9, 1.3, 0.2, 1.1, -0.5])
    rc = main(["solve", robot_files["ur5_like"], "--pose",
               pose_arg(fk(c, q))])
    out = capsys.readouterr().out
    assert rc == 0
    doc = json.loads(out)
    assert any(
        max(abs(normalize_angle(a - b)) for a, b in zip(s["theta"], q)) <= 1e-6
        for s in doc["solutions"])


def test_solve_quaternion_pose(robot_files, capsys):
    c = bench.puma_like()
    pose = fk(c, np.zeros(6))
    r = pose.rotation
    qw = math.sqrt(1 + np.trace(r)) / 2
    qx = (r[2, 1] - r[1, 2]) / (4 * qw)
    qy = (r[0, 2] - r[2, 0]) / (4 * qw)
    qz = (r[1, 0] - r[0, 1]) / (4 * qw)
    t = pose.translation
    arg = f"{t[0]} {t[1]} {t[2]} {qw} {qx} {qy} {qz}"
    rc = main(["solve", robot_files["puma_like"], "--pose", arg])
    doc = json.loads(capsys.readouterr().out)
    assert rc == 0
    assert any(max(abs(x) for x in s["theta"]) < 1e-6 for s in doc["solutions"])
    # A denormalized quaternion still solves, with a warning on stderr.
    scaled = f"{t[0]} {t[1]} {t[2]} {1.01 * qw} {1.01 * qx} {1.01 * qy} {1.01 * qz}"
    rc = main(["solve", robot_files["puma_like"], "--pose", scaled])
    captured = capsys.readouterr()
    assert rc == 0
    assert "normalizing" in captured.err


def test_solve_unreachable_exit_3(robot_files, capsys):
    rc = main(["solve", robot_files["ur5_like"], "--pose",
               "9 9 9 1 0 0 0"])
    out = capsys.readouterr().out
    assert rc == 3
    doc = json.loads(out)
    assert len(doc["solutions"]) == 1
    assert not doc["solutions"][0]["exact"]


def test_solve_7r_without_lock_exit_2(robot_files, capsys):
    rc = main(["solve", robot_files["panda7_like"], "--pose",
               "0.1 0 1 1 0 0 0"])
    assert rc == 2
    assert "lock" in capsys.readouterr().err.lower()


def test_solve_7r_with_lock(robot_files, capsys):
    c = bench.panda7_like()
    q = np.array([0.2, -0.5, 0.5, 0.8, -1.0, 0.6, 1.2])
    rc = main(["solve", robot_files["panda7_like"], "--pose",
               pose_arg(fk(c, q)), "--lock", "3=0.5", "--csv"])
    out = capsys.readouterr().out
    assert rc == 0
    lines = out.splitlines()
    assert lines[0].startswith("index,theta1")
    assert len(lines[0].split(",")) == 1 + 7 + 3


def test_solve_csv_output_to_file(robot_files, tmp_path, capsys):
    c = bench.ur5_like()
    out_path = tmp_path / "sol.csv"
    rc = main(["solve", robot_files["ur5_like"], "--pose",
               pose_arg(fk(c, np.zeros(6))), "--csv", "--out", str(out_path)])
    assert rc == 0
    assert out_path.read_text().startswith("index,theta1")


def test_solve_bad_pose_exit_1(robot_files, capsys):
    rc = main(["solve", robot_files["ur5_like"], "--pose", "1 2 3"])
    assert rc == 1


def test_roundtrip_command(robot_files, capsys):
    rc = main(["roundtrip", robot_files["puma_like"], "-n", "50",
               "--seed", "7"])
    out = capsys.readouterr().out
    assert rc == 0
    doc = json.loads(out)
    assert doc[0]["recovery_rate"] == 1.0


def test_bench_command(capsys):
    rc = main(["bench", "random", "--count", "30", "--seed", "1"])
    out = capsys.readouterr().out
    assert rc == 0
    doc = json.loads(out)
    assert doc["classified_solvable"] == 30
    assert doc["roundtrip_ok"] == 30


def test_bench_zero_count(capsys):
    rc = main(["bench", "random", "--count", "0", "--seed", "1"])
    assert rc == 0


def test_tol_override_env(robot_files, capsys, monkeypatch):
    # A generous tolerance scale flips an unreachable pose to "exact".
    monkeypatch.setenv("IK_TOL_OVERRIDE", "1e12")
    rc = main(["solve", robot_files["ur5_like"], "--pose", "0.3 0.2 0.4 1 0 0 0"])
    monkeypatch.delenv("IK_TOL_OVERRIDE")
    capsys.readouterr()
    assert rc == 0


def test_cli_subprocess_entry():
    proc = subprocess.run(
        [sys.executable, "-m", "autoik", "derive", "robots/ur5_like.json"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "class: ThreeParallel_234" in proc.stdout
    assert proc.stderr == ""
