import json
import subprocess
import sys

import pytest

from scherk.cli import main, validate_config, TOLERANCES
from scherk.errors import ConfigError


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def report(out, name="report.json"):
    return json.loads((out / name).read_text())


def test_solve_m2plus(tmp_path):
    cfg = {"version": 1, "command": "solve", "family": "m2plus", "fixed": {"e1": 2.0}}
    assert main(["--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 0
    r = report(tmp_path / "o")
    assert r["passed"]
    assert max(r["end_residuals"]) <= 1e-10


def test_solve_m3mm(tmp_path):
    cfg = {"version": 1, "command": "solve", "family": "m3mm", "fixed": {"s1": 1.5},
           "box": {"v1": [11.0, 15.0], "v2": [2.1, 2.45]}}
    assert main(["--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 0
    assert report(tmp_path / "o")["passed"]


def test_out_of_scope_family(tmp_path, capsys):
    cfg = {"version": 1, "command": "solve", "family": "m1pm"}
    assert main(["--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "family has no Weierstrass data (out of scope)" in err
    assert "[config]" in err


@pytest.mark.parametrize("cfg, msg", [
    ({"command": "solve", "family": "catenoid"}, "version"),
    ({"version": 2, "command": "solve", "family": "catenoid"}, "version"),
    ({"version": 1, "command": "solve", "family": "catenoid", "colour": 1}, "unknown"),
    ({"version": 1, "command": "mesh", "family": "catenoid", "mesh": {"res": 3}}, "unknown"),
    ({"version": 1, "command": "solve", "family": "catenoid", "tolerances": {"closure": -1}}, "positive"),
    ({"version": 1, "command": "fly", "family": "catenoid"}, "command"),
    ({"version": 1, "command": "solve", "family": "m9"}, "family"),
])
def test_config_errors(tmp_path, capsys, cfg, msg):
    assert main(["--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 2
    assert msg in capsys.readouterr().err


def test_unreadable_config(tmp_path):
    assert main(["--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2
    (tmp_path / "bad.json").write_text("{")
    assert main(["--config", str(tmp_path / "bad.json"), "--out", str(tmp_path)]) == 2


def test_validate_fills_defaults():
    cfg = validate_config({"version": 1, "command": "verify", "family": "catenoid"})
    assert cfg["tolerances"] == TOLERANCES
    assert cfg["outputs"]["report"] == "report.json"
    with pytest.raises(ConfigError):
        validate_config([1, 2])


def test_tol_override_makes_check_fail(tmp_path, capsys):
    cfg = write(tmp_path, {"version": 1, "command": "solve", "family": "m2plus"})
    assert main(["--config", cfg, "--out", str(tmp_path / "o"),
                 "--tol-override", "closure=1e-30"]) == 1
    assert "checks failed" in capsys.readouterr().err
    assert main(["--config", cfg, "--out", str(tmp_path), "--tol-override", "bogus=1"]) == 2
    assert main(["--config", cfg, "--out", str(tmp_path), "--tol-override", "closure"]) == 2


def test_byte_identical_reports(tmp_path):
    cfg = write(tmp_path, {"version": 1, "command": "mesh", "family": "catenoid",
                           "mesh": {"resolution": 8, "region": "eighth", "reflect": True}})
    for d in ("a", "b"):
        assert main(["--config", cfg, "--out", str(tmp_path / d)]) == 0
    for f in ("report.json", "mesh.obj"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_mesh_m2plus_tiled(tmp_path):
    cfg = {"version": 1, "command": "mesh", "family": "m2plus",
           "mesh": {"resolution": 8, "region": "eighth", "reflect": True, "tiles": [2, 2],
                    "format": "ply"},
           "outputs": {"mesh": "m2.ply"}}
    assert main(["--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 0
    r = report(tmp_path)
    assert r["max_plane_residual"] <= 1e-6 * r["mesh"]["scale"]
    assert r["mesh"]["invariant_violations"] == []
    assert (tmp_path / "m2.ply").read_bytes().startswith(b"ply\n")


def test_mesh_tiling_needs_lattice(tmp_path):
    cfg = {"version": 1, "command": "mesh", "family": "catenoid",
           "mesh": {"resolution": 8, "tiles": [2, 2]}}
    assert main(["--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 2


def test_sweep(tmp_path):
    cfg = {"version": 1, "command": "sweep", "family": "m2plus", "sweep": {"n": 20}}
    assert main(["--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 0
    r = report(tmp_path)
    assert len(r["sign_changes"]) == 1
    assert (tmp_path / "data.csv").read_text().count("\n") == 21


def test_verify_m3mm_from_params(tmp_path, m3_solved):
    from scherk.families import params_to_dict
    cfg = {"version": 1, "command": "verify", "family": "m3mm",
           "params": params_to_dict(m3_solved.params)}
    assert main(["--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 0
    names = {c["name"] for c in report(tmp_path)["checks"]}
    assert names == {"period_closure", "end_constraints", "symmetry_identities"}


def test_verify_scherk_oracle(tmp_path):
    cfg = {"version": 1, "command": "verify", "family": "scherk"}
    assert main(["--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 0
    assert any(c["name"] == "oracle" and c["passed"] for c in report(tmp_path)["checks"])


def test_plateau_neck_trend(tmp_path):
    gaps = []
    for grid in (64, 128):
        cfg = {"version": 1, "command": "plateau",
               "plateau": {"ell": 2, "grid": [grid, grid], "ladder": [2, 8]}}
        out = tmp_path / str(grid)
        status = main(["--config", write(tmp_path, cfg), "--out", str(out)])
        r = report(out)
        assert r["neck_target"] == 0.5
        gaps.append(abs(r["ladder"][-1]["neck_distance"] - 0.5))
    # the 128 grid reaches 1/ell within 5% and the report passes
    assert status == 0
    assert gaps[-1] <= 0.05 * 0.5
    # the neck distance converges toward 1/ell under refinement
    assert gaps[1] < gaps[0]
    assert (out / "data.csv").exists()


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, {"version": 1, "command": "verify", "family": "catenoid"})
    res = subprocess.run([sys.executable, "-m", "scherk", "--config", cfg, "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr


def test_plateau_band_option(tmp_path):
    base = {"version": 1, "command": "plateau", "plateau": {"ell": 2, "grid": [24, 24], "ladder": [4]}}
    main(["--config", write(tmp_path, dict(base, plateau=dict(base["plateau"], band=[3.0, 3.8]))),
          "--out", str(tmp_path / "a")])
    assert report(tmp_path / "a")["ladder"][0]["neck_distance"] is not None
    # a band above the truncation height is empty: no neck value, check fails
    assert main(["--config", write(tmp_path, dict(base, plateau=dict(base["plateau"], band=[5.0, 6.0]))),
                 "--out", str(tmp_path / "b")]) == 1
    assert report(tmp_path / "b")["ladder"][0]["neck_distance"] is None
    assert main(["--config", write(tmp_path, dict(base, plateau=dict(base["plateau"], band=[2.0, 1.0]))),
                 "--out", str(tmp_path / "c")]) == 2
