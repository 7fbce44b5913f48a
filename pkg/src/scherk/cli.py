"""Command line entry point.

    scherk --config run.json --out outdir [--tol-override name=value ...]

The JSON config names the command (``solve``, ``mesh``, ``sweep``,
``plateau`` or ``verify``) and must carry ``"version": 1``.  Unknown fields
are rejected.  Exit status: 0 when every declared check passes, 1 when a
check fails or a pipeline stage raises, 2 for configuration errors.  Errors
are printed to stderr tagged with the stage that raised them.

Reports are written with sorted keys and no timestamps, so the same config
always produces byte-identical artifacts.
"""
import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import ScherkError, ConfigError
from .families import (OUT_OF_SCOPE, build_weierstrass, params_from_dict,
                       params_to_dict, end_constraint_residuals, M3Params)
from .solvers import FamilySpec, solve_family, sweep, sign_changes, sweep_csv
from .periods import verify_closed
from . import mesh as meshmod
from . import plateau as plat

CONFIG_VERSION = 1
COMMANDS = ("solve", "mesh", "sweep", "plateau", "verify")
FAMILIES = ("m2plus", "mkplus", "m3mm", "m3pp", "catenoid", "scherk")

TOLERANCES = {
    "closure": 1e-8,        # period residual relative to the end scale
    "quad": 1e-11,          # quadrature
    "root": None,           # root finder (None: solver default)
    "end": 1e-10,           # |g^2(end) - 1|
    "mesh_closure": 1e-8,   # non-tree edge defect relative to mesh scale
    "weld": 1e-7,           # welding relative to mesh scale
    "planar": 1e-6,         # planar boundary curves relative to mesh scale
    "oracle": 1e-5,         # closed-form oracle deviation
    "plateau": None,        # graph residual (None: 1e-10 * n)
    "neck": 0.05,           # relative deviation of the neck distance from 1/ell
}

SCHEMA = {
    "version": None, "command": None, "family": None, "k": None, "fixed": None,
    "box": None, "params": None, "e1_root": None, "polish": None,
    "tolerances": set(TOLERANCES),
    "mesh": {"resolution", "region", "end_radius", "reflect", "tiles", "format", "tree"},
    "sweep": {"n"},
    "plateau": {"delta", "ell", "heights", "ladder", "grid", "signs", "band"},
    "outputs": {"report", "mesh", "csv"},
}

DEFAULT_OUTPUTS = {"report": "report.json", "mesh": "mesh.obj", "csv": "data.csv"}


# --------------------------------------------------------------------------
# Config
# --------------------------------------------------------------------------

def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}").tagged("config")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}").tagged("config")
    return cfg


def validate_config(cfg):
    """Check the config and fill defaults; returns a new dict."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    if "version" not in cfg:
        raise ConfigError("config field 'version' is required")
    if cfg["version"] != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {cfg['version']!r} (expected {CONFIG_VERSION})")
    cmd = cfg.get("command")
    if cmd not in COMMANDS:
        raise ConfigError(f"command must be one of {list(COMMANDS)}, got {cmd!r}")
    for key, allowed in SCHEMA.items():
        if isinstance(allowed, set) and key in cfg:
            if not isinstance(cfg[key], dict):
                raise ConfigError(f"'{key}' must be an object")
            bad = set(cfg[key]) - allowed
            if bad:
                raise ConfigError(f"unknown fields in '{key}': {sorted(bad)}")
    fam = cfg.get("family")
    if fam in OUT_OF_SCOPE:
        raise ConfigError(OUT_OF_SCOPE[fam])
    if cmd != "plateau":
        if fam not in FAMILIES:
            raise ConfigError(f"unknown family {fam!r}")
    out = dict(cfg)
    tol = dict(TOLERANCES)
    tol.update(cfg.get("tolerances", {}))
    for k, v in tol.items():
        if v is None:
            continue
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0 or not math.isfinite(v):
            raise ConfigError(f"tolerance {k!r} must be a positive number, got {v!r}")
    out["tolerances"] = tol
    out["outputs"] = {**DEFAULT_OUTPUTS, **cfg.get("outputs", {})}
    if "params" in cfg:
        out["params_obj"] = params_from_dict(dict(cfg["params"], family=cfg["params"].get("family", fam)))
    return out


def apply_overrides(cfg, overrides):
    cfg = dict(cfg)
    tol = dict(cfg.get("tolerances", {}))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"--tol-override expects name=value, got {item!r}")
        name, val = item.split("=", 1)
        if name not in TOLERANCES:
            raise ConfigError(f"unknown tolerance {name!r}")
        try:
            tol[name] = float(val)
        except ValueError:
            raise ConfigError(f"tolerance {name!r}: not a number: {val!r}")
    cfg["tolerances"] = tol
    return cfg


def family_spec(cfg):
    tol = cfg["tolerances"]
    kw = dict(family=cfg["family"], fixed=dict(cfg.get("fixed", {})), box=dict(cfg.get("box", {})),
              tol=tol["closure"], quad_tol=tol["quad"], root_tol=tol["root"],
              e1_root=cfg.get("e1_root", "ordered"), polish=bool(cfg.get("polish", False)))
    if "k" in cfg:
        kw["k"] = int(cfg["k"])
    if cfg["family"] == "m2plus" and "e1" not in kw["fixed"]:
        kw["fixed"]["e1"] = 2.0
    return FamilySpec(**kw)


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def dumps(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def _write(path, text, mode="w"):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, mode, newline="\n" if mode == "w" else None) as fh:
        fh.write(text)


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def _params(cfg):
    if "params_obj" in cfg:
        return cfg["params_obj"], None
    sol = solve_family(family_spec(cfg))
    return sol.params, sol


def _check(name, value, tol, le=True):
    ok = bool(value <= tol) if le else bool(value >= tol)
    return {"name": name, "value": value, "tol": tol, "passed": ok}


def run_solve(cfg, out):
    if "params_obj" in cfg:
        p = cfg["params_obj"]
        d = build_weierstrass(p)
        rep = verify_closed(d, tol=cfg["tolerances"]["closure"], quad_tol=cfg["tolerances"]["quad"])
        report = {"family": d.family, "params": params_to_dict(p), "closure": rep.to_dict()}
        passed = rep.passed
    else:
        sol = solve_family(family_spec(cfg))
        report = sol.to_dict()
        passed = sol.report.passed
    report["end_residuals"] = end_constraint_residuals(build_weierstrass(_params_from_report(report)))
    report["passed"] = passed
    _write(out / cfg["outputs"]["report"], dumps(report))
    return passed


def _params_from_report(report):
    return params_from_dict(report["params"])


def run_mesh(cfg, out):
    p, _ = _params(cfg)
    d = build_weierstrass(p)
    tol = cfg["tolerances"]
    mc = cfg.get("mesh", {})
    m, pm = meshmod.build_mesh(d, int(mc.get("resolution", 16)), mc.get("region"),
                               mc.get("end_radius"), mc.get("tree", "bfs"),
                               closure_tol=tol["mesh_closure"])
    checks = []
    curves = meshmod.boundary_curve_report(m)
    planar = max((c["plane_residual"] for c in curves.values()), default=0.0)
    piece = m
    if mc.get("reflect", False):
        piece = meshmod.fundamental_piece(m, 3, tol["weld"], tol["planar"])
        checks.append(_check("weld_gap", piece.info["weld_gap"], tol["weld"] * piece.scale))
    tiles = mc.get("tiles")
    if tiles and tuple(tiles) != (1, 1):
        gens = meshmod.translation_vectors(d, tol["quad"])
        if len(gens) < 2:
            raise ConfigError("tiling needs two lattice vectors; this family has "
                              f"{len(gens)}").tagged("mesh")
        piece = meshmod.tile_periodic(piece, gens[1], gens[0], tuple(tiles))
    if d.family in ("catenoid", "scherk"):
        checks.append(_check("oracle", meshmod.oracle_residual(m, d.family), tol["oracle"]))
    checks.append(_check("mesh_closure", m.info["closure_defect"], tol["mesh_closure"] * m.scale))
    fmt = mc.get("format", "obj")
    path = out / cfg["outputs"]["mesh"]
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "ply":
        exp = meshmod.export_ply(piece, path)
    elif fmt == "obj":
        exp = meshmod.export_obj(piece, path)
    else:
        raise ConfigError(f"unknown mesh format {fmt!r}")
    exp["path"] = cfg["outputs"]["mesh"]
    report = {
        "family": d.family, "params": params_to_dict(p),
        "param_mesh": {"nodes": len(pm.nodes), "triangles": len(pm.triangles),
                       "labels": pm.labels(), "pieces": pm.curve_pieces},
        "boundary_curves": curves, "max_plane_residual": planar,
        "mesh": {"vertices": len(piece.vertices), "faces": len(piece.triangles),
                 "scale": piece.scale, "invariant_violations": piece.validate(),
                 "mirrors": piece.info.get("mirrors", [])},
        "export": exp, "checks": checks,
        # reported only: embeddedness is not certified numerically
        "intersection_spot_check": meshmod.intersection_spot_check(piece, max_triangles=2000),
        "passed": all(c["passed"] for c in checks),
    }
    _write(out / cfg["outputs"]["report"], dumps(report))
    return report["passed"]


def run_sweep(cfg, out):
    spec = family_spec(cfg)
    if spec.family not in ("m2plus", "mkplus"):
        raise ConfigError("sweep is defined for the one-parameter families (m2plus, mkplus)")
    n = int(cfg.get("sweep", {}).get("n", 50))
    rows = sweep(spec, n)
    _write(out / cfg["outputs"]["csv"], sweep_csv(rows))
    sc = sign_changes(rows)
    report = {"family": spec.family, "n": n, "fixed": spec.fixed,
              "interval": [rows[0][0], rows[-1][0]], "sign_changes": sc,
              "csv": cfg["outputs"]["csv"], "passed": len(sc) == 1}
    _write(out / cfg["outputs"]["report"], dumps(report))
    return report["passed"]


def plateau_problem(cfg):
    pc = cfg.get("plateau", {})
    grid = tuple(pc.get("grid", (128, 128)))
    ladder = tuple(pc.get("ladder", (2, 4, 6, 8)))
    kw = dict(delta=float(pc.get("delta", 1.0)), ell=int(pc.get("ell", 2)),
              heights=tuple(pc.get("heights", (0.0, 0.0, 0.0))), n=float(ladder[-1]), grid=grid)
    if "signs" in pc:
        kw["signs"] = tuple(int(s) for s in pc["signs"])
    try:
        return plat.JSProblem(**kw), ladder
    except ValueError as exc:
        raise ConfigError(str(exc))


def run_plateau(cfg, out):
    prob, ladder = plateau_problem(cfg)
    tol = cfg["tolerances"]
    band = cfg.get("plateau", {}).get("band")
    if band is not None and (len(band) != 2 or not band[0] < band[1]):
        raise ConfigError(f"plateau.band must be [lo, hi] with lo < hi, got {band!r}")
    adm = plat.check_admissible(prob)
    rows = []
    sols = []
    for n in ladder:
        sol = plat.solve_graph(prob.with_n(n), tol=tol["plateau"])
        sols.append(sol)
        prof = plat.normal_profile(sol)
        try:
            neck = plat.neck_distance(sol, band=None if band is None else tuple(band))
        except ScherkError:
            neck = None
        rows.append({"n": n, "residual": sol.residual, "iterations": sol.iterations,
                     "max_abs_u": float(np.max(np.abs(sol.u))),
                     "total_abs_curvature": plat.total_abs_curvature(sol),
                     "neck_distance": neck,
                     "normal_deviation": prof.to_dict()["deviation"],
                     "top_half_nonincreasing": prof.top_half_nonincreasing(),
                     "strip_signs": prof.strip_signs})
    top = rows[-1]
    bound = math.pi * (prob.ell + 1)
    target = 1.0 / prob.ell
    alternating = all(s == prob.signs[i] for i, s in enumerate(top["strip_signs"]))
    checks = [
        {"name": "admissible", "passed": adm.admissible},
        _check("curvature_bound", top["total_abs_curvature"], bound),
        {"name": "neck_distance", "value": top["neck_distance"], "target": target,
         "tol": tol["neck"],
         "passed": top["neck_distance"] is not None and abs(top["neck_distance"] - target) <= tol["neck"] * target},
        {"name": "normal_profile_nonincreasing", "passed": top["top_half_nonincreasing"]},
        {"name": "strip_sign_pattern", "value": top["strip_signs"], "passed": alternating},
        {"name": "max_principle", "passed": all(r["max_abs_u"] <= r["n"] + 1e-12 for r in rows)},
    ]
    report = {"problem": {"delta": prob.delta, "ell": prob.ell, "grid": list(prob.grid),
                          "heights": list(prob.heights), "signs": list(prob.signs)},
              "admissibility": adm.to_dict(), "curvature_bound": bound, "neck_target": target,
              "ladder": rows, "checks": checks, "csv": cfg["outputs"]["csv"],
              "passed": all(c["passed"] for c in checks)}
    _write(out / cfg["outputs"]["csv"], sols[-1].to_csv())
    _write(out / cfg["outputs"]["report"], dumps(report))
    return report["passed"]


def run_verify(cfg, out):
    tol = cfg["tolerances"]
    checks = []
    if cfg["family"] is None:
        raise ConfigError("verify needs a family")
    p, sol = _params(cfg)
    d = build_weierstrass(p)
    rep = sol.report if sol is not None else verify_closed(d, tol=tol["closure"], quad_tol=tol["quad"])
    checks.append(_check("period_closure", rep.max_residual, tol["closure"] * rep.scale))
    ends = end_constraint_residuals(d)
    if ends:
        checks.append(_check("end_constraints", max(ends), tol["end"]))
    if isinstance(p, M3Params):
        zs = (0.31 + 0.47j, -0.83 + 0.22j, 1.7 - 0.6j)
        ident = max(max(abs(d.gSquared(1 / z) * d.gSquared(z) - 1),
                        abs(d.gSquared(-z) * d.gSquared(z) - 1)) for z in zs)
        checks.append(_check("symmetry_identities", float(ident), 1e-10))
    if d.family in ("catenoid", "scherk"):
        m, _ = meshmod.build_mesh(d, 16)
        checks.append(_check("oracle", meshmod.oracle_residual(m, d.family), tol["oracle"]))
    report = {"family": d.family, "params": params_to_dict(p), "closure": rep.to_dict(),
              "checks": checks, "passed": all(c["passed"] for c in checks)}
    _write(out / cfg["outputs"]["report"], dumps(report))
    return report["passed"]


RUNNERS = {"solve": run_solve, "mesh": run_mesh, "sweep": run_sweep,
           "plateau": run_plateau, "verify": run_verify}


def run(cfg, out, overrides=()):
    """Validate and execute a config dict; returns the exit status."""
    cfg = validate_config(apply_overrides(cfg, overrides) if overrides else cfg)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return 0 if RUNNERS[cfg["command"]](cfg, out) else 1


def main(argv=None):
    ap = argparse.ArgumentParser(prog="scherk", description=__doc__.split("\n\n")[0])
    ap.add_argument("--config", required=True, help="JSON config file")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--tol-override", action="append", default=[], metavar="NAME=VAL",
                    help="override a tolerance (repeatable)")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, args.tol_override)
        status = run(cfg, args.out)
    except ConfigError as exc:
        if exc.stage is None:
            exc.tagged("config")
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScherkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if status:
        print("checks failed; see report", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
