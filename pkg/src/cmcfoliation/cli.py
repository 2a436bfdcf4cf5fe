"""Command-line front end: ``cmcfoliation {profile,reeb,torus2d,verify,export}``.

Every command writes its files plus a ``manifest.json`` into ``--out`` and prints
a one-line JSON summary.  Exit codes: 0 pass, 1 verification failure,
2 usage/precondition, 3 I/O, 4 leafwise-vanishing transverse form.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from . import profile_ode as po
from . import radial_metric as rm
from . import reeb_foliation as rf
from . import torus2d as t2
from .mesh import write_obj
from .report import VerificationReport, evaluate

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_IO, EXIT_VANISHING = 0, 1, 2, 3, 4
MANIFEST = "manifest.json"
EXPORT_OBJECTS = ("profile", "graph", "trajectory", "leaf", "component", "turb")


class UsageError(ValueError):
    """Bad flag combination or malformed value."""


class Failure(Exception):
    def __init__(self, code: int, payload: dict) -> None:
        super().__init__(payload.get("message", ""))
        self.code = code
        self.payload = payload


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

# name -> (type, default); names use underscores, flags use dashes
PARAMS = {
    "profile": {"n": (int, 3), "H": (float, 1.0), "r0": (float, 0.25), "r1": (float, 0.5),
                "r2": (float, 0.75), "seed": (int, 0)},
    "reeb": {"n": (int, 3), "H": (float, 1.0), "r0": (float, 0.25), "r1": (float, 0.5),
             "r2": (float, 0.75), "lambda": (float, None), "target_volume": (float, None),
             "leaf": (str, None), "resolution": (int, 32), "seed": (int, 0)},
    "torus2d": {"Lx": (float, 4.0), "Nx": (int, 512), "Ny": (int, 128),
                "eps_strip": (float, 0.5), "seed": (int, 0)},
    "export": {"object": (str, "component"), "n": (int, 3), "H": (float, 1.0),
               "r0": (float, 0.25), "r1": (float, 0.5), "r2": (float, 0.75),
               "lambda": (float, 1.0), "leaf": (str, None), "resolution": (int, 32),
               "start": (str, "0.3,0.0"), "max_s": (float, 20.0), "eps": (float, 0.1),
               "sign": (int, 1), "seed": (int, 0)},
}

FLAG_HELP = {
    "n": "ambient dimension (>= 3)", "H": "target mean curvature", "r0": "cap junction radius",
    "r1": "asymptote radius", "r2": "flattening radius", "lambda": "translation period",
    "target_volume": "prescribed cylinder volume (sets lambda)", "Lx": "torus side length",
    "Nx": "grid points in x (multiple of 4)", "Ny": "grid points in y",
    "eps_strip": "half-width of the vertical strips", "seed": "seed for sampled checks",
    "leaf": "leaf to export: graph:Z0 or cylinder:R", "resolution": "mesh resolution",
    "object": "one of " + ", ".join(EXPORT_OBJECTS), "start": "trajectory start r,sigma",
    "max_s": "trajectory arclength", "eps": "turbularization scale", "sign": "+1 or -1",
}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_params(p: argparse.ArgumentParser, cmd: str) -> None:
    for name, (typ, _) in PARAMS[cmd].items():
        p.add_argument(_flag(name), dest=name, type=typ, default=None, help=FLAG_HELP[name])
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--config", default=None, help="INI file with a section per subcommand")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cmcfoliation",
                                 description="CMC foliation constructions and checks")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd, text in (("profile", "build a radial profile and its invariant report"),
                      ("reeb", "build an enlarged Reeb component and export meshes"),
                      ("torus2d", "run the two-dimensional torus pipeline"),
                      ("export", "export geometry without the full verification")):
        _add_params(sub.add_parser(cmd, help=text), cmd)
    v = sub.add_parser("verify", help="re-run the checks recorded in a manifest")
    v.add_argument("manifest", help="path to a manifest.json or its directory")
    return ap


def _read_config(path: str | None, cmd: str) -> dict:
    if path is None:
        return {}
    if not os.path.isfile(path):
        raise FileNotFoundError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep H, Lx, Nx case-sensitive
    cp.read(path)
    if not cp.has_section(cmd):
        return {}
    return {k.replace("-", "_"): v for k, v in cp.items(cmd)}


def resolve_params(cmd: str, args: argparse.Namespace) -> dict:
    """Built-in defaults, overridden by the config file, overridden by flags."""
    spec = PARAMS[cmd]
    conf = _read_config(args.config, cmd)
    unknown = sorted(set(conf) - set(spec))
    if unknown:
        raise UsageError(f"unknown key(s) in [{cmd}]: {', '.join(unknown)}")
    out = {}
    for name, (typ, default) in spec.items():
        val = getattr(args, name)
        if val is None and name in conf:
            try:
                val = typ(conf[name])
            except ValueError as exc:
                raise UsageError(f"bad value for {name}: {conf[name]!r}") from exc
        out[name] = default if val is None else val
    return out


def _parse_leaf(text: str) -> tuple[str, float]:
    kind, _, val = text.partition(":")
    if kind not in ("graph", "cylinder") or not val:
        raise UsageError("--leaf expects graph:Z0 or cylinder:R")
    try:
        return kind, float(val)
    except ValueError as exc:
        raise UsageError(f"bad leaf parameter {val!r}") from exc


def _check_profile_params(p: dict) -> None:
    if p["n"] < 3:
        raise UsageError("n must be at least 3")
    if not p["H"] > 0.0:
        raise UsageError("H must be positive")
    if not 0.0 < p["r0"] < p["r1"] < p["r2"] < 1.0:
        raise UsageError("need 0 < r0 < r1 < r2 < 1")


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _manifest(kind: str, params: dict, rep: VerificationReport, files: list[str],
              extra: dict | None = None) -> dict:
    m = {"kind": kind, "version": __version__, "params": params, "seed": params.get("seed", 0),
         "files": sorted(files), "checks": rep.to_list(), "passed": rep.passed}
    m.update(params)
    m.update(extra or {})
    return m


# ---------------------------------------------------------------------------
# commands: each returns (manifest, report)
# ---------------------------------------------------------------------------

def run_profile(p: dict, out: Path):
    _check_profile_params(p)
    prof = rm.build_profile(p["n"], p["H"], p["r0"], p["r1"], p["r2"])
    rep = rm.verify_profile(prof)
    rm.write_profile_csv(out / "profile.csv", prof)
    _write_text(out / "profile.json", prof.to_json() + "\n")
    extra = {"r0_effective": prof.r0, "c": prof.c}
    return _manifest("profile", p, rep, ["profile.csv", "profile.json"], extra), rep


def run_reeb(p: dict, out: Path):
    _check_profile_params(p)
    if p["lambda"] is not None and p["target_volume"] is not None:
        raise UsageError("--lambda and --target-volume are mutually exclusive")
    if p["resolution"] < 4:
        raise UsageError("resolution must be at least 4")
    leaf_spec = _parse_leaf(p["leaf"]) if p["leaf"] else None
    prof = rm.build_profile(p["n"], p["H"], p["r0"], p["r1"], p["r2"])
    if p["target_volume"] is not None:
        lam = rf.choose_lambda(p["target_volume"], prof)
    else:
        lam = 1.0 if p["lambda"] is None else p["lambda"]
    comp = rf.build_enlarged_reeb(lam=lam, profile=prof, seed=p["seed"])
    rep = comp.checks
    vol = rf.cylinder_volume(prof.r2, prof, lam)
    rep.add("lambda_roundtrip", rf.choose_lambda(vol, prof), lam, 1e-10, "DERIVED",
            relative=True)
    if p["target_volume"] is not None:
        rep.add("volume_matches_target", vol, p["target_volume"], 1e-10, "DERIVED",
                relative=True)
    files = ["component.obj"]
    write_obj(out / "component.obj", rf.component_mesh(comp, p["resolution"]))
    if leaf_spec is not None:
        kind, val = leaf_spec
        leaf = comp.graph_leaf(val) if kind == "graph" else comp.cylinder_leaf(val)
        zc = comp.z_graph(prof.r1 - 1e-4)
        write_obj(out / "leaf.obj", rf.leaf_mesh(comp, leaf, p["resolution"],
                                                 z_range=(0.0, zc)))
        files.append("leaf.obj")
        if kind == "cylinder":
            verts = np.loadtxt(out / "leaf.obj", comments=("#", "f"), usecols=(1, 2))
            rep.bound("leaf_obj_radius_spread",
                      np.max(np.abs(np.hypot(verts[:, 0], verts[:, 1]) - val)), 1e-12,
                      "TRIVIAL")
    extra = {"r0_effective": prof.r0, "lambda": lam, "volume": vol}
    return _manifest("reeb", p, rep, files, extra), rep


def run_torus2d(p: dict, out: Path):
    model = t2.build_model(p["Lx"], p["Nx"], p["Ny"], p["eps_strip"])
    rep = t2.verify_model(model, seed=p["seed"])
    t2.write_leaf_report(out / "leaf_report.csv", model.leaf_rows)
    ny = model.torus.Ny
    g = model.metric.g
    # matrices with one row per grid line y_j; f and omega are y-independent
    fields = {"f": model.f.grid().T, "w": np.tile(model.omega.w[None, :], (ny, 1)),
              "omega_a": np.tile(model.omega.a[None, :], (ny, 1)),
              "omega_b": np.tile(model.omega.b[None, :], (ny, 1)),
              "g11": g[..., 0, 0].T, "g12": g[..., 0, 1].T, "g22": g[..., 1, 1].T}
    files = ["leaf_report.csv"]
    for name, arr in fields.items():
        t2.write_grid_csv(out / f"{name}.csv", arr)
        files.append(f"{name}.csv")
    extra = {"margins": model.margins()}
    return _manifest("torus2d", p, rep, files, extra), rep


def _export_files(p: dict, out: Path) -> tuple[list[str], VerificationReport]:
    obj = p["object"]
    if obj not in EXPORT_OBJECTS:
        raise UsageError(f"unknown object {obj!r}; choose from {', '.join(EXPORT_OBJECTS)}")
    rep = VerificationReport()
    if obj == "turb":
        if p["sign"] not in (-1, 1):
            raise UsageError("sign must be +1 or -1")
        surf = rf.turb_model_surface(p["eps"], p["sign"], n=3)
        write_obj(out / "turb.obj", rf.turb_mesh(surf, p["resolution"]))
        return ["turb.obj"], rf.verify_turb(surf, seed=p["seed"])
    _check_profile_params(p)
    prof = rm.build_profile(p["n"], p["H"], p["r0"], p["r1"], p["r2"])
    if obj == "profile":
        rm.write_profile_csv(out / "profile.csv", prof)
        return ["profile.csv"], rep
    if obj == "graph":
        tr = po.graph_integrate(prof, num=2001)
        tr.write_csv(out / "graph.csv")
        rep.bound("graph_max_abs_J", np.max(np.abs(tr.J)), 1e-8, "PAPER")
        return ["graph.csv"], rep
    if obj == "trajectory":
        try:
            r_start, sigma = (float(v) for v in p["start"].split(","))
        except ValueError as exc:
            raise UsageError("--start expects r,sigma") from exc
        tr = po.integrate(po.ProfileState(0.0, r_start, 0.0, sigma), prof, prof.H,
                          po.StopRule(max_s=p["max_s"]))
        tr.write_csv(out / "trajectory.csv")
        rep.bound("first_integral_drift", tr.max_J_drift, 1e-8, "PAPER")
        return ["trajectory.csv"], rep
    comp = rf.build_enlarged_reeb(lam=p["lambda"], profile=prof, verify=False)
    if obj == "component":
        write_obj(out / "component.obj", rf.component_mesh(comp, p["resolution"]))
        return ["component.obj"], rep
    if not p["leaf"]:
        raise UsageError("object 'leaf' needs --leaf")
    kind, val = _parse_leaf(p["leaf"])
    leaf = comp.graph_leaf(val) if kind == "graph" else comp.cylinder_leaf(val)
    zc = comp.z_graph(prof.r1 - 1e-4)
    write_obj(out / "leaf.obj", rf.leaf_mesh(comp, leaf, p["resolution"], z_range=(0.0, zc)))
    return ["leaf.obj"], rep


def run_export(p: dict, out: Path):
    files, rep = _export_files(p, out)
    digests = {f: _sha256(out / f) for f in files}
    return _manifest("export", p, rep, files, {"sha256": digests}), rep


RUNNERS = {"profile": run_profile, "reeb": run_reeb, "torus2d": run_torus2d,
           "export": run_export}


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def compare_reports(stored: list[dict], fresh: VerificationReport) -> dict:
    """Re-evaluate fresh values against the stored references and tolerances."""
    failures, rows = [], []
    fresh_names = {c.name for c in fresh.checks}
    for d in stored:
        name = d["name"]
        try:
            c = fresh[name]
        except KeyError:
            failures.append(name)
            rows.append({"name": name, "status": "missing"})
            continue
        ok = evaluate(c.value, float(d["reference"]), float(d["tolerance"]),
                      bool(d.get("relative", False)))
        ok = ok and c.provenance == d["provenance"]
        if not ok:
            failures.append(name)
        rows.append({"name": name, "status": "pass" if ok else "fail", "value": c.value,
                     "stored_value": d["value"], "reference": d["reference"],
                     "tolerance": d["tolerance"]})
    extra = sorted(fresh_names - {d["name"] for d in stored})
    return {"checks": rows, "failures": failures, "unrecorded": extra}


def run_verify(path: str) -> tuple[dict, int]:
    mpath = Path(path)
    if mpath.is_dir():
        mpath = mpath / MANIFEST
    if not mpath.is_file():
        raise Failure(EXIT_USAGE, {"error": "MissingManifest",
                                   "message": f"manifest not found: {mpath}"})
    try:
        man = json.loads(mpath.read_text())
        kind, params, stored = man["kind"], man["params"], man["checks"]
    except (ValueError, KeyError, TypeError) as exc:
        raise Failure(EXIT_USAGE, {"error": "BadManifest", "message": str(exc)}) from exc
    if kind not in RUNNERS:
        raise Failure(EXIT_USAGE, {"error": "BadManifest",
                                   "message": f"unknown manifest kind {kind!r}"})
    with tempfile.TemporaryDirectory() as tmp:
        fresh_man, fresh = RUNNERS[kind](dict(params), Path(tmp))
        if kind == "export":
            for f, digest in sorted(man.get("sha256", {}).items()):
                fresh.flag(f"sha256_{f}", fresh_man["sha256"].get(f) == digest, "TRIVIAL")
                stored = stored + [{"name": f"sha256_{f}", "value": 1.0, "reference": 1.0,
                                    "tolerance": 0.0, "provenance": "TRIVIAL"}]
    diff = compare_reports(stored, fresh)
    code = EXIT_PASS if not diff["failures"] else EXIT_FAIL
    return {"kind": "verify", "manifest_kind": kind, **diff,
            "status": "pass" if code == EXIT_PASS else "fail"}, code


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _error(code: int, exc: BaseException, **extra) -> Failure:
    return Failure(code, {"error": type(exc).__name__, "message": str(exc), **extra})


def _dispatch(args: argparse.Namespace) -> tuple[dict, int]:
    if args.command == "verify":
        return run_verify(args.manifest)
    params = resolve_params(args.command, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    man, rep = RUNNERS[args.command](params, out)
    _write_text(out / MANIFEST, _dump(man))
    summary = {"kind": args.command, "status": "pass" if rep.passed else "fail",
               "failures": [c.name for c in rep.failures()], "n_checks": len(rep.checks),
               "files": man["files"] + [MANIFEST]}
    return summary, EXIT_PASS if rep.passed else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            summary, code = _dispatch(args)
        except Failure:
            raise
        except t2.LeafwiseVanishingError as exc:
            raise _error(EXIT_VANISHING, exc, index=exc.index, x=exc.x,
                         value=exc.value) from exc
        except (UsageError, rm.DomainError, po.PreconditionError,
                rm.ProfileConstructionError) as exc:
            raise _error(EXIT_USAGE, exc) from exc
        except OSError as exc:
            raise _error(EXIT_IO, exc) from exc
    except Failure as f:
        sys.stderr.write(json.dumps({**f.payload, "exit_code": f.code}, sort_keys=True) + "\n")
        return f.code
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    if code == EXIT_FAIL:
        sys.stderr.write(json.dumps({"error": "VerificationFailure", "exit_code": code,
                                     "failed_checks": summary["failures"]},
                                    sort_keys=True) + "\n")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
