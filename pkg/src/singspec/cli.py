"""Experiment runner: ``singspec run <config>``, ``singspec gallery <name>``, ``singspec verify``.

Configs are INI files with a strict schema (see ``SCHEMA``).  Unknown
sections or keys are rejected with exit code 2, numerical failures exit
with code 3, and every run writes ``manifest.json`` next to its reports.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .assemble import assemble, write_matrix
from .capacity import almost_polar_verdict, capacity_curve, write_capacity_csv, write_capacity_json
from .errors import ConfigError, NumericalError, SingspecError, UnknownGalleryEntry
from .gallery import gallery, two_subdomain_pair
from .geometry import CutoffSpec, Region, SingularSetSpec, euclidean, stereographic_sphere
from .mesh import build_mesh, grade_toward, refine_uniform, sphere_chart_mesh, write_mesh
from .spectrum import (eigenpairs, ess_proxy_scan, spectrum_report, weyl_fit,
                       write_json, write_spectrum_csv)
from .transplant import (cutoff_interpolants, quasimode_suite, residual_chain, write_chain_csv,
                         write_chain_json)
from .verify import run_all

EXPERIMENTS = ("capacity-curve", "spectrum", "weyl-fit", "ess-proxy", "transplant-chain",
               "gallery-dump")

SCHEMA = {
    "experiment": {"kind": str, "name": str},
    "domain": {"kind": str, "lo": "floats", "hi": "floats", "center": "floats",
               "radius": float, "metric": str},
    "gallery": {"entry": str, "side": str},
    "mesh": {"target_h": float, "grading_ratio": float, "grading_levels": int,
             "truncation_radius": float, "refinements": int},
    "solver": {"k": int, "shift": float, "form_type": str, "dirichlet_boundary": bool,
               "lumped": bool},
    "capacity": {"radii": "floats", "model": str, "point": "floats"},
    "scan": {"radii": "floats", "k": int, "h": float, "refine": bool},
    "transplant": {"lam": float, "n": int, "window": float, "chi_kind": str, "chi_eps": float,
                   "chi_delta": float, "phi_eps": float},
    "output": {"dir": str, "emit_matrices": bool},
}

DEFAULTS = {
    ("mesh", "target_h"): 0.25, ("mesh", "grading_ratio"): 0.5, ("mesh", "grading_levels"): 6,
    ("mesh", "truncation_radius"): 8.0, ("mesh", "refinements"): 0,
    ("solver", "k"): 10, ("solver", "shift"): 0.0, ("solver", "form_type"): "neumann",
    ("solver", "dirichlet_boundary"): False, ("solver", "lumped"): False,
    ("capacity", "radii"): [0.2, 0.1, 0.05, 0.025], ("capacity", "model"): "log-decay-2d",
    ("scan", "radii"): [2.0, 4.0, 8.0, 16.0], ("scan", "k"): 6, ("scan", "h"): 0.1,
    ("scan", "refine"): True,
    ("transplant", "n"): 1, ("transplant", "chi_kind"): "chi-mollified",
    ("transplant", "chi_eps"): 0.3, ("transplant", "chi_delta"): 0.05,
    ("transplant", "phi_eps"): 0.3,
    ("gallery", "side"): "g", ("output", "emit_matrices"): False,
}


class Config:
    """Validated view of an experiment INI file."""

    def __init__(self, path):
        self.path = Path(path).resolve()
        self.text = self.path.read_bytes()
        parser = configparser.ConfigParser(interpolation=None, strict=True)
        parser.optionxform = str
        try:
            parser.read_string(self.text.decode(), source=str(self.path))
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc
        self.values = {}
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]")
            for key, raw in parser.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key '{key}' in [{section}]")
                self.values[(section, key)] = _convert(section, key, raw, SCHEMA[section][key])
        kind = self.get("experiment", "kind")
        if kind not in EXPERIMENTS:
            raise ConfigError(f"experiment kind must be one of {EXPERIMENTS}, got {kind!r}")
        self.kind = kind

    def get(self, section, key, default=None):
        if (section, key) in self.values:
            return self.values[(section, key)]
        if (section, key) in DEFAULTS:
            return DEFAULTS[(section, key)]
        if default is not None:
            return default
        raise ConfigError(f"missing key '{key}' in [{section}]")

    def has(self, section, key=None):
        if key is None:
            return any(s == section for s, _ in self.values)
        return (section, key) in self.values

    def resolve(self, p):
        p = Path(p)
        return p if p.is_absolute() else (self.path.parent / p).resolve()

    @property
    def digest(self):
        return hashlib.sha256(self.text).hexdigest()


def _convert(section, key, raw, kind):
    try:
        if kind == "floats":
            return [float(v) for v in raw.replace(",", " ").split()]
        if kind is bool:
            low = raw.strip().lower()
            if low not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError(raw)
            return low in ("true", "yes", "1")
        return kind(raw.strip())
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for '{key}' in [{section}]") from None


# --------------------------------------------------------------------------
# problem setup

def _entry(cfg):
    name = cfg.get("gallery", "entry")
    if name == "two-subdomain":
        return two_subdomain_pair()
    try:
        return gallery(name)
    except UnknownGalleryEntry as exc:
        raise ConfigError(f"unknown gallery entry '{exc}' in [gallery] entry") from None
    except ValueError as exc:
        raise ConfigError(f"[gallery] entry: {exc}") from None


def _domain_problem(cfg):
    kind = cfg.get("domain", "kind")
    h = cfg.get("mesh", "target_h")
    metric_name = cfg.get("domain", "metric", "euclidean")
    if kind == "sphere-chart":
        return sphere_chart_mesh(h), stereographic_sphere(), None
    if kind == "box":
        region = Region.box(cfg.get("domain", "lo"), cfg.get("domain", "hi"))
    elif kind in ("ball", "disk"):
        region = Region.ball(cfg.get("domain", "center"), cfg.get("domain", "radius"))
    else:
        raise ConfigError(f"unknown [domain] kind {kind!r}")
    if metric_name != "euclidean":
        raise ConfigError("[domain] metric must be euclidean or use kind = sphere-chart")
    mesh = build_mesh(region, h)
    for _ in range(cfg.get("mesh", "refinements")):
        mesh = refine_uniform(mesh)
    return mesh, euclidean(region.dim), None


def _problem(cfg):
    """``(mesh, metric, singular set)`` from [gallery] or [domain]."""
    if cfg.has("gallery"):
        entry = _entry(cfg)
        side = cfg.get("gallery", "side")
        if side not in ("g", "g_prime"):
            raise ConfigError("[gallery] side must be g or g_prime")
        pin = cfg.get("solver", "form_type") == "dirichlet-at-singular"
        mesh = entry.mesh(cfg.get("mesh", "target_h"), levels=cfg.get("mesh", "grading_levels"),
                          pin=pin)
        return mesh, (entry.g if side == "g" else entry.g_prime), entry.singular
    if not cfg.has("domain"):
        raise ConfigError("the experiment needs a [gallery] or a [domain] section")
    mesh, metric, sing = _domain_problem(cfg)
    if cfg.has("capacity", "point"):
        sing = SingularSetSpec.point(cfg.get("capacity", "point"))
        mesh = grade_toward(mesh, sing, cfg.get("mesh", "grading_ratio"),
                            cfg.get("mesh", "grading_levels"))
    return mesh, metric, sing


def _operators(cfg, mesh, metric, lumped=None):
    form = cfg.get("solver", "form_type")
    if form not in ("neumann", "dirichlet-at-singular"):
        raise ConfigError(f"[solver] form_type {form!r} is not neumann or dirichlet-at-singular")
    return assemble(mesh, metric, form, cfg.get("solver", "dirichlet_boundary"),
                    cfg.get("solver", "lumped") if lumped is None else lumped)


# --------------------------------------------------------------------------
# experiments

def _run_capacity(cfg, out, jobs, emit):
    mesh, metric, sing = _problem(cfg)
    if sing is None:
        raise ConfigError("capacity-curve needs a singular set ([capacity] point or a gallery entry)")
    ops = _operators(cfg, mesh, metric)
    _persist(out, mesh, ops, emit)
    curve = capacity_curve(ops, sing, cfg.get("capacity", "radii"), jobs=jobs)
    verdict, fit = almost_polar_verdict(curve, cfg.get("capacity", "model"))
    write_capacity_csv(out / "capacity.csv", curve)
    write_capacity_json(out / "capacity.json", curve, verdict, fit)
    return ["capacity.csv", "capacity.json"]


def _run_spectrum(cfg, out, jobs, emit, weyl=False):
    mesh, metric, _ = _problem(cfg)
    ops = _operators(cfg, mesh, metric)
    _persist(out, mesh, ops, emit)
    rep = eigenpairs(ops, cfg.get("solver", "k"), cfg.get("solver", "shift"), vectors=False)
    write_spectrum_csv(out / "spectrum.csv", rep)
    fit = None
    if weyl:
        volume = float(ops.full_mass.sum())
        fit = weyl_fit(rep, mesh.dim, volume)
    write_json(out / "spectrum.json", spectrum_report(rep, fit))
    return ["spectrum.csv", "spectrum.json"]


def _run_scan(cfg, out, jobs, emit):
    entry = _entry(cfg)
    rep = ess_proxy_scan(entry, cfg.get("scan", "radii"), cfg.get("scan", "k"),
                         cfg.get("scan", "h"), cfg.get("scan", "refine"), jobs=jobs)
    payload = rep.as_dict()
    payload["entry"] = entry.label()
    write_json(out / "ess_proxy.json", payload)
    return ["ess_proxy.json"]


def _run_chain(cfg, out, jobs, emit):
    entry = _entry(cfg)
    mesh = entry.mesh(cfg.get("mesh", "target_h"))
    og = assemble(mesh, entry.g, lumped=True)
    op = assemble(mesh, entry.g_prime, lumped=True)
    _persist(out, mesh, og, emit)
    try:
        chi = CutoffSpec(cfg.get("transplant", "chi_kind"), entry.k_region,
                         cfg.get("transplant", "chi_eps"), cfg.get("transplant", "chi_delta"))
    except ValueError as exc:
        raise ConfigError(f"[transplant]: {exc}") from None
    cut = cutoff_interpolants(mesh, chi, cfg.get("transplant", "phi_eps"))
    lam = cfg.get("transplant", "lam")
    window = cfg.values.get(("transplant", "window"))
    modes = quasimode_suite(og, lam, cfg.get("transplant", "n"), window)
    rep = residual_chain(modes, cut, og, op)
    write_chain_json(out / "chain.json", rep)
    write_chain_csv(out / "chain.csv", rep)
    return ["chain.json", "chain.csv"]


def _run_dump(cfg, out, jobs, emit):
    entry = _entry(cfg)
    (out / "gallery.txt").write_text(gallery_text(entry) + "\n")
    return ["gallery.txt"]


RUNNERS = {
    "capacity-curve": _run_capacity,
    "spectrum": _run_spectrum,
    "weyl-fit": lambda *a: _run_spectrum(*a, weyl=True),
    "ess-proxy": _run_scan,
    "transplant-chain": _run_chain,
    "gallery-dump": _run_dump,
}


def _persist(out, mesh, ops, emit):
    write_mesh(mesh, out / "mesh.smesh")
    if emit:
        write_matrix(out / "stiffness.ssym", ops.stiffness, ops.form_type, ops.metric_label)
        write_matrix(out / "mass.ssym", ops.mass, ops.form_type, ops.metric_label)


def _versions():
    return {"singspec": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _output_dir(arg, cfg=None):
    if arg:
        return Path(arg).resolve()
    if cfg is not None and cfg.has("output", "dir"):
        return cfg.resolve(cfg.get("output", "dir"))
    env = os.environ.get("SINGSPEC_OUT")
    if env:
        return Path(env).resolve()
    return Path("singspec-out").resolve()


def run(config_path, out=None, jobs=1, emit_matrices=False):
    """Run one experiment; returns the process exit code."""
    start = time.perf_counter()
    try:
        cfg = Config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_dir = _output_dir(out, cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    emit = emit_matrices or cfg.get("output", "emit_matrices")
    manifest = {"config": str(cfg.path), "config_sha256": cfg.digest, "experiment": cfg.kind,
                "versions": _versions(), "jobs": jobs}
    code = 0
    try:
        files = RUNNERS[cfg.kind](cfg, out_dir, jobs, emit)
        manifest["status"] = "ok"
        manifest["reports"] = files
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        manifest["status"] = "config-error"
        manifest["error"] = {"type": "ConfigError", "message": str(exc)}
        code = 2
    except (NumericalError, SingspecError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        manifest["status"] = "numerical-failure"
        manifest["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = 3
    manifest["wall_time_s"] = time.perf_counter() - start
    write_json(out_dir / "manifest.json", manifest)
    return code


# --------------------------------------------------------------------------
# gallery dump

SAMPLE_POINTS = ((0.25, 0.0), (0.5, 0.0), (0.75, 0.0), (1.5, 0.0), (0.3, 0.4))


def sample_points(entry):
    dim = entry.g.dim
    pts = np.zeros((len(SAMPLE_POINTS), dim))
    pts[:, :2] = SAMPLE_POINTS
    if entry.singular is not None:
        on_set = entry.singular.distance(pts) == 0.0
        pts[on_set, 1] += 0.1
    return pts


def _fmt_tensor(t):
    return "[" + "; ".join(" ".join(f"{v:.6g}" for v in row) for row in t) + "]"


def gallery_text(entry):
    lines = [entry.describe(), "  samples (tensor, density) for g | g':"]
    pts = sample_points(entry)
    tg, dg = entry.g.evaluate(pts)
    tp, dp = entry.g_prime.evaluate(pts)
    inside_k = ~entry.outside_k(pts)
    for x, a, da, b, db, k in zip(pts, tg, dg, tp, dp, inside_k):
        where = "in K" if k else "outside K"
        lines.append(f"    x=({', '.join(f'{v:g}' for v in x)}) ({where}): "
                     f"g={_fmt_tensor(a)} dens={da:.6g} | g'={_fmt_tensor(b)} dens={db:.6g}")
    return "\n".join(lines)


def gallery_cmd(name):
    try:
        entry = two_subdomain_pair() if name == "two-subdomain" else gallery(name)
    except UnknownGalleryEntry as exc:
        print(f"unknown gallery entry: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"bad gallery parameters: {exc}", file=sys.stderr)
        return 2
    print(gallery_text(entry))
    return 0


# --------------------------------------------------------------------------
# verify

def verify(out=None):
    out_dir = _output_dir(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        checks = run_all()
    except SingspecError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    report = {"construct": "oracle-suite", "checks": [c.as_dict() for c in checks],
              "passed": all(c.passed for c in checks)}
    write_json(out_dir / "verify.json", report)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.6g} (expected {c.expected:.6g}, "
              f"{c.tolerance})")
    write_json(out_dir / "manifest.json", {"experiment": "verify", "versions": _versions(),
                                           "wall_time_s": time.perf_counter() - start,
                                           "reports": ["verify.json"]})
    return 0 if report["passed"] else 3


def main(argv=None):
    parser = argparse.ArgumentParser(prog="singspec", description=__doc__.splitlines()[0])
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers for sub-tasks")
    parser.add_argument("--out", help="output directory (fallback: $SINGSPEC_OUT)")
    parser.add_argument("--emit-matrices", action="store_true",
                        help="also write stiffness and mass matrices")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_gal = sub.add_parser("gallery", help="describe a gallery entry")
    p_gal.add_argument("name")
    sub.add_parser("verify", help="run the built-in oracle suite")
    args = parser.parse_args(argv)
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    if args.command == "run":
        return run(args.config, args.out, args.jobs, args.emit_matrices)
    if args.command == "gallery":
        return gallery_cmd(args.name)
    return verify(args.out)


if __name__ == "__main__":
    sys.exit(main())
