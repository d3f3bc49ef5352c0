"""Batch driver: ``formlab run | validate | report``.

A run is described by a TOML file::

    seed = 0
    degrees = [0]
    radii = [4.0, 6.0, 8.0, 10.0]

    [geometry]
    kind = "interval"          # interval | torus | disk | file
    r_max = 12.0
    n_cells = 2400

    [potential]
    kind = "power"             # zero | power | monomial | json | radial-csv
    c = 1.0                    # power: V = -c (1 + r)**beta, so Q = max(1, c (1 + r)**beta)
    beta = 2.0

    [run]
    criterion = true
    weyl = true
    bc_sweep = true
    identities = true

A ``radial-csv`` potential reads an ``r, q`` profile and uses ``V = -q``
(``q = inf`` marks an infinite well); ``json`` reads per-vertex blocks.
Optional tables are ``[envelope]`` (``kind = "extract"`` or
``"radial-csv"``) and ``[tolerances]``; ``formlab validate`` lists every
defaulted key.

Exit status: 0 when every enabled property suite passes, 1 when one fails,
2 for configuration errors and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .criterion import evaluate_criterion, generalized_distance, verify_P_bound
from .forms import Cochain, FormCalculus
from .mesh import SimplicialMesh, build_disk_mesh, build_flat_torus, build_interval_mesh, \
    distance_from_base
from .potential import (PotentialField, extract_envelope, load_potential_json,
                        load_radial_csv, radial_envelope)
from .spectral import (EigensolveError, adjointness_defect, bc_sensitivity_sweep,
                       cutoff_profile, energy_estimate_check, weighted_ibp_terms, symmetry_defect)
from .weyl import LIMIT_CIRCLE, weyl_classify_1d

logger = logging.getLogger("formlab")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

GEOMETRY_DEFAULTS = {
    "interval": {"r_max": 12.0, "n_cells": 2400, "grading": "uniform", "ratio": 1.0},
    "torus": {"n_x": 16, "n_y": 16, "L_x": 1.0, "L_y": 1.0},
    "disk": {"radius": 6.0, "n_rings": 24},
    "file": {"path": None},
}
POTENTIAL_DEFAULTS = {
    "zero": {},
    "power": {"c": 1.0, "beta": 2.0},
    "monomial": {"coef": -1.0, "p": 2.0},
    "json": {"path": None},
    "radial-csv": {"path": None},
}
ENVELOPE_DEFAULTS = {"extract": {}, "radial-csv": {"path": None}}
RUN_DEFAULTS = {"criterion": True, "weyl": True, "bc_sweep": True, "identities": True}
TOLERANCE_DEFAULTS = {
    "identity": 1e-10,
    "energy_slack": -1e-8,
    "bound_slack": 1e-8,
    "weyl_horizon": 30.0,
    "sample_pairs": 1000,
    "lipschitz_pairs": 10000,
    "fit": 0.5,
    "guard": 0.05,
    "random_cochains": 100,
    "energy_forms": 20,
    "resolvent_probe": 2.0,
}
TOP_DEFAULTS = {"seed": 0, "out": "formlab-out", "degrees": [0], "radii": [4.0, 6.0, 8.0, 10.0]}
TABLES = ("geometry", "potential", "envelope", "run", "tolerances")
DIMENSION = {"interval": 1, "torus": 2, "disk": 2}
# geometry parameters that must be positive integers or positive numbers
GEOMETRY_COUNTS = ("n_cells", "n_x", "n_y", "n_rings")
GEOMETRY_SIZES = ("r_max", "L_x", "L_y", "radius", "ratio")


class ConfigError(ValueError):
    """Configuration that cannot be run; carries every named violation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass
class RunConfig:
    """Validated run description with every default filled in."""

    geometry: dict
    potential: dict
    envelope: dict
    run: dict
    tolerances: dict
    degrees: list
    radii: list
    seed: int
    out: str
    base_dir: Path = Path(".")
    defaulted: list = field(default_factory=list)

    def resolve(self, path):
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def to_dict(self):
        return {
            "geometry": self.geometry, "potential": self.potential, "envelope": self.envelope,
            "run": self.run, "tolerances": self.tolerances, "degrees": self.degrees,
            "radii": self.radii, "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data, base_dir="."):
        base_dir = Path(base_dir)
        violations, defaulted = [], []
        data = copy.deepcopy(data)
        for key in data:
            if key not in TOP_DEFAULTS and key not in TABLES:
                violations.append(f"unknown key {key!r}")

        def table(name, kinds):
            raw = data.get(name, {})
            if not isinstance(raw, dict):
                violations.append(f"{name} must be a table")
                return {}
            if kinds is None:
                return raw
            kind = raw.get("kind")
            if kind is None:
                kind = next(iter(kinds))
                defaulted.append(f"{name}.kind = {kind!r}")
            if kind not in kinds:
                violations.append(f"{name}.kind {kind!r} not in {sorted(kinds)}")
                return {"kind": kind}
            out = {"kind": kind}
            for k, v in kinds[kind].items():
                if k in raw:
                    out[k] = raw[k]
                elif v is None:
                    violations.append(f"{name}.{k} is required for kind {kind!r}")
                else:
                    out[k] = v
                    defaulted.append(f"{name}.{k} = {v!r}")
            for k in raw:
                if k != "kind" and k not in kinds[kind]:
                    violations.append(f"unknown key {name}.{k}")
            return out

        geometry = table("geometry", GEOMETRY_DEFAULTS)
        potential = table("potential", POTENTIAL_DEFAULTS)
        envelope = table("envelope", ENVELOPE_DEFAULTS)
        flags = {}
        for name, defaults in (("run", RUN_DEFAULTS), ("tolerances", TOLERANCE_DEFAULTS)):
            raw = table(name, None)
            merged = {}
            for k, v in defaults.items():
                if k in raw:
                    merged[k] = raw[k]
                else:
                    merged[k] = v
                    defaulted.append(f"{name}.{k} = {v!r}")
            for k in raw:
                if k not in defaults:
                    violations.append(f"unknown key {name}.{k}")
            flags[name] = merged
        top = {}
        for k, v in TOP_DEFAULTS.items():
            if k in data:
                top[k] = data[k]
            else:
                top[k] = copy.deepcopy(v)
                defaulted.append(f"{k} = {v!r}")

        for k, v in flags["run"].items():
            if not isinstance(v, bool):
                violations.append(f"run.{k} must be true or false")
        tol = flags["tolerances"]
        for k, v in tol.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                violations.append(f"tolerances.{k} must be a number")
        if not violations:
            if tol["weyl_horizon"] < 10:
                violations.append("tolerances.weyl_horizon must be at least 10")
            if not 0 < tol["fit"] < 1:
                violations.append("tolerances.fit must lie in (0, 1)")
        radii = top["radii"]
        if not isinstance(radii, list) or not all(isinstance(r, (int, float)) for r in radii):
            violations.append("radii must be a list of numbers")
        elif any(b <= a for a, b in zip(radii, radii[1:])):
            violations.append("radii must be strictly increasing")
        elif any(r <= 0 for r in radii):
            violations.append("radii must be positive")
        degrees = top["degrees"]
        if not isinstance(degrees, list) or not all(isinstance(d, int) for d in degrees):
            violations.append("degrees must be a list of integers")
        elif geometry.get("kind") in DIMENSION:
            dim = DIMENSION[geometry["kind"]]
            bad = [d for d in degrees if not 0 <= d <= dim]
            if bad:
                violations.append(f"degrees {bad} out of range for a {dim}-dimensional mesh")
        for k, v in geometry.items():
            if k in GEOMETRY_COUNTS and (isinstance(v, bool) or not isinstance(v, int) or v < 1):
                violations.append(f"geometry.{k} must be a positive integer")
            elif k in GEOMETRY_SIZES and (isinstance(v, bool) or not isinstance(v, (int, float))
                                          or not v > 0):
                violations.append(f"geometry.{k} must be a positive number")
        if geometry.get("grading", "uniform") not in ("uniform", "geometric"):
            violations.append("geometry.grading must be 'uniform' or 'geometric'")
        if not isinstance(top["seed"], int) or isinstance(top["seed"], bool):
            violations.append("seed must be an integer")
        for name, spec in (("geometry", geometry), ("potential", potential),
                           ("envelope", envelope)):
            path = spec.get("path")
            if path is not None and not (base_dir / path).is_file() \
                    and not Path(path).is_file():
                violations.append(f"{name}.path {path!r} does not exist")
        if violations:
            raise ConfigError(violations)
        return cls(geometry, potential, envelope, flags["run"], flags["tolerances"],
                   [int(d) for d in degrees], [float(r) for r in radii], int(top["seed"]),
                   str(top["out"]), base_dir, defaulted)


def load_config(path):
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"malformed TOML in {path}: {exc}"]) from None
    return RunConfig.from_dict(data, base_dir=path.parent)


# ------------------------------------------------------------- assembly


def build_mesh(cfg):
    g = cfg.geometry
    kind = g["kind"]
    if kind == "interval":
        grading = g["grading"]
        return build_interval_mesh(g["r_max"], g["n_cells"], grading,
                                   g["ratio"] if grading == "geometric" else None)
    if kind == "torus":
        return build_flat_torus(g["n_x"], g["n_y"], g["L_x"], g["L_y"])
    if kind == "disk":
        return build_disk_mesh(g["radius"], g["n_rings"])
    return SimplicialMesh.load(cfg.resolve(g["path"]))


def radial_function(spec):
    """Closed-form radial potential for the analytic kinds, else ``None``."""
    kind = spec["kind"]
    if kind == "zero":
        return lambda r: 0.0 * np.asarray(r, dtype=float)
    if kind == "power":
        c, beta = float(spec["c"]), float(spec["beta"])
        return lambda r: -c * (1.0 + np.asarray(r, dtype=float)) ** beta
    if kind == "monomial":
        coef, p = float(spec["coef"]), float(spec["p"])
        return lambda r: coef * np.asarray(r, dtype=float) ** p
    return None


def potential_id(spec):
    kind = spec["kind"]
    if kind == "zero":
        return "zero"
    if kind == "power":
        return f"power(c={spec['c']:g},beta={spec['beta']:g})"
    if kind == "monomial":
        return f"monomial(coef={spec['coef']:g},p={spec['p']:g})"
    return f"{kind}({Path(spec['path']).name})"


def build_potential(cfg, mesh, r):
    spec = cfg.potential
    f = radial_function(spec)
    if f is not None:
        return PotentialField.scalar(f(r), mesh.dim), f
    if spec["kind"] == "json":
        return load_potential_json(cfg.resolve(spec["path"]), mesh), None
    # a radial profile q is realized by its extremal potential V = -q
    t, q = load_radial_csv(cfg.resolve(spec["path"]))
    if r.max() > t[-1] or r.min() < t[0]:
        raise ConfigError([f"potential profile {spec['path']!r} does not cover the mesh radii"])
    wells = np.isinf(q)
    finite = np.interp(r, t[~wells], q[~wells])
    infinite = np.interp(r, t, wells.astype(float)) > 0
    return PotentialField.scalar(np.where(infinite, 0.0, -finite), mesh.dim, infinite), None


def build_envelope(cfg, mesh, V, r):
    if cfg.envelope["kind"] == "extract":
        env = extract_envelope(V)
    else:
        t, q = load_radial_csv(cfg.resolve(cfg.envelope["path"]))
        env = radial_envelope(mesh, t, q, r=r)
    return env.with_lipschitz(mesh, n_pairs=int(cfg.tolerances["lipschitz_pairs"]),
                              seed=cfg.seed)


# --------------------------------------------------------------- suites


def _random_forms(mesh, k, count, rng, support=None):
    n = mesh.n_simplices(k)
    vals = rng.standard_normal((count, n))
    if support is not None:
        vals *= support
    return vals


def _simplex_radius(mesh, r, k):
    return r[mesh.simplices[k]].max(axis=1)


def identities_suite(cfg, mesh, V, envelope, r):
    tol = cfg.tolerances
    rng = np.random.default_rng(cfg.seed)
    calc = FormCalculus(mesh)
    n_rand = int(tol["random_cochains"])
    out = {"degrees": {}}
    ok = True
    R_cut = 0.75 * float(r.max())
    phi = cutoff_profile(r / R_cut)
    for k in cfg.degrees:
        entry = {}
        if k < mesh.dim:
            worst = 0.0
            for a, b in zip(_random_forms(mesh, k, n_rand, rng),
                            _random_forms(mesh, k + 1, n_rand, rng)):
                A, B = Cochain(mesh, k, a), Cochain(mesh, k + 1, b)
                worst = max(worst, adjointness_defect(calc, A, B) / (calc.norm(A) * calc.norm(B)))
            entry["adjointness"] = worst
            ok &= worst <= tol["identity"]
        else:
            entry["adjointness"] = None
        if k + 2 <= mesh.dim:
            dd = calc.d(k + 1) @ calc.d(k)
            entry["d_squared"] = float(abs(dd).max()) if dd.nnz else 0.0
            ok &= entry["d_squared"] == 0.0
        else:
            entry["d_squared"] = None
        worst = 0.0
        for a, b in zip(_random_forms(mesh, k, 10, rng), _random_forms(mesh, k, 10, rng)):
            A, B = Cochain(mesh, k, a), Cochain(mesh, k, b)
            lhs, rhs = weighted_ibp_terms(calc, phi, A, B)
            scale = max(abs(lhs), abs(rhs), calc.norm(calc.apply_laplacian(A)) * calc.norm(B))
            worst = max(worst, abs(lhs - rhs) / scale)
        entry["weighted_ibp"] = worst
        ok &= worst <= tol["identity"]
        interior = (~mesh.boundary[mesh.simplices[k]].any(axis=1)).astype(float)
        a, b = _random_forms(mesh, k, 2, rng, interior)
        A, B = Cochain(mesh, k, a), Cochain(mesh, k, b)
        if V.infinite.any():
            entry["symmetry"] = None
            entry["energy_min_slack"] = None
            entry["energy_note"] = "skipped: potential has infinite wells"
        else:
            plain = abs(symmetry_defect(mesh, V, A, B, 1.0, calc=calc,
                                        chi=np.ones(mesh.n_vertices)))
            entry["symmetry"] = plain / (calc.norm(A) * calc.norm(B))
            ok &= entry["symmetry"] <= tol["identity"] * max(1.0, _operator_scale(calc, V, k))
            support = (_simplex_radius(mesh, r, k) < 0.6 * float(r.max())).astype(float)
            slacks = []
            for vals in _random_forms(mesh, k, int(tol["energy_forms"]), rng, support):
                est = energy_estimate_check(mesh, V, Cochain(mesh, k, vals), R_cut,
                                            envelope=envelope, calc=calc)
                slacks.append(est.slack / max(1.0, est.rhs))
            entry["energy_min_slack"] = float(min(slacks))
            ok &= entry["energy_min_slack"] >= tol["energy_slack"]
        out["degrees"][str(k)] = entry
    P = generalized_distance(mesh, envelope).values
    viol = verify_P_bound(mesh, envelope, P, sample_pairs=int(tol["sample_pairs"]),
                          seed=cfg.seed, slack=tol["bound_slack"])
    out["P_bound_violations"] = len(viol)
    ok &= not viol
    out["passed"] = bool(ok)
    return out


def _operator_scale(calc, V, k):
    from .potential import assemble_H

    H = assemble_H(calc, V, k)
    return float(abs(H).max())


def weyl_suite(cfg, mesh, V, f, r):
    T = float(cfg.tolerances["weyl_horizon"])
    if f is not None:
        return weyl_classify_1d(f, T).to_dict()
    if mesh.dim != 1:
        return {"classification": None, "diagnostics": "skipped: sampled potential on a 2-D mesh"}
    if V.infinite.any():
        return {"classification": None, "diagnostics": "skipped: potential has infinite wells"}
    order = np.argsort(r)
    T = min(T, float(r.max()))
    if T < 10:
        return {"classification": None, "diagnostics": "skipped: mesh shorter than 10"}
    rs, vs = r[order], V.blocks[order, 0, 0]
    return weyl_classify_1d((rs, vs), T).to_dict()


# ------------------------------------------------------------ emission


def _dumps(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    return obj


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    Path(path).write_text(buf.getvalue())


def run(cfg, out=None, jobs=1):
    """Execute a validated configuration; returns the exit status."""
    out = Path(out if out is not None else cfg.resolve(cfg.out))
    (out / "plotdata").mkdir(parents=True, exist_ok=True)
    mesh = build_mesh(cfg)
    r = distance_from_base(mesh).values
    V, f = build_potential(cfg, mesh, r)
    pid = potential_id(cfg.potential)
    if cfg.run["bc_sweep"] and cfg.radii[-1] >= r.max():
        raise ConfigError([f"largest radius {cfg.radii[-1]:g} is not below the mesh "
                           f"extent {r.max():g}"])
    envelope = build_envelope(cfg, mesh, V, r)
    passed = True
    report = {
        "schema": "formlab.criterion-report/1",
        "potential_id": pid,
        "mesh": {"dim": mesh.dim, "n_vertices": mesh.n_vertices,
                 "n_top": mesh.n_simplices(mesh.dim), "geometry": cfg.geometry["kind"]},
        "config": cfg.to_dict(),
    }
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        weyl_job = pool.submit(weyl_suite, cfg, mesh, V, f, r) if cfg.run["weyl"] else None
        sweep_jobs = {k: pool.submit(bc_sensitivity_sweep, mesh, V, k, cfg.radii,
                                     cfg.tolerances["resolvent_probe"])
                      for k in cfg.degrees} if cfg.run["bc_sweep"] else {}
        if cfg.run["criterion"]:
            rep = evaluate_criterion(mesh, envelope, fit=cfg.tolerances["fit"],
                                     guard=cfg.tolerances["guard"],
                                     sample_pairs=int(cfg.tolerances["sample_pairs"]),
                                     seed=cfg.seed)
            report["criterion"] = rep.to_dict()
            passed &= not rep.bound_violations
            _write_csv(out / "plotdata" / "P.csv", ["vertex", "r", "w", "P"],
                       [(i, r[i], envelope.w[i], rep.P[i]) for i in range(mesh.n_vertices)])
            _write_csv(out / "plotdata" / "profile.csv", ["R", "P_min"],
                       [tuple(row) for row in rep.profile])
        else:
            report["criterion"] = None
        report["weyl"] = weyl_job.result() if weyl_job is not None else None
        sweeps = {k: job.result() for k, job in sweep_jobs.items()}
    verdict = report["criterion"]["verdict"] if report["criterion"] else None
    weyl_cls = report["weyl"]["classification"] if report["weyl"] else None
    contradiction = verdict == "criterion-satisfied" and weyl_cls == LIMIT_CIRCLE
    report["cross_check"] = {"criterion": verdict, "weyl": weyl_cls,
                             "contradiction": contradiction}
    passed &= not contradiction

    if cfg.run["bc_sweep"]:
        rows, gap_rows, summary = [], [], {}
        for k in cfg.degrees:
            s = sweeps[k]
            if not s.complete:
                raise EigensolveError(s.diagnostics)
            for row in s.rows:
                for bc, lam in (("dirichlet", row.lambda_dirichlet),
                                ("neumann", row.lambda_neumann)):
                    rows.append((pid, k, row.R, bc, 0, lam, row.gap, row.resolvent_gap,
                                 weyl_cls or "n/a"))
                gap_rows.append((k, row.R, row.gap, row.resolvent_gap))
            summary[str(k)] = {"gap_trend": s.gap_trend, "resolvent_trend": s.resolvent_trend,
                               "resolvent_slope": s.resolvent_slope,
                               "boundary_insensitive": s.boundary_insensitive}
        _write_csv(out / "sweep.csv",
                   ["potential_id", "degree", "R", "bc", "eigenvalue_index", "value", "gap",
                    "resolvent_gap", "weyl_verdict"], rows)
        _write_csv(out / "plotdata" / "gaps.csv", ["degree", "R", "gap", "resolvent_gap"],
                   gap_rows)
        report["sweep"] = summary
    else:
        report["sweep"] = None

    if cfg.run["identities"]:
        ident = identities_suite(cfg, mesh, V, envelope, r)
        ident["schema"] = "formlab.identities/1"
        passed &= ident["passed"]
        (out / "identities.json").write_text(_dumps(ident))
    report["passed"] = bool(passed)
    (out / "criterion-report.json").write_text(_dumps(report))
    return EXIT_OK if passed else EXIT_FAILED


# -------------------------------------------------------------- report


def render_report(data, identities=None):
    lines = [f"potential: {data.get('potential_id')}",
             f"mesh: {data['mesh']['geometry']} dim={data['mesh']['dim']} "
             f"vertices={data['mesh']['n_vertices']}"]
    crit = data.get("criterion")
    if crit:
        env = crit["envelope"]
        lines += [f"criterion: {crit['verdict']} (tail exponent {_fmt(crit['tail_exponent'])})",
                  f"  envelope: Q in [{_fmt(env['Q_min'])}, {_fmt(env['Q_max'])}], "
                  f"K = {_fmt(env['K'])}",
                  f"  {crit['divergence']['diagnostics']}",
                  f"  P bound violations: {crit['bound_violations']}"]
    weyl = data.get("weyl")
    if weyl:
        lines.append(f"weyl: {weyl['classification']} ({weyl['diagnostics']})")
    sweep = data.get("sweep")
    if sweep:
        for k, s in sorted(sweep.items()):
            lines.append(f"bc sweep degree {k}: resolvent slope {_fmt(s['resolvent_slope'])}, "
                         f"gap trend {_fmt(s['gap_trend'])}, "
                         f"boundary insensitive {s['boundary_insensitive']}")
    cc = data.get("cross_check", {})
    lines.append(f"cross-check contradiction: {cc.get('contradiction')}")
    if identities:
        for k, e in sorted(identities["degrees"].items()):
            lines.append(f"identities degree {k}: adjointness {_fmt(e['adjointness'])}, "
                         f"d^2 {_fmt(e['d_squared'])}, weighted_ibp {_fmt(e['weighted_ibp'])}, "
                         f"energy slack {_fmt(e['energy_min_slack'])}")
        lines.append(f"identities passed: {identities['passed']}")
    lines.append(f"passed: {data.get('passed')}")
    return "\n".join(lines) + "\n"


def _fmt(x):
    return "n/a" if x is None else f"{x:.4g}"


# ------------------------------------------------------------------ main


def build_parser():
    p = argparse.ArgumentParser(prog="formlab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    pr = sub.add_parser("run", help="run the configured suites and write artifacts")
    pr.add_argument("--config", required=True, type=Path)
    pr.add_argument("--out", type=Path)
    pr.add_argument("--seed", type=int)
    pr.add_argument("--jobs", type=int, default=1)
    pv = sub.add_parser("validate", help="check a configuration without running it")
    pv.add_argument("--config", required=True, type=Path)
    pp = sub.add_parser("report", help="render a criterion report as text")
    pp.add_argument("path", nargs="?", type=Path,
                    help="criterion-report.json or the run directory")
    pp.add_argument("--out", type=Path, help="run directory (alternative to PATH)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "validate":
        try:
            cfg = load_config(args.config)
        except ConfigError as exc:
            for v in exc.violations:
                print(f"violation: {v}")
            return EXIT_CONFIG
        print(f"{args.config}: valid")
        for d in cfg.defaulted:
            print(f"default: {d}")
        return EXIT_OK
    if args.command == "report":
        target = args.path or args.out
        if target is None:
            print("report needs a path or --out", file=sys.stderr)
            return EXIT_CONFIG
        target = Path(target)
        rep = target / "criterion-report.json" if target.is_dir() else target
        try:
            data = json.loads(rep.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"cannot read report {rep}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        ident_path = rep.parent / "identities.json"
        ident = json.loads(ident_path.read_text()) if ident_path.is_file() else None
        sys.stdout.write(render_report(data, ident))
        return EXIT_OK
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.jobs < 1:
            raise ConfigError(["--jobs must be at least 1"])
        return run(cfg, out=args.out, jobs=args.jobs)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_CONFIG
    except (EigensolveError, RuntimeError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
