"""Command-line front end.

    nvneumann solve <cfg>
    nvneumann check-compat <cfg>
    nvneumann converge <cfg> --sweep N=64,128,256 | K=4,8,16
    nvneumann verify [--filter <name>] [--inject-fault kprime_sign]

Global options: --threads <n>, --tol-scale <x>.

Exit codes: 0 ok, 1 verification failed, 2 invalid config, 3 incompatible
data, 4 non-converged solve, 5 no oracle for a convergence sweep.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import sys
from dataclasses import dataclass

import jsonschema
import numpy as np
from threadpoolctl import threadpool_limits

from . import bie, fieldexpr, geometry, oracles, verify
from .neumann import NORMALIZATIONS, IncompatibleDataError, NeumannProblem, check_compatibility, solve
from .quadrature import DEFAULT_MR, DEFAULT_MT, DEFAULT_N, Discretization
from .schauder import BoundaryDist, DensityRep
from .workspace import Workspace

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_INCOMPATIBLE, EXIT_NONCONVERGED, EXIT_NO_ORACLE = range(6)

_point = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_expr = {"type": ["string", "number"]}
_coeffs = {"type": "array", "items": {"type": "number"}}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["domain"],
    "properties": {
        "domain": {
            "type": "array",
            "minItems": 1,
            "items": {
                "oneOf": [
                    {"type": "object", "additionalProperties": False, "required": ["kind", "radius"],
                     "properties": {"kind": {"const": "circle"}, "center": _point,
                                    "radius": {"type": "number", "exclusiveMinimum": 0}}},
                    {"type": "object", "additionalProperties": False, "required": ["kind", "a", "b"],
                     "properties": {"kind": {"const": "ellipse"}, "center": _point,
                                    "a": {"type": "number", "exclusiveMinimum": 0},
                                    "b": {"type": "number", "exclusiveMinimum": 0}}},
                    {"type": "object", "additionalProperties": False, "required": ["kind", "x", "y"],
                     "properties": {"kind": {"const": "trig"},
                                    "x": {"type": "object", "additionalProperties": False,
                                          "properties": {"cos": _coeffs, "sin": _coeffs}},
                                    "y": {"type": "object", "additionalProperties": False,
                                          "properties": {"cos": _coeffs, "sin": _coeffs}}}},
                ]
            },
        },
        "f": {"type": "object", "additionalProperties": False,
              "properties": {"f0": _expr, "f1": _expr, "f2": _expr}},
        "g": {"type": "object", "additionalProperties": False,
              "properties": {"mu0": _expr, "mu1": _expr}},
        "discretization": {"type": "object", "additionalProperties": False,
                           "properties": {k: {"type": "integer", "minimum": 1} for k in ("N", "M_r", "M_t", "K")}},
        "normalization": {"enum": list(NORMALIZATIONS)},
        "tolerances": {"type": "object", "additionalProperties": False,
                       "properties": {"compatibility": {"type": "number", "exclusiveMinimum": 0},
                                      "residual": {"type": "number", "exclusiveMinimum": 0}}},
        "outputs": {"type": "object", "additionalProperties": False,
                    "properties": {"probes": {"type": "array", "items": _point},
                                   "csv": {"type": "string"}}},
        "oracle": {"enum": sorted(oracles.NEUMANN_CASES)},
    },
}

DEFAULTS = {
    "f": {"f0": 0.0, "f1": 0.0, "f2": 0.0},
    "g": {"mu0": 0.0, "mu1": 0.0},
    "discretization": {"N": DEFAULT_N, "M_r": DEFAULT_MR, "M_t": DEFAULT_MT, "K": 16},
    "normalization": "zero-mean",
    "tolerances": {"compatibility": 1e-6, "residual": 1e-8},
    "outputs": {"probes": [[0.0, 0.0]]},
}


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    resolved: dict
    domain: geometry.Domain
    problem: NeumannProblem
    probes: np.ndarray


def resolve(raw: dict) -> dict:
    """Validate against the schema and fill in every default."""
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {e.message}") from None
    out = copy.deepcopy(raw)
    for key, val in DEFAULTS.items():
        if isinstance(val, dict):
            out[key] = {**val, **out.get(key, {})}
        else:
            out.setdefault(key, val)
    out["domain"] = [geometry.CurveSpec.from_dict({"center": [0.0, 0.0], **d}).to_dict() for d in out["domain"]]
    return out


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON at line {e.lineno} column {e.colno} (char {e.pos}): {e.msg}") from None
    return resolve(raw)


def build(resolved: dict, tol_scale: float = 1.0, disc: Discretization = None) -> Config:
    """Turn a resolved config into numerical objects. Expressions use the
    center of the first component as the origin of r and theta."""
    try:
        domain = geometry.build_domain([geometry.CurveSpec.from_dict(d) for d in resolved["domain"]])
        origin = tuple(domain.centroid(0))
        f, g = resolved["f"], resolved["g"]
        rep = DensityRep.of(f["f0"], f["f1"], f["f2"], origin=origin)
        dist = BoundaryDist.of(g["mu0"], g["mu1"], origin=origin)
        disc = disc or Discretization(**resolved["discretization"])
        disc.validate()
    except (geometry.GeometryError, fieldexpr.ExprError, ValueError) as e:
        raise ConfigError(str(e)) from None
    tol = resolved["tolerances"]
    problem = NeumannProblem(domain, rep, dist, disc, resolved["normalization"],
                             compat_tol=tol["compatibility"] * tol_scale, residual_tol=tol["residual"] * tol_scale)
    return Config(resolved, domain, problem, np.asarray(resolved["outputs"]["probes"], float).reshape(-1, 2))


# --- output helpers -------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def probe_csv(probes, comps, values) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "component", "u"])
    for p, j, v in zip(probes, comps, values):
        w.writerow([_fmt(p[0]), _fmt(p[1]), int(j), _fmt(v) if j >= 0 else "nan"])
    return buf.getvalue()


def _emit_csv(text: str, path, out):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)


def _report_defects(defects, tols, out):
    out.write(f"{'component':>9}  {'defect':>22}  {'tolerance':>12}\n")
    for j, (d, t) in enumerate(zip(defects, tols)):
        out.write(f"{j:>9}  {d:>22.15g}  {t:>12.3e}\n")


# --- commands -------------------------------------------------------------------

def cmd_solve(path: str, tol_scale: float = 1.0, out=None) -> int:
    out = out or sys.stdout
    try:
        cfg = build(load_config(path), tol_scale)
    except ConfigError as e:
        out.write(f"error: invalid config: {e}\n")
        return EXIT_CONFIG
    ws = Workspace(cfg.domain, cfg.problem.disc)
    try:
        sol = solve(cfg.problem, ws)
    except IncompatibleDataError as e:
        out.write("error: incompatible data, the solvability condition fails\n")
        _report_defects(e.defects, e.tolerances, out)
        return EXIT_INCOMPATIBLE
    comps = cfg.domain.locate(cfg.probes, tol=1e-12)
    values = np.full(len(cfg.probes), np.nan)
    inside = comps >= 0
    if inside.any():
        values[inside] = sol(cfg.probes[inside])
    out.write("resolved config:\n" + json.dumps(cfg.resolved, indent=2, sort_keys=True) + "\n")
    out.write("compatibility defects:\n")
    _, tols = check_compatibility(cfg.problem, ws)
    _report_defects(sol.defects, tols, out)
    out.write(f"residual max      {sol.residual_max:.3e}\n")
    out.write(f"normalization     {sol.normalization}\n")
    for j, c in enumerate(sol.constants):
        out.write(f"constant[{j}]       {c:.15g}\n")
    out.write(f"converged         {sol.converged}\n")
    _emit_csv(probe_csv(cfg.probes, comps, values), cfg.resolved["outputs"].get("csv"), out)
    if not sol.converged:
        out.write("error: solve did not converge\n")
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_check_compat(path: str, tol_scale: float = 1.0, out=None) -> int:
    out = out or sys.stdout
    try:
        cfg = build(load_config(path), tol_scale)
    except ConfigError as e:
        out.write(f"error: invalid config: {e}\n")
        return EXIT_CONFIG
    defects, tols = check_compatibility(cfg.problem)
    _report_defects(defects, tols, out)
    ok = bool(np.all(np.abs(defects) <= tols))
    out.write("compatible\n" if ok else "incompatible\n")
    return EXIT_OK if ok else EXIT_INCOMPATIBLE


def parse_sweep(text: str):
    key, _, vals = text.partition("=")
    key = key.strip()
    if key not in ("N", "K") or not vals:
        raise ConfigError("sweep must look like N=64,128,256 or K=4,8,16")
    try:
        return key, [int(v) for v in vals.split(",")]
    except ValueError:
        raise ConfigError(f"non-integer value in sweep {text!r}") from None


# errors below this level count as converged when checking monotone decrease
MONOTONE_FLOOR = 1e-12


def converge_table(resolved: dict, key: str, values, tol_scale: float = 1.0):
    """Rows (resolution, max probe error, residual max) for an oracle config.

    When sweeping N, K is capped at N/4.
    """
    exact = oracles.NEUMANN_CASES[resolved["oracle"]][2]
    base = resolved["discretization"]
    rows = []
    for v in values:
        d = dict(base, **{key: v})
        if key == "N":
            d["K"] = min(d["K"], v // 4)
        cfg = build(resolved, tol_scale, Discretization(**d))
        # oracle cases live on the unit disk: add the standard interior probes
        probes = np.vstack([cfg.probes, verify.disk_probes()])
        probes = probes[cfg.domain.locate(probes, tol=1e-12) >= 0]
        sol = solve(cfg.problem, Workspace(cfg.domain, cfg.problem.disc))
        diff = sol(probes) - exact(probes)
        if cfg.problem.normalization != "zero-mean":
            diff = diff - diff.mean()
        rows.append((v, float(np.abs(diff).max()), sol.residual_max))
    return rows


def is_monotone(errors, floor: float = MONOTONE_FLOOR) -> bool:
    return all(b <= max(a, floor) for a, b in zip(errors, errors[1:]))


def cmd_converge(path: str, sweep: str, tol_scale: float = 1.0, out=None) -> int:
    out = out or sys.stdout
    try:
        resolved = load_config(path)
        key, values = parse_sweep(sweep)
        if "oracle" not in resolved:
            out.write("error: no oracle solution is known for this config\n")
            return EXIT_NO_ORACLE
        rows = converge_table(resolved, key, values, tol_scale)
    except ConfigError as e:
        out.write(f"error: invalid config: {e}\n")
        return EXIT_CONFIG
    except IncompatibleDataError as e:
        out.write("error: incompatible data\n")
        _report_defects(e.defects, e.tolerances, out)
        return EXIT_INCOMPATIBLE
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["resolution", "max_probe_error", "residual"])
    for r in rows:
        w.writerow([r[0], _fmt(r[1]), _fmt(r[2])])
    _emit_csv(buf.getvalue(), resolved["outputs"].get("csv"), out)
    mono = is_monotone([r[1] for r in rows])
    out.write(f"monotone decrease {mono}\n")
    return EXIT_OK if mono else EXIT_NONCONVERGED


def cmd_verify(filter_text: str = "", faults=(), tol_scale: float = 1.0, out=None) -> int:
    out = out or sys.stdout
    unknown = set(faults) - bie.KNOWN_FAULTS
    if unknown:
        out.write(f"error: unknown fault {sorted(unknown)}\n")
        return EXIT_CONFIG
    results = verify.run(filter_text, faults, tol_scale)
    out.write(verify.format_table(results) + "\n")
    failed = [r.name for r in results if not r.passed]
    if failed:
        out.write("failed: " + ", ".join(failed) + "\n")
        return EXIT_VERIFY
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nvneumann", description="Nonvariational Neumann problem solver")
    p.add_argument("--threads", type=int, default=None, help="BLAS thread limit")
    p.add_argument("--tol-scale", type=float, default=1.0, help="multiply all tolerances by this factor")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="solve the problem in a JSON config")
    s.add_argument("config")
    s = sub.add_parser("check-compat", help="report the solvability defects")
    s.add_argument("config")
    s = sub.add_parser("converge", help="error table over a resolution sweep")
    s.add_argument("config")
    s.add_argument("--sweep", required=True, help="N=64,128,256 or K=4,8,16")
    s = sub.add_parser("verify", help="run the oracle identity suite")
    s.add_argument("--filter", default="", help="run only checks whose name contains this text")
    s.add_argument("--inject-fault", action="append", default=[], help="deliberately break a component")
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.tol_scale <= 0:
        print("error: --tol-scale must be positive")
        return EXIT_CONFIG
    with threadpool_limits(limits=args.threads):
        if args.command == "solve":
            return cmd_solve(args.config, args.tol_scale)
        if args.command == "check-compat":
            return cmd_check_compat(args.config, args.tol_scale)
        if args.command == "converge":
            return cmd_converge(args.config, args.sweep, args.tol_scale)
        return cmd_verify(args.filter, args.inject_fault, args.tol_scale)


if __name__ == "__main__":
    sys.exit(main())
