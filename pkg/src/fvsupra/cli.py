"""Command-line experiment runner: mesh generation, scheme analysis,
convergence studies, and constants reports.

Everything is driven by one JSON config schema; seeds are mandatory wherever
randomness exists, so identical configs produce byte-identical outputs.
Outputs are written atomically at the end of each run.
"""

import argparse
import json
import os
import sys
from fractions import Fraction

import numpy as np

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

from .analysis import analyze_pair
from .exact import frac
from .layouts import cell_layout, median_dual_layout
from .mesh import (MeshError, build_1d_pattern, build_ti_triangular, load_mesh,
                   perturb_nodes, replicate_scale, save_mesh)
from .polynomials import MultiPolynomial
from .projection import Projection
from .schemes import SCHEME_NAMES, assemble_by_name
from .systems import system_preset
from .timeloop import (CaseSpec, advected_vortex_case, appendix_a_fully_discrete,
                       convergence_study, default_projection_kind, sine_1d,
                       sine_2d, steady_vortex_case)

CELL_SCHEMES = ("basic", "fv-p1", "fv-p2", "bbr3")

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "mesh": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["1d", "ti-tri", "checkerboard", "file"]},
                "steps": {"type": "array"},
                "n": {"type": "integer"},
                "h": {"type": ["string", "number"]},
                "e1": {"type": "array"},
                "e2": {"type": "array"},
                "counts": {"type": "array"},
                "family": {"enum": ["ti-5h6", "ti-square"]},
                "path": {"type": "string"},
                "perturb": {
                    "type": "object",
                    "properties": {"amplitude": {"type": ["string", "number"]},
                                   "seed": {"type": "integer"}},
                    "required": ["amplitude", "seed"],
                },
                "replicate": {"type": "integer"},
            },
            "required": ["kind"],
        },
        "system": {"type": "object", "properties": {
            "name": {"enum": ["transport", "lee"]},
            "omega": {"type": "array"},
            "u_bar": {"type": "array"},
            "gamma": {"type": "number"}},
            "required": ["name"]},
        "scheme": {"type": "object", "properties": {
            "name": {"enum": list(SCHEME_NAMES) + ["appendix-a"]}},
            "required": ["name"]},
        "schemes": {"type": "array"},
        "case": {"type": "object", "properties": {
            "kind": {"enum": ["sine-1d", "sine-2d", "vortex-steady",
                              "vortex-advected"]},
            "T": {"type": "number"},
            "cfl": {"type": "number"},
            "sigma": {"type": "number"},
            "kvec": {"type": "array"},
            "freq": {"type": "integer"}},
            "required": ["kind"]},
        "levels": {"type": "array"},
        "analysis": {"type": "object"},
        "seed": {"type": "integer"},
        "output": {"type": "object"},
    },
    "required": ["mesh"],
}


def _rat(x):
    return frac(x)


def build_mesh(cfg, level=None):
    """Construct the mesh described by a config 'mesh' block.

    ``level`` overrides the refinement parameter (replicate factor for
    pattern meshes, 1/h for TI families).
    """
    kind = cfg["kind"]
    if kind == "file":
        return load_mesh(cfg["path"])
    if kind == "1d":
        mesh = build_1d_pattern([_rat(s) for s in cfg["steps"]])
    elif kind == "checkerboard":
        h = _rat(cfg.get("h", "1/4"))
        mesh = build_1d_pattern([h / 2, 3 * h / 2])
    elif kind == "ti-tri":
        if "n" in cfg or "h" in cfg:
            n = int(cfg["n"]) if "n" in cfg else int(round(1 / float(frac(cfg["h"]))))
            if level is not None:
                n = level
            h = Fraction(1, n)
            family = cfg.get("family", "ti-square")
            if family == "ti-5h6":
                e1, e2 = (h, 0), (h / 2, 5 * h / 6)
                counts = (n, (6 * n) // 5)
                if 5 * counts[1] != 6 * n:
                    raise MeshError(f"ti-5h6 family needs 5 | n, got n={n}")
            else:
                e1, e2 = (h, 0), (h / 2, h)
                counts = (n, n)
            mesh = build_ti_triangular(e1, e2, counts)
        else:
            mesh = build_ti_triangular([_rat(x) for x in cfg["e1"]],
                                       [_rat(x) for x in cfg["e2"]],
                                       tuple(cfg["counts"]))
    else:
        raise ValueError(f"unknown mesh kind '{kind}'")
    if "perturb" in cfg:
        mesh = perturb_nodes(mesh, _rat(cfg["perturb"]["amplitude"]),
                             int(cfg["perturb"]["seed"]))
    rep = cfg.get("replicate", 1)
    if level is not None and kind in ("1d", "checkerboard"):
        rep = level
    if rep and rep > 1:
        mesh = replicate_scale(mesh, rep)
    return mesh


def build_system(cfg):
    name = cfg["name"]
    kw = {k: v for k, v in cfg.items() if k != "name"}
    if name == "transport":
        kw["omega"] = tuple(_rat(w) for w in kw.get("omega", (1, 0)))
    if name == "lee" and "u_bar" in kw:
        kw["u_bar"] = tuple(float(x) for x in kw["u_bar"])
    return system_preset(name, **kw)


def build_case(cfg, system_cfg):
    kind = cfg["kind"]
    T = float(cfg.get("T", 1.0))
    cfl = float(cfg.get("cfl", 0.3))
    if kind == "vortex-steady":
        return steady_vortex_case(T=T, sigma=float(cfg.get("sigma", 0.07)), cfl=cfl)
    if kind == "vortex-advected":
        ub = tuple(float(x) for x in system_cfg.get("u_bar", (0.4, 0.0)))
        return advected_vortex_case(T=T, sigma=float(cfg.get("sigma", 0.07)),
                                    u_bar=ub, cfl=cfl)
    omega = tuple(float(frac(w)) for w in system_cfg.get("omega", (1, 0)))
    if kind == "sine-1d":
        return CaseSpec("transport", {"omega": omega}, sine_1d(cfg.get("freq", 1)),
                        velocity=omega, T=T, cfl=cfl, label="sine-1d")
    if kind == "sine-2d":
        kvec = tuple(cfg.get("kvec", (1, 2)))
        return CaseSpec("transport", {"omega": omega}, sine_2d(kvec),
                        velocity=omega, T=T, cfl=cfl, label="sine-2d")
    raise ValueError(f"unknown case kind '{kind}'")


def layout_for(scheme, mesh):
    return cell_layout(mesh) if scheme in CELL_SCHEMES else median_dual_layout(mesh)


def _atomic_write(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as f:
        f.write(text)
    os.replace(tmp, path)


def load_config(path):
    with open(path) as f:
        cfg = json.load(f)
    if jsonschema is not None:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    return cfg


# -- subcommands ----------------------------------------------------------------------


def cmd_mesh(args):
    if args.action == "gen":
        cfg = {"kind": "1d", "steps": [frac(s) for s in args.steps.split(",")]} \
            if args.steps else {"kind": "ti-tri", "h": args.h or "1/8"}
        if args.ti_tri:
            cfg = {"kind": "ti-tri", "h": args.h or "1/8"}
            if args.e2:
                h = frac(args.h or "1/8")
                n = int(round(1 / float(h)))
                cfg = {"kind": "ti-tri",
                       "e1": [h, 0], "e2": [frac(x) for x in args.e2.split(",")],
                       "counts": [n, args.n2 or n]}
        if args.perturb:
            cfg["perturb"] = {"amplitude": frac(args.perturb), "seed": args.seed or 0}
        if args.replicate:
            cfg["replicate"] = args.replicate
        try:
            mesh = build_mesh(cfg)
        except MeshError as e:
            print(f"mesh generation failed: {e}", file=sys.stderr)
            return 1
        out = args.out or "mesh.json"
        save_mesh(mesh, out)
        print(f"wrote {out}: d={mesh.d} nodes={mesh.n_nodes} "
              f"elements={mesh.n_elements} h_max={mesh.h_max():.6g}")
        return 0
    if args.action == "inspect":
        try:
            mesh = load_mesh(args.infile)
        except (MeshError, OSError, KeyError, ValueError) as e:
            print(f"invalid mesh: {e}", file=sys.stderr)
            return 1
        lay = cell_layout(mesh)
        info = {
            "dimension": mesh.d,
            "nodes": mesh.n_nodes,
            "elements": mesh.n_elements,
            "h_max": mesh.h_max(),
            "h_min": mesh.h_min(),
            "total_volume": float(lay.total_volume()),
            "closure_defect": lay.closure_defect(),
        }
        print(json.dumps(info, indent=1, sort_keys=True))
        return 0
    if args.action == "export":
        try:
            mesh = load_mesh(args.infile)
        except (MeshError, OSError, KeyError, ValueError) as e:
            print(f"invalid mesh: {e}", file=sys.stderr)
            return 1
        save_mesh(mesh, args.out or args.infile)
        return 0
    return 2


def _apply_seed_override(cfg, seed):
    if seed is not None and "perturb" in cfg.get("mesh", {}):
        cfg["mesh"]["perturb"]["seed"] = int(seed)


def cmd_analyze(args):
    cfg = load_config(args.config)
    _apply_seed_override(cfg, args.seed)
    outdir = args.out or "."
    os.makedirs(outdir, exist_ok=True)
    mesh = build_mesh(cfg["mesh"])
    system = build_system(cfg["system"])
    scheme = cfg["scheme"]["name"]
    lay = layout_for(scheme, mesh)
    pair = assemble_by_name(scheme, lay, system, exact=args.exact)
    proj = Projection(default_projection_kind(scheme), lay)
    acfg = cfg.get("analysis", {})
    zm_polys = None
    if acfg.get("zero_mean_restricted"):
        zm_polys = _advection_free_cubics(system)
    rep = analyze_pair(pair, proj, p_max=int(acfg.get("p_max", 4)),
                       stability_times=tuple(acfg.get("stability_times", (0.5, 1.0))),
                       zero_mean_polys=zm_polys)
    doc = {
        "scheme": rep.scheme,
        "p_design": pair.p_design,
        "p_measured": rep.p_measured,
        "zero_mean": {"verdict": rep.zero_mean.verdict,
                      "worst_rel": rep.zero_mean.worst,
                      "per_monomial": rep.zero_mean.per_monomial},
        "kernel": {"dim": rep.kernel.dim, "holds": rep.kernel.holds,
                   "max_nonconstancy": rep.kernel.max_nonconstancy},
        "C_A": rep.c_A,
        "image_residuals": rep.im_residuals,
        "constants": {k: (None if v is None else float(v))
                      for k, v in rep.constants.items()},
        "stability": rep.stability,
        "mass_row_defect": pair.mass_row_defect(),
    }
    prefix = cfg.get("output", {}).get("prefix", scheme)
    _atomic_write(os.path.join(outdir, f"{prefix}_diagnostics.json"),
                  json.dumps(doc, indent=1, sort_keys=True, default=float) + "\n")
    if cfg.get("output", {}).get("export_operators"):
        _atomic_write(os.path.join(outdir, f"{prefix}_operators.txt"),
                      pair.coo_text())
    table = _diagnostics_table(doc)
    _atomic_write(os.path.join(outdir, f"{prefix}_diagnostics.txt"), table)
    print(table)
    ok = (rep.p_measured >= pair.p_design and rep.zero_mean.verdict
          and rep.kernel.holds)
    return 0 if ok else 1


def _advection_free_cubics(system):
    """Cubic polynomials annihilated by A.grad (scalar transport only)."""
    if system.n != 1 or system.d != 2:
        return None
    om = system.mats_exact
    wx = om[0][0][0]
    wy = om[1][0][0]
    # (wy x - wx y)^3 expanded
    a, b = wy, -wx
    comps = {}
    coefs = {(3, 0): a ** 3, (2, 1): 3 * a * a * b, (1, 2): 3 * a * b * b,
             (0, 3): b ** 3}
    return [MultiPolynomial(2, [coefs])]


def _diagnostics_table(doc):
    lines = [f"scheme: {doc['scheme']}   p design {doc['p_design']} / "
             f"measured {doc['p_measured']}",
             f"zero mean: {'PASS' if doc['zero_mean']['verdict'] else 'FAIL'} "
             f"(worst rel {doc['zero_mean']['worst_rel']:.3e})",
             f"kernel: {'PASS' if doc['kernel']['holds'] else 'FAIL'} "
             f"(dim {doc['kernel']['dim']})",
             f"C_A: {doc['C_A']}", "constants:"]
    for k, v in sorted(doc["constants"].items()):
        lines.append(f"  {k:>16} = {v}")
    lines.append(f"mass row defect: {doc['mass_row_defect']:.3e}")
    lines.append(f"stability [{doc['stability']['method']}]: "
                 + ", ".join(f"K({t:g})={v:.4g}" for t, v in
                             doc["stability"]["samples"]))
    return "\n".join(lines) + "\n"


def cmd_converge(args):
    cfg = load_config(args.config)
    _apply_seed_override(cfg, args.seed)
    outdir = args.out or "."
    os.makedirs(outdir, exist_ok=True)
    system = build_system(cfg["system"])
    case = build_case(cfg["case"], cfg["system"])
    schemes = [s["name"] for s in cfg.get("schemes", [])] or [cfg["scheme"]["name"]]
    levels_cfg = cfg["levels"]
    prefix = cfg.get("output", {}).get("prefix", "study")
    rc = 0
    results = {}
    for scheme in schemes:
        if scheme == "appendix-a":
            rows = _appendix_a_study(cfg, levels_cfg)
            results[scheme] = rows
            text = "level,h,error,order,bound_ok\n" + "\n".join(
                f"{r['level']},{r['h']!r},{r['error']!r},"
                f"{'' if r['order'] is None else repr(r['order'])},{r['bound_ok']}"
                for r in rows) + "\n"
            _atomic_write(os.path.join(outdir, f"{prefix}_{scheme}.csv"), text)
            continue
        mesh_levels = [(str(lv), build_mesh(cfg["mesh"], level=int(lv)))
                       for lv in levels_cfg]
        study = convergence_study(
            case, scheme, mesh_levels,
            lambda m, s=scheme: assemble_by_name(s, layout_for(s, m), system))
        _atomic_write(os.path.join(outdir, f"{prefix}_{scheme}.csv"), study.to_csv())
        _atomic_write(os.path.join(outdir, f"{prefix}_{scheme}.md"),
                      study.to_markdown())
        results[scheme] = [{k: v for k, v in r.items() if k != "runtime"}
                           for r in study.rows]
        if any("failed" in r for r in study.rows):
            rc = 1
        total = sum(r.get("runtime", 0.0) for r in study.rows)
        print(study.to_markdown())
        print(f"({scheme}: {total:.1f} s)")
    _atomic_write(os.path.join(outdir, f"{prefix}_results.json"),
                  json.dumps(results, indent=1, sort_keys=True, default=float) + "\n")
    return rc


def _appendix_a_study(cfg, levels):
    import math
    rows = []
    prev = None
    for lv in levels:
        mesh = build_mesh(cfg["mesh"], level=int(lv))
        res = appendix_a_fully_discrete(mesh, sine_1d(), 2 * np.pi,
                                        4 * np.pi ** 2,
                                        T=float(cfg.get("case", {}).get("T", 1.0)))
        order = None
        if prev is not None:
            order = math.log(prev["error"] / res["final_error"]) / \
                math.log(prev["h"] / res["h_max"])
        rows.append({"level": lv, "h": res["h_max"], "error": res["final_error"],
                     "order": order, "bound_ok": bool(res["bound_satisfied"])})
        prev = {"error": res["final_error"], "h": res["h_max"]}
    return rows


def cmd_constants(args):
    cfg = load_config(args.config)
    _apply_seed_override(cfg, args.seed)
    mesh = build_mesh(cfg["mesh"])
    system = build_system(cfg["system"])
    scheme = cfg["scheme"]["name"]
    lay = layout_for(scheme, mesh)
    pair = assemble_by_name(scheme, lay, system, exact=args.exact)
    proj = Projection(default_projection_kind(scheme), lay)
    from .analysis import scheme_constants
    consts = scheme_constants(pair, proj)
    for k, v in sorted(consts.items()):
        print(f"{k:>16} = {v}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        prefix = cfg.get("output", {}).get("prefix", scheme)
        _atomic_write(os.path.join(args.out, f"{prefix}_constants.json"),
                      json.dumps(consts, indent=1, sort_keys=True, default=float)
                      + "\n")
    return 0


def main(argv=None):
    ap = argparse.ArgumentParser(prog="fvsupra",
                                 description="Finite-volume schemes on periodic "
                                 "meshes: assembly, diagnostics, convergence")
    sub = ap.add_subparsers(dest="command", required=True)

    mp = sub.add_parser("mesh", help="generate/inspect/export periodic meshes")
    mp.add_argument("action", choices=["gen", "inspect", "export"])
    mp.add_argument("infile", nargs="?")
    mp.add_argument("--1d", dest="steps_flag", action="store_true")
    mp.add_argument("--steps")
    mp.add_argument("--ti-tri", dest="ti_tri", action="store_true")
    mp.add_argument("--h")
    mp.add_argument("--e2")
    mp.add_argument("--n2", type=int)
    mp.add_argument("--perturb")
    mp.add_argument("--seed", type=int)
    mp.add_argument("--replicate", type=int)
    mp.add_argument("--out")
    mp.set_defaults(func=cmd_mesh)

    for name, fn in (("analyze", cmd_analyze), ("converge", cmd_converge),
                     ("constants", cmd_constants)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--exact", action="store_true")
        p.set_defaults(func=fn)

    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (MeshError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (jsonschema.ValidationError if jsonschema else ValueError) as e:
        print(f"config validation error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
