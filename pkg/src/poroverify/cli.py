"""Command-line driver: solve, verify, convergence, transient and report.

Exit status is 0 on success, 1 when a solve fails and 2 for configuration
errors.  The default output directory comes from ``POROVERIFY_OUTPUT_DIR``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import jsonschema
import numpy as np

from . import io
from .fem import SolverError, TransientSolver, solve
from .mesh import Q9, T6, SIDES, refine_region
from .model import (
    BRINKMAN,
    CATALOG,
    DARCY,
    SpecError,
    benchmark,
    benchmark_parameters,
    cells_for,
    mesh_for,
    spec_from_document,
)
from .verify import (
    convergence_study,
    decay_fit,
    max_principle_check,
    perturbation_test,
    verify_solution,
    vorticity_field,
)

ENV_OUTPUT = "POROVERIFY_OUTPUT_DIR"


class ConfigError(Exception):
    pass


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _overrides(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like KEY=VALUE")
        k, v = item.split("=", 1)
        out[k.strip()] = _parse_value(v)
    return out


def _add_problem_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--benchmark", choices=sorted(CATALOG), help="catalog problem")
    src.add_argument("--spec", help="JSON spec file {benchmark, model, overrides}")
    p.add_argument("--model", help="darcy or brinkman (default: spec file value, else brinkman)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="parameter override, repeatable")
    mesh = p.add_mutually_exclusive_group()
    mesh.add_argument("--quad", nargs=2, type=int, metavar=("NX", "NY"), help="uniform Q9 mesh")
    mesh.add_argument("--tri", nargs=2, type=int, metavar=("NX", "NY"), help="uniform T6 mesh")
    mesh.add_argument("--h-inv", type=float, metavar="N", help="uniform mesh with h = 1/N")
    p.add_argument("--element", choices=(Q9, T6), default=Q9, help="element kind with --h-inv/--levels")
    p.add_argument("--grade-top", nargs=2, type=float, metavar=("GRADING", "LAYERS"),
                   help="grade toward the top side and its two corners")
    p.add_argument("--grade-sides", nargs="+", choices=SIDES, help="sides to grade toward (overrides --grade-top sides)")
    p.add_argument("--gauge", choices=("mean", "pin"), default="mean")
    p.add_argument("--out", default=None, help=f"output directory (default ${ENV_OUTPUT} or ./poroverify_out)")
    p.add_argument("--csv", action="store_true", help="also write CSV dumps")
    p.add_argument("--vtk", action="store_true", help="also write VTK files")
    p.add_argument("--seed", type=int, default=0, help="seed for perturbation tests")
    p.add_argument("--tol", type=float, default=1e-10, help="relative max-principle tolerance")


def build_parser():
    parser = argparse.ArgumentParser(prog="poroverify", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="steady solve with report")
    _add_problem_args(p)

    p = sub.add_parser("verify", help="steady solve, report and perturbation tests")
    _add_problem_args(p)
    p.add_argument("--perturbations", type=int, default=50)
    p.add_argument("--amplitude", type=float, default=0.1)
    p.add_argument("--partner", action="append", metavar="KEY=VALUE",
                   help="override for the reciprocal partner problem")

    p = sub.add_parser("convergence", help="mesh-refinement study")
    _add_problem_args(p)
    p.add_argument("--levels", nargs="+", type=float, required=True, metavar="N", help="1/h values")
    p.add_argument("--metrics", nargs="+", choices=("phi", "tmp", "reciprocal"), default=["phi", "tmp"])
    p.add_argument("--partner", action="append", metavar="KEY=VALUE")

    p = sub.add_parser("transient", help="backward-Euler run with vorticity probes")
    _add_problem_args(p)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--probe", nargs=2, type=float, action="append", metavar=("X", "Y"))
    p.add_argument("--window", type=float, default=0.2, help="decay fit starts at window * t_end")

    p = sub.add_parser("report", help="validate and summarize emitted JSON files")
    p.add_argument("files", nargs="+")
    return parser


# ---------------------------------------------------------------------------


def _load_problem(args, extra=None, transient=None):
    overrides = _overrides(args.set)
    overrides.update(extra or {})
    if transient:
        overrides.update(transient)
    if args.spec:
        try:
            with open(args.spec) as fp:
                text = fp.read()
        except OSError as exc:
            raise ConfigError(f"cannot read spec file: {exc}") from None
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.spec}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{args.spec}: spec must be a JSON object")
        doc = dict(doc)
        if args.model:
            doc["model"] = args.model
        if overrides:
            merged = doc.get("overrides") or {}
            if not isinstance(merged, dict):
                raise ConfigError(f"{args.spec}: 'overrides' must be an object")
            doc["overrides"] = {**merged, **overrides}
        return spec_from_document(doc)
    return benchmark(args.benchmark, args.model or BRINKMAN, **overrides)


def _grading(args):
    if args.grade_top is None and not args.grade_sides:
        return None
    if args.grade_top is None:
        raise ConfigError("--grade-sides needs --grade-top GRADING LAYERS for the grading parameters")
    g, layers = args.grade_top
    if layers != int(layers) or layers < 1:
        raise ConfigError(f"layer count must be a positive integer, got {layers}")
    sides = set(args.grade_sides) if args.grade_sides else {"top", "left", "right"}
    return sides, g, int(layers)


def _mesh(args, spec, one_over_h=None, zone=None):
    grading = _grading(args)
    kind = args.element
    if args.quad:
        nx, ny = args.quad
        kind = Q9
    elif args.tri:
        nx, ny = args.tri
        kind = T6
    else:
        n = one_over_h or args.h_inv or 16
        nx, ny = cells_for(spec, n)
    if nx < 1 or ny < 1:
        raise ConfigError(f"cell counts must be positive, got {nx} x {ny}")
    if grading is None:
        return mesh_for(spec, nx, ny, kind)
    sides, g, layers = grading
    return refine_region(nx, ny, spec.domain, sides, g, layers, kind, zone=zone)


def _outdir(args):
    return io.ensure_dir(args.out or os.environ.get(ENV_OUTPUT) or "poroverify_out")


def _prefix(spec, args, suffix=""):
    tag = f"{spec.name}_{spec.model}"
    if _grading(args) is not None:
        tag += "_graded"
    return tag + suffix


def _default_partner(spec):
    """Second load case for the reciprocal check: a different injection pressure."""
    p_inj = benchmark_parameters(spec.name, spec.model).get("p_inj")
    if p_inj is None:
        return {}
    return {"p_inj": 1.5 * spec.params.get("p_inj", p_inj)}


def cmd_solve(args, perturb=False):
    spec = _load_problem(args)
    mesh = _mesh(args, spec)
    sol = solve(mesh, spec, gauge=args.gauge)
    partner_sol = None
    if perturb:
        extra = _overrides(args.partner) if args.partner else _default_partner(spec)
        if extra:
            partner_sol = solve(mesh, _load_problem(args, extra), gauge=args.gauge)
    rep = verify_solution(sol, partner_sol, tol=args.tol)
    doc = io.report_document(rep)
    doc["meta"]["command"] = args.command
    if perturb:
        for fname in ("phi", "tmp"):
            base, vals = perturbation_test(sol, fname, args.perturbations, args.amplitude, args.seed)
            doc["meta"][f"perturbation_{fname}"] = {
                "base": base,
                "min_increase": float((vals - base).min()),
                "violations": int(np.sum(vals < base)),
                "count": int(len(vals)),
            }
    out = _outdir(args)
    pre = _prefix(spec, args)
    io.write_json(os.path.join(out, pre + "_report.json"), doc)
    if args.vtk:
        io.write_solution_vtk(os.path.join(out, pre + "_solution.vtk"), sol, vorticity_field(sol))
    if args.csv:
        io.write_nodal_csv(os.path.join(out, pre + "_solution.csv"), sol, vorticity_field(sol))
    print(f"phi={rep.phi:.10g} tmp={rep.tmp:.10g} max_principle_ok={rep.vorticity['max_principle_ok']}")
    return 0


def cmd_convergence(args):
    if len(args.levels) < 3:
        raise ConfigError(f"a convergence study needs at least 3 levels, got {len(args.levels)}")
    spec = _load_problem(args)
    partner = None
    if "reciprocal" in args.metrics:
        extra = _overrides(args.partner) if args.partner else _default_partner(spec)
        if not extra:
            raise ConfigError("reciprocal metric needs --partner KEY=VALUE overrides")
        partner = _load_problem(args, extra)
    levels = sorted(args.levels)
    grading = _grading(args)
    if grading is not None:
        # the graded zone is the coarsest level's cell, fixed across the family
        nx0, ny0 = cells_for(spec, levels[0])
        zone = min(spec.domain.width / nx0, spec.domain.height / ny0)
        family = [(lambda n=n: _mesh(args, spec, n, zone)) for n in levels]
    else:
        family = [(lambda n=n: _mesh(args, spec, n)) for n in levels]
    table = convergence_study(spec, family, args.metrics, partner)
    for row, n in zip(table.rows, levels):
        row["one_over_h"] = n
    out = _outdir(args)
    pre = _prefix(spec, args, "_convergence")
    io.write_convergence_csv(os.path.join(out, pre + ".csv"), table)
    io.write_json(
        os.path.join(out, pre + ".json"),
        {"kind": "convergence", "metrics": list(table.metrics), "rows": table.rows, "flags": table.flags,
         "meta": {"benchmark": spec.name, "model": spec.model, "graded": grading is not None}},
    )
    for m in table.metrics:
        on = [k for k, v in table.flags[m].items() if v]
        print(f"{m}: " + (", ".join(on) if on else "no trend flags"))
    failed = [r for r in table.rows if r.get("error")]
    for r in failed:
        print(f"level 1/h={r['one_over_h']}: {r['error']}", file=sys.stderr)
    return 1 if failed else 0


def cmd_transient(args):
    if not args.dt > 0:
        raise ConfigError(f"time step must be positive, got --dt {args.dt}")
    if not args.t_end > 0:
        raise ConfigError(f"final time must be positive, got --t-end {args.t_end}")
    spec = _load_problem(args, transient={"dt": args.dt, "t_end": args.t_end})
    mesh = _mesh(args, spec)
    probes = np.array(args.probe if args.probe else [[0.5 * (spec.domain.x0 + spec.domain.x1), 0.5 * (spec.domain.y0 + spec.domain.y1)]])
    if not spec.domain.contains(probes).all():
        raise ConfigError("probe points must lie inside the domain")
    solver = TransientSolver(mesh, spec, gauge=args.gauge)
    state = solver.initial_state()
    rows, oks = [], []
    out = _outdir(args)
    pre = _prefix(spec, args, "_transient")
    for _ in range(spec.transient.n_steps + 1):
        w = vorticity_field(state.solution)
        mp = max_principle_check(w, args.tol)
        oks.append(mp["max_principle_ok"])
        rows.append([state.time, *w.at(probes), mp["interior_max"], mp["interior_min"], mp["boundary_max"],
                     mp["boundary_min"], mp["max_principle_ok"]])
        if args.vtk:
            io.write_solution_vtk(os.path.join(out, f"{pre}_{state.step:05d}.vtk"), state.solution, w)
        if state.step < spec.transient.n_steps:
            state = solver.step(state)
    decay = None
    series = np.array([[r[0], *r[1 : 1 + len(probes)]] for r in rows], dtype=float)
    slopes, points = [], []
    if spec.model == DARCY:
        target = float(-np.mean(spec.alpha(probes)) / spec.rho)
        for k in range(len(probes)):
            try:
                fit = decay_fit(series[:, [0, k + 1]], spec.transient.t_end, args.window)
                slopes.append(fit.slope)
                points.append(fit.n_points)
            except ValueError as exc:
                print(f"probe {k}: {exc}", file=sys.stderr)
                slopes.append(None)
                points.append(0)
        decay = {"slopes": slopes, "target": target, "points": points}
    header = ["t"] + [f"omega_p{k}" for k in range(len(probes))] + [
        "interior_max", "interior_min", "boundary_max", "boundary_min", "max_principle_ok"]
    io.write_series_csv(os.path.join(out, pre + ".csv"), header, rows)
    if decay is not None:
        io.write_series_csv(
            os.path.join(out, pre + "_decay.csv"),
            ["probe", "x", "y", "slope", "target"],
            [[k, probes[k, 0], probes[k, 1], s, decay["target"]] for k, s in enumerate(slopes)],
        )
    io.write_json(
        os.path.join(out, pre + ".json"),
        {"kind": "transient", "dt": spec.transient.dt, "t_end": spec.transient.t_end,
         "steps": spec.transient.n_steps, "probes": probes.tolist(), "decay": decay,
         "max_principle": oks if spec.model == BRINKMAN else None,
         "meta": {"benchmark": spec.name, "model": spec.model}},
    )
    if decay is not None:
        print("slopes: " + " ".join("nan" if s is None else f"{s:.6g}" for s in slopes) + f" target={decay['target']:.6g}")
    else:
        print(f"max_principle_ok at every step: {all(oks)}")
    return 0


def cmd_report(args):
    status = 0
    for path in args.files:
        try:
            with open(path) as fp:
                doc = json.load(fp)
            io.validate_document(doc)
        except (OSError, json.JSONDecodeError, jsonschema.ValidationError) as exc:
            print(f"{path}: invalid ({str(exc).splitlines()[0]})")
            status = 2
            continue
        kind = doc["kind"]
        if kind == "report":
            print(f"{path}: phi={doc['phi']:.10g} tmp={doc['tmp']:.10g} "
                  f"max_principle_ok={doc['vorticity']['max_principle_ok']}")
        elif kind == "convergence":
            flags = {m: [k for k, v in f.items() if v] for m, f in doc["flags"].items()}
            print(f"{path}: {len(doc['rows'])} levels, flags {flags}")
        else:
            print(f"{path}: {doc['steps']} steps, decay {doc.get('decay')}")
    return status


COMMANDS = {
    "solve": cmd_solve,
    "verify": lambda a: cmd_solve(a, perturb=True),
    "convergence": cmd_convergence,
    "transient": cmd_transient,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, SpecError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
