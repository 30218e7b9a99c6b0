"""File output: VTK legacy ASCII, nodal CSV dumps and JSON reports."""

from __future__ import annotations

import csv
import json
import math
import os

import jsonschema
import numpy as np

from .mesh import Q9, Mesh

# VTK_QUADRATIC_TRIANGLE / VTK_BIQUADRATIC_QUAD; local node orders already match
VTK_CELL = {Q9: 28, "T6": 22}

_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}

VORTICITY_SCHEMA = {
    "type": "object",
    "required": ["interior_max", "interior_min", "boundary_max", "boundary_min", "max_principle_ok", "tolerance"],
    "properties": {
        "interior_max": _NUM,
        "interior_min": _NUM,
        "boundary_max": _NUM,
        "boundary_min": _NUM,
        "max_principle_ok": {"type": "boolean"},
        "tolerance": _NUM,
        "l2_norm": _NUM,
    },
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "verification report",
    "type": "object",
    "required": ["kind", "phi", "tmp", "vorticity", "reciprocal", "hypotheses", "meta"],
    "properties": {
        "kind": {"const": "report"},
        "phi": {"type": "number", "minimum": 0},
        "tmp": _NUM,
        "reciprocal": _NUM_OR_NULL,
        "reciprocal_guarded": {"type": "boolean"},
        "vorticity": VORTICITY_SCHEMA,
        "decay": {
            "oneOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "required": ["slopes", "target"],
                    "properties": {"slopes": {"type": "array"}, "target": _NUM},
                },
            ]
        },
        "hypotheses": {"type": "object", "additionalProperties": {"type": "boolean"}},
        "meta": {"type": "object"},
    },
}

CONVERGENCE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "convergence study",
    "type": "object",
    "required": ["kind", "metrics", "rows", "flags"],
    "properties": {
        "kind": {"const": "convergence"},
        "metrics": {"type": "array", "items": {"enum": ["phi", "tmp", "reciprocal"]}},
        "rows": {
            "type": "array",
            "minItems": 3,
            "items": {
                "type": "object",
                "required": ["one_over_h", "error"],
                "properties": {"one_over_h": _NUM_OR_NULL, "error": {"type": "string"}},
            },
        },
        "flags": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["monotone_decreasing", "monotone_increasing", "plateau"],
                "additionalProperties": {"type": "boolean"},
            },
        },
        "meta": {"type": "object"},
    },
}

TRANSIENT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "transient run",
    "type": "object",
    "required": ["kind", "dt", "t_end", "steps", "probes"],
    "properties": {
        "kind": {"const": "transient"},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "t_end": {"type": "number", "exclusiveMinimum": 0},
        "steps": {"type": "integer", "minimum": 0},
        "probes": {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}},
        "decay": {
            "oneOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "required": ["slopes", "target"],
                    "properties": {"slopes": {"type": "array", "items": _NUM_OR_NULL}, "target": _NUM},
                },
            ]
        },
        "max_principle": {"type": ["array", "null"], "items": {"type": "boolean"}},
        "meta": {"type": "object"},
    },
}

SCHEMAS = {"report": REPORT_SCHEMA, "convergence": CONVERGENCE_SCHEMA, "transient": TRANSIENT_SCHEMA}


def _clean(obj):
    """Make a structure JSON-safe: numpy scalars to Python, NaN/inf to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def validate_document(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` does not match its schema."""
    kind = doc.get("kind")
    if kind not in SCHEMAS:
        raise jsonschema.ValidationError(f"unknown document kind {kind!r}")
    jsonschema.validate(doc, SCHEMAS[kind])


def write_json(path, doc: dict) -> dict:
    doc = _clean(doc)
    validate_document(doc)
    with open(path, "w") as fp:
        json.dump(doc, fp, indent=2, sort_keys=True)
        fp.write("\n")
    return doc


def report_document(report, decay=None) -> dict:
    d = report.to_dict()
    d["kind"] = "report"
    if decay is not None:
        d["decay"] = decay
    return _clean(d)


def write_vtk(path, mesh: Mesh, point_scalars=None, point_vectors=None, title="poroverify output"):
    """Legacy ASCII unstructured grid with quadratic cells."""
    point_scalars = point_scalars or {}
    point_vectors = point_vectors or {}
    nn, ne = mesh.n_nodes, mesh.n_elements
    npe = mesh.elements.shape[1]
    with open(path, "w") as fp:
        fp.write("# vtk DataFile Version 2.0\n")
        fp.write(title[:255] + "\n")
        fp.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fp.write("POINTS %d double\n" % nn)
        for x, y in mesh.nodes:
            fp.write("%.16e %.16e 0\n" % (x, y))
        fp.write("CELLS %d %d\n" % (ne, ne * (npe + 1)))
        for cell in mesh.elements:
            fp.write("%d %s\n" % (npe, " ".join(str(int(n)) for n in cell)))
        fp.write("CELL_TYPES %d\n" % ne)
        fp.write(("%d\n" % VTK_CELL[mesh.kind]) * ne)
        if point_scalars or point_vectors:
            fp.write("POINT_DATA %d\n" % nn)
        for name, vals in point_vectors.items():
            fp.write("VECTORS %s double\n" % name)
            for vx, vy in np.asarray(vals).reshape(nn, 2):
                fp.write("%.16e %.16e 0\n" % (vx, vy))
        for name, vals in point_scalars.items():
            fp.write("SCALARS %s double 1\nLOOKUP_TABLE default\n" % name)
            for v in np.asarray(vals).reshape(nn):
                fp.write("%.16e\n" % v)


def nodal_pressure(solution) -> np.ndarray:
    """Pressure on every node (mid-edge and centre nodes interpolated linearly)."""
    from .fem import evaluate

    return evaluate(solution, solution.mesh.nodes)[1]


def write_solution_vtk(path, solution, vorticity=None):
    scalars = {"pressure": nodal_pressure(solution)}
    if vorticity is not None:
        scalars["vorticity"] = vorticity.values
    write_vtk(path, solution.mesh, scalars, {"velocity": solution.velocity})


def write_nodal_csv(path, solution, vorticity=None):
    p = nodal_pressure(solution)
    with open(path, "w", newline="") as fp:
        w = csv.writer(fp)
        head = ["node", "x", "y", "vx", "vy", "p"] + (["vorticity"] if vorticity is not None else [])
        w.writerow(head)
        for i, (x, v) in enumerate(zip(solution.mesh.nodes, solution.velocity)):
            row = [i, repr(float(x[0])), repr(float(x[1])), repr(float(v[0])), repr(float(v[1])), repr(float(p[i]))]
            if vorticity is not None:
                row.append(repr(float(vorticity.values[i])))
            w.writerow(row)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "" if not math.isfinite(v) else repr(float(v))
    return str(v)


def write_convergence_csv(path, table):
    """Columns ``one_over_h, phi, tmp, reciprocal, flags`` plus ``h`` and ``error``.

    ``flags`` is a ``;``-separated list of ``metric:flag`` entries that hold
    for the whole table, repeated on each row for plotting convenience.
    """
    set_flags = ";".join(
        f"{m}:{name}" for m in table.metrics for name, on in table.flags[m].items() if on
    )
    with open(path, "w", newline="") as fp:
        w = csv.writer(fp)
        w.writerow(["one_over_h", "h", "phi", "tmp", "reciprocal", "flags", "error"])
        for r in table.rows:
            w.writerow(
                [_fmt(r.get("one_over_h")), _fmt(r.get("h")), _fmt(r.get("phi")), _fmt(r.get("tmp")),
                 _fmt(r.get("reciprocal")), set_flags, r.get("error", "")]
            )


def write_series_csv(path, header, rows):
    with open(path, "w", newline="") as fp:
        w = csv.writer(fp)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory {path} is not writable")
    return path
