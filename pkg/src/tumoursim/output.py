"""Serialisation: time-series CSV, legacy VTK snapshots and the SVG radius chart."""

import csv
import os

import numpy as np

from .driver import SERIES_COLUMNS

SERIES_HEADER = ",".join(SERIES_COLUMNS)


class OutputError(ValueError):
    """Malformed input file for the readers in this module."""


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_series_csv(rows, path):
    """Write one line per :class:`TimeSeriesRow` under the standard header."""
    with open(path, "w", newline="") as fh:
        fh.write(SERIES_HEADER + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_series_csv(path):
    """Read a series CSV into ``{column: ndarray}``.

    Raises
    ------
    OutputError
        On a wrong header or a malformed line (reported with its number).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise OutputError(f"{path}: line 1: empty file") from None
        if tuple(h.strip() for h in header) != SERIES_COLUMNS:
            raise OutputError(f"{path}: line 1: expected header {SERIES_HEADER!r}")
        data = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(SERIES_COLUMNS):
                raise OutputError(f"{path}: line {reader.line_num}: expected "
                                  f"{len(SERIES_COLUMNS)} fields, got {len(row)}")
            try:
                data.append([float(v) for v in row])
            except ValueError:
                raise OutputError(f"{path}: line {reader.line_num}: non-numeric field") from None
    arr = np.array(data, dtype=float).reshape(-1, len(SERIES_COLUMNS))
    return {name: arr[:, i] for i, name in enumerate(SERIES_COLUMNS)}


def write_vtk(state, path, title="tumour state"):
    """Legacy ASCII VTK unstructured grid of one state.

    Cell data: ``alpha`` and ``in_tumour``.  Point data: ``c``, ``p`` and the
    vertex values of the velocity ``u`` (third component zero).
    """
    mesh = state.mesh
    nv, nt = mesh.n_vertices, mesh.n_triangles
    member = np.zeros(nt) if state.extinct else state.mask.member.astype(float)
    u = state.u[:nv]
    with open(path, "w") as fh:
        w = fh.write
        w("# vtk DataFile Version 3.0\n")
        w(f"{title} t={state.t:.6g}\n")
        w("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        w(f"POINTS {nv} double\n")
        for x, y in mesh.vertices:
            w(f"{float(x)!r} {float(y)!r} 0\n")
        w(f"CELLS {nt} {4 * nt}\n")
        for i, j, k in mesh.triangles:
            w(f"3 {i} {j} {k}\n")
        w(f"CELL_TYPES {nt}\n")
        w("5\n" * nt)
        w(f"CELL_DATA {nt}\n")
        _scalars(w, "alpha", state.alpha)
        _scalars(w, "in_tumour", member)
        w(f"POINT_DATA {nv}\n")
        _scalars(w, "c", state.c)
        _scalars(w, "p", state.p)
        w("VECTORS u double\n")
        for a, b in u:
            w(f"{float(a)!r} {float(b)!r} 0\n")


def _scalars(w, name, values):
    w(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
    for v in values:
        w(f"{float(v)!r}\n")


def read_vtk(path):
    """Parse a file written by :func:`write_vtk` and check its structure.

    Returns ``{"points", "cells", "cell_types", "cell_data", "point_data"}``.
    """
    try:
        return _parse_vtk(path)
    except ValueError as exc:
        if isinstance(exc, OutputError):
            raise
        raise OutputError(f"{path}: malformed number: {exc}") from None


def _parse_vtk(path):
    with open(path) as fh:
        lines = fh.read().split("\n")
    if not lines[0].startswith("# vtk DataFile Version"):
        raise OutputError(f"{path}: line 1: not a legacy VTK file")
    if lines[2].strip() != "ASCII" or lines[3].strip() != "DATASET UNSTRUCTURED_GRID":
        raise OutputError(f"{path}: expected ASCII UNSTRUCTURED_GRID")
    toks = " ".join(lines[4:]).split()
    pos = 0

    def take(n):
        nonlocal pos
        out = toks[pos:pos + n]
        if len(out) != n:
            raise OutputError(f"{path}: truncated file")
        pos += n
        return out

    def expect(word):
        got = take(1)[0]
        if got != word:
            raise OutputError(f"{path}: expected {word!r}, got {got!r}")

    expect("POINTS")
    npts = int(take(1)[0])
    take(1)
    points = np.array(take(3 * npts), dtype=float).reshape(npts, 3)
    expect("CELLS")
    ncell, size = int(take(1)[0]), int(take(1)[0])
    raw = np.array(take(size), dtype=np.int64)
    if size != 4 * ncell or np.any(raw[::4] != 3):
        raise OutputError(f"{path}: CELLS must list triangles only")
    cells = raw.reshape(ncell, 4)[:, 1:]
    if cells.size and (cells.min() < 0 or cells.max() >= npts):
        raise OutputError(f"{path}: cell references a missing point")
    expect("CELL_TYPES")
    if int(take(1)[0]) != ncell:
        raise OutputError(f"{path}: CELL_TYPES count mismatch")
    cell_types = np.array(take(ncell), dtype=np.int64)
    cell_data, point_data = {}, {}
    current, count = None, 0
    while pos < len(toks):
        kw = take(1)[0]
        if kw == "CELL_DATA":
            current, count = cell_data, int(take(1)[0])
            if count != ncell:
                raise OutputError(f"{path}: CELL_DATA count mismatch")
        elif kw == "POINT_DATA":
            current, count = point_data, int(take(1)[0])
            if count != npts:
                raise OutputError(f"{path}: POINT_DATA count mismatch")
        elif kw == "SCALARS" and current is not None:
            name, _, ncomp = take(3)
            expect("LOOKUP_TABLE")
            take(1)
            current[name] = np.array(take(count * int(ncomp)), dtype=float)
        elif kw == "VECTORS" and current is not None:
            name, _ = take(2)
            current[name] = np.array(take(3 * count), dtype=float).reshape(count, 3)
        else:
            raise OutputError(f"{path}: unexpected token {kw!r}")
    return {"points": points, "cells": cells, "cell_types": cell_types,
            "cell_data": cell_data, "point_data": point_data}


def snapshot_name(n):
    return f"fields_{n:04d}.vtk"


def write_final_state(state, path):
    """Final fields as a compressed ``.npz`` archive."""
    np.savez_compressed(path, n=state.n, t=state.t, alpha=state.alpha,
                        member=state.mask.member if not state.extinct else
                        np.zeros(state.mesh.n_triangles, dtype=bool),
                        u=state.u, p=state.p, c=state.c,
                        vertices=state.mesh.vertices, triangles=state.mesh.triangles)


_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def radius_svg(series, labels, width=640, height=420):
    """SVG line chart of radius against time, one polyline per series."""
    ml, mr, mt, mb = 60, 150, 20, 45
    pw, ph = width - ml - mr, height - mt - mb
    ts = np.concatenate([s["t"] for s in series]) if series else np.zeros(1)
    rs = np.concatenate([s["radius"] for s in series]) if series else np.zeros(1)
    t0, t1 = 0.0, max(float(ts.max()), 1e-12)
    r0, r1 = 0.0, max(float(rs.max()) * 1.05, 1e-12)

    def X(t):
        return ml + pw * (t - t0) / (t1 - t0)

    def Y(r):
        return mt + ph * (1.0 - (r - r0) / (r1 - r0))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for k in range(6):
        tv, rv = t0 + k * (t1 - t0) / 5, r0 + k * (r1 - r0) / 5
        out.append(f'<text x="{X(tv):.2f}" y="{mt + ph + 18}" font-size="11" '
                   f'text-anchor="middle">{tv:.3g}</text>')
        out.append(f'<text x="{ml - 6}" y="{Y(rv) + 4:.2f}" font-size="11" '
                   f'text-anchor="end">{rv:.3g}</text>')
    out.append(f'<text x="{ml + pw / 2:.2f}" y="{height - 6}" font-size="12" '
               f'text-anchor="middle">t</text>')
    out.append(f'<text x="14" y="{mt + ph / 2:.2f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {mt + ph / 2:.2f})">radius</text>')
    for i, (s, label) in enumerate(zip(series, labels)):
        col = _COLOURS[i % len(_COLOURS)]
        pts = " ".join(f"{X(t):.3f},{Y(r):.3f}" for t, r in zip(s["t"], s["radius"]))
        out.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{pts}"/>')
        ly = mt + 16 * i + 10
        out.append(f'<g class="legend"><line x1="{ml + pw + 10}" y1="{ly}" x2="{ml + pw + 30}" '
                   f'y2="{ly}" stroke="{col}" stroke-width="2"/>'
                   f'<text x="{ml + pw + 35}" y="{ly + 4}" font-size="11">{_escape(label)}</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s):
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_report(csv_paths, svg_path):
    """Read series CSVs and write ``radius_curve``-style SVG to ``svg_path``."""
    if not csv_paths:
        raise OutputError("report needs at least one series CSV")
    series = [read_series_csv(p) for p in csv_paths]
    labels = [_label(p) for p in csv_paths]
    with open(svg_path, "w") as fh:
        fh.write(radius_svg(series, labels))


def _label(path):
    """Legend text: the file name, prefixed by its directory when generic."""
    base = os.path.basename(path)
    parent = os.path.basename(os.path.dirname(os.path.abspath(path)))
    return f"{parent}/{base}" if base == "series.csv" and parent else base
