"""Point cloud file formats: ascii PLY and whitespace-separated XYZ.

Coordinates are written with 17 significant digits so a write/read
round trip reproduces float64 values exactly.  Binary PLY is out of
scope and rejected explicitly.
"""

from __future__ import annotations

import numpy as np

from .errors import ParseError

__all__ = ["read_cloud", "write_cloud", "detect_format"]


def detect_format(path):
    p = str(path).lower()
    if p.endswith(".ply"):
        return "ply-ascii"
    if p.endswith(".xyz") or p.endswith(".txt"):
        return "xyz"
    raise ParseError(f"cannot infer format from {path!r}; use .ply or .xyz")


def read_cloud(path, fmt=None):
    """Read a point cloud; format inferred from the extension if omitted."""
    fmt = fmt or detect_format(path)
    if fmt == "ply-ascii":
        return _read_ply(path)
    if fmt == "xyz":
        return _read_xyz(path)
    raise ParseError(f"unknown format {fmt!r}")


def write_cloud(points, path, fmt=None):
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    fmt = fmt or detect_format(path)
    if fmt == "ply-ascii":
        _write_ply(points, path)
    elif fmt == "xyz":
        _write_xyz(points, path)
    else:
        raise ParseError(f"unknown format {fmt!r}")


def _read_xyz(path):
    rows = []
    width = None
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = stripped.split()
            try:
                row = [float(tok) for tok in tokens]
            except ValueError:
                raise ParseError("non-numeric token", line=lineno)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(
                    f"expected {width} columns, found {len(row)}", line=lineno
                )
            rows.append(row)
    if not rows:
        raise ParseError("file contains no points")
    return np.asarray(rows, dtype=np.float64)


def _write_xyz(points, path):
    with open(path, "w") as fh:
        for row in points:
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def _read_ply(path):
    with open(path, "r") as fh:
        lines = fh.read().splitlines()

    if not lines or lines[0].strip() != "ply":
        raise ParseError("missing 'ply' magic", line=1)
    n_vertices = None
    props = []
    in_vertex_element = False
    body_start = None
    for i, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if line.startswith("comment") or not line:
            continue
        if line.startswith("format"):
            if "ascii" not in line:
                raise ParseError(f"unsupported PLY format {line!r}", line=i)
        elif line.startswith("element"):
            fields = line.split()
            in_vertex_element = len(fields) == 3 and fields[1] == "vertex"
            if in_vertex_element:
                try:
                    n_vertices = int(fields[2])
                except ValueError:
                    raise ParseError("bad vertex count", line=i)
        elif line.startswith("property") and in_vertex_element:
            fields = line.split()
            if len(fields) != 3:
                raise ParseError("unsupported property layout", line=i)
            props.append(fields[2])
        elif line == "end_header":
            body_start = i
            break
    if body_start is None:
        raise ParseError("missing end_header")
    if n_vertices is None:
        raise ParseError("missing vertex element")
    cols = []
    for axis in ("x", "y", "z"):
        if axis not in props:
            raise ParseError(f"vertex element lacks property {axis}")
        cols.append(props.index(axis))

    pts = np.empty((n_vertices, 3))
    row = 0
    for lineno in range(body_start, body_start + n_vertices):
        if lineno >= len(lines):
            raise ParseError(
                f"expected {n_vertices} vertices, file ends after {row}",
                line=lineno + 1,
            )
        tokens = lines[lineno].split()
        if len(tokens) < len(props):
            raise ParseError("short vertex line", line=lineno + 1)
        try:
            pts[row] = [float(tokens[c]) for c in cols]
        except ValueError:
            raise ParseError("non-numeric token", line=lineno + 1)
        row += 1
    return pts


def _write_ply(points, path):
    if points.shape[1] != 3:
        raise ParseError("PLY output requires 3-D points; use xyz instead")
    with open(path, "w") as fh:
        fh.write("ply\n")
        fh.write("format ascii 1.0\n")
        fh.write(f"element vertex {points.shape[0]}\n")
        fh.write("property float x\n")
        fh.write("property float y\n")
        fh.write("property float z\n")
        fh.write("end_header\n")
        for row in points:
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")
