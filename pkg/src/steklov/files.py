"""File formats: the ``steklov-mesh v1`` mesh format and density CSV.

Mesh files::

    steklov-mesh v1
    V <count>
    x y [z]            (one line per vertex)
    F <count>
    i j k              (0-based, consistently oriented)
    B <loop-count>
    v0 v1 v2 ...       (one line per boundary loop, surface to the left)
    L <count>          (optional: intrinsic edge lengths per triangle)
    l01 l12 l20

The ``L`` section is written only for meshes whose metric is not the one
induced by the coordinates (glued meshes).

Density files are CSV with header ``loop,edge,value``; ``edge`` counts the
edges of a loop along its orientation, starting at the loop's first vertex.
"""

from __future__ import annotations

import csv
import io
import os

import numpy as np

from .density import BoundaryDensity, DensityError
from .mesh import MeshError, SurfaceMesh, validate

__all__ = [
    "MeshFormatError",
    "DensityFormatError",
    "write_mesh",
    "read_mesh",
    "dumps_mesh",
    "loads_mesh",
    "write_density",
    "read_density",
    "dumps_density",
    "loads_density",
]

HEADER = "steklov-mesh v1"


class MeshFormatError(MeshError):
    """Malformed mesh file; ``line`` is the 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def dumps_mesh(mesh: SurfaceMesh) -> str:
    out = [HEADER, f"V {mesh.n_vertices}"]
    out += [" ".join(repr(float(x)) for x in row) for row in mesh.vertices]
    out.append(f"F {mesh.n_triangles}")
    out += [" ".join(str(int(i)) for i in row) for row in mesh.triangles]
    out.append(f"B {len(mesh.boundary_loops)}")
    out += [" ".join(str(int(i)) for i in loop) for loop in mesh.boundary_loops]
    if not mesh.is_embedded:
        out.append(f"L {mesh.n_triangles}")
        out += [" ".join(repr(float(x)) for x in row) for row in mesh.lengths]
    return "\n".join(out) + "\n"


def write_mesh(mesh: SurfaceMesh, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_mesh(mesh))


class _Lines:
    def __init__(self, text):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self, what):
        while self.pos < len(self.lines):
            self.pos += 1
            line = self.lines[self.pos - 1].strip()
            if line and not line.startswith("#"):
                return line
        raise MeshFormatError(f"unexpected end of file, expected {what}", self.pos + 1)

    def section(self, tag):
        line = self.next(f"'{tag} <count>'")
        parts = line.split()
        if len(parts) != 2 or parts[0] != tag:
            raise MeshFormatError(f"expected '{tag} <count>', got {line!r}", self.pos)
        try:
            n = int(parts[1])
        except ValueError:
            raise MeshFormatError(f"bad count {parts[1]!r}", self.pos) from None
        if n < 0:
            raise MeshFormatError("negative count", self.pos)
        return n

    def numbers(self, kind, size=None):
        line = self.next("data")
        try:
            vals = [kind(x) for x in line.split()]
        except ValueError:
            raise MeshFormatError(f"cannot parse {line!r}", self.pos) from None
        if size is not None and len(vals) not in (size if isinstance(size, tuple) else (size,)):
            raise MeshFormatError(f"expected {size} values, got {len(vals)}", self.pos)
        return vals


def loads_mesh(text: str, check: bool = True) -> SurfaceMesh:
    src = _Lines(text)
    first = src.next("header")
    if first != HEADER:
        raise MeshFormatError(f"bad header {first!r}, expected {HEADER!r}", src.pos)
    nv = src.section("V")
    verts = [src.numbers(float, (2, 3)) for _ in range(nv)]
    if len({len(v) for v in verts}) > 1:
        raise MeshFormatError("mixed 2D and 3D coordinates", src.pos)
    nf = src.section("F")
    tris = []
    for _ in range(nf):
        row = src.numbers(int, 3)
        if min(row) < 0 or max(row) >= nv:
            raise MeshFormatError(f"vertex index out of range in {row}", src.pos)
        tris.append(row)
    nb = src.section("B")
    loops = []
    for _ in range(nb):
        row = src.numbers(int)
        if not row or min(row) < 0 or max(row) >= nv:
            raise MeshFormatError("bad boundary loop", src.pos)
        loops.append(row)
    lengths = None
    try:
        nl = src.section("L")
    except MeshFormatError as exc:
        if "end of file" not in str(exc):
            raise
    else:
        if nl != nf:
            raise MeshFormatError("L section must have one row per triangle", src.pos)
        lengths = np.array([src.numbers(float, 3) for _ in range(nl)])
    verts = np.array(verts, dtype=float).reshape(nv, -1) if nv else np.zeros((0, 3))
    try:
        mesh = SurfaceMesh(verts, np.array(tris, dtype=np.int64).reshape(-1, 3), tuple(loops), lengths=lengths)
        if check:
            validate(mesh)
    except MeshFormatError:
        raise
    except MeshError as exc:
        raise MeshFormatError(f"invalid mesh: {exc}") from None
    return mesh


def read_mesh(path, check: bool = True) -> SurfaceMesh:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path) as fh:
        return loads_mesh(fh.read(), check=check)


class DensityFormatError(DensityError):
    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def dumps_density(mesh: SurfaceMesh, rho: BoundaryDensity) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["loop", "edge", "value"])
    off = mesh.loop_offsets
    for loop in range(len(mesh.boundary_loops)):
        for j in range(off[loop + 1] - off[loop]):
            w.writerow([loop, j, repr(float(rho.values[off[loop] + j]))])
    return buf.getvalue()


def write_density(mesh: SurfaceMesh, rho: BoundaryDensity, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_density(mesh, rho))


def loads_density(text: str, mesh: SurfaceMesh) -> BoundaryDensity:
    """Parse a density CSV; every boundary edge of ``mesh`` must appear exactly once."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["loop", "edge", "value"]:
        raise DensityFormatError("expected header 'loop,edge,value'", 1)
    off = mesh.loop_offsets
    vals = np.full(off[-1], np.nan)
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise DensityFormatError(f"expected 3 fields, got {len(row)}", lineno)
        try:
            loop, edge, value = int(row[0]), int(row[1]), float(row[2])
        except ValueError:
            raise DensityFormatError(f"cannot parse {','.join(row)!r}", lineno) from None
        if not 0 <= loop < len(mesh.boundary_loops) or not 0 <= edge < off[loop + 1] - off[loop]:
            raise DensityFormatError(f"no boundary edge ({loop}, {edge}) in the mesh", lineno)
        if not np.isnan(vals[off[loop] + edge]):
            raise DensityFormatError(f"duplicate edge ({loop}, {edge})", lineno)
        if not np.isfinite(value) or value < 0:
            raise DensityFormatError(f"density must be finite and nonnegative, got {value}", lineno)
        vals[off[loop] + edge] = value
    missing = np.flatnonzero(np.isnan(vals))
    if missing.size:
        loop = int(np.searchsorted(off, missing[0], side="right") - 1)
        raise DensityFormatError(f"missing value for edge ({loop}, {int(missing[0] - off[loop])})")
    try:
        return BoundaryDensity(vals)
    except DensityError as exc:
        raise DensityFormatError(str(exc)) from None


def read_density(path, mesh: SurfaceMesh) -> BoundaryDensity:
    with open(path) as fh:
        return loads_density(fh.read(), mesh)
