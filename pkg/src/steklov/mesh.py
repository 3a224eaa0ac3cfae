"""Triangulated surfaces with boundary.

A :class:`SurfaceMesh` is an oriented triangle mesh together with its
boundary loops.  Its piecewise-flat metric is stored intrinsically as the
three edge lengths of every triangle, so that meshes produced by
:func:`glue_segments` (which in general admit no consistent embedding) are
handled by exactly the same code as meshes built from coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

__all__ = [
    "MeshError",
    "GluingError",
    "SurfaceMesh",
    "Topology",
    "GluingSpec",
    "build_disk",
    "build_cylinder",
    "refine",
    "scale",
    "puncture",
    "arc_pair",
    "glue_segments",
    "quotient_map",
    "topology",
    "validate",
    "angle_sums",
    "mesh_size",
]

LENGTH_RTOL = 1e-9


class MeshError(ValueError):
    """Raised for invalid meshes or invalid mesh operations."""


class GluingError(MeshError):
    """Raised when a gluing specification does not fit the mesh."""


def _edge_lengths_from_coords(vertices, triangles):
    p = vertices[triangles]
    # lengths[f, i] is the length of edge (t[f, i], t[f, i + 1])
    return np.stack(
        [
            np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
            np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
            np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
        ],
        axis=1,
    )


def triangle_areas(lengths):
    """Areas from edge lengths (Kahan's stable Heron formula)."""
    s = np.sort(lengths, axis=1)[:, ::-1]
    a, b, c = s[:, 0], s[:, 1], s[:, 2]
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * np.sqrt(np.clip(prod, 0.0, None))


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Oriented triangulated surface with ordered boundary loops.

    Parameters
    ----------
    vertices : ndarray, shape (V, 2) or (V, 3)
        Vertex coordinates.  Used for plotting and as the default source
        of the metric.
    triangles : ndarray of int, shape (F, 3)
        Consistently oriented vertex triples.
    boundary_loops : tuple of ndarray
        Cyclically ordered boundary vertices, one array per boundary
        component, oriented so that the surface lies to the left.
    lengths : ndarray, shape (F, 3), optional
        Intrinsic metric: ``lengths[f, i]`` is the length of the edge from
        ``triangles[f, i]`` to ``triangles[f, (i + 1) % 3]``.  Defaults to
        the lengths of the embedding.
    snap : callable, optional
        ``snap(points, on_boundary) -> points`` used by :func:`refine` to
        place new vertices on the analytic surface.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_loops: tuple
    lengths: Optional[np.ndarray] = None
    snap: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        t = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        if v.ndim != 2 or v.shape[1] not in (2, 3):
            raise MeshError("vertices must have shape (V, 2) or (V, 3)")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MeshError("triangle index out of range")
        loops = tuple(np.array(loop, dtype=np.int64) for loop in self.boundary_loops)
        if self.lengths is None:
            lengths = _edge_lengths_from_coords(v, t)
            embedded = True
        else:
            lengths = np.array(self.lengths, dtype=float).reshape(-1, 3)
            if lengths.shape != t.shape:
                raise MeshError("lengths must have one entry per triangle edge")
            embedded = bool(np.allclose(lengths, _edge_lengths_from_coords(v, t),
                                        rtol=1e-12, atol=0.0))
        for arr in (v, t, lengths, *loops):
            arr.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "boundary_loops", loops)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "_embedded", embedded)
        object.__setattr__(self, "_cache", {})

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def is_embedded(self) -> bool:
        """True when the intrinsic metric is that of the vertex coordinates."""
        return self._embedded

    @property
    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted pairs, shape (E, 2)."""
        if "edges" not in self._cache:
            t = self.triangles
            e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
            self._cache["edges"] = np.unique(np.sort(e, axis=1), axis=0)
        return self._cache["edges"]

    @property
    def loop_offsets(self) -> np.ndarray:
        """Index of the first boundary edge of each loop, plus the total."""
        sizes = [len(loop) for loop in self.boundary_loops]
        return np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)

    @property
    def boundary_edges(self) -> np.ndarray:
        """Directed boundary edges ``(loop[j], loop[j+1])``, loop after loop."""
        if "bedges" not in self._cache:
            if self.boundary_loops:
                pairs = [np.stack([loop, np.roll(loop, -1)], axis=1)
                         for loop in self.boundary_loops]
                out = np.concatenate(pairs)
            else:
                out = np.zeros((0, 2), dtype=np.int64)
            self._cache["bedges"] = out
        return self._cache["bedges"]

    @property
    def boundary_edge_lengths(self) -> np.ndarray:
        if "blen" not in self._cache:
            lookup = self._halfedge_lookup()
            out = np.empty(len(self.boundary_edges))
            for n, (a, b) in enumerate(self.boundary_edges):
                try:
                    f, i = lookup[(int(a), int(b))]
                except KeyError:
                    raise MeshError(f"boundary edge ({a}, {b}) is not a triangle edge") from None
                out[n] = self.lengths[f, i]
            self._cache["blen"] = out
        return self._cache["blen"]

    @property
    def boundary_vertices(self) -> np.ndarray:
        if not self.boundary_loops:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate(self.boundary_loops))

    def loop_of_edge(self) -> np.ndarray:
        """Loop index of every boundary edge."""
        sizes = [len(loop) for loop in self.boundary_loops]
        return np.repeat(np.arange(len(sizes)), sizes)

    def loop_lengths(self) -> np.ndarray:
        off = self.loop_offsets
        blen = self.boundary_edge_lengths
        return np.array([blen[off[i]:off[i + 1]].sum() for i in range(len(off) - 1)])

    def _halfedge_lookup(self):
        if "he" not in self._cache:
            t = self.triangles
            table = {}
            for f in range(len(t)):
                for i in range(3):
                    table[(int(t[f, i]), int(t[f, (i + 1) % 3]))] = (f, i)
            self._cache["he"] = table
        return self._cache["he"]

    def with_(self, **changes) -> "SurfaceMesh":
        fields = dict(vertices=self.vertices, triangles=self.triangles,
                      boundary_loops=self.boundary_loops,
                      lengths=None if self.is_embedded else self.lengths,
                      snap=self.snap)
        fields.update(changes)
        return SurfaceMesh(**fields)


@dataclass(frozen=True)
class Topology:
    genus: int
    boundary_count: int
    euler: int


@dataclass(frozen=True)
class GluingSpec:
    """Two boundary arcs to be identified by an orientation-reversing isometry.

    ``arc1`` and ``arc2`` are ``(loop_index, vertices)`` with the vertices
    consecutive along the loop orientation.  Vertex ``arc1[i]`` is
    identified with ``arc2[m - i]`` where ``m`` is the number of edges.
    """

    arc1: tuple
    arc2: tuple
    half_length: float

    @property
    def n_edges(self) -> int:
        return len(self.arc1[1]) - 1

    def pairs(self):
        a = list(self.arc1[1])
        b = list(self.arc2[1])[::-1]
        return list(zip(a, b))


# ----------------------------------------------------------------------------
# builders


def _trace_loops(triangles, n_vertices):
    """Boundary loops from unmatched half-edges, each starting at its smallest vertex."""
    t = triangles
    he = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    present = {(int(a), int(b)) for a, b in he}
    nxt = {}
    for a, b in present:
        if (b, a) not in present:
            if a in nxt:
                raise MeshError(f"vertex {a} has more than one outgoing boundary edge")
            nxt[a] = b
    loops, seen = [], set()
    for start in sorted(nxt):
        if start in seen:
            continue
        loop, v = [], start
        while v not in seen:
            seen.add(v)
            loop.append(v)
            v = nxt.get(v)
            if v is None:
                raise MeshError("open boundary chain")
        if v != start:
            raise MeshError("boundary chain does not close")
        loops.append(np.array(loop, dtype=np.int64))
    return loops


def disk_snap(radius: float) -> Callable:
    def snap(points, on_boundary):
        out = points.copy()
        b = out[on_boundary]
        r = np.linalg.norm(b[:, :2], axis=1)
        out[on_boundary, :2] = b[:, :2] * (radius / r)[:, None]
        return out
    return snap


def cylinder_snap(points, on_boundary):
    out = points.copy()
    r = np.linalg.norm(out[:, :2], axis=1)
    out[:, :2] /= r[:, None]
    return out


def build_disk(n_rings: int, n_sectors: int, radius: float = 1.0, levels: int = 0) -> SurfaceMesh:
    """Planar polar-grid triangulation of the disk of given radius.

    Ring ``i`` (``1 <= i <= n_rings``) sits at radius ``radius * i / n_rings``
    and carries ``n_sectors`` vertices, joined by a fan to the centre.  The
    boundary is the regular ``n_sectors``-gon; ``levels`` uniform
    refinements place new boundary vertices on the circle.
    """
    if int(n_rings) < 1 or int(n_sectors) < 3 or not radius > 0:
        raise MeshError("need n_rings >= 1 and n_sectors >= 3 with radius > 0")
    n_rings, n_sectors = int(n_rings), int(n_sectors)
    theta = 2 * np.pi * np.arange(n_sectors) / n_sectors
    verts = [np.zeros(2)]
    for i in range(1, n_rings + 1):
        r = radius * i / n_rings
        verts.extend(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))

    def ring(i, j):
        return 1 + (i - 1) * n_sectors + (j % n_sectors)

    tris = [(0, ring(1, j), ring(1, j + 1)) for j in range(n_sectors)]
    for i in range(1, n_rings):
        for j in range(n_sectors):
            a0, a1 = ring(i, j), ring(i, j + 1)
            b0, b1 = ring(i + 1, j), ring(i + 1, j + 1)
            tris.append((a0, b0, b1))
            tris.append((a0, b1, a1))
    outer = np.array([ring(n_rings, j) for j in range(n_sectors)])
    mesh = SurfaceMesh(np.array(verts), np.array(tris), (outer,), snap=disk_snap(radius))
    return refine(mesh, levels)


def build_cylinder(T: float, n_axial: int, n_circ: int, levels: int = 0) -> SurfaceMesh:
    """Flat cylinder ``[-T, T] x S^1`` (circumference 2*pi) as a unit-radius right cylinder.

    Loop 0 is the circle at ``z = -T``, loop 1 the circle at ``z = T``;
    both start at angle 0.
    """
    if not T > 0 or int(n_axial) < 1 or int(n_circ) < 3:
        raise MeshError("need n_axial >= 1 and n_circ >= 3 with T > 0")
    n_axial, n_circ = int(n_axial), int(n_circ)
    theta = 2 * np.pi * np.arange(n_circ) / n_circ
    z = np.linspace(-T, T, n_axial + 1)
    verts = np.array([(np.cos(th), np.sin(th), zz) for zz in z for th in theta])

    def idx(i, j):
        return i * n_circ + (j % n_circ)

    tris = []
    for i in range(n_axial):
        for j in range(n_circ):
            p00, p01 = idx(i, j), idx(i, j + 1)
            p10, p11 = idx(i + 1, j), idx(i + 1, j + 1)
            tris.append((p00, p01, p11))
            tris.append((p00, p11, p10))
    tris = np.array(tris)
    loops = _trace_loops(tris, len(verts))
    mesh = SurfaceMesh(verts, tris, tuple(loops), snap=cylinder_snap)
    return refine(mesh, levels)


def refine(mesh: SurfaceMesh, levels: int = 1) -> SurfaceMesh:
    """Uniform 1-to-4 subdivision, repeated ``levels`` times.

    Embedded meshes get midpoint vertices, snapped by ``mesh.snap`` when
    present.  Meshes with a purely intrinsic metric are subdivided
    intrinsically (children of a flat triangle have half-length sides).
    """
    for _ in range(int(levels)):
        mesh = _refine_once(mesh)
    return mesh


def _refine_once(mesh: SurfaceMesh) -> SurfaceMesh:
    t = mesh.triangles
    nv = mesh.n_vertices
    edges = mesh.edges
    key = edges[:, 0] * nv + edges[:, 1]
    order = np.argsort(key)
    key_sorted = key[order]

    def mid(a, b):
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        pos = np.searchsorted(key_sorted, lo * nv + hi)
        return nv + order[pos]

    m01 = mid(t[:, 0], t[:, 1])
    m12 = mid(t[:, 1], t[:, 2])
    m20 = mid(t[:, 2], t[:, 0])
    new_t = np.concatenate([
        np.stack([t[:, 0], m01, m20], axis=1),
        np.stack([m01, t[:, 1], m12], axis=1),
        np.stack([m20, m12, t[:, 2]], axis=1),
        np.stack([m01, m12, m20], axis=1),
    ])
    loops = []
    for loop in mesh.boundary_loops:
        nxt = np.roll(loop, -1)
        mids = mid(loop, nxt)
        loops.append(np.stack([loop, mids], axis=1).reshape(-1))

    if mesh.is_embedded:
        new_v = np.concatenate([mesh.vertices, 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])])
        if mesh.snap is not None:
            on_b = np.zeros(len(new_v), dtype=bool)
            on_b[np.concatenate(loops)] = True
            fresh = np.arange(len(new_v)) >= nv
            snapped = mesh.snap(new_v, on_b)
            new_v[fresh] = snapped[fresh]
        return SurfaceMesh(new_v, new_t, tuple(loops), snap=mesh.snap)

    L = mesh.lengths
    half = 0.5 * L
    # corner triangles: two half sides and the midline (half the opposite side)
    new_L = np.concatenate([
        np.stack([half[:, 0], 0.5 * L[:, 1], half[:, 2]], axis=1),
        np.stack([half[:, 0], half[:, 1], 0.5 * L[:, 2]], axis=1),
        np.stack([0.5 * L[:, 0], half[:, 1], half[:, 2]], axis=1),
        np.stack([0.5 * L[:, 1], 0.5 * L[:, 2], 0.5 * L[:, 0]], axis=1),
    ])
    new_v = np.concatenate([mesh.vertices, 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])])
    return SurfaceMesh(new_v, new_t, tuple(loops), lengths=new_L)


def scale(mesh: SurfaceMesh, factor: float) -> SurfaceMesh:
    """Homothety by ``factor`` (metric scaled by ``factor**2``)."""
    return SurfaceMesh(mesh.vertices * factor, mesh.triangles, mesh.boundary_loops,
                       lengths=None if mesh.is_embedded else mesh.lengths * factor)


def mesh_size(mesh: SurfaceMesh) -> float:
    """Longest edge length."""
    return float(mesh.lengths.max())


# ----------------------------------------------------------------------------
# validation and topology


def validate(mesh: SurfaceMesh) -> None:
    """Raise :class:`MeshError` unless ``mesh`` is a valid oriented surface with boundary."""
    t = mesh.triangles
    nv = mesh.n_vertices
    if len(t) == 0:
        raise MeshError("mesh has no triangles")
    if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 2] == t[:, 0])):
        raise MeshError("triangle with repeated vertex")
    used = np.zeros(nv, dtype=bool)
    used[t.ravel()] = True
    if not used.all():
        raise MeshError(f"unreferenced vertex {int(np.flatnonzero(~used)[0])}")

    L = mesh.lengths
    s = np.sort(L, axis=1)
    bad = np.flatnonzero((s[:, 0] + s[:, 1] <= s[:, 2] * (1 + 1e-12)) | (triangle_areas(L) <= 0))
    if bad.size:
        raise MeshError(f"degenerate triangle {int(bad[0])}")

    he = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    hkey = he[:, 0] * nv + he[:, 1]
    if len(np.unique(hkey)) != len(hkey):
        raise MeshError("inconsistent orientation or non-manifold edge (repeated half-edge)")
    und = np.sort(he, axis=1)
    _, counts = np.unique(und[:, 0] * nv + und[:, 1], return_counts=True)
    if counts.max() > 2:
        raise MeshError("non-manifold edge shared by more than two triangles")

    rev = he[:, 1] * nv + he[:, 0]
    is_boundary = ~np.isin(rev, hkey)
    bset = set(map(int, hkey[is_boundary]))
    loop_edges = mesh.boundary_edges
    lkeys = [int(a) * nv + int(b) for a, b in loop_edges]
    if len(set(lkeys)) != len(lkeys) or set(lkeys) != bset:
        raise MeshError("boundary loops do not match the boundary edges")
    for loop in mesh.boundary_loops:
        if len(loop) < 3:
            raise MeshError("boundary loop with fewer than three vertices")
    if not mesh.boundary_loops:
        raise MeshError("surface has no boundary")

    # connectivity
    n_comp, _ = csgraph.connected_components(_vertex_adjacency(mesh), directed=False)
    if n_comp != 1:
        raise MeshError(f"mesh has {n_comp} connected components")

    # vertex manifoldness: the corners around each vertex form one fan
    F = len(t)
    corner_of = {}
    for c in range(3 * F):
        f, i = divmod(c, 3)
        corner_of[(f, int(t[f, i]))] = c
    rows, cols = [], []
    lookup = mesh._halfedge_lookup()
    for f in range(F):
        for i in range(3):
            a, b = int(t[f, i]), int(t[f, (i + 1) % 3])
            g = lookup.get((b, a))
            if g is None or g[0] < f:
                continue
            rows += [corner_of[(f, a)], corner_of[(f, b)]]
            cols += [corner_of[(g[0], a)], corner_of[(g[0], b)]]
    adj = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(3 * F, 3 * F))
    n_fans, _ = csgraph.connected_components(adj, directed=False)
    if n_fans != nv:
        raise MeshError("non-manifold vertex (pinched fan)")


def _vertex_adjacency(mesh):
    e = mesh.edges
    n = mesh.n_vertices
    return sparse.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))


def topology(mesh: SurfaceMesh) -> Topology:
    """Euler characteristic with the genus and boundary count it implies."""
    chi = mesh.n_vertices - len(mesh.edges) + mesh.n_triangles
    k = len(mesh.boundary_loops)
    twice_genus = 2 - chi - k
    if twice_genus < 0 or twice_genus % 2:
        raise MeshError(f"non-integer or negative genus (chi={chi}, k={k})")
    return Topology(genus=twice_genus // 2, boundary_count=k, euler=chi)


def angle_sums(mesh: SurfaceMesh) -> np.ndarray:
    """Sum of incident triangle angles at every vertex."""
    L = mesh.lengths
    out = np.zeros(mesh.n_vertices)
    for i in range(3):
        # angle at corner i lies between edges i and i-1, opposite edge i+1
        a, b, c = L[:, i], L[:, (i - 1) % 3], L[:, (i + 1) % 3]
        cos = np.clip((a * a + b * b - c * c) / (2 * a * b), -1.0, 1.0)
        np.add.at(out, mesh.triangles[:, i], np.arccos(cos))
    return out


# ----------------------------------------------------------------------------
# topological surgery


def puncture(mesh: SurfaceMesh, vertex: int) -> SurfaceMesh:
    """Remove the open star of an interior vertex, adding its link as a new boundary loop."""
    vertex = int(vertex)
    if not 0 <= vertex < mesh.n_vertices:
        raise MeshError(f"vertex {vertex} out of range")
    if vertex in set(mesh.boundary_vertices.tolist()):
        raise MeshError(f"vertex {vertex} lies on the boundary")
    t = mesh.triangles
    star = np.any(t == vertex, axis=1)
    if star.sum() < 3:
        raise MeshError(f"vertex {vertex} has fewer than three incident triangles")
    link = np.unique(t[star])
    link = link[link != vertex]
    if np.isin(link, mesh.boundary_vertices).any():
        raise MeshError(f"puncturing vertex {vertex} would pinch the existing boundary")

    keep = np.ones(mesh.n_vertices, dtype=bool)
    keep[vertex] = False
    remap = -np.ones(mesh.n_vertices, dtype=np.int64)
    remap[keep] = np.arange(keep.sum())
    new_t = remap[t[~star]]
    if len(new_t) == 0:
        raise MeshError("puncture removes every triangle")
    old_loops = [remap[loop] for loop in mesh.boundary_loops]
    # new loop: reversed link cycle, read off the removed triangles (v, a, b) -> b -> a
    nxt = {}
    for row in t[star]:
        i = int(np.flatnonzero(row == vertex)[0])
        a, b = int(row[(i + 1) % 3]), int(row[(i + 2) % 3])
        nxt[b] = a
    start = min(nxt)
    cycle, v = [start], nxt[start]
    while v != start:
        cycle.append(v)
        v = nxt[v]
    new_loop = remap[np.array(cycle)]
    lengths = None if mesh.is_embedded else mesh.lengths[~star]
    out = SurfaceMesh(mesh.vertices[keep], new_t, tuple(old_loops) + (new_loop,), lengths=lengths)
    n_comp, _ = csgraph.connected_components(_vertex_adjacency(out), directed=False)
    if n_comp != 1:
        raise MeshError(f"puncturing vertex {vertex} disconnects the mesh")
    return out


def arc_pair(mesh: SurfaceMesh, loop1: int, loop2: int, n_edges: int,
             center1: int = 0, center2: int = 0) -> GluingSpec:
    """Matched arcs of ``n_edges`` edges centred at loop positions ``center1``/``center2``.

    The arc on ``loop1`` starts ``n_edges // 2`` positions before
    ``center1``; the arc on ``loop2`` is placed so that the centres are
    identified with each other.
    """
    m = int(n_edges)
    la, lb = mesh.boundary_loops[loop1], mesh.boundary_loops[loop2]
    h = m // 2
    a = [int(la[(center1 - h + i) % len(la)]) for i in range(m + 1)]
    b = [int(lb[(center2 - (m - h) + i) % len(lb)]) for i in range(m + 1)]
    off = mesh.loop_offsets
    blen = mesh.boundary_edge_lengths
    idx = [(center1 - h + i) % len(la) for i in range(m)]
    total = float(blen[off[loop1] + np.array(idx)].sum()) if m else 0.0
    return GluingSpec(arc1=(int(loop1), a), arc2=(int(loop2), b), half_length=0.5 * total)


def _arc_edge_positions(mesh, loop, verts):
    """Positions (within the loop) of the consecutive arc edges, or raise."""
    lv = mesh.boundary_loops[loop]
    n = len(lv)
    where = {int(v): j for j, v in enumerate(lv)}
    try:
        start = where[int(verts[0])]
    except KeyError:
        raise GluingError(f"vertex {verts[0]} is not on loop {loop}") from None
    pos = []
    for i in range(len(verts) - 1):
        j = (start + i) % n
        if int(lv[j]) != int(verts[i]) or int(lv[(j + 1) % n]) != int(verts[i + 1]):
            raise GluingError(f"arc on loop {loop} is not a run of consecutive boundary vertices")
        pos.append(j)
    return pos


def _check_gluing(mesh: SurfaceMesh, spec: GluingSpec):
    (l1, a), (l2, b) = spec.arc1, spec.arc2
    nloops = len(mesh.boundary_loops)
    if not (0 <= l1 < nloops and 0 <= l2 < nloops):
        raise GluingError("loop index out of range")
    if l1 == l2:
        raise GluingError("arcs must lie on distinct boundary loops")
    if len(a) != len(b):
        raise GluingError(f"arcs have different edge counts ({len(a) - 1} vs {len(b) - 1})")
    m = len(a) - 1
    if m < 2:
        raise GluingError("arcs need at least two edges")
    for loop, verts in ((l1, a), (l2, b)):
        if len(set(verts)) != len(verts):
            raise GluingError(f"arc on loop {loop} wraps onto itself")
        if len(verts) >= len(mesh.boundary_loops[loop]):
            raise GluingError(f"arc on loop {loop} covers the whole loop")
    pa = _arc_edge_positions(mesh, l1, a)
    pb = _arc_edge_positions(mesh, l2, b)
    off = mesh.loop_offsets
    blen = mesh.boundary_edge_lengths
    la = blen[off[l1] + np.array(pa)]
    lb = blen[off[l2] + np.array(pb)][::-1]
    if not np.allclose(la, lb, rtol=LENGTH_RTOL, atol=0.0):
        raise GluingError("corresponding arc edges have different lengths")
    if not np.isclose(la.sum(), 2 * spec.half_length, rtol=LENGTH_RTOL, atol=0.0):
        raise GluingError(f"arc length {la.sum():.12g} differs from 2*eps = {2 * spec.half_length:.12g}")
    return pa, pb


def quotient_map(mesh: SurfaceMesh, spec: GluingSpec) -> np.ndarray:
    """Index in the glued mesh of every vertex of ``mesh``."""
    _check_gluing(mesh, spec)
    target = np.arange(mesh.n_vertices)
    for va, vb in spec.pairs():
        target[vb] = va
    keep = np.ones(mesh.n_vertices, dtype=bool)
    keep[[vb for _, vb in spec.pairs()]] = False
    compact = -np.ones(mesh.n_vertices, dtype=np.int64)
    compact[keep] = np.arange(keep.sum())
    return compact[target]


def glue_segments(mesh: SurfaceMesh, spec: GluingSpec) -> SurfaceMesh:
    """Quotient of ``mesh`` identifying ``spec.arc1`` with ``spec.arc2`` (orientation reversing).

    The result has genus one higher and one boundary component fewer.
    Its metric is intrinsic: every triangle keeps its edge lengths.
    """
    pa, pb = _check_gluing(mesh, spec)
    vmap = quotient_map(mesh, spec)
    (l1, a), (l2, b) = spec.arc1, spec.arc2
    m = len(a) - 1
    new_t = vmap[mesh.triangles]

    rest1 = _loop_from(mesh.boundary_loops[l1], a[m], len(mesh.boundary_loops[l1]) - m)
    rest2 = _loop_from(mesh.boundary_loops[l2], b[m], len(mesh.boundary_loops[l2]) - m)
    # rest1 runs a_m -> ... -> a_0, rest2 runs b_m (= a_0) -> ... -> b_0 (= a_m)
    merged = np.concatenate([vmap[rest1], vmap[rest2[1:-1]]])
    loops = []
    for i, loop in enumerate(mesh.boundary_loops):
        if i == min(l1, l2):
            loops.append(merged)
        elif i != max(l1, l2):
            loops.append(vmap[loop])
    keep = np.ones(mesh.n_vertices, dtype=bool)
    keep[[vb for _, vb in spec.pairs()]] = False
    # identified vertices take the coordinates of their arc1 representative
    new_v = np.empty((int(vmap.max()) + 1, mesh.vertices.shape[1]))
    new_v[vmap[keep]] = mesh.vertices[keep]
    out = SurfaceMesh(new_v, new_t, tuple(loops), lengths=mesh.lengths.copy())
    try:
        validate(out)
    except MeshError as exc:
        raise GluingError(f"identification does not produce a surface: {exc}") from None
    return out


def _loop_from(loop, start_vertex, count):
    """``count + 1`` consecutive loop vertices starting at ``start_vertex``."""
    n = len(loop)
    j = int(np.flatnonzero(loop == start_vertex)[0])
    return np.array([loop[(j + i) % n] for i in range(count + 1)])
