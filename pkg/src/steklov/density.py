"""Boundary densities: nonnegative, piecewise constant on boundary edges.

Edge ``n`` of a density is ``mesh.boundary_edges[n]``, i.e. edges are
numbered loop by loop along the loop orientation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .mesh import GluingSpec, MeshError, SurfaceMesh, quotient_map

__all__ = [
    "DensityError",
    "BoundaryDensity",
    "ConformalFactor",
    "uniform_density",
    "weighted_length",
    "loop_masses",
    "heat_smooth",
    "zero_on_arcs",
    "arc_edges",
    "push_conformal",
    "l1_distance",
    "descend",
    "normalize",
]


class DensityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BoundaryDensity:
    """Nonnegative, not identically zero, one value per boundary edge.

    ``meta`` carries diagnostics of the operation that produced the
    density (for instance loops that :func:`heat_smooth` left at zero).
    """

    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(v)):
            raise DensityError("density values must be finite")
        if np.any(v < 0):
            raise DensityError("density values must be nonnegative")
        if not np.any(v > 0):
            raise DensityError("density is identically zero")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    def scaled(self, c: float) -> "BoundaryDensity":
        return BoundaryDensity(self.values * c)


@dataclass(frozen=True, eq=False)
class ConformalFactor:
    """Nonnegative vertex function ``f``; zeros must be isolated (no edge with two zero ends)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise DensityError("conformal factor must be finite and nonnegative")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def check(self, mesh: SurfaceMesh):
        if len(self.values) != mesh.n_vertices:
            raise DensityError("conformal factor needs one value per vertex")
        e = mesh.edges
        if np.any((self.values[e[:, 0]] == 0) & (self.values[e[:, 1]] == 0)):
            raise DensityError("conformal factor vanishes on a whole edge")


def _check(mesh: SurfaceMesh, rho: BoundaryDensity):
    if len(rho.values) != len(mesh.boundary_edges):
        raise DensityError(
            f"density has {len(rho.values)} values, mesh has {len(mesh.boundary_edges)} boundary edges")


def uniform_density(mesh: SurfaceMesh) -> BoundaryDensity:
    return BoundaryDensity(np.ones(len(mesh.boundary_edges)))


def weighted_length(mesh: SurfaceMesh, rho: BoundaryDensity) -> float:
    """Weighted boundary length ``sum_e rho_e * len(e)``."""
    _check(mesh, rho)
    return float(np.dot(rho.values, mesh.boundary_edge_lengths))


def loop_masses(mesh: SurfaceMesh, rho: BoundaryDensity) -> np.ndarray:
    _check(mesh, rho)
    w = rho.values * mesh.boundary_edge_lengths
    return np.bincount(mesh.loop_of_edge(), weights=w, minlength=len(mesh.boundary_loops))


def normalize(mesh: SurfaceMesh, rho: BoundaryDensity, target: float = 1.0) -> BoundaryDensity:
    """Rescale so that the weighted length equals ``target``."""
    return BoundaryDensity(rho.values * (target / weighted_length(mesh, rho)))


def l1_distance(mesh: SurfaceMesh, rho1: BoundaryDensity, rho2: BoundaryDensity) -> float:
    _check(mesh, rho1)
    _check(mesh, rho2)
    return float(np.dot(np.abs(rho1.values - rho2.values), mesh.boundary_edge_lengths))


def _psi(u):
    # H(z) = max(z, 0) + s * psi(|z| / s) is the second antiderivative of the Gaussian
    return np.exp(-0.5 * u * u) / np.sqrt(2 * np.pi) - u * ndtr(-u)


def _gaussian_edge_weights(knots, length, s):
    """``W[e, f] = sum_k int_{I_e} int_{I_f + kL} g_s(x - y) dy dx`` on one loop."""
    a, b = knots[:-1], knots[1:]
    n_img = int(np.ceil((10.0 * s) / length)) + 1
    W = np.zeros((len(a), len(a)))
    for k in range(-n_img, n_img + 1):
        c = a[None, :] + k * length
        d = b[None, :] + k * length
        x0, x1 = a[:, None], b[:, None]
        W += s * (_psi(np.abs(x1 - c) / s) - _psi(np.abs(x0 - c) / s)
                  - _psi(np.abs(x1 - d) / s) + _psi(np.abs(x0 - d) / s))
    # the max(z, 0) parts sum to the overlap length, nonzero only on the diagonal
    W[np.diag_indices_from(W)] += b - a
    return np.clip(W, 0.0, None)


def heat_smooth(mesh: SurfaceMesh, rho: BoundaryDensity, t: float) -> BoundaryDensity:
    """Smooth ``rho`` along each boundary loop with the wrapped Gaussian of variance ``2 t``.

    The result is the edge average of the convolution, computed in closed
    form, so per-loop mass is conserved up to rounding.  Values far from
    the support can underflow to zero for very small ``t``.  Loops that
    carry no mass stay zero and are listed in ``meta["zero_loops"]``.
    """
    if not t > 0:
        raise DensityError("smoothing time must be positive")
    _check(mesh, rho)
    s = np.sqrt(2.0 * t)
    blen = mesh.boundary_edge_lengths
    off = mesh.loop_offsets
    out = np.zeros_like(rho.values)
    zero_loops = []
    for i in range(len(off) - 1):
        sl = slice(off[i], off[i + 1])
        vals, lens = rho.values[sl], blen[sl]
        if not np.any(vals > 0):
            zero_loops.append(i)
            continue
        knots = np.concatenate([[0.0], np.cumsum(lens)])
        W = _gaussian_edge_weights(knots, knots[-1], s)
        out[sl] = (W @ vals) / lens
    return BoundaryDensity(out, meta={"zero_loops": tuple(zero_loops), "t": float(t)})


def arc_edges(mesh: SurfaceMesh, arc) -> np.ndarray:
    """Global boundary-edge indices of an arc ``(loop, consecutive vertices)``."""
    loop, verts = arc
    lv = mesh.boundary_loops[loop]
    n = len(lv)
    where = {int(v): j for j, v in enumerate(lv)}
    if int(verts[0]) not in where:
        raise MeshError(f"vertex {verts[0]} is not on loop {loop}")
    start = where[int(verts[0])]
    idx = []
    for i in range(len(verts) - 1):
        j = (start + i) % n
        if int(lv[(j + 1) % n]) != int(verts[i + 1]):
            raise MeshError("arc vertices are not consecutive along the loop")
        idx.append(mesh.loop_offsets[loop] + j)
    return np.array(idx, dtype=np.int64)


def zero_on_arcs(mesh: SurfaceMesh, rho: BoundaryDensity, arcs) -> BoundaryDensity:
    """Set the density to zero on the given arcs; a :class:`GluingSpec` counts as its two arcs."""
    _check(mesh, rho)
    if isinstance(arcs, GluingSpec):
        arcs = [arcs.arc1, arcs.arc2]
    vals = rho.values.copy()
    for arc in arcs:
        vals[arc_edges(mesh, arc)] = 0.0
    if not np.any(vals > 0):
        raise DensityError("zeroing the arcs leaves an identically zero density")
    return BoundaryDensity(vals)


def push_conformal(mesh: SurfaceMesh, f: ConformalFactor, rho: BoundaryDensity) -> BoundaryDensity:
    """Density ``f * rho`` for the conformal metric ``f**2 g``, ``f`` averaged over edge endpoints."""
    _check(mesh, rho)
    f.check(mesh)
    be = mesh.boundary_edges
    avg = 0.5 * (f.values[be[:, 0]] + f.values[be[:, 1]])
    vals = rho.values * avg
    if not np.any(vals > 0):
        raise DensityError("pushed density is identically zero")
    return BoundaryDensity(vals)


def descend(mesh: SurfaceMesh, spec: GluingSpec, glued: SurfaceMesh, rho: BoundaryDensity) -> BoundaryDensity:
    """Density on the glued mesh induced by ``rho`` away from the glued arcs."""
    _check(mesh, rho)
    vmap = quotient_map(mesh, spec)
    be = mesh.boundary_edges
    src = {}
    glued_arcs = set(arc_edges(mesh, spec.arc1).tolist()) | set(arc_edges(mesh, spec.arc2).tolist())
    for n, (a, b) in enumerate(be):
        if n not in glued_arcs:
            src[(int(vmap[a]), int(vmap[b]))] = n
    try:
        origin = [src[(int(a), int(b))] for a, b in glued.boundary_edges]
    except KeyError:
        raise MeshError("glued mesh does not come from this gluing") from None
    return BoundaryDensity(rho.values[origin])
