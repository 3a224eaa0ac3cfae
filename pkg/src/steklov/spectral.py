"""Discrete Steklov spectrum with boundary densities.

The P1 finite element discretization of ``Delta u = 0``, ``d_n u = sigma rho u``:
the cotangent stiffness matrix ``K`` is condensed onto the active boundary
vertices (those touching an edge with ``rho > 0``) by a Schur complement,
giving a dense Dirichlet-to-Neumann matrix ``D``, and the pencil
``D u = sigma M u`` with the consistent boundary mass ``M`` is solved
densely.  Boundary vertices with zero density are eliminated together
with the interior, which is the natural Neumann condition.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as la
from scipy import sparse
from scipy.sparse import linalg as spla

from .density import BoundaryDensity, _check, weighted_length
from .mesh import SurfaceMesh, triangle_areas

logger = logging.getLogger(__name__)

__all__ = [
    "SpectrumError",
    "DegenerateTriangleError",
    "SteklovSpectrum",
    "EigenvalueGradient",
    "assemble_stiffness",
    "assemble_boundary_mass",
    "active_vertices",
    "dtn_reduce",
    "harmonic_extension",
    "steklov_spectrum",
    "normalized_eigenvalues",
    "cluster_size",
    "eigenvalue_gradient",
    "cluster_gradients",
]

GAP_TOL = 1e-6


class SpectrumError(RuntimeError):
    pass


class DegenerateTriangleError(SpectrumError):
    def __init__(self, element):
        self.element = int(element)
        super().__init__(f"degenerate triangle {self.element} (zero area)")


def assemble_stiffness(mesh: SurfaceMesh) -> sparse.csr_matrix:
    """Cotangent stiffness matrix of the piecewise-flat metric (Dirichlet energy)."""
    L = mesh.lengths
    area = triangle_areas(L)
    bad = np.flatnonzero(~(area > 0))
    if bad.size:
        raise DegenerateTriangleError(bad[0])
    t = mesh.triangles
    rows, cols, vals = [], [], []
    for i in range(3):
        # edge i joins corners i and i+1, opposite corner i+2
        a, b, c = L[:, (i + 1) % 3], L[:, (i + 2) % 3], L[:, i]
        w = 0.5 * (a * a + b * b - c * c) / (4.0 * area)
        p, q = t[:, i], t[:, (i + 1) % 3]
        rows += [p, q, p, q]
        cols += [q, p, p, q]
        vals += [-w, -w, w, w]
    n = mesh.n_vertices
    K = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n)).tocsr()
    K.sum_duplicates()
    return K


def assemble_boundary_mass(mesh: SurfaceMesh, rho: BoundaryDensity, lumped: bool = False) -> sparse.csr_matrix:
    """Boundary mass of the measure ``rho * ds``; consistent by default."""
    _check(mesh, rho)
    be = mesh.boundary_edges
    w = rho.values * mesh.boundary_edge_lengths
    a, b = be[:, 0], be[:, 1]
    if lumped:
        rows, cols, vals = [a, b], [a, b], [w / 2, w / 2]
    else:
        rows = [a, b, a, b]
        cols = [a, b, b, a]
        vals = [w / 3, w / 3, w / 6, w / 6]
    n = mesh.n_vertices
    return sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(n, n)).tocsr()


def active_vertices(mesh: SurfaceMesh, rho: BoundaryDensity) -> np.ndarray:
    """Boundary vertices incident to at least one edge of positive density."""
    _check(mesh, rho)
    be = mesh.boundary_edges[rho.values > 0]
    return np.unique(be.ravel())


class _Condensation:
    """Elimination of the vertices outside ``active`` from ``K``."""

    def __init__(self, K, active, method="auto"):
        K = sparse.csr_matrix(K)
        n = K.shape[0]
        self.active = np.asarray(active, dtype=np.int64)
        if self.active.size == 0:
            raise SpectrumError("active set is empty")
        mask = np.zeros(n, dtype=bool)
        mask[self.active] = True
        self.inner = np.flatnonzero(~mask)
        self.K = K
        self.Kbb = K[self.active][:, self.active]
        self.Kib = K[self.inner][:, self.active]
        self.Kii = K[self.inner][:, self.inner].tocsc()
        self._lu = None
        self.method = method
        if self.inner.size and method in ("auto", "direct"):
            try:
                # SPD block: symmetric ordering, no pivoting
                self._lu = spla.splu(self.Kii, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                                     options=dict(SymmetricMode=True))
            except RuntimeError as exc:
                if method == "direct":
                    raise SpectrumError(f"interior factorization failed: {exc}") from None
                logger.warning("interior factorization failed (%s); falling back to CG", exc)

    def solve(self, rhs):
        """``Kii^{-1} rhs`` for a dense right-hand side block."""
        rhs = np.asarray(rhs, dtype=float)
        if self._lu is not None:
            x = self._lu.solve(rhs)
            res = np.linalg.norm(self.Kii @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
            if not np.isfinite(res) or res > 1e-8:
                raise SpectrumError(f"interior solve failed, relative residual {res:.3e}")
            return x
        cols = rhs.reshape(len(rhs), -1)
        out = np.empty_like(cols)
        diag = self.Kii.diagonal()
        pre = sparse.diags(1.0 / diag)
        for j in range(cols.shape[1]):
            b = cols[:, j]
            if not np.any(b):
                out[:, j] = 0.0
                continue
            x, info = spla.cg(self.Kii, b, rtol=1e-12, atol=0.0, M=pre, maxiter=20 * len(b))
            res = np.linalg.norm(self.Kii @ x - b) / np.linalg.norm(b)
            if info != 0 and res > 1e-10:
                raise SpectrumError(f"CG did not converge, relative residual {res:.3e}")
            out[:, j] = x
        return out.reshape(rhs.shape)

    def dtn(self):
        D = self.Kbb.toarray()
        if self.inner.size:
            D = D - self.Kib.T @ self.solve(self.Kib.toarray())
        return 0.5 * (D + D.T)

    def extend(self, values):
        """Harmonic extension (energy minimizing) of active-set data to all vertices."""
        values = np.asarray(values, dtype=float)
        full = np.zeros((self.K.shape[0],) + values.shape[1:])
        full[self.active] = values
        if self.inner.size:
            full[self.inner] = -self.solve(self.Kib @ values)
        return full


def dtn_reduce(K, active, method: str = "auto") -> np.ndarray:
    """Schur complement ``K_bb - K_bi K_ii^{-1} K_ib`` onto ``active`` as a dense matrix.

    ``method`` selects the interior solver; ``"auto"`` tries sparse LU and falls back to CG.
    """
    return _Condensation(K, active, method).dtn()


def harmonic_extension(K, active, values, method: str = "auto") -> np.ndarray:
    return _Condensation(K, active, method).extend(values)


@dataclass(frozen=True, eq=False)
class SteklovSpectrum:
    """Lowest Steklov eigenpairs of a (mesh, density) pair.

    Attributes
    ----------
    eigenvalues : ndarray
        Ascending ``sigma_0 <= sigma_1 <= ...`` with multiplicity.
    eigenvectors : ndarray, shape (n_active, count)
        Boundary traces on ``active``, orthonormal for the boundary mass.
    active : ndarray
        Vertices carrying the eigenproblem.
    residuals : ndarray
        ``||D u - sigma M u||`` per pair.
    extended : ndarray, shape (V, count)
        Discrete harmonic extensions of the eigenvectors to every vertex.
    length : float
        Weighted boundary length of the density.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    active: np.ndarray
    residuals: np.ndarray
    extended: np.ndarray
    length: float

    @property
    def normalized(self) -> np.ndarray:
        return self.eigenvalues * self.length

    @property
    def sigma1(self) -> float:
        return float(self.eigenvalues[1])


def _fix_signs(vecs):
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        big = np.abs(col) > 1e-8 * np.abs(col).max()
        if big.any() and col[np.argmax(big)] < 0:
            vecs[:, j] = -col
    return vecs


def steklov_spectrum(mesh: SurfaceMesh, rho: BoundaryDensity, count: int = 8,
                     method: str = "auto", lumped: bool = False) -> SteklovSpectrum:
    """Lowest ``count`` eigenpairs of ``D u = sigma M u`` on the active boundary vertices."""
    K = assemble_stiffness(mesh)
    Mfull = assemble_boundary_mass(mesh, rho, lumped=lumped)
    active = active_vertices(mesh, rho)
    if not 1 <= count <= len(active):
        raise SpectrumError(f"count must lie in [1, {len(active)}], got {count}")
    cond = _Condensation(K, active, method)
    D = cond.dtn()
    M = Mfull[active][:, active].toarray()
    try:
        vals, vecs = la.eigh(D, M, driver="gv", check_finite=False)
    except la.LinAlgError as exc:
        raise SpectrumError(f"boundary mass is not positive definite on the active set: {exc}") from None
    vals, vecs = vals[:count], _fix_signs(vecs[:, :count])
    residuals = np.linalg.norm(D @ vecs - (M @ vecs) * vals, axis=0)
    return SteklovSpectrum(
        eigenvalues=vals,
        eigenvectors=vecs,
        active=active,
        residuals=residuals,
        extended=cond.extend(vecs),
        length=weighted_length(mesh, rho),
    )


def normalized_eigenvalues(spectrum: SteklovSpectrum, mesh: SurfaceMesh, rho: BoundaryDensity) -> np.ndarray:
    """``sigma_k * L_rho`` for every computed eigenvalue."""
    return spectrum.eigenvalues * weighted_length(mesh, rho)


def cluster_size(eigenvalues, gap_tol: float = GAP_TOL, index: int = 1) -> int:
    """Size of the eigenvalue cluster containing ``eigenvalues[index]``.

    Consecutive eigenvalues closer than ``gap_tol * eigenvalues[index]``
    belong to the same cluster.  The count is a lower bound when the
    cluster reaches the end of the computed range.
    """
    ev = np.asarray(eigenvalues, dtype=float)
    thr = gap_tol * abs(ev[index])
    lo = hi = index
    while lo - 1 >= 1 and ev[lo] - ev[lo - 1] <= thr:
        lo -= 1
    while hi + 1 < len(ev) and ev[hi + 1] - ev[hi] <= thr:
        hi += 1
    return hi - lo + 1


def _edge_quadratic(mesh, u):
    """Per-edge ``int_e u^2 ds`` for P1 ``u`` (columns handled independently)."""
    be = mesh.boundary_edges
    ua, ub = u[be[:, 0]], u[be[:, 1]]
    blen = mesh.boundary_edge_lengths
    if u.ndim > 1:
        blen = blen[:, None]
    return blen * (ua * ua + ua * ub + ub * ub) / 3.0


@dataclass(frozen=True)
class EigenvalueGradient:
    """Derivative of the normalized first eigenvalue with respect to edge densities.

    ``values`` is ``None`` when the first eigenvalue is not simple
    (``degenerate`` is then True).
    """

    values: Optional[np.ndarray]
    degenerate: bool
    gap: float


def eigenvalue_gradient(mesh: SurfaceMesh, rho: BoundaryDensity, spectrum: SteklovSpectrum,
                        gap_tol: float = GAP_TOL) -> EigenvalueGradient:
    """Gradient of ``sigma_bar_1 = sigma_1 * L_rho`` in the edge values of ``rho``.

    ``d sigma_1 / d rho_e = -sigma_1 int_e u_1^2`` for the mass-normalized
    eigenfunction, ``d L / d rho_e = len(e)``.  At edges with zero density
    this is the one-sided derivative.
    """
    ev = spectrum.eigenvalues
    if len(ev) < 3:
        raise SpectrumError("gradient needs at least three computed eigenvalues")
    s1 = ev[1]
    gap = float(ev[2] - s1)
    if gap <= gap_tol * s1:
        return EigenvalueGradient(None, True, gap)
    L = weighted_length(mesh, rho)
    q = _edge_quadratic(mesh, spectrum.extended[:, 1])
    grad = s1 * mesh.boundary_edge_lengths - L * s1 * q
    return EigenvalueGradient(grad, False, gap)


def cluster_gradients(mesh: SurfaceMesh, rho: BoundaryDensity, spectrum: SteklovSpectrum,
                      gap_tol: float = GAP_TOL) -> np.ndarray:
    """Derivative matrices of the ``sigma_1`` cluster, shape (n_edges, n, n).

    For a perturbation ``delta`` of the edge densities the normalized
    cluster eigenvalues move, to first order, by the eigenvalues of
    ``sum_e delta_e G[e]``.  The diagonal ``G[:, i, i]`` is the gradient
    eigenvector ``i`` would have if it spanned a simple eigenspace.
    """
    n = cluster_size(spectrum.eigenvalues, gap_tol)
    s1 = spectrum.eigenvalues[1]
    L = weighted_length(mesh, rho)
    U = spectrum.extended[:, 1:1 + n]
    be = mesh.boundary_edges
    ua, ub = U[be[:, 0]], U[be[:, 1]]
    blen = mesh.boundary_edge_lengths[:, None, None]
    # int_e u_i u_j ds for P1 functions
    cross = (2 * ua[:, :, None] * ua[:, None, :] + 2 * ub[:, :, None] * ub[:, None, :]
             + ua[:, :, None] * ub[:, None, :] + ub[:, :, None] * ua[:, None, :]) / 6.0
    eye = np.eye(n)[None]
    return s1 * blen * eye - L * s1 * blen * cross
