"""Maximization of the normalized first Steklov eigenvalue over boundary densities."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .density import BoundaryDensity, weighted_length
from .mesh import SurfaceMesh
from .spectral import (GAP_TOL, SteklovSpectrum, cluster_gradients, cluster_size,
                       eigenvalue_gradient, steklov_spectrum)

logger = logging.getLogger(__name__)

__all__ = [
    "OptimizerConfig",
    "IterationRecord",
    "OptimizationTrace",
    "ImmersionReport",
    "maximize_density",
    "project_density",
    "candidate_immersion",
    "multiplicity_report",
]


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 200
    step: float = 1e-2
    tol_grad: float = 1e-6
    gap_tol: float = 1e-3
    floor: float = 0.0
    min_step: float = 1e-14
    armijo: float = 1e-4
    shrink: float = 0.5
    count: int = 8

    def __post_init__(self):
        for name in ("max_iters", "step", "tol_grad", "gap_tol", "min_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.floor < 0:
            raise ValueError("floor must be nonnegative")


@dataclass(frozen=True)
class IterationRecord:
    sigma_bar: float
    grad_norm: float
    step: float
    multiplicity: int


@dataclass
class OptimizationTrace:
    records: list = field(default_factory=list)
    density: Optional[BoundaryDensity] = None
    converged: bool = False
    status: str = "running"

    @property
    def sigma_bar(self) -> np.ndarray:
        return np.array([r.sigma_bar for r in self.records])

    @property
    def multiplicity(self) -> int:
        return self.records[-1].multiplicity if self.records else 0


def project_density(mesh: SurfaceMesh, values, floor: float = 0.0) -> BoundaryDensity:
    """Clip at ``floor`` and rescale to unit weighted length.

    With ``floor > 0`` the clip and rescale are repeated until both
    constraints hold (each rescale only lowers values when it shrinks).
    """
    lens = mesh.boundary_edge_lengths
    v = np.maximum(np.asarray(values, dtype=float), floor)
    for _ in range(100):
        v = v / np.dot(v, lens)
        if v.min() >= floor * (1 - 1e-12):
            break
        v = np.maximum(v, floor)
    return BoundaryDensity(v)


def _spectrum(mesh, rho, cfg):
    return steklov_spectrum(mesh, rho, count=min(cfg.count, _active_count(mesh, rho)))


def _active_count(mesh, rho):
    be = mesh.boundary_edges[rho.values > 0]
    return len(np.unique(be))


def _min_norm_subgradient(G, lens, iters=500):
    """Smallest element of ``{sum_ij Y_ij G[:, i, j] : Y psd, tr Y = 1}`` in the length-weighted norm."""
    n = G.shape[1]
    flat = G.reshape(len(G), -1) / np.sqrt(lens)[:, None]
    H = flat.T @ flat
    lip = 2 * np.linalg.norm(H, 2)
    if lip == 0:
        return np.full((n, n), 1.0 / n)
    Y = np.eye(n) / n
    for _ in range(iters):
        grad = 2 * (H @ Y.ravel()).reshape(n, n)
        Y_new = _project_spectraplex(Y - grad / lip)
        if np.abs(Y_new - Y).max() < 1e-14:
            Y = Y_new
            break
        Y = Y_new
    return Y


def _project_spectraplex(Y):
    w, V = np.linalg.eigh(0.5 * (Y + Y.T))
    # Euclidean projection of the eigenvalues onto the unit simplex
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.nonzero(u - css / np.arange(1, len(u) + 1) > 0)[0][-1]
    w = np.maximum(w - css[k] / (k + 1), 0.0)
    return (V * w) @ V.T


def _ascent_direction(mesh, rho, spec, cfg):
    """Ascent direction in edge values together with its source gradient and multiplicity."""
    mult = cluster_size(spec.eigenvalues, cfg.gap_tol)
    lens = mesh.boundary_edge_lengths
    g = eigenvalue_gradient(mesh, rho, spec, gap_tol=cfg.gap_tol)
    if not g.degenerate:
        grad = g.values
    else:
        # clustered sigma_1: steepest ascent of the smallest cluster eigenvalue
        G = cluster_gradients(mesh, rho, spec, gap_tol=cfg.gap_tol)
        Y = _min_norm_subgradient(G, lens)
        grad = np.einsum("eij,ij->e", G, Y)
    direction = grad / lens
    # no descent into the floor
    blocked = (rho.values <= cfg.floor) & (direction < 0)
    direction[blocked] = 0.0
    return direction, grad, mult


def maximize_density(mesh: SurfaceMesh, rho0: BoundaryDensity,
                     cfg: OptimizerConfig = OptimizerConfig(), callback=None) -> OptimizationTrace:
    """Projected gradient ascent of ``sigma_bar_1`` on ``{rho >= floor, L_rho = 1}``.

    Steps are accepted by Armijo backtracking, so the recorded
    ``sigma_bar`` never decreases.  The run ends with status
    ``"converged"`` (projected gradient below ``tol_grad``), ``"stalled"``
    (no ascent down to ``min_step``, typical at a multiple eigenvalue) or
    ``"max_iters"``.

    ``callback(iteration, rho, spectrum)``, if given, is called at every
    iterate before its step is taken.
    """
    trace = OptimizationTrace()
    rho = project_density(mesh, rho0.values, cfg.floor)
    spec = _spectrum(mesh, rho, cfg)
    value = spec.sigma1 * weighted_length(mesh, rho)
    step = cfg.step
    lens = mesh.boundary_edge_lengths
    for it in range(cfg.max_iters):
        if callback is not None:
            callback(it, rho, spec)
        direction, grad, mult = _ascent_direction(mesh, rho, spec, cfg)
        trial = project_density(mesh, rho.values + direction, cfg.floor)
        pg = trial.values - rho.values
        pg_norm = float(np.sqrt(np.dot(pg * pg, lens)))
        trace.records.append(IterationRecord(value, pg_norm, step, mult))
        if pg_norm < cfg.tol_grad:
            trace.status, trace.converged = "converged", True
            break
        accepted = False
        s = step
        while s >= cfg.min_step:
            cand = project_density(mesh, rho.values + s * direction, cfg.floor)
            cand_spec = _spectrum(mesh, cand, cfg)
            cand_value = cand_spec.sigma1 * weighted_length(mesh, cand)
            if cand_value >= value + cfg.armijo * float(np.dot(grad, cand.values - rho.values)):
                accepted = True
                break
            s *= cfg.shrink
        if not accepted:
            trace.status = "stalled"
            logger.info("stalled at iteration %d, sigma_bar=%.10g, multiplicity %d", it, value, mult)
            break
        rho, spec, value = cand, cand_spec, cand_value
        step = min(2.0 * s, 1e3 * cfg.step)
    else:
        spec_mult = cluster_size(spec.eigenvalues, cfg.gap_tol)
        trace.records.append(IterationRecord(value, float("nan"), step, spec_mult))
        trace.status = "max_iters"
    trace.density = rho
    return trace


@dataclass(frozen=True)
class ImmersionReport:
    """Candidate boundary map by first eigenfunctions.

    ``deviation`` is ``max | |Phi| - 1 |`` over active boundary vertices
    after the best uniform rescaling; ``None`` when there is no candidate.
    """

    dimension: int
    deviation: Optional[float]
    coordinates: Optional[np.ndarray]
    scale: Optional[float]
    status: str


def candidate_immersion(mesh: SurfaceMesh, rho: BoundaryDensity, gap_tol: float = GAP_TOL,
                        spectrum: Optional[SteklovSpectrum] = None, count: int = 8) -> ImmersionReport:
    """Check whether the first eigenfunctions map the boundary to a sphere."""
    spec = spectrum if spectrum is not None else steklov_spectrum(mesh, rho, count)
    n = cluster_size(spec.eigenvalues, gap_tol)
    if n < 2:
        return ImmersionReport(1, None, None, None, "no candidate")
    phi = spec.eigenvectors[:, 1:1 + n]
    r2 = np.sum(phi * phi, axis=1)
    # least squares for c in c * r2 ~ 1
    c = float(np.sum(r2) / np.sum(r2 * r2))
    dev = float(np.max(np.abs(np.sqrt(c * r2) - 1.0)))
    return ImmersionReport(n, dev, np.sqrt(c) * phi, np.sqrt(c), "candidate")


def multiplicity_report(spectrum: SteklovSpectrum, gap_tol: float = GAP_TOL) -> int:
    """Multiplicity of the first nonzero eigenvalue under relative gap ``gap_tol``."""
    return cluster_size(spectrum.eigenvalues, gap_tol)
