"""Finite element Steklov eigenvalues on triangulated surfaces with boundary densities.

Submodules
----------
mesh
    Triangle meshes with boundary loops, builders, refinement, puncturing
    and gluing of boundary arcs.
density
    Piecewise constant boundary densities and operations on them.
spectral
    Stiffness and boundary mass assembly, Dirichlet-to-Neumann reduction,
    eigenpairs and eigenvalue gradients.
optimize
    Gradient ascent of the normalized first eigenvalue over densities.
files
    Mesh and density file formats.
lab
    Experiment drivers and the ``steklov-lab`` command line.
"""

from .density import (BoundaryDensity, ConformalFactor, DensityError, descend, heat_smooth, l1_distance,
                      normalize, push_conformal, uniform_density, weighted_length, zero_on_arcs)
from .files import read_density, read_mesh, write_density, write_mesh
from .mesh import (GluingError, GluingSpec, MeshError, SurfaceMesh, arc_pair, build_cylinder, build_disk,
                   glue_segments, mesh_size, puncture, refine, scale, topology, validate)
from .optimize import OptimizerConfig, candidate_immersion, maximize_density
from .spectral import (SpectrumError, SteklovSpectrum, cluster_size, eigenvalue_gradient,
                       steklov_spectrum)

__version__ = "0.1.0"

__all__ = [
    "BoundaryDensity", "ConformalFactor", "DensityError", "descend", "heat_smooth", "l1_distance",
    "normalize", "push_conformal", "uniform_density", "weighted_length", "zero_on_arcs",
    "read_density", "read_mesh", "write_density", "write_mesh",
    "GluingError", "GluingSpec", "MeshError", "SurfaceMesh", "arc_pair", "build_cylinder", "build_disk",
    "glue_segments", "mesh_size", "puncture", "refine", "scale", "topology", "validate",
    "OptimizerConfig", "candidate_immersion", "maximize_density",
    "SpectrumError", "SteklovSpectrum", "cluster_size", "eigenvalue_gradient", "steklov_spectrum",
]
