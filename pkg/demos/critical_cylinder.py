"""The flat cylinder of half-height T* with T* tanh T* = 1.

Its first nonzero eigenvalue is triple, and the three eigenfunctions map
the cylinder onto a surface meeting the unit sphere at right angles.
"""

import numpy as np

from steklov import build_cylinder, candidate_immersion, steklov_spectrum, uniform_density
from steklov.lab import catenoid_check, critical_half_height


def main():
    T = critical_half_height()
    print(f"T* = {T:.12f}, target 4 pi tanh T* = {4 * np.pi * np.tanh(T):.8f}")
    for k in range(4):
        o = catenoid_check(k).observables
        print(f"level {k}  sigma_bar_1 {o['sigma_bar']:.8f}  rel err {o['rel_err']:.1e}  split {o['split']:.1e}")
    m = build_cylinder(T, 4, 8, levels=2)
    rho = uniform_density(m)
    print("sigma_bar_1..4:", np.round(steklov_spectrum(m, rho, 5).normalized[1:], 6))
    rep = candidate_immersion(m, rho, gap_tol=1e-2)
    print(f"immersion dimension {rep.dimension}, deviation from the sphere {rep.deviation:.1e}")


if __name__ == "__main__":
    main()
