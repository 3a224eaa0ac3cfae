"""Uniform density on the unit disk: sigma_bar_1 approaches 2 pi under refinement."""

import numpy as np

from steklov import build_disk, steklov_spectrum, uniform_density
from steklov.mesh import mesh_size


def main():
    prev = None
    for level in range(5):
        m = build_disk(2, 8, levels=level)
        spec = steklov_spectrum(m, uniform_density(m), 7)
        err = abs(spec.normalized[1] - 2 * np.pi) / (2 * np.pi)
        rate = "" if prev is None else f"  ratio {prev / err:6.2f}"
        print(f"level {level}  h {mesh_size(m):.4f}  sigma_bar_1 {spec.normalized[1]:.10f}  rel err {err:.2e}{rate}")
        prev = err
    print("sigma_0..6 on the finest mesh:", np.round(spec.eigenvalues, 4))


if __name__ == "__main__":
    main()
