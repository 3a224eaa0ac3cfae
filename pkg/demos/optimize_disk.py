"""Projected ascent from a random density on the disk.

The normalized first eigenvalue rises toward 2 pi and the run stops at a
double eigenvalue.
"""

import numpy as np

from steklov import BoundaryDensity, OptimizerConfig, build_disk, maximize_density


def main(seed=0):
    m = build_disk(2, 8, levels=2)
    rho0 = BoundaryDensity(np.random.default_rng(seed).uniform(0.2, 1.8, len(m.boundary_edges)))
    cfg = OptimizerConfig(max_iters=300, floor=0.5 / m.boundary_edge_lengths.sum())
    tr = maximize_density(m, rho0, cfg)
    sb = tr.sigma_bar
    for it in range(0, len(sb), max(1, len(sb) // 10)):
        print(f"iter {it:4d}  sigma_bar_1 {sb[it]:.8f}")
    print(f"final {sb[-1]:.8f} ({tr.status}, multiplicity {tr.multiplicity}); 2 pi = {2 * np.pi:.8f}")


if __name__ == "__main__":
    main()
