"""Random puncture / glue sequences shared by the mesh tests and the acceptance suite."""

import numpy as np

from steklov.mesh import (GluingError, MeshError, arc_pair, build_cylinder, build_disk, glue_segments,
                          puncture, topology, validate)


def random_base(rng):
    if rng.random() < 0.5:
        return build_disk(int(rng.integers(3, 6)), int(rng.integers(6, 13)))
    return build_cylinder(float(rng.uniform(0.5, 2.0)), int(rng.integers(4, 8)), int(rng.integers(6, 13)))


def matching_arcs(mesh, rng, tries=200):
    """Random simplicially matched arc pairs on distinct loops (may be empty)."""
    k = len(mesh.boundary_loops)
    off = mesh.loop_offsets
    blen = mesh.boundary_edge_lengths
    found = []
    for _ in range(tries):
        l1, l2 = (int(x) for x in rng.choice(k, 2, replace=False))
        n1, n2 = len(mesh.boundary_loops[l1]), len(mesh.boundary_loops[l2])
        if min(n1, n2) < 4:
            continue
        m = int(rng.integers(2, min(n1, n2) - 1))
        c1, c2 = int(rng.integers(n1)), int(rng.integers(n2))
        spec = arc_pair(mesh, l1, l2, m, c1, c2)
        h = m // 2
        e1 = off[l1] + (c1 - h + np.arange(m)) % n1
        e2 = off[l2] + (c2 - (m - h) + np.arange(m)) % n2
        if np.allclose(blen[e1], blen[e2][::-1], rtol=1e-9, atol=0):
            found.append(spec)
            if len(found) >= 3:
                break
    return found


def random_sequence(rng, n_ops=4):
    """Apply up to ``n_ops`` random surgeries; return (log, final mesh).

    Each log entry is ``(op, before, after)`` with :class:`Topology`
    values.  Every produced mesh has passed :func:`validate`.
    """
    mesh = random_base(rng)
    validate(mesh)
    log = []
    for _ in range(n_ops):
        before = topology(mesh)
        new = None
        op = "glue" if (before.boundary_count >= 2 and rng.random() < 0.6) else "puncture"
        if op == "glue":
            for spec in matching_arcs(mesh, rng):
                try:
                    new = glue_segments(mesh, spec)
                    break
                except GluingError:
                    continue
            if new is None:
                op = "puncture"
        if op == "puncture":
            interior = np.setdiff1d(np.arange(mesh.n_vertices), mesh.boundary_vertices)
            for v in rng.permutation(interior):
                try:
                    new = puncture(mesh, int(v))
                    break
                except MeshError:
                    continue
        if new is None:
            break
        validate(new)
        log.append((op, before, topology(new)))
        mesh = new
    return log, mesh
