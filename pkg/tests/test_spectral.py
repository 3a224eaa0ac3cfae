import numpy as np
import pytest
import scipy.linalg as la
from hypothesis import given, settings, strategies as st

from steklov.density import BoundaryDensity, ConformalFactor, push_conformal, uniform_density, zero_on_arcs
from steklov.density import descend, weighted_length
from steklov.mesh import SurfaceMesh, arc_pair, build_cylinder, build_disk, glue_segments, refine, scale
from steklov.spectral import (DegenerateTriangleError, SpectrumError, active_vertices, assemble_boundary_mass,
                              assemble_stiffness, cluster_gradients, cluster_size, dtn_reduce,
                              eigenvalue_gradient, harmonic_extension, normalized_eigenvalues,
                              steklov_spectrum)


def cylinder_oracle(T, count):
    """Steklov eigenvalues of [-T, T] x S^1 (unit circles) by separation of variables."""
    vals = [0.0, 1.0 / T]
    for k in range(1, count):
        vals += [k * np.tanh(k * T)] * 2 + [k / np.tanh(k * T)] * 2
    return np.sort(vals)[:count]


def _rand_density(mesh, rng, lo=0.2, hi=2.0):
    return BoundaryDensity(rng.uniform(lo, hi, len(mesh.boundary_edges)))


# assembly -------------------------------------------------------------------

def test_right_isosceles_weights():
    m = SurfaceMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], ([0, 1, 2],))
    K = assemble_stiffness(m).toarray()
    # legs meet at the right angle: cot(45)/2 each; hypotenuse is opposite the right angle
    assert np.allclose(K[0, 1], -0.5) and np.allclose(K[0, 2], -0.5) and np.allclose(K[1, 2], 0.0)
    assert np.allclose(K.sum(axis=1), 0)


def test_stiffness_symmetric_psd_kernel():
    m = build_disk(2, 8, levels=1)
    K = assemble_stiffness(m)
    assert abs(K - K.T).max() < 1e-14
    assert np.allclose(K @ np.ones(m.n_vertices), 0, atol=1e-12)
    w = np.linalg.eigvalsh(K.toarray())
    assert w[0] > -1e-12 and w[1] > 1e-6


def test_stiffness_reproduces_dirichlet_energy_of_linear():
    # for u = x the energy is the area
    m = build_disk(3, 12, levels=1)
    x = m.vertices[:, 0]
    K = assemble_stiffness(m)
    from steklov.mesh import triangle_areas
    assert np.isclose(x @ K @ x, triangle_areas(m.lengths).sum(), rtol=1e-12)


def test_degenerate_triangle():
    m = SurfaceMesh([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]], ([0, 1, 2],))
    with pytest.raises(DegenerateTriangleError):
        assemble_stiffness(m)


@pytest.mark.parametrize("lumped", [False, True])
def test_boundary_mass_total(lumped):
    m = build_cylinder(1.0, 2, 8)
    rho = _rand_density(m, np.random.default_rng(3))
    M = assemble_boundary_mass(m, rho, lumped=lumped)
    one = np.ones(m.n_vertices)
    assert np.isclose(one @ M @ one, weighted_length(m, rho), rtol=1e-14)


def test_boundary_mass_edge_block():
    m = build_disk(1, 3)
    rho = BoundaryDensity([2.0, 0.0, 0.0])
    M = assemble_boundary_mass(m, rho).toarray()
    a, b = m.boundary_edges[0]
    w = 2.0 * m.boundary_edge_lengths[0]
    assert np.allclose(M[np.ix_([a, b], [a, b])], w * np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]]))


def test_active_vertices():
    m = build_disk(1, 6)
    rho = BoundaryDensity([1, 0, 0, 0, 0, 0])
    assert set(active_vertices(m, rho)) == set(m.boundary_edges[0])


# DtN reduction --------------------------------------------------------------------

def test_dtn_energy_identity_against_dense_solve():
    m = build_disk(3, 10, levels=1)
    K = assemble_stiffness(m)
    b = m.boundary_vertices
    D = dtn_reduce(K, b)
    Kd = K.toarray()
    inner = np.setdiff1d(np.arange(m.n_vertices), b)
    ref = Kd[np.ix_(b, b)] - Kd[np.ix_(b, inner)] @ la.solve(Kd[np.ix_(inner, inner)], Kd[np.ix_(inner, b)])
    assert np.allclose(D, ref, atol=1e-12)
    g = np.random.default_rng(0).normal(size=len(b))
    u = harmonic_extension(K, b, g)
    assert np.allclose(u[b], g)
    assert np.isclose(g @ D @ g, u @ (K @ u), rtol=1e-12)
    # the extension is discrete harmonic
    assert np.allclose((K @ u)[inner], 0, atol=1e-10)


def test_dtn_cg_matches_direct():
    m = build_disk(2, 8, levels=2)
    K = assemble_stiffness(m)
    b = m.boundary_vertices
    assert np.allclose(dtn_reduce(K, b, "cg"), dtn_reduce(K, b, "direct"), atol=1e-9)


def test_dtn_empty_active():
    m = build_disk(1, 4)
    with pytest.raises(SpectrumError):
        dtn_reduce(assemble_stiffness(m), [])


# disk oracle -------------------------------------------------------------------

@pytest.mark.parametrize("radius", [1.0, 2.5])
def test_disk_oracle(radius):
    m = build_disk(2, 8, radius=radius, levels=3)
    spec = steklov_spectrum(m, uniform_density(m), 7)
    expected = np.array([0, 1, 1, 2, 2, 3, 3]) / radius
    assert abs(spec.eigenvalues[0]) < 1e-10
    assert np.allclose(spec.eigenvalues[1:], expected[1:], rtol=1e-2)
    assert cluster_size(spec.eigenvalues) == 2


def test_disk_eigenvectors_are_harmonics():
    m = build_disk(2, 8, levels=3)
    spec = steklov_spectrum(m, uniform_density(m), 3)
    xy = m.vertices[spec.active]
    # first cluster spans (x, y) restricted to the circle
    U = spec.eigenvectors[:, 1:3]
    coef, *_ = np.linalg.lstsq(xy, U, rcond=None)
    assert np.linalg.norm(xy @ coef - U) < 1e-3 * np.linalg.norm(U)


def test_rayleigh_and_normalization():
    m = build_cylinder(0.8, 4, 12, levels=1)
    rho = _rand_density(m, np.random.default_rng(1))
    spec = steklov_spectrum(m, rho, 6)
    K = assemble_stiffness(m)
    D = dtn_reduce(K, spec.active)
    M = assemble_boundary_mass(m, rho)[spec.active][:, spec.active].toarray()
    U = spec.eigenvectors
    assert np.allclose(U.T @ M @ U, np.eye(6), atol=1e-10)
    for j in range(1, 6):
        assert abs(U[:, j] @ D @ U[:, j] - spec.eigenvalues[j]) <= 1e-9 * spec.eigenvalues[j]
    assert np.all(spec.residuals < 1e-9)
    # extension energy equals the eigenvalue
    ext = spec.extended
    for j in range(1, 6):
        assert np.isclose(ext[:, j] @ (K @ ext[:, j]), spec.eigenvalues[j], rtol=1e-9)


def test_sign_convention():
    m = build_disk(2, 8, levels=1)
    spec = steklov_spectrum(m, uniform_density(m), 5)
    for j in range(5):
        col = spec.eigenvectors[:, j]
        first = col[np.abs(col) > 1e-8 * np.abs(col).max()][0]
        assert first > 0


def test_count_bounds():
    m = build_disk(1, 4)
    with pytest.raises(SpectrumError):
        steklov_spectrum(m, uniform_density(m), 5)
    with pytest.raises(SpectrumError):
        steklov_spectrum(m, uniform_density(m), 0)


# cylinder oracle ------------------------------------------------------------------

@pytest.mark.parametrize("T", [0.5, 1.0, 1.5])
def test_cylinder_separated_modes(T):
    m = build_cylinder(T, 4, 8, levels=3)
    spec = steklov_spectrum(m, uniform_density(m), 6)
    ref = cylinder_oracle(T, 6)
    assert np.allclose(spec.eigenvalues[1:], ref[1:], rtol=1e-2)


def test_cylinder_axial_mode_exact():
    # u = z is piecewise linear, so it is reproduced exactly by P1
    T = 0.7
    m = build_cylinder(T, 3, 10, levels=1)
    spec = steklov_spectrum(m, uniform_density(m), 8)
    assert np.min(np.abs(spec.eigenvalues - 1 / T)) < 1e-10


# Neumann folding -------------------------------------------------------------------

def test_zero_density_is_limit_of_small_density():
    m = build_disk(2, 8, levels=2)
    v = np.ones(len(m.boundary_edges))
    v[:8] = 0.0
    s0 = steklov_spectrum(m, BoundaryDensity(v), 4).eigenvalues
    gaps = []
    for d in [1e-3, 1e-5, 1e-7]:
        w = v.copy()
        w[:8] = d
        gaps.append(np.abs(steklov_spectrum(m, BoundaryDensity(w), 4).eigenvalues[1:] - s0[1:]).max())
    assert gaps[-1] < 1e-5 * s0[1]
    assert gaps[0] > gaps[1] > gaps[2]


# bracketing ----------------------------------------------------------------------

@pytest.mark.parametrize("m_edges,c1,c2", [(2, 0, 0), (4, 3, 9), (8, 5, 2)])
def test_bracketing_exact(m_edges, c1, c2):
    c = build_cylinder(1.0, 4, 8, levels=1)
    rho = _rand_density(c, np.random.default_rng(m_edges))
    spec = arc_pair(c, 0, 1, m_edges, c1, c2)
    g = glue_segments(c, spec)
    s_tilde = steklov_spectrum(c, zero_on_arcs(c, rho, spec), 4).eigenvalues
    s_glued = steklov_spectrum(g, descend(c, spec, g, rho), 4).eigenvalues
    # the quotient space is a subspace: every eigenvalue moves up
    assert np.all(s_tilde[1:] <= s_glued[1:] * (1 + 1e-9))


# invariances ---------------------------------------------------------------------

@pytest.mark.parametrize("factor", [1e-3, 0.37, 4.0, 1e3])
def test_mesh_scale_invariance(factor):
    m = build_cylinder(1.0, 3, 8, levels=1)
    rho = _rand_density(m, np.random.default_rng(5))
    a = steklov_spectrum(m, rho, 6).normalized
    b = steklov_spectrum(scale(m, factor), rho, 6).normalized
    assert np.allclose(a[1:], b[1:], rtol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.floats(1e-4, 1e4))
def test_density_scale_invariance(c):
    m = build_disk(2, 8, levels=1)
    rho = _rand_density(m, np.random.default_rng(7))
    a = steklov_spectrum(m, rho, 6).normalized
    b = steklov_spectrum(m, rho.scaled(c), 6).normalized
    assert np.allclose(a[1:], b[1:], rtol=1e-10)


def test_normalized_eigenvalues_function():
    m = build_disk(2, 8)
    rho = _rand_density(m, np.random.default_rng(0))
    spec = steklov_spectrum(m, rho, 4)
    assert np.allclose(normalized_eigenvalues(spec, m, rho), spec.normalized)


def _phi(xy):
    z = xy[:, 0] + 1j * xy[:, 1]
    w = z + 0.2 * z * z
    return np.column_stack([w.real, w.imag]), np.abs(1 + 0.4 * z)


def test_conformal_covariance():
    # spectrum of phi(disk) with uniform density vs the disk with density |phi'|
    diffs = []
    for level in (2, 3, 4):
        m = build_disk(2, 8, levels=level)
        w, f = _phi(m.vertices)
        deformed = SurfaceMesh(w, m.triangles, m.boundary_loops)
        a = steklov_spectrum(deformed, uniform_density(deformed), 5).eigenvalues[1:]
        rho = push_conformal(m, ConformalFactor(f), uniform_density(m))
        b = steklov_spectrum(m, rho, 5).eigenvalues[1:]
        diffs.append(np.abs(a - b).max() / b[0])
    assert diffs[-1] < 1e-3
    rates = np.log2(np.array(diffs[:-1]) / np.array(diffs[1:]))
    assert np.all(rates > 1.5)


# cluster size -----------------------------------------------------------------------

@pytest.mark.parametrize("ev,tol,expected", [
    ([0, 1, 2, 3], 1e-6, 1),
    ([0, 1, 1, 2], 1e-6, 2),
    ([0, 1, 1 + 1e-7, 1 + 2e-7, 3], 1e-6, 3),
    ([0, 1, 1.001, 2], 1e-6, 1),
    ([0, 1, 1.001, 2], 1e-2, 2),
    ([0, 1, 1], 1e-6, 2),
])
def test_cluster_size(ev, tol, expected):
    assert cluster_size(ev, tol) == expected


# gradients -------------------------------------------------------------------------

def _sbar1(mesh, values):
    rho = BoundaryDensity(values)
    return steklov_spectrum(mesh, rho, 4).eigenvalues[1] * weighted_length(mesh, rho)


@pytest.mark.parametrize("seed", range(4))
def test_gradient_matches_fd(seed):
    rng = np.random.default_rng(seed)
    m = build_cylinder(float(rng.uniform(0.5, 1.5)), 3, 7)
    rho = _rand_density(m, rng)
    spec = steklov_spectrum(m, rho, 4)
    g = eigenvalue_gradient(m, rho, spec)
    assert not g.degenerate
    h = 1e-6
    fd = np.empty(len(rho))
    for e in range(len(rho)):
        p, q = rho.values.copy(), rho.values.copy()
        p[e] += h
        q[e] -= h
        fd[e] = (_sbar1(m, p) - _sbar1(m, q)) / (2 * h)
    assert np.linalg.norm(g.values - fd) <= 1e-3 * np.linalg.norm(fd)


def test_gradient_euler_identity():
    m = build_disk(2, 8, levels=1)
    rho = _rand_density(m, np.random.default_rng(4))
    g = eigenvalue_gradient(m, rho, steklov_spectrum(m, rho, 4))
    assert abs(g.values @ rho.values) < 1e-10 * np.abs(g.values).sum()


def test_gradient_degenerate_on_disk():
    m = build_disk(2, 8, levels=1)
    rho = uniform_density(m)
    g = eigenvalue_gradient(m, rho, steklov_spectrum(m, rho, 4))
    assert g.degenerate and g.values is None


def test_gradient_needs_three_eigenvalues():
    m = build_disk(2, 8)
    rho = uniform_density(m)
    with pytest.raises(SpectrumError):
        eigenvalue_gradient(m, rho, steklov_spectrum(m, rho, 2))


def test_cluster_gradients_directional_derivative():
    # eigenvalues of sum_e delta_e G[e] are the one-sided derivatives of the split cluster
    m = build_disk(2, 8, levels=1)
    rho = uniform_density(m)
    spec = steklov_spectrum(m, rho, 5)
    G = cluster_gradients(m, rho, spec)
    assert G.shape == (len(rho), 2, 2)
    delta = np.random.default_rng(2).normal(size=len(rho))
    pred = np.linalg.eigvalsh(np.einsum("e,eij->ij", delta, G))
    h = 1e-6
    moved = BoundaryDensity(rho.values + h * delta)
    sb = steklov_spectrum(m, moved, 5).eigenvalues[1:3] * weighted_length(m, moved)
    base = spec.eigenvalues[1] * weighted_length(m, rho)
    assert np.allclose((sb - base) / h, pred, rtol=1e-3, atol=1e-4 * abs(pred).max())
