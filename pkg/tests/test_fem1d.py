"""Assembly-level checks: frozen local blocks, exact structure, quadrature."""

import numpy as np
import pytest

from phburgers import fem1d

# Local 3x3 blocks on one element of width h, frozen from hand calculus
# with the P2 shapes (1-x)(1-2x), 4x(1-x), x(2x-1) on the unit element:
#   M_loc = (h/30) * [[4, 2, -1], [2, 16, 2], [-1, 2, 4]]
#   D_loc[a, b] = int phi_a' phi_b  (h-independent)
M_LOC_30 = np.array([[4.0, 2.0, -1.0], [2.0, 16.0, 2.0], [-1.0, 2.0, 4.0]])
D_LOC = np.array([
    [-0.5, -2.0 / 3.0, 1.0 / 6.0],
    [2.0 / 3.0, 0.0, -2.0 / 3.0],
    [-1.0 / 6.0, 2.0 / 3.0, 0.5],
])


def assemble_reference(n_elems, local):
    """Scatter a constant local block over the mesh, then cut boundary rows."""
    n = 2 * n_elems + 1
    full = np.zeros((n, n))
    for k in range(n_elems):
        sl = slice(2 * k, 2 * k + 3)
        full[sl, sl] += local
    return full[1:-1, 1:-1]


def test_mesh_layout():
    mesh = fem1d.build_mesh(4)
    assert mesh.n_nodes == 9
    assert mesh.n_interior == 7
    assert mesh.h == pytest.approx(0.25)
    np.testing.assert_allclose(mesh.nodes, np.linspace(0.0, 1.0, 9))
    np.testing.assert_array_equal(mesh.cells[0], [0, 1, 2])
    np.testing.assert_array_equal(mesh.cells[-1], [6, 7, 8])


def test_mesh_for_width_rejects_non_divisor():
    with pytest.raises(ValueError):
        fem1d.mesh_for_width(0.3)
    assert fem1d.mesh_for_width(0.25).n_elems == 4


def test_build_mesh_rejects_nonpositive():
    with pytest.raises(ValueError):
        fem1d.build_mesh(0)


@pytest.mark.parametrize("n_elems", [1, 2, 5])
def test_assembled_blocks_match_frozen_locals(n_elems):
    ops = fem1d.assemble_operators(fem1d.build_mesh(n_elems))
    h = ops.mesh.h
    np.testing.assert_allclose(
        ops.mass.toarray(), assemble_reference(n_elems, h * M_LOC_30 / 30.0),
        rtol=0.0, atol=1e-15)
    np.testing.assert_allclose(
        ops.convection.toarray(), assemble_reference(n_elems, D_LOC),
        rtol=0.0, atol=1e-15)


@pytest.mark.parametrize("n_elems", [1, 2, 7, 100])
def test_structure_identities_exact(n_elems):
    """D skew and R = D^T hold bitwise; M admits a Cholesky factor."""
    ops = fem1d.assemble_operators(fem1d.build_mesh(n_elems))
    d = ops.convection.toarray()
    r = ops.gradient.toarray()
    assert np.abs(d + d.T).max() == 0.0
    assert np.abs(r - d.T).max() == 0.0
    ops.mass_cholesky()


def test_quadrature_exact_to_degree_nine():
    mesh = fem1d.build_mesh(3)
    xq, _ = fem1d.quadrature_points(mesh)
    for p in range(10):
        exact = 1.0 / (p + 1)
        assert fem1d.integrate(mesh, xq**p) == pytest.approx(exact, rel=1e-14)


def test_interpolate_reproduces_quadratics():
    # a quadratic with zero boundary values lies in the interior P2 space
    mesh = fem1d.build_mesh(6)
    coeffs = fem1d.interpolate(mesh, lambda x: x * (1.0 - x))
    xs = np.linspace(0.0, 1.0, 97)
    np.testing.assert_allclose(fem1d.evaluate(mesh, coeffs, xs), xs * (1.0 - xs),
                               rtol=0.0, atol=1e-14)
    np.testing.assert_allclose(fem1d.evaluate_derivative(mesh, coeffs, xs),
                               1.0 - 2.0 * xs, rtol=0.0, atol=1e-13)


def test_embed_and_restrict_roundtrip():
    mesh = fem1d.build_mesh(5)
    rng = np.random.default_rng(3)
    v = rng.standard_normal(mesh.n_interior)
    full = fem1d.embed_interior(mesh, v)
    assert full[0] == full[-1] == 0.0
    np.testing.assert_array_equal(full[mesh.interior_to_global], v)
    ops = fem1d.assemble_operators(mesh)
    np.testing.assert_array_equal(ops.interior(full), v)
    with pytest.raises(ValueError):
        fem1d.embed_interior(mesh, v[:-1])


def test_boundary_traces_of_interior_vanish():
    mesh = fem1d.build_mesh(4)
    v = np.random.default_rng(0).standard_normal(mesh.n_interior)
    assert fem1d.boundary_traces(mesh, v) == (0.0, 0.0)


def test_weighted_mass_is_symmetric_trilinear_form():
    """u^T W(w) z equals the integral of u_d w_d z_d, fully symmetric."""
    mesh = fem1d.build_mesh(7)
    rng = np.random.default_rng(11)
    u, w, z = (rng.standard_normal(mesh.n_interior) for _ in range(3))
    ref = fem1d.integrate(
        mesh,
        fem1d.quadrature_values(mesh, u)
        * fem1d.quadrature_values(mesh, w)
        * fem1d.quadrature_values(mesh, z),
    )
    for a, b, c in [(u, w, z), (u, z, w), (w, u, z), (z, w, u)]:
        val = float(a @ (fem1d.assemble_weighted_mass(mesh, b) @ c))
        assert val == pytest.approx(ref, rel=1e-13)


def test_quadratic_load_matches_weighted_mass_identity():
    # N(v) . u = int (v_d^2 / 2) u_d = u^T W(v) v / 2
    mesh = fem1d.build_mesh(9)
    rng = np.random.default_rng(21)
    v = rng.standard_normal(mesh.n_interior)
    u = rng.standard_normal(mesh.n_interior)
    lhs = float(u @ fem1d.assemble_quadratic_load(mesh, v))
    rhs = 0.5 * float(u @ (fem1d.assemble_weighted_mass(mesh, v) @ v))
    assert lhs == pytest.approx(rhs, rel=1e-13)


def test_solve_mass_inverts_mass():
    ops = fem1d.assemble_operators(fem1d.build_mesh(12))
    rng = np.random.default_rng(5)
    b = rng.standard_normal(ops.mesh.n_interior)
    x = ops.solve_mass(b)
    assert np.linalg.norm(ops.mass @ x - b) <= 1e-12 * np.linalg.norm(b)


def test_mass_full_partition_of_unity():
    # full-node mass rows sum to int phi_i = the exact nodal weights
    mesh = fem1d.build_mesh(8)
    ops = fem1d.assemble_operators(mesh)
    row_sums = np.asarray(ops.mass_full.sum(axis=1)).ravel()
    assert row_sums.sum() == pytest.approx(1.0, rel=1e-14)
    # vertex weight h/3 inside, h/6 at the ends; midpoint weight 2h/3
    h = mesh.h
    assert row_sums[0] == pytest.approx(h / 6.0, rel=1e-13)
    assert row_sums[1] == pytest.approx(2.0 * h / 3.0, rel=1e-13)
    assert row_sums[2] == pytest.approx(h / 3.0, rel=1e-13)


def test_boundary_vectors_carry_scaled_traces():
    ops = fem1d.assemble_operators(fem1d.build_mesh(3))
    s = np.sqrt(2.0)
    assert ops.b_left[0] == pytest.approx(s)
    assert ops.b_right[-1] == pytest.approx(-s)
    assert ops.b_visc_left[0] == -1.0 and ops.b_visc_right[-1] == 1.0
    # interior restriction has no boundary support
    assert np.all(ops.interior(ops.b_left) == 0.0)
    assert np.all(ops.interior(ops.b_visc_right) == 0.0)
