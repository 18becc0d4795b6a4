r"""Uniform P2 Lagrange finite elements on the unit interval.

The velocity and all port variables are expanded in the quadratic Lagrange
basis associated with a uniform partition of (0, 1) into ``n_elems``
elements of width ``h = 1/n_elems``.  Each element carries three nodes
(left vertex, midpoint, right vertex), giving ``2*n_elems + 1`` global
nodes of which the ``N = 2*n_elems - 1`` interior ones span the
homogeneous-Dirichlet subspace used for the dynamics.

This module assembles the constant matrices of the discrete
interconnection structure,

    M[i, j] = int phi_j phi_i dx        (mass, symmetric positive definite)
    D[i, j] = int phi_j phi_i' dx       (convection, skew-symmetric)
    R[i, j] = int phi_j' phi_i dx       (= D^T on the interior basis)

together with the state-dependent operators of the nonlinear constitutive
relations,

    W(w)[i, j] = int w_d phi_j phi_i dx     (weighted mass, linear in w)
    N(v)[i]    = int phi_i v_d^2 / 2 dx     (quadratic load),

where ``w_d`` and ``v_d`` are the interior expansions of the coefficient
vectors.  All integrals use a fixed 5-point Gauss-Legendre rule per
element, exact for polynomials of degree <= 9; every integrand above has
degree <= 6, so quadrature introduces no consistency error.

Boundary coupling vectors realize the point traces at x = 0 and x = 1 over
the full node set; their restrictions to interior indices vanish, which is
what makes the interior dynamics inert under zero boundary controls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

# Reference P2 basis on [0, 1]: left vertex, midpoint, right vertex.
_SQRT2 = np.sqrt(2.0)


def _reference_basis(xi: np.ndarray) -> np.ndarray:
    """Values of the three P2 shape functions at reference coordinates."""
    return np.array([
        (1.0 - xi) * (1.0 - 2.0 * xi),
        4.0 * xi * (1.0 - xi),
        xi * (2.0 * xi - 1.0),
    ])


def _reference_basis_deriv(xi: np.ndarray) -> np.ndarray:
    """Reference derivatives d(phi)/d(xi) of the three P2 shape functions."""
    return np.array([
        4.0 * xi - 3.0,
        4.0 - 8.0 * xi,
        4.0 * xi - 1.0,
    ])


def _gauss_rule(n_points: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points/weights mapped from [-1, 1] to [0, 1]."""
    pts, wts = np.polynomial.legendre.leggauss(n_points)
    return 0.5 * (pts + 1.0), 0.5 * wts


_QP, _QW = _gauss_rule()
_PHI = _reference_basis(_QP)          # (3, 5)
_DPHI = _reference_basis_deriv(_QP)   # (3, 5)


@dataclass(frozen=True)
class Mesh1D:
    """Uniform P2 mesh of (0, 1).

    ``nodes`` holds all vertex and midpoint coordinates in increasing
    order; ``interior_to_global[k]`` maps interior rank k = 0..N-1 to the
    global node index of the k-th interior basis function.
    """

    n_elems: int
    h: float
    nodes: np.ndarray
    interior_to_global: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def n_interior(self) -> int:
        return self.interior_to_global.size

    @property
    def cells(self) -> np.ndarray:
        """Global node triplets (left, mid, right) per element, shape (n_elems, 3)."""
        e = np.arange(self.n_elems)
        return np.column_stack((2 * e, 2 * e + 1, 2 * e + 2))


def build_mesh(n_elems: int) -> Mesh1D:
    """Partition (0, 1) into ``n_elems`` equal elements with P2 node layout."""
    if n_elems < 1:
        raise ValueError(f"n_elems must be a positive integer, got {n_elems}")
    nodes = np.linspace(0.0, 1.0, 2 * n_elems + 1)
    return Mesh1D(
        n_elems=n_elems,
        h=1.0 / n_elems,
        nodes=nodes,
        interior_to_global=np.arange(1, 2 * n_elems),
    )


def mesh_for_width(h: float) -> Mesh1D:
    """Build the mesh whose element width is ``h``; 1/h must be integral."""
    n = round(1.0 / h)
    if n < 1 or abs(n * h - 1.0) > 1e-9:
        raise ValueError(f"element width {h} does not divide the unit interval")
    return build_mesh(n)


@dataclass(frozen=True)
class FeOperators:
    """Assembled matrices and boundary vectors of the discrete structure.

    ``mass``, ``convection`` (D) and ``gradient`` (R) act on interior
    coefficient vectors.  The four boundary vectors live on the full node
    set and carry the scaled point traces: sqrt(2) and -sqrt(2) at the end
    nodes for the convective ports, -1 and +1 for the dissipative ones.
    ``mass_full`` retains all boundary rows for partition-of-unity checks.
    Everything is immutable after assembly and safe to share read-only.
    """

    mesh: Mesh1D
    mass: scipy.sparse.csr_matrix
    convection: scipy.sparse.csr_matrix
    gradient: scipy.sparse.csr_matrix
    mass_full: scipy.sparse.csr_matrix
    b_left: np.ndarray
    b_right: np.ndarray
    b_visc_left: np.ndarray
    b_visc_right: np.ndarray
    mass_banded: np.ndarray
    half_bandwidth: int = 2

    def solve_mass(self, rhs: np.ndarray) -> np.ndarray:
        """Solve M x = rhs with the banded Cholesky of the SPD mass matrix."""
        return scipy.linalg.solveh_banded(self.mass_banded, rhs, lower=True)

    def mass_cholesky(self) -> np.ndarray:
        """Banded Cholesky factor of M; raises LinAlgError if M is not SPD."""
        return scipy.linalg.cholesky_banded(self.mass_banded, lower=True)

    def interior(self, vec: np.ndarray) -> np.ndarray:
        """Restrict a full-node vector to the interior indices."""
        return vec[self.mesh.interior_to_global]


def _assemble_full(mesh: Mesh1D, local: np.ndarray) -> scipy.sparse.csr_matrix:
    """Scatter one constant 3x3 local block into the full node matrix."""
    cells = mesh.cells
    n = mesh.n_nodes
    rows = np.repeat(cells, 3, axis=1).ravel()
    cols = np.tile(cells, (1, 3)).ravel()
    data = np.tile(local.ravel(), mesh.n_elems)
    return scipy.sparse.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def _banded_lower(a: scipy.sparse.spmatrix, bandwidth: int) -> np.ndarray:
    """Lower diagonal-ordered storage of a symmetric banded sparse matrix."""
    n = a.shape[0]
    ab = np.zeros((bandwidth + 1, n))
    for k in range(bandwidth + 1):
        diag = a.diagonal(-k)
        ab[k, : n - k] = diag
    return ab


def assemble_operators(mesh: Mesh1D) -> FeOperators:
    """Assemble M, D, R and the boundary trace vectors for ``mesh``.

    The local blocks are computed once by quadrature on the reference
    element; D and R pick up no h factor because the derivative scaling
    1/h cancels the element width in dx = h d(xi).
    """
    # local blocks: M_loc[a, b] = h * sum_q w_q phi_a phi_b, etc.
    mass_loc = mesh.h * np.einsum("q,aq,bq->ab", _QW, _PHI, _PHI)
    conv_q = np.einsum("q,aq,bq->ab", _QW, _DPHI, _PHI)   # row a is the test derivative
    # split off the exact boundary part: int phi_a' phi_b + int phi_b' phi_a
    # = [phi_a phi_b] = diag(-1, 0, 1) on the reference element.  Keeping
    # the skew part exactly antisymmetric makes the assembled interior D
    # bitwise skew (the corner halves cancel pairwise at shared vertices),
    # so the structural identities hold to the last bit on every mesh.
    conv_loc = 0.5 * (conv_q - conv_q.T) + np.diag([-0.5, 0.0, 0.5])
    grad_loc = conv_loc.T.copy()

    mass_full = _assemble_full(mesh, mass_loc)
    conv_full = _assemble_full(mesh, conv_loc)
    grad_full = _assemble_full(mesh, grad_loc)

    idx = mesh.interior_to_global
    mass = mass_full[np.ix_(idx, idx)].tocsr()
    convection = conv_full[np.ix_(idx, idx)].tocsr()
    gradient = grad_full[np.ix_(idx, idx)].tocsr()

    b_left = np.zeros(mesh.n_nodes)
    b_right = np.zeros(mesh.n_nodes)
    b_visc_left = np.zeros(mesh.n_nodes)
    b_visc_right = np.zeros(mesh.n_nodes)
    b_left[0] = _SQRT2
    b_right[-1] = -_SQRT2
    b_visc_left[0] = -1.0
    b_visc_right[-1] = 1.0

    return FeOperators(
        mesh=mesh,
        mass=mass,
        convection=convection,
        gradient=gradient,
        mass_full=mass_full,
        b_left=b_left,
        b_right=b_right,
        b_visc_left=b_visc_left,
        b_visc_right=b_visc_right,
        mass_banded=_banded_lower(mass, 2),
    )


def embed_interior(mesh: Mesh1D, coeffs: np.ndarray) -> np.ndarray:
    """Extend an interior coefficient vector by zero boundary values."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (mesh.n_interior,):
        raise ValueError(
            f"expected {mesh.n_interior} interior coefficients, got shape {coeffs.shape}"
        )
    full = np.zeros(mesh.n_nodes)
    full[mesh.interior_to_global] = coeffs
    return full


def as_full_vector(mesh: Mesh1D, coeffs: np.ndarray) -> np.ndarray:
    """Accept interior- or full-length coefficients, return the full vector."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape == (mesh.n_nodes,):
        return coeffs
    return embed_interior(mesh, coeffs)


def boundary_traces(mesh: Mesh1D, coeffs: np.ndarray) -> tuple[float, float]:
    """Point values at x = 0 and x = 1 of the expanded function.

    Interior-length vectors have vanishing traces by construction.
    """
    full = as_full_vector(mesh, coeffs)
    return float(full[0]), float(full[-1])


def quadrature_values(mesh: Mesh1D, coeffs: np.ndarray) -> np.ndarray:
    """Values of the expansion at every quadrature point, shape (n_elems, 5)."""
    full = as_full_vector(mesh, coeffs)
    return np.einsum("ea,aq->eq", full[mesh.cells], _PHI)


def quadrature_derivatives(mesh: Mesh1D, coeffs: np.ndarray) -> np.ndarray:
    """Spatial derivative of the expansion at every quadrature point."""
    full = as_full_vector(mesh, coeffs)
    return np.einsum("ea,aq->eq", full[mesh.cells], _DPHI) / mesh.h


def quadrature_points(mesh: Mesh1D) -> tuple[np.ndarray, np.ndarray]:
    """Global quadrature points and weights, each of shape (n_elems, 5)."""
    left = mesh.nodes[: -1 : 2]
    x = left[:, None] + mesh.h * _QP[None, :]
    w = np.broadcast_to(mesh.h * _QW, x.shape)
    return x, w


def integrate(mesh: Mesh1D, values: np.ndarray) -> float:
    """Integrate quadrature-point values (n_elems, 5) over (0, 1)."""
    return float(np.einsum("eq,q->", values, _QW) * mesh.h)


def assemble_weighted_mass(mesh: Mesh1D, weight: np.ndarray) -> scipy.sparse.csr_matrix:
    """Interior weighted mass matrix W(w)[i, j] = int w_d phi_j phi_i dx.

    Linear in the weight; symmetric for any weight; positive definite only
    when the weight function keeps a positive sign.
    """
    wq = quadrature_values(mesh, embed_interior(mesh, weight))
    local = mesh.h * np.einsum("q,aq,bq,eq->eab", _QW, _PHI, _PHI, wq)
    cells = mesh.cells
    rows = np.repeat(cells, 3, axis=1).ravel()
    cols = np.tile(cells, (1, 3)).ravel()
    n = mesh.n_nodes
    full = scipy.sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    idx = mesh.interior_to_global
    return full[np.ix_(idx, idx)].tocsr()


def assemble_quadratic_load(mesh: Mesh1D, v: np.ndarray) -> np.ndarray:
    """Interior load vector N(v)[i] = int phi_i v_d^2 / 2 dx.

    The integrand has degree 6, within the exactness of the 5-point rule,
    so N is homogeneous of degree 2 to rounding: N(a v) = a^2 N(v).
    """
    vq = quadrature_values(mesh, embed_interior(mesh, v))
    local = 0.5 * mesh.h * np.einsum("q,aq,eq->ea", _QW, _PHI, vq**2)
    full = np.zeros(mesh.n_nodes)
    np.add.at(full, mesh.cells.ravel(), local.ravel())
    return full[mesh.interior_to_global]


def evaluate(mesh: Mesh1D, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate the P2 expansion at arbitrary points of [0, 1]."""
    full = as_full_vector(mesh, coeffs)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    elem = np.clip((x / mesh.h).astype(int), 0, mesh.n_elems - 1)
    xi = x / mesh.h - elem
    phi = _reference_basis(xi)                      # (3, npts)
    vals = np.einsum("pa,ap->p", full[mesh.cells[elem]], phi)
    return vals if vals.size > 1 else vals[0]


def evaluate_derivative(mesh: Mesh1D, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate the spatial derivative of the P2 expansion at points of [0, 1]."""
    full = as_full_vector(mesh, coeffs)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    elem = np.clip((x / mesh.h).astype(int), 0, mesh.n_elems - 1)
    xi = x / mesh.h - elem
    dphi = _reference_basis_deriv(xi)
    vals = np.einsum("pa,ap->p", full[mesh.cells[elem]], dphi) / mesh.h
    return vals if vals.size > 1 else vals[0]


def interpolate(mesh: Mesh1D, profile) -> np.ndarray:
    """Interior coefficients of the nodal interpolant of ``profile``.

    Boundary values of the profile are dropped by the homogeneous
    expansion; for the pulse data used in the experiments they are below
    every tolerance in play (~4e-6).
    """
    return np.asarray(profile(mesh.nodes[mesh.interior_to_global]), dtype=float)
