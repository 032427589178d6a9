"""Linear discontinuous Galerkin space and SIPG operators.

Degrees of freedom are ordered element by element: coefficient ``3*k + j``
multiplies the nodal basis function of local vertex ``j`` of triangle ``k``.
All element loops are vectorised numpy operations with a fixed reduction
order (quadrature points in rule order, then local basis index), so results
are bitwise reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh
from .potentials import Potential

__all__ = [
    "DGSpace",
    "FOMOperators",
    "assemble_mass",
    "assemble_stiffness_unit",
    "assemble_operators",
    "eval_nonlinear",
    "eval_nonlinear_jacobian",
    "discrete_energy",
    "matrix_energy",
    "block_diag_csr",
    "triangle_rule",
    "edge_rule",
]


def triangle_rule():
    """7-point degree-5 rule on the reference triangle.

    Returns barycentric coordinates ``(7, 3)`` and weights summing to 1/2.
    """
    r = np.sqrt(15.0)
    a1, a2 = (6.0 - r) / 21.0, (6.0 + r) / 21.0
    w1, w2 = (155.0 - r) / 1200.0, (155.0 + r) / 1200.0
    bary = np.array([
        [1 / 3, 1 / 3, 1 / 3],
        [1 - 2 * a1, a1, a1], [a1, 1 - 2 * a1, a1], [a1, a1, 1 - 2 * a1],
        [1 - 2 * a2, a2, a2], [a2, 1 - 2 * a2, a2], [a2, a2, 1 - 2 * a2],
    ])
    weights = 0.5 * np.array([9 / 40, w1, w1, w1, w2, w2, w2])
    return bary, weights


def edge_rule(n: int = 4):
    """Gauss-Legendre points on [0, 1] with weights summing to 1."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def block_diag_csr(blocks: np.ndarray) -> sp.csr_matrix:
    """Sparse block-diagonal matrix from an ``(n, b, b)`` stack."""
    n, b, _ = blocks.shape
    bsr = sp.bsr_matrix((blocks, np.arange(n), np.arange(n + 1)), shape=(n * b, n * b))
    return bsr.tocsr()


class DGSpace:
    """Piecewise linear discontinuous space on a :class:`Mesh`.

    Parameters
    ----------
    mesh : Mesh
    sigma : float
        SIPG penalty parameter.  The default ``18 = 3*q*(q+1)`` with ``q = 2``
        is comfortably above the coercivity threshold for linear elements on
        right-angled triangles.
    n_edge_points : int
        Gauss points per edge.
    """

    n_q = 3
    degree = 1

    def __init__(self, mesh: Mesh, sigma: float = 18.0, n_edge_points: int = 4):
        if not sigma > 0:
            raise ValueError("sigma must be positive")
        self.mesh = mesh
        self.sigma = float(sigma)
        self.n_K = mesh.n_triangles
        self.N_dof = self.n_K * self.n_q
        # instrumentation: how often a full-length nonlinear vector is built
        self.counters = {"full_nonlinear": 0}

        P = mesh.vertices[mesh.triangles]                    # (nK, 3, 2)
        self.corners = P
        B = np.stack([P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]], axis=2)  # columns
        det = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
        if np.any(det <= 0):
            raise ValueError("mesh has non-positive triangle orientation")
        self.area = 0.5 * det
        Binv = np.empty_like(B)
        Binv[:, 0, 0] = B[:, 1, 1] / det
        Binv[:, 0, 1] = -B[:, 0, 1] / det
        Binv[:, 1, 0] = -B[:, 1, 0] / det
        Binv[:, 1, 1] = B[:, 0, 0] / det
        self._Binv = Binv
        grads = np.empty((self.n_K, 3, 2))
        grads[:, 1] = Binv[:, 0]
        grads[:, 2] = Binv[:, 1]
        grads[:, 0] = -grads[:, 1] - grads[:, 2]
        self.grads = grads

        self.quad_bary, self.quad_weights = triangle_rule()
        self.phi_q = self.quad_bary                           # (n_qp, 3)
        self.wq = self.quad_weights[None, :] * (2.0 * self.area)[:, None]
        self.quad_points = np.einsum("qj,kjd->kqd", self.quad_bary, P)
        self.edge_points, self.edge_weights = edge_rule(n_edge_points)

        self._edge_geometry()

    # -- geometry helpers -------------------------------------------------
    def barycentric(self, elements: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Barycentric coordinates of ``points[..., 2]`` in ``elements``."""
        P0 = self.corners[elements, 0]
        d = points - P0[:, None, :]
        Binv = self._Binv[elements]
        lam12 = np.einsum("eij,eqj->eqi", Binv, d)
        lam0 = 1.0 - lam12.sum(axis=2, keepdims=True)
        return np.concatenate([lam0, lam12], axis=2)

    def _edge_geometry(self):
        m = self.mesh
        s = self.edge_points
        v0 = m.vertices[m.edges[:, 0]]
        v1 = m.vertices[m.edges[:, 1]]
        pts = v0[:, None, :] + s[None, :, None] * (v1 - v0)[:, None, :]
        self.edge_phi_left = self.barycentric(m.edge_left, pts)
        self.edge_phi_right = self.barycentric(m.edge_right, pts + m.edge_shift[:, None, :])
        self.edge_w = self.edge_weights[None, :] * m.edge_length[:, None]

    def dofs(self, elements) -> np.ndarray:
        elements = np.asarray(elements)
        return (3 * elements[..., None] + np.arange(3)).reshape(*elements.shape, 3)

    def values_at_quadrature(self, u: np.ndarray, elements=None) -> np.ndarray:
        U = np.asarray(u).reshape(-1, 3)
        if elements is not None:
            U = U[elements]
        return U @ self.phi_q.T

    def element_integrals(self, vals: np.ndarray, elements=None) -> np.ndarray:
        """``int_K g phi_j`` for quadrature values ``vals`` of shape (n, n_qp)."""
        wq = self.wq if elements is None else self.wq[elements]
        return (vals * wq) @ self.phi_q

    def element_blocks(self, vals: np.ndarray, elements=None) -> np.ndarray:
        """``int_K g phi_i phi_j`` as an (n, 3, 3) stack."""
        wq = self.wq if elements is None else self.wq[elements]
        return np.einsum("kq,qi,qj->kij", vals * wq, self.phi_q, self.phi_q)

    def evaluate(self, u: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Point values of ``u_h`` at arbitrary points (O(n_K) search)."""
        points = np.atleast_2d(points)
        out = np.full(len(points), np.nan)
        U = np.asarray(u).reshape(-1, 3)
        for idx, p in enumerate(points):
            lam = self.barycentric(np.arange(self.n_K), np.broadcast_to(p, (self.n_K, 1, 2)))[:, 0]
            inside = np.all(lam >= -1e-12, axis=1)
            k = int(np.argmax(inside))
            if inside[k]:
                out[idx] = U[k] @ lam[k]
        return out


@dataclass(eq=False)
class FOMOperators:
    """Parameter-independent full-order matrices.

    ``R`` is the upper Cholesky factor of ``M`` (``M = R^T R``); both are
    block diagonal.
    """

    space: DGSpace
    M: sp.csr_matrix
    A1: sp.csr_matrix
    R: sp.csr_matrix
    mass_blocks: np.ndarray = field(repr=False)

    @property
    def N_dof(self) -> int:
        return self.space.N_dof

    def stiffness(self, epsilon: float) -> sp.csr_matrix:
        return epsilon * self.A1

    def mass_solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, float)
        shp = rhs.shape
        R = rhs.reshape(-1, 3, *shp[1:])
        out = np.linalg.solve(self.mass_blocks, R if R.ndim == 3 else R[..., None])
        return out.reshape(shp)


def assemble_mass(mesh_or_space, space: DGSpace | None = None) -> sp.csr_matrix:
    space = _space(mesh_or_space, space)
    return block_diag_csr(space.element_blocks(np.ones((space.n_K, len(space.quad_weights)))))


def _space(mesh_or_space, space):
    if space is not None:
        return space
    if isinstance(mesh_or_space, DGSpace):
        return mesh_or_space
    return DGSpace(mesh_or_space)


def assemble_stiffness_unit(mesh_or_space, space: DGSpace | None = None) -> sp.csr_matrix:
    """SIPG matrix of ``a_h(u, v)`` with unit diffusivity.

    Volume term ``int grad u . grad v``, the two symmetric consistency terms
    ``-int {grad u}.n [v]`` and ``-int {grad v}.n [u]`` and the penalty
    ``(sigma / h_E) int [u][v]`` over interior (and periodic) edges.
    """
    space = _space(mesh_or_space, space)
    m = space.mesh
    nK = space.n_K
    vol = space.area[:, None, None] * np.einsum("kid,kjd->kij", space.grads, space.grads)
    rows = [np.repeat(space.dofs(np.arange(nK)), 3, axis=1).ravel()]
    cols = [np.tile(space.dofs(np.arange(nK)), (1, 3)).ravel()]
    vals = [vol.ravel()]

    if m.n_interior_edges:
        n = m.edge_normal
        sides = {
            0: (m.edge_left, space.edge_phi_left, 1.0),
            1: (m.edge_right, space.edge_phi_right, -1.0),
        }
        w = space.edge_w
        pen = space.sigma / m.edge_length
        gn, intphi = {}, {}
        for a, (el, phi, _) in sides.items():
            gn[a] = np.einsum("ejd,ed->ej", space.grads[el], n)
            intphi[a] = np.einsum("eq,eqj->ej", w, phi)
        for b, (el_b, phi_b, s_b) in sides.items():
            for a, (el_a, phi_a, s_a) in sides.items():
                mass = np.einsum("eq,eqi,eqj->eij", w, phi_b, phi_a)
                blk = (-0.5 * s_b * intphi[b][:, :, None] * gn[a][:, None, :]
                       - 0.5 * s_a * gn[b][:, :, None] * intphi[a][:, None, :]
                       + (s_a * s_b) * pen[:, None, None] * mass)
                db = space.dofs(el_b)
                da = space.dofs(el_a)
                rows.append(np.repeat(db, 3, axis=1).ravel())
                cols.append(np.tile(da, (1, 3)).ravel())
                vals.append(blk.ravel())

    N = space.N_dof
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble_operators(space: DGSpace, check_coercivity: bool = True,
                       n_checks: int = 100, seed: int = 0) -> FOMOperators:
    """Assemble ``M``, ``A1`` and the Cholesky factor of ``M``.

    With ``check_coercivity`` the penalty is validated by testing
    ``u^T A1 u >= 0`` on random vectors.
    """
    blocks = space.element_blocks(np.ones((space.n_K, len(space.quad_weights))))
    M = block_diag_csr(blocks)
    A1 = assemble_stiffness_unit(space)
    L = np.linalg.cholesky(blocks)
    R = block_diag_csr(np.transpose(L, (0, 2, 1)).copy())
    if check_coercivity:
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((space.N_dof, n_checks))
        q = np.einsum("ij,ij->j", X, A1 @ X)
        scale = np.abs(A1).sum() / space.N_dof
        if np.any(q < -1e-10 * scale * space.N_dof):
            raise ValueError(
                f"SIPG form not coercive with sigma={space.sigma}: "
                f"min u^T A1 u = {q.min():.3e}; increase sigma")
    return FOMOperators(space=space, M=M, A1=A1, R=R, mass_blocks=blocks)


def eval_nonlinear(u: np.ndarray, potential: Potential, space: DGSpace) -> np.ndarray:
    """Vector with entries ``int f(u_h) phi_i``."""
    space.counters["full_nonlinear"] += 1
    uq = space.values_at_quadrature(u)
    return space.element_integrals(potential.f(uq)).ravel()


def eval_nonlinear_jacobian(u: np.ndarray, potential: Potential, space: DGSpace) -> sp.csr_matrix:
    """Block-diagonal matrix with entries ``int f'(u_h) phi_j phi_i``."""
    uq = space.values_at_quadrature(u)
    return block_diag_csr(space.element_blocks(potential.df(uq)))


def potential_integral(u: np.ndarray, potential: Potential, space: DGSpace) -> float:
    uq = space.values_at_quadrature(u)
    return float(np.sum(potential.F(uq) * space.wq))


def discrete_energy(u: np.ndarray, space: DGSpace, epsilon: float,
                    potential: Potential) -> float:
    """SIPG energy computed term by term from element and edge integrals.

    ``eps/2 sum_K |grad u_h|^2 + (F(u_h), 1) - sum_E ({eps grad u_h}.n, [u_h])_E
    + sum_E sigma eps / (2 h_E) ([u_h], [u_h])_E``
    """
    m = space.mesh
    U = np.asarray(u).reshape(-1, 3)
    gu = np.einsum("kj,kjd->kd", U, space.grads)
    e_grad = 0.5 * epsilon * np.sum(space.area * np.einsum("kd,kd->k", gu, gu))
    e_pot = potential_integral(u, potential, space)
    e_edge = 0.0
    if m.n_interior_edges:
        uL = np.einsum("eqj,ej->eq", space.edge_phi_left, U[m.edge_left])
        uR = np.einsum("eqj,ej->eq", space.edge_phi_right, U[m.edge_right])
        jump = uL - uR
        avg_gn = 0.5 * np.einsum("ed,ed->e", gu[m.edge_left] + gu[m.edge_right], m.edge_normal)
        int_jump = np.sum(space.edge_w * jump, axis=1)
        int_jump2 = np.sum(space.edge_w * jump * jump, axis=1)
        e_edge = (-np.sum(epsilon * avg_gn * int_jump)
                  + np.sum(0.5 * space.sigma * epsilon / m.edge_length * int_jump2))
    return float(e_grad + e_pot + e_edge)


def matrix_energy(u: np.ndarray, operators: FOMOperators, epsilon: float,
                  potential: Potential) -> float:
    """Same energy via ``0.5 * eps * u^T A1 u + (F(u_h), 1)``."""
    u = np.asarray(u)
    return float(0.5 * epsilon * (u @ (operators.A1 @ u))
                 + potential_integral(u, potential, operators.space))


def write_coo(path, matrix: sp.spmatrix) -> None:
    """Write a sparse matrix as ``i j value`` lines (0-based)."""
    c = matrix.tocoo()
    with open(path, "w") as fh:
        fh.write(f"# {c.shape[0]} {c.shape[1]} {c.nnz}\n")
        for i, j, v in zip(c.row, c.col, c.data):
            fh.write(f"{i} {j} {v:.17g}\n")
