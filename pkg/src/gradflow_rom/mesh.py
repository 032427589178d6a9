"""Structured triangular meshes on rectangles with dG edge connectivity."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Mesh", "build_mesh", "NEUMANN", "PERIODIC"]

NEUMANN = "neumann"
PERIODIC = "periodic"


@dataclass(frozen=True, eq=False)
class Mesh:
    """Uniform triangulation of ``[x0, x1] x [y0, y1]``.

    Interior edges carry a left and a right triangle and the unit normal
    pointing from left to right.  ``edge_shift`` is the translation that maps
    a point on the edge (in the left triangle's coordinates) onto the right
    triangle; it is zero except for periodically wrapped edges.
    """

    vertices: np.ndarray         # (n_v, 2)
    triangles: np.ndarray        # (n_K, 3), counter-clockwise
    edges: np.ndarray            # (n_E, 2) vertex indices, in left-triangle frame
    edge_left: np.ndarray        # (n_E,)
    edge_right: np.ndarray       # (n_E,)
    edge_normal: np.ndarray      # (n_E, 2)
    edge_length: np.ndarray      # (n_E,)
    edge_shift: np.ndarray       # (n_E, 2)
    boundary_edges: np.ndarray   # (n_B, 2)
    boundary_triangle: np.ndarray
    boundary_normal: np.ndarray
    bc: str
    domain: tuple
    shape: tuple                 # (nx, ny)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_interior_edges(self) -> int:
        return len(self.edges)

    @property
    def n_boundary_edges(self) -> int:
        return len(self.boundary_edges)

    @property
    def h(self) -> tuple:
        x0, x1, y0, y1 = self.domain
        return ((x1 - x0) / self.shape[0], (y1 - y0) / self.shape[1])

    @property
    def area(self) -> float:
        x0, x1, y0, y1 = self.domain
        return (x1 - x0) * (y1 - y0)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def to_csv(self, vertex_path, triangle_path) -> None:
        np.savetxt(vertex_path, self.vertices, delimiter=",", header="x,y",
                   comments="", fmt="%.17g")
        np.savetxt(triangle_path, self.triangles, delimiter=",", header="v0,v1,v2",
                   comments="", fmt="%d")


def _as_domain(domain) -> tuple:
    domain = tuple(float(v) for v in domain)
    if len(domain) == 2:
        domain = (0.0, domain[0], 0.0, domain[1])
    if len(domain) != 4:
        raise ValueError("domain must be (Lx, Ly) or (x0, x1, y0, y1)")
    x0, x1, y0, y1 = domain
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate domain {domain}")
    return domain


def build_mesh(domain, h: float, bc: str = NEUMANN) -> Mesh:
    """Split an ``nx`` by ``ny`` grid of squares into two triangles each.

    ``nx = round(Lx / h)`` (likewise ``ny``), so the realised spacing is the
    even division of each side closest to ``h``.  Every square is cut along
    its lower-left to upper-right diagonal.

    Parameters
    ----------
    domain : (Lx, Ly) or (x0, x1, y0, y1)
    h : float
        Target spacing.
    bc : {"neumann", "periodic"}
        With periodic boundaries, opposite boundary edges are identified and
        become interior edges.
    """
    x0, x1, y0, y1 = domain = _as_domain(domain)
    bc = bc.lower()
    if bc not in (NEUMANN, PERIODIC):
        raise ValueError(f"unknown boundary condition {bc!r}")
    Lx, Ly = x1 - x0, y1 - y0
    if not h > 0:
        raise ValueError("h must be positive")
    if h > Lx or h > Ly:
        raise ValueError(f"h={h} exceeds a side of the domain {domain}")
    nx = max(1, int(round(Lx / h)))
    ny = max(1, int(round(Ly / h)))

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    I, J = I.ravel(), J.ravel()
    sq = J * nx + I   # square index
    v00, v10, v11, v01 = vid(I, J), vid(I + 1, J), vid(I + 1, J + 1), vid(I, J + 1)
    # triangle 2*sq is the lower-right half, 2*sq+1 the upper-left half
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    def lower_t(i, j):
        return 2 * (j * nx + i)

    def upper_t(i, j):
        return 2 * (j * nx + i) + 1

    ed, left, right, shift = [], [], [], []
    bed, btri, bnorm = [], [], []

    # diagonals: lower (left) -> upper (right)
    ed.append(np.column_stack([v00, v11]))
    left.append(lower_t(I, J))
    right.append(upper_t(I, J))
    shift.append(np.zeros((len(I), 2)))

    # vertical edges x = x_i: left side is the lower triangle of square i-1
    # (its right edge), right side the upper triangle of square i (its left edge)
    jj = np.arange(ny)
    for i in range(nx + 1):
        seg = np.column_stack([vid(i, jj), vid(i, jj + 1)])
        if 0 < i < nx:
            ed.append(seg)
            left.append(lower_t(i - 1, jj))
            right.append(upper_t(i, jj))
            shift.append(np.zeros((ny, 2)))
        elif bc == PERIODIC and i == nx:
            ed.append(seg)
            left.append(lower_t(nx - 1, jj))
            right.append(upper_t(0, jj))
            shift.append(np.tile([-Lx, 0.0], (ny, 1)))
        elif bc == NEUMANN:
            if i == 0:
                bed.append(seg[:, ::-1])
                btri.append(upper_t(0, jj))
                bnorm.append(np.tile([-1.0, 0.0], (ny, 1)))
            else:
                bed.append(seg)
                btri.append(lower_t(nx - 1, jj))
                bnorm.append(np.tile([1.0, 0.0], (ny, 1)))

    # horizontal edges y = y_j: below is the upper triangle of square j-1
    # (its top edge), above the lower triangle of square j (its bottom edge)
    ii = np.arange(nx)
    for j in range(ny + 1):
        seg = np.column_stack([vid(ii, j), vid(ii + 1, j)])
        if 0 < j < ny:
            ed.append(seg)
            left.append(upper_t(ii, j - 1))
            right.append(lower_t(ii, j))
            shift.append(np.zeros((nx, 2)))
        elif bc == PERIODIC and j == ny:
            ed.append(seg)
            left.append(upper_t(ii, ny - 1))
            right.append(lower_t(ii, 0))
            shift.append(np.tile([0.0, -Ly], (nx, 1)))
        elif bc == NEUMANN:
            if j == 0:
                bed.append(seg)
                btri.append(lower_t(ii, 0))
                bnorm.append(np.tile([0.0, -1.0], (nx, 1)))
            else:
                bed.append(seg[:, ::-1])
                btri.append(upper_t(ii, ny - 1))
                bnorm.append(np.tile([0.0, 1.0], (nx, 1)))

    edges = np.concatenate(ed).astype(np.int64)
    edge_left = np.concatenate(left).astype(np.int64)
    edge_right = np.concatenate(right).astype(np.int64)
    edge_shift = np.concatenate(shift)
    vec = vertices[edges[:, 1]] - vertices[edges[:, 0]]
    length = np.hypot(vec[:, 0], vec[:, 1])
    # normal points from the left triangle towards the right triangle
    centroid_l = vertices[triangles[edge_left]].mean(axis=1)
    normal = np.column_stack([vec[:, 1], -vec[:, 0]]) / length[:, None]
    mid = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])
    flip = np.einsum("ij,ij->i", normal, mid - centroid_l) < 0
    normal[flip] *= -1.0

    if bed:
        boundary_edges = np.concatenate(bed).astype(np.int64)
        boundary_triangle = np.concatenate(btri).astype(np.int64)
        boundary_normal = np.concatenate(bnorm)
    else:
        boundary_edges = np.zeros((0, 2), dtype=np.int64)
        boundary_triangle = np.zeros(0, dtype=np.int64)
        boundary_normal = np.zeros((0, 2))

    return Mesh(vertices=vertices, triangles=triangles, edges=edges,
                edge_left=edge_left, edge_right=edge_right, edge_normal=normal,
                edge_length=length, edge_shift=edge_shift,
                boundary_edges=boundary_edges, boundary_triangle=boundary_triangle,
                boundary_normal=boundary_normal, bc=bc, domain=domain,
                shape=(nx, ny))
