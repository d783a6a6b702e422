"""Compressed-plate finite element model that generates the chip flow field.

Each triangle of the chip mesh is extruded into a wedge of uniform thickness
with eight degrees of freedom: the in-plane displacements ``U, W`` of its
three vertices and one out-of-plane displacement for the bottom and top
layers, ``V_B`` and ``V_T``.  The out-of-plane values are prescribed (0 and 1)
and the Poisson coupling drives the in-plane expansion; nodes on the cutting
edge are clamped.  Only the direction of the gradient of the in-plane
displacement magnitude is used downstream.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SingularJacobian, SingularSystem, ZeroGradient
from .geometry import TriMesh

# natural-coordinate derivatives of N1 = 1 - r - t, N2 = t, N3 = r
_DN_DR = np.array([-1.0, 0.0, 1.0])
_DN_DT = np.array([-1.0, 1.0, 0.0])


@dataclass(frozen=True)
class WedgeElement:
    """Triangular plate element; vertices ``a, b, c`` as ``(x, z)`` rows."""

    vertices: np.ndarray
    thickness: float

    def __post_init__(self):
        if self.thickness <= 0:
            raise ValueError("plate thickness must be positive")

    @property
    def area(self) -> float:
        (xa, za), (xb, zb), (xc, zc) = self.vertices
        return 0.5 * ((xb - xa) * (zc - za) - (xc - xa) * (zb - za))

    def jacobian(self) -> np.ndarray:
        """3x3 Jacobian d(x, y, z)/d(r, s, t); rows are natural coordinates."""
        (xa, za), (xb, zb), (xc, zc) = self.vertices
        return np.array([[xc - xa, 0.0, zc - za],
                         [0.0, self.thickness, 0.0],
                         [xb - xa, 0.0, zb - za]])


@dataclass(frozen=True)
class ElementStiffness:
    K: np.ndarray
    B: np.ndarray
    E: np.ndarray


def material_matrix(modulus: float, poisson: float) -> np.ndarray:
    """Isotropic stiffness over (eps_xx, eps_yy, eps_zz, gamma_xz)."""
    lam = modulus * poisson / ((1 + poisson) * (1 - 2 * poisson))
    mu = modulus / (2 * (1 + poisson))
    E = np.full((3, 3), lam) + 2 * mu * np.eye(3)
    out = np.zeros((4, 4))
    out[:3, :3] = E
    out[3, 3] = mu
    return out


def _shape_gradients(vertices: np.ndarray) -> np.ndarray:
    """Rows d/dx and d/dz of (N1, N2, N3) for stacked ``(m, 3, 2)`` vertices."""
    v = np.asarray(vertices, float)
    J2 = np.stack([v[..., 2, :] - v[..., 0, :], v[..., 1, :] - v[..., 0, :]], axis=-2)
    dn = np.broadcast_to(np.stack([_DN_DR, _DN_DT]), J2.shape[:-2] + (2, 3))
    return np.linalg.solve(J2, dn)


def strain_displacement(elem: WedgeElement) -> np.ndarray:
    """4x8 B matrix for DOFs (U_a, W_a, U_b, W_b, U_c, W_c, V_B, V_T)."""
    dN = _shape_gradients(elem.vertices)
    B = np.zeros((4, 8))
    B[0, 0:6:2] = dN[0]
    B[2, 1:6:2] = dN[1]
    B[3, 0:6:2] = dN[1]
    B[3, 1:6:2] = dN[0]
    B[1, 6], B[1, 7] = -1.0 / elem.thickness, 1.0 / elem.thickness
    return B


def element_stiffness(elem: WedgeElement, modulus: float = 1.0,
                      poisson: float = 0.3) -> ElementStiffness:
    if not 0 < poisson < 0.5:
        raise ValueError("Poisson ratio must lie in (0, 0.5)")
    if elem.area <= 0:
        raise SingularJacobian(f"element area {elem.area:.3g} is not positive")
    B = strain_displacement(elem)
    E = material_matrix(modulus, poisson)
    detJ = abs(np.linalg.det(elem.jacobian()))
    K = 0.5 * B.T @ E @ B * detJ
    return ElementStiffness(0.5 * (K + K.T), B, E)


def _element_stiffness_batch(mesh: TriMesh, thickness: float, modulus: float,
                             poisson: float) -> np.ndarray:
    verts = mesh.nodes[mesh.triangles]
    areas = mesh.element_areas
    if np.any(areas <= 0):
        raise SingularJacobian("mesh contains elements with non-positive area")
    dN = _shape_gradients(verts)
    m = len(verts)
    B = np.zeros((m, 4, 8))
    B[:, 0, 0:6:2] = dN[:, 0]
    B[:, 2, 1:6:2] = dN[:, 1]
    B[:, 3, 0:6:2] = dN[:, 1]
    B[:, 3, 1:6:2] = dN[:, 0]
    B[:, 1, 6], B[:, 1, 7] = -1.0 / thickness, 1.0 / thickness
    E = material_matrix(modulus, poisson)
    # 1/2 |det J| = area * thickness
    vol = areas * thickness
    return (np.swapaxes(B, 1, 2) @ E @ B) * vol[:, None, None]


@dataclass(frozen=True, eq=False)
class FESolution:
    """Nodal in-plane displacements and the prescribed layer values."""

    U: np.ndarray
    W: np.ndarray
    V_bottom: float
    V_top: float
    thickness: float

    @property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.U, self.W)

    def scaled(self, factor: float) -> "FESolution":
        return FESolution(self.U * factor, self.W * factor, self.V_bottom * factor,
                          self.V_top * factor, self.thickness)


def assemble(mesh: TriMesh, thickness: float, modulus: float = 1.0,
             poisson: float = 0.3, v_bottom: float = 0.0, v_top: float = 1.0):
    """Global in-plane stiffness (CSR) and the load from the prescribed layer values."""
    Ke = _element_stiffness_batch(mesh, thickness, modulus, poisson)
    n = len(mesh.nodes)
    dofs = np.empty((len(mesh.triangles), 6), np.int64)
    dofs[:, 0::2] = 2 * mesh.triangles
    dofs[:, 1::2] = 2 * mesh.triangles + 1
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    K = sp.coo_matrix((Ke[:, :6, :6].ravel(), (rows, cols)), shape=(2 * n, 2 * n)).tocsr()
    fe = -Ke[:, :6, 6:] @ np.array([v_bottom, v_top])
    F = np.bincount(dofs.ravel(), weights=fe.ravel(), minlength=2 * n)
    return K, F


def solve_plate(mesh: TriMesh, poisson: float = 0.3, modulus: float = 1.0,
                thickness: float | None = None, compression: float = 1.0) -> FESolution:
    """Clamp the cutting edge, prescribe the layer values and solve for ``U, W``.

    ``thickness`` defaults to the mesh target edge length.  The top layer is
    displaced by ``compression`` and the bottom layer held at zero.
    """
    if len(mesh.edge_nodes) == 0:
        raise SingularSystem("no clamped nodes on the cutting edge")
    t = thickness or mesh.target_edge_length or 1.0
    K, F = assemble(mesh, t, modulus, poisson, 0.0, compression)
    n = len(mesh.nodes)
    fixed = np.zeros(2 * n, bool)
    fixed[2 * mesh.edge_nodes] = True
    fixed[2 * mesh.edge_nodes + 1] = True
    free = np.flatnonzero(~fixed)
    u = np.zeros(2 * n)
    if len(free):
        Kff = K[free][:, free].tocsc()
        try:
            lu = spla.splu(Kff, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise SingularSystem(str(exc)) from exc
        diag = np.abs(lu.U.diagonal())
        if diag.min() <= 1e-12 * diag.max():
            raise SingularSystem("reduced stiffness matrix is singular (floating component)")
        u[free] = lu.solve(F[free])
    return FESolution(u[0::2], u[1::2], 0.0, compression, t)


@dataclass(frozen=True, eq=False)
class FlowField:
    """Unit in-plane flow direction ``(g_x, g_z)`` at every mesh node."""

    mesh: TriMesh
    g: np.ndarray
    element_gradient: np.ndarray

    def at(self, points: np.ndarray) -> np.ndarray:
        """Barycentric interpolation of the nodal vectors, renormalized.

        Points outside the mesh get NaN.
        """
        from .chipflow import FieldInterpolator

        return FieldInterpolator(self).direction(np.asarray(points, float))


def element_gradients(mesh: TriMesh, values: np.ndarray) -> np.ndarray:
    """Constant gradient ``(d/dx, d/dz)`` of a linear nodal field in each element."""
    dN = _shape_gradients(mesh.nodes[mesh.triangles])
    return np.einsum("mij,mj->mi", dN, values[mesh.triangles])


def gradient_field(mesh: TriMesh, sol: FESolution) -> FlowField:
    """Normalized gradient of the in-plane displacement magnitude.

    Element gradients are averaged to the nodes with area weights and each
    nodal vector is scaled to unit length.  On the clamped edge ``G`` vanishes,
    so an element with a side on the edge has a gradient exactly normal to
    that side; edge nodes average only those elements, which keeps the field
    perpendicular to the cutting edge where the fan of neighbouring elements
    would tilt it by several degrees.

    Raises
    ------
    ZeroGradient
        If any element has a vanishing gradient (all its nodes clamped or a
        degenerate patch).
    """
    G = sol.magnitude
    grad = element_gradients(mesh, G)
    norms = np.linalg.norm(grad, axis=1)
    bad = norms <= 1e-14 * norms.max()
    if np.any(bad):
        raise ZeroGradient(f"{int(bad.sum())} element(s) with vanishing gradient, e.g. #{int(np.flatnonzero(bad)[0])}")
    w = mesh.element_areas[:, None] * grad
    acc = np.zeros((len(mesh.nodes), 2))
    for k in range(3):
        np.add.at(acc, mesh.triangles[:, k], w)
    if mesh.region is not None and len(mesh.edge_nodes):
        edges, owner = mesh.cutting_edges()
        if len(edges):
            on_edge = np.zeros((len(mesh.nodes), 2))
            for k in range(2):
                np.add.at(on_edge, edges[:, k], w[owner])
            hit = np.linalg.norm(on_edge, axis=1) > 0
            acc[hit] = on_edge[hit]
    nrm = np.linalg.norm(acc, axis=1)
    if np.any(nrm == 0):
        raise ZeroGradient("nodal gradient cancels to zero")
    return FlowField(mesh, acc / nrm[:, None], grad)
