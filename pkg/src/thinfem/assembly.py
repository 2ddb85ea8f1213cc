"""P1 matrix assembly, exact integrals, and sparse block solves.

All bilinear forms are assembled element by element with vectorized numpy
and collected through COO triplets into CSR matrices.  Variable
coefficients are sampled with the 3-point edge-midpoint rule (exact for
quadratics); error norms use a 7-point degree-5 rule.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError
from .mesh import FeField, TriMesh, triangle_areas

# P1 basis values at the edge midpoints; midpoint k is opposite vertex k.
_MIDPOINT_BASIS = np.array([
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
    [0.5, 0.5, 0.0],
])
_MIDPOINT_OUTER = np.einsum("ki,kj->kij", _MIDPOINT_BASIS, _MIDPOINT_BASIS)

# 7-point degree-5 triangle rule (centroid + two symmetric orbits),
# weights normalized to sum to 1 on the reference element.
_SQRT15 = np.sqrt(15.0)
_B1 = (6.0 + _SQRT15) / 21.0
_B2 = (6.0 - _SQRT15) / 21.0
_QUAD5_BARY = np.array(
    [[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]]
    + [[1.0 - 2.0 * _B1 if i == j else _B1 for j in range(3)] for i in range(3)]
    + [[1.0 - 2.0 * _B2 if i == j else _B2 for j in range(3)] for i in range(3)]
)
_QUAD5_W = np.array(
    [9.0 / 40.0]
    + [(155.0 + _SQRT15) / 1200.0] * 3
    + [(155.0 - _SQRT15) / 1200.0] * 3
)


class P1Operators:
    """Per-mesh geometric factors shared by all assembly routines."""

    def __init__(self, mesh: TriMesh):
        self.mesh = mesh
        tri = mesh.triangles
        pts = mesh.nodes[tri]  # (ntri, 3, 2)
        self.area = triangle_areas(mesh)
        if np.any(self.area <= 0.0):
            raise ValueError("mesh has non-positive triangle areas")

        x = pts[..., 0]
        y = pts[..., 1]
        inv2a = 1.0 / (2.0 * self.area)
        grads = np.empty((mesh.n_triangles, 3, 2))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            grads[:, i, 0] = (y[:, j] - y[:, k]) * inv2a
            grads[:, i, 1] = (x[:, k] - x[:, j]) * inv2a
        self.grads = grads

        # Geometric stiffness blocks: area * (grad_i . grad_j)
        self.kgeo = self.area[:, None, None] * np.einsum("eid,ejd->eij", grads, grads)
        self.mass_local = (self.area[:, None, None] / 12.0) * np.array(
            [[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]
        )

        self.rows = np.repeat(tri, 3, axis=1).ravel()
        self.cols = np.tile(tri, (1, 3)).ravel()
        self.lumped = np.bincount(
            tri.ravel(), weights=np.repeat(self.area / 3.0, 3), minlength=mesh.n_nodes
        )

        # Physical coordinates of the edge midpoints, (ntri, 3, 2)
        self.midpoints = np.einsum("ki,eid->ekd", _MIDPOINT_BASIS, pts)
        # Degree-5 points, (ntri, 7, 2)
        self.quad5_points = np.einsum("qi,eid->eqd", _QUAD5_BARY, pts)

    # -- coefficient sampling -------------------------------------------------

    def midpoint_values(self, values: np.ndarray) -> np.ndarray:
        """P1 field values at the 3 edge midpoints of every triangle."""
        uv = values[self.mesh.triangles]
        return 0.5 * (uv[:, [1, 2, 0]] + uv[:, [2, 0, 1]])

    def quad5_values(self, values: np.ndarray) -> np.ndarray:
        uv = values[self.mesh.triangles]
        return uv @ _QUAD5_BARY.T

    def element_gradients(self, values: np.ndarray) -> np.ndarray:
        """Constant per-element gradient of a P1 field, (ntri, 2)."""
        uv = values[self.mesh.triangles]
        return np.einsum("eid,ei->ed", self.grads, uv)

    # -- assembly -------------------------------------------------------------

    def _collect(self, local: np.ndarray) -> sp.csr_matrix:
        n = self.mesh.n_nodes
        mat = sp.coo_matrix((local.ravel(), (self.rows, self.cols)), shape=(n, n))
        return mat.tocsr()

    def mass(self) -> sp.csr_matrix:
        return self._collect(self.mass_local)

    def stiffness(self, quad_weights=None) -> sp.csr_matrix:
        """Stiffness matrix with a coefficient given at the edge midpoints.

        quad_weights is None (unit coefficient), a scalar, or an (ntri, 3)
        array of midpoint samples.
        """
        if quad_weights is None:
            return self._collect(self.kgeo)
        w = np.asarray(quad_weights, dtype=float)
        if w.ndim == 0:
            return self._collect(float(w) * self.kgeo)
        cbar = w.mean(axis=1)
        return self._collect(cbar[:, None, None] * self.kgeo)

    def weighted_mass(self, quad_weights: np.ndarray) -> sp.csr_matrix:
        """Mass matrix with an (ntri, 3) midpoint-sampled coefficient."""
        local = np.einsum("e,ek,kij->eij", self.area / 3.0, quad_weights, _MIDPOINT_OUTER)
        return self._collect(local)

    def load(self, quad_values: np.ndarray) -> np.ndarray:
        """Load vector of an integrand sampled at the edge midpoints."""
        local = np.einsum("e,ek,ki->ei", self.area / 3.0, quad_values, _MIDPOINT_BASIS)
        return np.bincount(
            self.mesh.triangles.ravel(), weights=local.ravel(), minlength=self.mesh.n_nodes
        )


_OPERATOR_CACHE: "weakref.WeakKeyDictionary[TriMesh, P1Operators]" = weakref.WeakKeyDictionary()


def operators(mesh: TriMesh) -> P1Operators:
    ops = _OPERATOR_CACHE.get(mesh)
    if ops is None:
        ops = P1Operators(mesh)
        _OPERATOR_CACHE[mesh] = ops
    return ops


def assemble_mass(mesh: TriMesh) -> sp.csr_matrix:
    """Consistent P1 mass matrix; row sums are the lumped node weights."""
    return operators(mesh).mass()


def assemble_stiffness(mesh: TriMesh, weight=None) -> sp.csr_matrix:
    """Stiffness matrix with an optional P1-field or constant coefficient."""
    ops = operators(mesh)
    if weight is None:
        return ops.stiffness()
    if isinstance(weight, FeField):
        return ops.stiffness(ops.midpoint_values(weight.values))
    return ops.stiffness(float(weight))


def integrate_p1(mesh: TriMesh, u: FeField) -> float:
    """Exact integral of a P1 field: sum of area times vertex mean."""
    return float(operators(mesh).lumped @ u.values)


def lumped_weights(mesh: TriMesh) -> np.ndarray:
    """Node weights m_j (one third of the adjacent triangle areas)."""
    return operators(mesh).lumped.copy()


def l2_norm(u: FeField) -> float:
    """True L2 norm of a P1 field through the consistent mass matrix."""
    ops = operators(u.mesh)
    local = np.einsum("ei,eij,ej->e", u.values[u.mesh.triangles], ops.mass_local,
                      u.values[u.mesh.triangles])
    return float(np.sqrt(max(local.sum(), 0.0)))


@dataclass
class BlockSystem:
    """Coupled 2N-by-2N linear system over (u-block, w-block) unknowns."""

    matrix: sp.csr_matrix
    rhs: np.ndarray

    @property
    def n(self) -> int:
        return self.rhs.size // 2


def build_block_system(a11, a12, a21, a22, rhs1, rhs2) -> BlockSystem:
    matrix = sp.bmat([[a11, a12], [a21, a22]], format="csr")
    return BlockSystem(matrix, np.concatenate([rhs1, rhs2]))


def apply_dirichlet(system: BlockSystem, node_values: dict[int, tuple[float, float]]) -> BlockSystem:
    """Impose u/w values at nodes by row replacement with column elimination.

    Constrained rows become identity rows carrying the boundary value; the
    matching columns are folded into the right-hand side so the untouched
    blocks stay symmetric.
    """
    if not node_values:
        return system
    n = system.n
    size = 2 * n
    dofs = np.empty(2 * len(node_values), dtype=np.int64)
    vals = np.empty(2 * len(node_values))
    for i, (node, (uval, wval)) in enumerate(sorted(node_values.items())):
        if not 0 <= node < n:
            raise ValueError(f"node index {node} out of range")
        dofs[2 * i] = node
        dofs[2 * i + 1] = n + node
        vals[2 * i] = uval
        vals[2 * i + 1] = wval

    lifted = np.zeros(size)
    lifted[dofs] = vals
    rhs = system.rhs - system.matrix @ lifted
    rhs[dofs] = vals

    keep = np.ones(size)
    keep[dofs] = 0.0
    proj = sp.diags(keep)
    pinned = sp.diags(1.0 - keep)
    matrix = (proj @ system.matrix @ proj + pinned).tocsr()
    return BlockSystem(matrix, rhs)


class FactorizedSystem:
    """LU factorization reusable across right-hand sides.

    Every solve verifies the relative residual so a silently bad
    factorization cannot poison a run.
    """

    def __init__(self, matrix: sp.csr_matrix):
        self.matrix = matrix.tocsc()
        try:
            self._lu = spla.splu(self.matrix)
        except RuntimeError as exc:
            raise SolverError(f"sparse LU factorization failed: {exc}", residual=np.inf) from exc

    def solve(self, rhs: np.ndarray, rel_tol: float = 1e-10) -> np.ndarray:
        x = self._lu.solve(rhs)
        scale = np.linalg.norm(rhs)
        residual = np.linalg.norm(self.matrix @ x - rhs) / (scale if scale > 0.0 else 1.0)
        if not np.isfinite(residual) or residual > rel_tol:
            raise SolverError(
                f"linear solve residual {residual:.3e} exceeds tolerance {rel_tol:.3e}",
                residual=float(residual),
            )
        return x


def solve_sparse(system: BlockSystem, rel_tol: float = 1e-10) -> np.ndarray:
    """Direct sparse solve of a block system with a residual guarantee."""
    return FactorizedSystem(system.matrix).solve(system.rhs, rel_tol=rel_tol)


def quadrature_degree5(mesh: TriMesh):
    """Points (ntri, 7, 2), reference weights (7,), basis values (7, 3)."""
    ops = operators(mesh)
    return ops.quad5_points, _QUAD5_W.copy(), _QUAD5_BARY.copy()
