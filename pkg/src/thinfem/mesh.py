"""Structured triangulations of rectangles and P1 nodal fields.

Meshes are conforming triangulations of an axis-aligned rectangle built
from an nx-by-ny grid of cells, each cell split in two by a diagonal.
The diagonal direction alternates in a criss-cross pattern so that no
direction is preferred.  Node ordering is lexicographic by (row, column),
which makes every downstream output deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Rectangle = tuple[float, float, float, float]


@dataclass(eq=False)
class TriMesh:
    """Conforming triangulation of a rectangle.

    Attributes
    ----------
    nodes : (n_nodes, 2) float array of vertex coordinates.
    triangles : (n_triangles, 3) int array, counterclockwise vertex indices.
    boundary_nodes : sorted int array of node indices on the rectangle boundary.
    domain : (x_min, x_max, y_min, y_max).
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_nodes: np.ndarray
    domain: Rectangle

    def __post_init__(self) -> None:
        self.nodes = np.ascontiguousarray(self.nodes, dtype=float)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        self.boundary_nodes = np.ascontiguousarray(self.boundary_nodes, dtype=np.int64)
        for arr in (self.nodes, self.triangles, self.boundary_nodes):
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def area(self) -> float:
        xmin, xmax, ymin, ymax = self.domain
        return (xmax - xmin) * (ymax - ymin)


@dataclass(eq=False)
class FeField:
    """A P1 finite-element function given by its nodal values."""

    mesh: TriMesh
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_nodes,):
            raise ValueError(
                f"field has {self.values.shape} values for a mesh with "
                f"{self.mesh.n_nodes} nodes"
            )

    def with_values(self, values: np.ndarray) -> "FeField":
        return FeField(self.mesh, np.array(values, dtype=float))

    def copy(self) -> "FeField":
        return FeField(self.mesh, self.values.copy())

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())


def build_structured(nx: int, ny: int, domain: Rectangle = (0.0, 1.0, 0.0, 1.0)) -> TriMesh:
    """Triangulate the rectangle with an nx-by-ny grid of crossed cells.

    Produces (nx+1)(ny+1) nodes and 2*nx*ny triangles.  The splitting
    diagonal alternates with cell parity, giving the criss-cross pattern.
    """
    if nx < 1 or ny < 1:
        raise ValueError(f"grid counts must be >= 1, got nx={nx}, ny={ny}")
    xmin, xmax, ymin, ymax = (float(v) for v in domain)
    if not (xmin < xmax and ymin < ymax):
        raise ValueError(f"invalid rectangle bounds {domain}")

    xs = np.linspace(xmin, xmax, nx + 1)
    ys = np.linspace(ymin, ymax, ny + 1)
    xx, yy = np.meshgrid(xs, ys)  # row-major: index = row*(nx+1) + col
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    cols, rows = np.meshgrid(np.arange(nx), np.arange(ny))
    cols = cols.ravel()
    rows = rows.ravel()
    n00 = rows * (nx + 1) + cols
    n10 = n00 + 1
    n01 = n00 + (nx + 1)
    n11 = n01 + 1

    even = (cols + rows) % 2 == 0
    tri = np.empty((2 * nx * ny, 3), dtype=np.int64)
    # even cells split along n00-n11, odd cells along n10-n01
    tri[0::2] = np.where(even[:, None],
                         np.column_stack([n00, n10, n11]),
                         np.column_stack([n00, n10, n01]))
    tri[1::2] = np.where(even[:, None],
                         np.column_stack([n00, n11, n01]),
                         np.column_stack([n10, n11, n01]))

    ii, jj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
    on_edge = (ii.ravel() == 0) | (ii.ravel() == nx) | (jj.ravel() == 0) | (jj.ravel() == ny)
    boundary = np.flatnonzero(on_edge)

    return TriMesh(nodes, tri, boundary, (xmin, xmax, ymin, ymax))


def mesh_size(mesh: TriMesh) -> float:
    """Maximum triangle diameter (longest edge over all triangles)."""
    pts = mesh.nodes[mesh.triangles]  # (ntri, 3, 2)
    edges = pts - pts[:, [1, 2, 0], :]
    lengths = np.hypot(edges[..., 0], edges[..., 1])
    return float(lengths.max())


def triangle_areas(mesh: TriMesh) -> np.ndarray:
    """Signed triangle areas; positive for counterclockwise connectivity."""
    pts = mesh.nodes[mesh.triangles]
    d1 = pts[:, 1] - pts[:, 0]
    d2 = pts[:, 2] - pts[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def interpolate(mesh: TriMesh, g) -> FeField:
    """Nodal interpolant of g(x, y) onto the P1 space.

    g may be vectorized over numpy arrays or a plain scalar function.
    """
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    try:
        values = np.asarray(g(x, y), dtype=float)
        if values.shape != x.shape:
            values = np.broadcast_to(values, x.shape).astype(float)
    except (TypeError, ValueError):
        values = np.array([g(float(xi), float(yi)) for xi, yi in mesh.nodes], dtype=float)
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise ValueError(f"non-finite value at node {bad} {tuple(mesh.nodes[bad])}")
    return FeField(mesh, values)


def evaluate(field: FeField, x, y):
    """Evaluate a P1 field at arbitrary points via barycentric coordinates.

    Points outside the mesh raise; intended for verification on small
    point sets, not as a fast path.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    pts = field.mesh.nodes[field.mesh.triangles]
    vals = field.values[field.mesh.triangles]
    out = np.full(x.shape, np.nan)
    for i, (xi, yi) in enumerate(zip(x, y)):
        v0, v1, v2 = pts[:, 0], pts[:, 1], pts[:, 2]
        det = (v1[:, 0] - v0[:, 0]) * (v2[:, 1] - v0[:, 1]) - (v2[:, 0] - v0[:, 0]) * (v1[:, 1] - v0[:, 1])
        l1 = ((xi - v0[:, 0]) * (v2[:, 1] - v0[:, 1]) - (yi - v0[:, 1]) * (v2[:, 0] - v0[:, 0])) / det
        l2 = ((v1[:, 0] - v0[:, 0]) * (yi - v0[:, 1]) - (v1[:, 1] - v0[:, 1]) * (xi - v0[:, 0])) / det
        l0 = 1.0 - l1 - l2
        tol = -1e-12
        inside = (l0 >= tol) & (l1 >= tol) & (l2 >= tol)
        if not inside.any():
            raise ValueError(f"point ({xi}, {yi}) is outside the mesh")
        k = int(np.flatnonzero(inside)[0])
        out[i] = l0[k] * vals[k, 0] + l1[k] * vals[k, 1] + l2[k] * vals[k, 2]
    return out if out.size > 1 else float(out[0])
