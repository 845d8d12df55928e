"""Structured conforming triangulations of axis-aligned rectangles."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Tuple

import numpy as np
from numpy.typing import NDArray

from utils.logger import get_logger


logger = get_logger(__name__)

Rect = Tuple[float, float, float, float]
RegionPredicate = Callable[[NDArray[np.float64], NDArray[np.float64], float], NDArray[np.bool_]]

SIDE_TAGS = ("bottom", "right", "top", "left")

# P1 basis gradients on the reference triangle (0,0), (1,0), (0,1)
_REF_GRADS = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation with counterclockwise elements and tagged boundary edges.

    Local edge ``k`` of a triangle is the edge opposite its vertex ``k``.
    """

    vertices: NDArray[np.float64]
    triangles: NDArray[np.int64]
    boundary_edges: NDArray[np.int64]
    boundary_tags: NDArray[np.str_]
    rect: Rect
    shape: Tuple[int, int] = field(default=(0, 0))

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def size(self) -> float:
        x0, z0, x1, z1 = self.rect
        return max(x1 - x0, z1 - z0)

    @property
    def tolerance(self) -> float:
        return 1e-12 * self.size

    @cached_property
    def _jacobians(self) -> NDArray[np.float64]:
        p = self.vertices[self.triangles]
        jac = np.empty((self.n_triangles, 2, 2))
        jac[:, :, 0] = p[:, 1] - p[:, 0]
        jac[:, :, 1] = p[:, 2] - p[:, 0]
        return jac

    @cached_property
    def areas(self) -> NDArray[np.float64]:
        return 0.5 * np.linalg.det(self._jacobians)

    @cached_property
    def gradients(self) -> NDArray[np.float64]:
        """Constant P1 basis gradients, shape (n_triangles, 3, 2)."""
        inv = np.linalg.inv(self._jacobians)
        return np.einsum("kd,tde->tke", _REF_GRADS, inv)

    @cached_property
    def diameters(self) -> NDArray[np.float64]:
        p = self.vertices[self.triangles]
        lengths = np.stack(
            [np.linalg.norm(p[:, (k + 1) % 3] - p[:, (k + 2) % 3], axis=1) for k in range(3)],
            axis=1,
        )
        return lengths.max(axis=1)

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    @cached_property
    def centroids(self) -> NDArray[np.float64]:
        return self.vertices[self.triangles].mean(axis=1)

    @cached_property
    def _local_edges(self) -> NDArray[np.int64]:
        t = self.triangles
        return np.stack([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=1)

    @cached_property
    def _edge_table(self) -> Tuple[NDArray[np.int64], NDArray[np.int64]]:
        local = np.sort(self._local_edges.reshape(-1, 2), axis=1)
        edges, inverse = np.unique(local, axis=0, return_inverse=True)
        return edges, inverse.reshape(self.n_triangles, 3)

    @property
    def edges(self) -> NDArray[np.int64]:
        """Unique edges as sorted vertex pairs."""
        return self._edge_table[0]

    @property
    def triangle_edges(self) -> NDArray[np.int64]:
        """Global edge index of each local edge, shape (n_triangles, 3)."""
        return self._edge_table[1]

    @cached_property
    def edge_lengths(self) -> NDArray[np.float64]:
        e = self.edges
        return np.linalg.norm(self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1)

    @cached_property
    def edge_normals(self) -> NDArray[np.float64]:
        """Unit normals in the global orientation: tangent (a→b) rotated clockwise."""
        e = self.edges
        tangent = self.vertices[e[:, 1]] - self.vertices[e[:, 0]]
        normal = np.stack([tangent[:, 1], -tangent[:, 0]], axis=1)
        return normal / self.edge_lengths[:, None]

    @cached_property
    def edge_signs(self) -> NDArray[np.float64]:
        """+1 where the global edge normal points out of the triangle, else -1."""
        p = self.vertices[self.triangles]
        normals = self.edge_normals[self.triangle_edges]
        mids = 0.5 * (p[:, [1, 2, 0]] + p[:, [2, 0, 1]])
        outward = np.einsum("tkd,tkd->tk", normals, mids - p)
        return np.where(outward > 0.0, 1.0, -1.0)

    @cached_property
    def edge_incidence(self) -> NDArray[np.int64]:
        return np.bincount(self.triangle_edges.ravel(), minlength=self.edges.shape[0])

    @cached_property
    def boundary_edge_ids(self) -> NDArray[np.int64]:
        return np.flatnonzero(self.edge_incidence == 1)

    @cached_property
    def boundary_vertices(self) -> NDArray[np.int64]:
        return np.unique(self.boundary_edges)


def _tag_side(midpoints: NDArray[np.float64], rect: Rect, tol: float) -> NDArray[np.str_]:
    x0, z0, x1, z1 = rect
    tags = np.full(midpoints.shape[0], "", dtype="<U6")
    tags[np.abs(midpoints[:, 1] - z0) <= tol] = "bottom"
    tags[np.abs(midpoints[:, 0] - x1) <= tol] = "right"
    tags[np.abs(midpoints[:, 1] - z1) <= tol] = "top"
    tags[np.abs(midpoints[:, 0] - x0) <= tol] = "left"
    return tags


def build_structured(nx: int, nz: int, rect: Rect = (0.0, 0.0, 1.0, 1.0)) -> Mesh:
    """Split an ``nx`` × ``nz`` grid of ``rect`` along each cell's bottom-left→top-right diagonal."""

    if int(nx) != nx or int(nz) != nz or nx < 1 or nz < 1:
        raise ValueError(f"cell counts must be positive integers, got nx={nx}, nz={nz}")
    x0, z0, x1, z1 = (float(v) for v in rect)
    if not (x1 > x0 and z1 > z0):
        raise ValueError(f"invalid rectangle {rect}: need x1 > x0 and z1 > z0")
    nx, nz = int(nx), int(nz)

    xs = np.linspace(x0, x1, nx + 1)
    zs = np.linspace(z0, z1, nz + 1)
    xx, zz = np.meshgrid(xs, zs)
    vertices = np.column_stack([xx.ravel(), zz.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(nz))
    v00 = (j * (nx + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3).astype(np.int64)

    size = max(x1 - x0, z1 - z0)
    draft = Mesh(
        vertices=vertices,
        triangles=triangles,
        boundary_edges=np.empty((0, 2), dtype=np.int64),
        boundary_tags=np.empty(0, dtype="<U6"),
        rect=(x0, z0, x1, z1),
        shape=(nx, nz),
    )
    boundary = draft.edges[draft.boundary_edge_ids]
    midpoints = 0.5 * (vertices[boundary[:, 0]] + vertices[boundary[:, 1]])
    tags = _tag_side(midpoints, draft.rect, 1e-12 * size)
    mesh = Mesh(
        vertices=vertices,
        triangles=triangles,
        boundary_edges=boundary,
        boundary_tags=tags,
        rect=draft.rect,
        shape=(nx, nz),
    )
    logger.debug(f"Built {nx}x{nz} mesh: {mesh.n_vertices} vertices, {mesh.n_triangles} triangles, h={mesh.h:.4g}")
    return mesh


@dataclass(frozen=True)
class BoundaryRegion:
    """Closed subset of ∂Ω selected by a coordinate predicate ``(x, z, tol) -> mask``."""

    tag: str
    predicate: RegionPredicate

    @classmethod
    def side(cls, mesh_rect: Rect, side: str) -> "BoundaryRegion":
        if side not in SIDE_TAGS:
            raise ValueError(f"unknown side '{side}', expected one of {SIDE_TAGS}")
        x0, z0, x1, z1 = mesh_rect
        coord, target = {
            "bottom": (1, z0),
            "right": (0, x1),
            "top": (1, z1),
            "left": (0, x0),
        }[side]

        def _on_side(x: NDArray[np.float64], z: NDArray[np.float64], tol: float) -> NDArray[np.bool_]:
            values = z if coord == 1 else x
            return np.abs(values - target) <= tol

        return cls(tag=side, predicate=_on_side)

    @classmethod
    def segment(
        cls,
        tag: str,
        *,
        x: Tuple[float, float] | float,
        z: Tuple[float, float] | float,
    ) -> "BoundaryRegion":
        """Axis-aligned closed segment; a scalar coordinate pins that axis."""

        x_lo, x_hi = (x, x) if np.isscalar(x) else x  # type: ignore[misc]
        z_lo, z_hi = (z, z) if np.isscalar(z) else z  # type: ignore[misc]

        def _on_segment(xv: NDArray[np.float64], zv: NDArray[np.float64], tol: float) -> NDArray[np.bool_]:
            return (xv >= x_lo - tol) & (xv <= x_hi + tol) & (zv >= z_lo - tol) & (zv <= z_hi + tol)

        return cls(tag=tag, predicate=_on_segment)

    @classmethod
    def whole_boundary(cls, tag: str = "boundary") -> "BoundaryRegion":
        return cls(tag=tag, predicate=lambda x, z, tol: np.ones(np.shape(x), dtype=bool))


def tag_boundary(mesh: Mesh, region: BoundaryRegion) -> NDArray[np.int64]:
    """Boundary vertices lying in ``region`` (sorted, possibly empty)."""

    candidates = mesh.boundary_vertices
    xz = mesh.vertices[candidates]
    mask = np.asarray(region.predicate(xz[:, 0], xz[:, 1], mesh.tolerance), dtype=bool)
    return candidates[mask]


def region_edges(mesh: Mesh, region: BoundaryRegion) -> NDArray[np.int64]:
    """Global ids of boundary edges with both end points in ``region``."""

    ids = mesh.boundary_edge_ids
    ends = mesh.edges[ids]
    inside = np.zeros(mesh.n_vertices, dtype=bool)
    inside[tag_boundary(mesh, region)] = True
    return ids[inside[ends[:, 0]] & inside[ends[:, 1]]]


def element_geometry(mesh: Mesh, index: int) -> Tuple[float, NDArray[np.float64]]:
    """Area and the three constant P1 basis gradients of one element."""

    if not 0 <= index < mesh.n_triangles:
        raise IndexError(f"element {index} out of range [0, {mesh.n_triangles})")
    return float(mesh.areas[index]), mesh.gradients[index].copy()


def mesh_from_arrays(vertices: NDArray[np.float64], triangles: NDArray[np.int64]) -> Mesh:
    """Wrap explicit arrays (used for single-element checks); boundary found by incidence counting."""

    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    lo = vertices.min(axis=0)
    hi = vertices.max(axis=0)
    draft = Mesh(
        vertices=vertices,
        triangles=triangles,
        boundary_edges=np.empty((0, 2), dtype=np.int64),
        boundary_tags=np.empty(0, dtype="<U6"),
        rect=(float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])),
    )
    if np.any(draft.areas <= 0.0):
        raise ValueError("triangles must be counterclockwise with positive area")
    boundary = draft.edges[draft.boundary_edge_ids]
    midpoints = 0.5 * (vertices[boundary[:, 0]] + vertices[boundary[:, 1]])
    return Mesh(
        vertices=vertices,
        triangles=triangles,
        boundary_edges=boundary,
        boundary_tags=_tag_side(midpoints, draft.rect, 1e-12 * draft.size),
        rect=draft.rect,
    )


__all__ = [
    "Mesh",
    "BoundaryRegion",
    "SIDE_TAGS",
    "build_structured",
    "tag_boundary",
    "region_edges",
    "element_geometry",
    "mesh_from_arrays",
]
