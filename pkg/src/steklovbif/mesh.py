"""Simplicial meshes of manifolds with boundary.

A mesh is a flat (Euclidean) simplicial complex: vertices carry embedding
coordinates, cells are positively oriented (dim+1)-simplices, and the
boundary is the set of facets incident to exactly one cell.  Interval
endpoints (0-dimensional facets) carry counting measure 1.

Meshes are immutable after construction; generators and refinement are
pure functions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidMeshError, PreconditionError


@dataclass(frozen=True, eq=False)
class Mesh:
    """Simplicial mesh with boundary structure.

    Attributes
    ----------
    dim : int
        Intrinsic dimension; vertices live in R^dim (flat metric).
    vertices : (n, dim) float array
    cells : (m, dim+1) int array, positively oriented simplices
    boundary_facets : (b, dim) int array, facets incident to one cell
    boundary_vertex_ids : sorted int array of vertices on the boundary
    """

    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    boundary_facets: np.ndarray = field(default=None)
    boundary_vertex_ids: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "cells", np.asarray(self.cells, dtype=np.int64))
        if self.boundary_facets is None:
            facets = extract_boundary_facets(self.cells, self.dim)
            object.__setattr__(self, "boundary_facets", facets)
        else:
            object.__setattr__(
                self, "boundary_facets", np.asarray(self.boundary_facets, dtype=np.int64)
            )
        if self.boundary_vertex_ids is None:
            ids = np.unique(self.boundary_facets)
            object.__setattr__(self, "boundary_vertex_ids", ids)
        else:
            object.__setattr__(
                self,
                "boundary_vertex_ids",
                np.asarray(self.boundary_vertex_ids, dtype=np.int64),
            )

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    def cell_volumes(self) -> np.ndarray:
        """Signed volumes of all cells (positive for valid meshes)."""
        return signed_volumes(self.vertices, self.cells)

    def facet_measures(self) -> np.ndarray:
        """Measures of the boundary facets; counting measure 1 in dimension 0."""
        if self.dim == 1:
            return np.ones(len(self.boundary_facets))
        return np.array(
            [simplex_measure(self.vertices[f]) for f in self.boundary_facets]
        )

    def interior_measure(self) -> float:
        return float(self.cell_volumes().sum())

    def boundary_measure(self) -> float:
        return float(self.facet_measures().sum())


def signed_volumes(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """Signed simplex volumes det([x_1-x_0, ..., x_d-x_0]) / d!."""
    x = vertices[cells]
    edges = x[:, 1:, :] - x[:, :1, :]
    d = cells.shape[1] - 1
    if d == 1:
        dets = edges[:, 0, 0]
    else:
        dets = np.linalg.det(edges)
    return dets / math.factorial(d)


def simplex_measure(points: np.ndarray) -> float:
    """Unsigned measure of a simplex from its vertex coordinates (Gram determinant)."""
    e = points[1:] - points[0]
    k = e.shape[0]
    if k == 0:
        return 1.0
    gram = e @ e.T
    return math.sqrt(max(np.linalg.det(gram), 0.0)) / math.factorial(k)


def extract_boundary_facets(cells: np.ndarray, dim: int) -> np.ndarray:
    """Facets (dim-subsimplices) incident to exactly one cell, canonically sorted."""
    counts = {}
    for cell in cells:
        for drop in range(dim + 1):
            facet = tuple(sorted(np.delete(cell, drop)))
            counts[facet] = counts.get(facet, 0) + 1
    boundary = sorted(f for f, c in counts.items() if c == 1)
    if not boundary:
        return np.empty((0, dim), dtype=np.int64)
    return np.array(boundary, dtype=np.int64)


def generate_interval(n: int, L: float) -> Mesh:
    """Uniform mesh of [0, L] with n cells.

    Boundary facets are the two endpoints, each carrying counting measure 1.
    """
    if n < 1:
        raise PreconditionError(f"interval mesh needs n >= 1 cells, got {n}")
    if L <= 0:
        raise PreconditionError(f"interval mesh needs L > 0, got {L}")
    vertices = np.linspace(0.0, L, n + 1).reshape(-1, 1)
    cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return Mesh(dim=1, vertices=vertices, cells=cells)


def generate_disk(refinement_level: int) -> Mesh:
    """Triangulation of the closed unit disk.

    Level 0 is a fan of 8 triangles around the origin; each level splits
    every triangle in four and re-projects new boundary vertices onto the
    unit circle, so the boundary measure converges to 2*pi.
    """
    if refinement_level < 0:
        raise PreconditionError("refinement_level must be non-negative")
    angles = 2.0 * math.pi * np.arange(8) / 8.0
    vertices = np.vstack(
        [np.zeros((1, 2)), np.column_stack([np.cos(angles), np.sin(angles)])]
    )
    cells = np.array([[0, k + 1, (k + 1) % 8 + 1] for k in range(8)])
    mesh = Mesh(dim=2, vertices=vertices, cells=cells)
    for _ in range(refinement_level):
        mesh = project_boundary_to_unit_circle(refine_uniform(mesh))
    return mesh


def project_boundary_to_unit_circle(mesh: Mesh) -> Mesh:
    """Radially project boundary vertices of a planar mesh onto the unit circle."""
    vertices = mesh.vertices.copy()
    ids = mesh.boundary_vertex_ids
    norms = np.linalg.norm(vertices[ids], axis=1)
    vertices[ids] = vertices[ids] / norms[:, None]
    return Mesh(dim=mesh.dim, vertices=vertices, cells=mesh.cells)


def refine_uniform(mesh: Mesh) -> Mesh:
    """Uniform midpoint refinement: each cell splits into 2^dim children."""
    if mesh.dim == 1:
        mids = 0.5 * (mesh.vertices[mesh.cells[:, 0]] + mesh.vertices[mesh.cells[:, 1]])
        n = mesh.n_vertices
        vertices = np.vstack([mesh.vertices, mids])
        mid_ids = n + np.arange(mesh.n_cells)
        cells = np.vstack(
            [
                np.column_stack([mesh.cells[:, 0], mid_ids]),
                np.column_stack([mid_ids, mesh.cells[:, 1]]),
            ]
        )
        return Mesh(dim=1, vertices=vertices, cells=cells)
    if mesh.dim != 2:
        raise PreconditionError("uniform refinement implemented for dim <= 2")

    # Assign one new vertex per edge, then split each triangle in four.
    edge_ids = {}
    vertices = [mesh.vertices]
    next_id = mesh.n_vertices

    def midpoint(a, b):
        nonlocal next_id
        key = (min(a, b), max(a, b))
        if key not in edge_ids:
            edge_ids[key] = next_id
            vertices.append(0.5 * (mesh.vertices[a] + mesh.vertices[b])[None, :])
            next_id += 1
        return edge_ids[key]

    cells = []
    for v0, v1, v2 in mesh.cells:
        m01 = midpoint(v0, v1)
        m12 = midpoint(v1, v2)
        m02 = midpoint(v0, v2)
        cells += [[v0, m01, m02], [m01, v1, m12], [m02, m12, v2], [m01, m12, m02]]
    return Mesh(dim=2, vertices=np.vstack(vertices), cells=np.array(cells))


def validate(mesh: Mesh) -> list[str]:
    """Report violated mesh invariants; an empty list means the mesh is valid."""
    report = []
    n = mesh.n_vertices
    if mesh.vertices.ndim != 2 or mesh.vertices.shape[1] != mesh.dim:
        report.append(f"vertex coordinates must have length dim={mesh.dim}")
        return report
    if mesh.cells.ndim != 2 or mesh.cells.shape[1] != mesh.dim + 1:
        report.append(f"cells must be ({mesh.dim + 1})-tuples")
        return report
    if mesh.n_cells and (mesh.cells.min() < 0 or mesh.cells.max() >= n):
        report.append("cell vertex index out of range")
        return report

    for idx, cell in enumerate(mesh.cells):
        if len(set(cell.tolist())) != mesh.dim + 1:
            report.append(f"degenerate cell {idx}: repeated vertex index")
    vols = mesh.cell_volumes()
    for idx in np.nonzero(vols <= 0)[0]:
        report.append(f"degenerate cell {int(idx)}: non-positive volume {vols[idx]:.3e}")

    computed = extract_boundary_facets(mesh.cells, mesh.dim)
    stored = {tuple(sorted(f)) for f in mesh.boundary_facets}
    expected = {tuple(f) for f in computed}
    if stored != expected:
        report.append(
            "boundary mismatch: stored facets differ from facets incident to one cell"
        )
    ids = np.unique(mesh.boundary_facets) if len(mesh.boundary_facets) else np.array([], dtype=np.int64)
    if not np.array_equal(np.asarray(mesh.boundary_vertex_ids), ids):
        report.append("boundary_vertex_ids differ from union of boundary facet vertices")

    if mesh.n_cells and not _is_connected(mesh):
        report.append("mesh is not connected")
    return report


def _is_connected(mesh: Mesh) -> bool:
    """Connectivity of cells through shared vertices (what the stiffness kernel sees)."""
    vertex_cells = [[] for _ in range(mesh.n_vertices)]
    for ci, cell in enumerate(mesh.cells):
        for v in cell:
            vertex_cells[v].append(ci)
    seen = np.zeros(mesh.n_cells, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        ci = stack.pop()
        for v in mesh.cells[ci]:
            for cj in vertex_cells[v]:
                if not seen[cj]:
                    seen[cj] = True
                    stack.append(cj)
    return bool(seen.all())


def save_mesh(mesh: Mesh, path) -> None:
    doc = {
        "dim": mesh.dim,
        "vertices": mesh.vertices.tolist(),
        "cells": mesh.cells.tolist(),
        "boundary_facets": mesh.boundary_facets.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_mesh(path) -> Mesh:
    """Load a mesh from its JSON document.

    The boundary is recomputed from the cells; if the document carries
    ``boundary_facets`` they are cross-checked against the recomputed set.
    Any violated invariant raises :class:`InvalidMeshError`.
    """
    with open(path) as fh:
        doc = json.load(fh)
    try:
        mesh = Mesh(dim=int(doc["dim"]), vertices=doc["vertices"], cells=doc["cells"])
    except KeyError as exc:
        raise InvalidMeshError([f"mesh document missing key {exc}"]) from exc
    if "boundary_facets" in doc:
        given = {tuple(sorted(f)) for f in doc["boundary_facets"]}
        computed = {tuple(f) for f in mesh.boundary_facets}
        if given != computed:
            raise InvalidMeshError(
                ["boundary mismatch: declared boundary_facets are not the facets "
                 "incident to exactly one cell"]
            )
    report = validate(mesh)
    if report:
        raise InvalidMeshError(report)
    return mesh
