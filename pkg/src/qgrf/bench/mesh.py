"""Triangle meshes: OBJ intake, torus generator, vertex normals, mesh graph."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass

import numpy as np

from qgrf.graph import Graph, GraphError


class MeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (V, 3)
    faces: np.ndarray  # (F, 3) int, 0-indexed

    def __post_init__(self):
        v, f = self.vertices, self.faces
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (V, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError(f"faces must be (F, 3), got {f.shape}")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise MeshError("face index out of range")
        if np.any(np.linalg.norm(_face_cross(v, f), axis=1) == 0):
            raise MeshError("degenerate (zero-area) face")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)


def _face_cross(v, f):
    return np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])


def load_obj(source) -> Mesh:
    """Read ``v x y z`` and ``f i j k`` records (1-indexed); other directives are skipped.

    Face tokens may carry ``/vt/vn`` suffixes, which are ignored.  Polygons
    with more than three corners are fan-triangulated.
    """
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source) as fh:
            return load_obj(fh)
    if isinstance(source, str):
        source = io.StringIO(source)
    verts, faces = [], []
    for lineno, line in enumerate(source, start=1):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = [int(tok.split("/")[0]) for tok in parts[1:]]
            if len(idx) < 3:
                raise MeshError(f"line {lineno}: face with fewer than 3 vertices")
            idx = [i - 1 if i > 0 else len(verts) + i for i in idx]
            faces.extend([idx[0], idx[k], idx[k + 1]] for k in range(1, len(idx) - 1))
    return Mesh(np.asarray(verts, dtype=float).reshape(-1, 3), np.asarray(faces, dtype=np.int64).reshape(-1, 3))


def torus_mesh(major: int, minor: int, big_r: float = 1.0, small_r: float = 0.3) -> Mesh:
    """Triangulated torus with ``major * minor`` vertices, outward-facing winding."""
    if major < 3 or minor < 3:
        raise MeshError("torus needs at least 3 segments in each direction")
    u = 2 * np.pi * np.arange(major) / major
    v = 2 * np.pi * np.arange(minor) / minor
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ring = big_r + small_r * np.cos(vv)
    pts = np.stack([ring * np.cos(uu), ring * np.sin(uu), small_r * np.sin(vv)], axis=-1).reshape(-1, 3)
    i, j = np.meshgrid(np.arange(major), np.arange(minor), indexing="ij")
    a = (i * minor + j).ravel()
    b = (((i + 1) % major) * minor + j).ravel()
    c = (((i + 1) % major) * minor + (j + 1) % minor).ravel()
    d = (i * minor + (j + 1) % minor).ravel()
    faces = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    return Mesh(pts, faces)


def torus_normals(major: int, minor: int) -> np.ndarray:
    """Analytic outward unit normals at the vertices of :func:`torus_mesh`."""
    u = 2 * np.pi * np.arange(major) / major
    v = 2 * np.pi * np.arange(minor) / minor
    uu, vv = np.meshgrid(u, v, indexing="ij")
    return np.stack([np.cos(vv) * np.cos(uu), np.cos(vv) * np.sin(uu), np.sin(vv)], axis=-1).reshape(-1, 3)


def vertex_normals(mesh: Mesh) -> np.ndarray:
    """Unweighted mean of adjacent unit face normals, renormalised."""
    v, f = mesh.vertices, mesh.faces
    fn = _face_cross(v, f)
    fn /= np.linalg.norm(fn, axis=1, keepdims=True)
    acc = np.zeros_like(v)
    count = np.zeros(len(v))
    for k in range(3):
        np.add.at(acc, f[:, k], fn)
        np.add.at(count, f[:, k], 1)
    if np.any(count == 0):
        raise MeshError(f"vertex {int(np.flatnonzero(count == 0)[0])} belongs to no face")
    norm = np.linalg.norm(acc, axis=1)
    if np.any(norm < 1e-12):
        raise MeshError("face normals cancel at a vertex")
    return acc / norm[:, None]


def mesh_graph(mesh: Mesh) -> Graph:
    """Unweighted edge connectivity of the triangulation."""
    f = mesh.faces
    e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    e = np.unique(np.sort(e, axis=1), axis=0)
    try:
        return Graph.from_edges(mesh.n_vertices, e.tolist())
    except GraphError as exc:
        raise MeshError(str(exc)) from None
