"""Convex polyhedra with Euclidean-planar faces in the upper half-space.

A polyhedron is stored as a vertex table plus, for each face, a loop of vertex
indices ordered counterclockwise when seen from outside.  Planes, edges and the
face adjacency are derived and validated on construction.

JSON layout used by :func:`polyhedron_to_json` / :func:`polyhedron_from_json`::

    {"vertices": [[x1, x2, x3], ...],
     "faces": [[i0, i1, i2, ...], ...],
     "min_sin_angle": 0.05}

``min_sin_angle`` is optional.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .halfspace import background_dihedral_angle

__all__ = [
    "DEFAULT_MIN_SIN_ANGLE",
    "Edge",
    "Face",
    "Plane",
    "Polyhedron",
    "PolyhedronError",
    "box_polyhedron",
    "build_polyhedron",
    "cone_polyhedron",
    "cube_box",
    "polyhedron_from_loops",
    "nearest_point_on_plane",
    "polyhedron_from_json",
    "polyhedron_to_json",
    "segment_min_cosh",
]

DEFAULT_MIN_SIN_ANGLE = 0.05
GEOM_TOL = 1e-12


class PolyhedronError(ValueError):
    """Raised when a vertex/face description does not give a valid polyhedron."""


@dataclass(frozen=True)
class Plane:
    """The plane ``{p : a . p = d}`` with Euclidean unit normal `a`."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(a) - 1.0) > 1e-14:
            raise ValueError("plane normal must have unit Euclidean length")
        a.setflags(write=False)
        object.__setattr__(self, "normal", a)

    def signed_distance(self, p):
        return np.asarray(p, dtype=float) @ self.normal - self.offset


def nearest_point_on_plane(plane: Plane) -> np.ndarray:
    """Point of `plane` (in ``x3 > 0``) hyperbolically closest to ``(0,0,1)``.

    Minimizes ``(|x|^2 + 1) / x3`` on the plane.  The Lagrange conditions give
    ``x3 = sqrt(d^2 + 1 - a3^2)`` and a horizontal part parallel to ``a``.
    """
    a, d = plane.normal, plane.offset
    h = 1.0 - a[2] ** 2
    x3 = np.sqrt(d * d + h)
    if h < 1e-300:
        mu = 0.0
    elif h >= 0.5:
        mu = (d - a[2] * x3) / h
    else:
        mu = (d * d - a[2] ** 2) / (d + a[2] * x3)
    return np.array([mu * a[0], mu * a[1], x3])


@dataclass(frozen=True, eq=False)
class Face:
    """Convex planar face; `vertices` is a counterclockwise loop seen from outside."""

    plane: Plane
    vertices: np.ndarray
    face_id: int = 0
    vertex_ids: tuple = ()

    @property
    def normal(self) -> np.ndarray:
        return self.plane.normal

    @cached_property
    def tangents(self) -> np.ndarray:
        """Euclidean-orthonormal ``(t1, t2)`` with ``(t1, t2, a)`` right-handed."""
        t1 = self.vertices[1] - self.vertices[0]
        t1 = t1 - (t1 @ self.normal) * self.normal
        t1 /= np.linalg.norm(t1)
        t2 = np.cross(self.normal, t1)
        return np.array([t1, t2])

    @cached_property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    @cached_property
    def area(self) -> float:
        c = self.centroid
        v = self.vertices
        cr = np.cross(v - c, np.roll(v, -1, axis=0) - c)
        return 0.5 * float(np.sum(cr @ self.normal))

    def directed_edges(self):
        v = self.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def outward_conormal(self, start, end) -> np.ndarray:
        """Euclidean unit vector in the face, normal to edge ``start -> end``,
        pointing out of the face.  The edge must be traversed as in the loop."""
        d = np.asarray(end, dtype=float) - np.asarray(start, dtype=float)
        d /= np.linalg.norm(d)
        return np.cross(d, self.normal)

    def contains(self, p, tol=GEOM_TOL) -> bool:
        p = np.asarray(p, dtype=float)
        scale = max(1.0, float(np.max(np.abs(self.vertices))))
        for s, e in self.directed_edges():
            if np.cross(e - s, p - s) @ self.normal < -tol * scale * scale:
                return False
        return True

    @cached_property
    def focus_point(self) -> np.ndarray:
        """Point of the face closest to the base point in the metric ``b``.

        ``cosh r`` is a convex function of the Euclidean position, so the
        minimizer over the face is either the plane minimizer or lies on the
        boundary.
        """
        q = nearest_point_on_plane(self.plane)
        if self.contains(q):
            return q
        best, best_val = None, np.inf
        for s, e in self.directed_edges():
            pt, val = segment_min_cosh(s, e)
            if val < best_val:
                best, best_val = pt, val
        return best


def _cosh_r(p):
    return 0.5 * (p @ p + 1.0) / p[2]


def segment_min_cosh(s, e):
    """Point of the segment ``s -> e`` nearest the base point, and its ``cosh r``."""
    s = np.asarray(s, dtype=float)
    e = np.asarray(e, dtype=float)
    res = minimize_scalar(lambda t: _cosh_r(s + t * (e - s)), bounds=(0.0, 1.0),
                          method="bounded", options={"xatol": 1e-13})
    cands = [(0.0, _cosh_r(s)), (1.0, _cosh_r(e)), (res.x, _cosh_r(s + res.x * (e - s)))]
    t, val = min(cands, key=lambda c: c[1])
    return s + t * (e - s), val


@dataclass(frozen=True, eq=False)
class Edge:
    """Edge shared by faces ``A`` and ``B``; `endpoints` follow face A's loop."""

    endpoints: np.ndarray
    face_ids: tuple
    normals: tuple
    edge_id: int = 0

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.endpoints[1] - self.endpoints[0]))

    @cached_property
    def background_angle(self) -> float:
        return background_dihedral_angle(*self.normals)

    @cached_property
    def focus_point(self) -> np.ndarray:
        return segment_min_cosh(*self.endpoints)[0]


@dataclass(frozen=True, eq=False)
class Polyhedron:
    vertices: np.ndarray
    faces: list
    edges: list
    min_sin_angle: float = DEFAULT_MIN_SIN_ANGLE
    face_loops: list = field(default_factory=list)

    @cached_property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def face(self, face_id) -> Face:
        return self.faces[face_id]

    def edges_of(self, face_id):
        """Yield ``(edge, start, end)`` with the edge oriented as in the face loop."""
        for edge in self.edges:
            if edge.face_ids[0] == face_id:
                yield edge, edge.endpoints[0], edge.endpoints[1]
            elif edge.face_ids[1] == face_id:
                yield edge, edge.endpoints[1], edge.endpoints[0]


def _newell_normal(v):
    n = np.zeros(3)
    for i in range(len(v)):
        cur, nxt = v[i], v[(i + 1) % len(v)]
        n += np.cross(cur, nxt)
    return n


def build_polyhedron(vertices, faces, min_sin_angle=DEFAULT_MIN_SIN_ANGLE) -> Polyhedron:
    """Validate a vertex table plus face index loops and derive planes/edges.

    Raises :class:`PolyhedronError` naming the offending face or edge for an
    open boundary, inconsistent orientation, a vertex with ``x3 <= 0``, a
    non-planar or non-convex face, or a dihedral angle with
    ``sin(angle) < min_sin_angle``.
    """
    verts = np.asarray(vertices, dtype=float)
    if verts.ndim != 2 or verts.shape[1] != 3:
        raise PolyhedronError("vertices must be an (n, 3) array")
    scale = max(1.0, float(np.max(np.abs(verts))))
    tol = GEOM_TOL * scale

    loops = [tuple(int(i) for i in loop) for loop in faces]
    for fid, loop in enumerate(loops):
        if len(loop) < 3 or len(set(loop)) != len(loop):
            raise PolyhedronError(f"face {fid}: needs at least 3 distinct vertices")
        bad = [i for i in loop if not verts[i, 2] > 0]
        if bad:
            raise PolyhedronError(f"face {fid}: nonpositive height at vertex {bad[0]}")

    face_objs = []
    for fid, loop in enumerate(loops):
        v = verts[list(loop)]
        n = _newell_normal(v - v.mean(axis=0))
        nn = np.linalg.norm(n)
        if nn <= tol * scale:
            raise PolyhedronError(f"face {fid}: degenerate (zero area)")
        a = n / nn
        d = float(np.mean(v @ a))
        if np.max(np.abs(v @ a - d)) > tol:
            raise PolyhedronError(f"face {fid}: vertices are not coplanar")
        for i in range(len(v)):
            turn = np.cross(v[i] - v[i - 1], v[(i + 1) % len(v)] - v[i]) @ a
            if turn <= tol * scale:
                raise PolyhedronError(f"face {fid}: loop is not strictly convex")
        face_objs.append(Face(Plane(a, d), v.copy(), fid, loop))

    directed = {}
    for fid, loop in enumerate(loops):
        for i in range(len(loop)):
            key = (loop[i], loop[(i + 1) % len(loop)])
            if key in directed:
                raise PolyhedronError(
                    f"face {fid}: inconsistent orientation on edge {key} "
                    f"(also used by face {directed[key]})")
            directed[key] = fid

    edges = []
    for (i, j), fa in sorted(directed.items(), key=lambda kv: (kv[1], kv[0])):
        fb = directed.get((j, i))
        if fb is None:
            raise PolyhedronError(f"open boundary: edge ({i}, {j}) of face {fa} has one adjacent face")
        if fa > fb:
            continue
        eid = len(edges)
        edge = Edge(np.array([verts[i], verts[j]]), (fa, fb),
                    (face_objs[fa].normal, face_objs[fb].normal), eid)
        if edge.length <= tol:
            raise PolyhedronError(f"edge {eid}: zero length")
        c = float(face_objs[fa].normal @ face_objs[fb].normal)
        sin_angle = np.sqrt(max(0.0, 1.0 - c * c))
        if sin_angle <= 1e-15 or sin_angle < min_sin_angle:
            raise PolyhedronError(
                f"edge {eid} (faces {fa}, {fb}): sin of dihedral angle {sin_angle:.3g} "
                f"below bound {min_sin_angle}")
        edges.append(edge)

    used = sorted({i for loop in loops for i in loop})
    centroid = verts[used].mean(axis=0)
    for f in face_objs:
        if f.normal @ (f.centroid - centroid) <= 0:
            raise PolyhedronError(f"face {f.face_id}: inconsistent orientation (normal points inward)")

    return Polyhedron(verts, face_objs, edges, min_sin_angle, [list(l) for l in loops])


def polyhedron_from_loops(loops, min_sin_angle=DEFAULT_MIN_SIN_ANGLE, tol=1e-12) -> Polyhedron:
    """Build from faces given as coordinate loops, merging coincident vertices."""
    vertices, faces = [], []
    for loop in loops:
        idx = []
        for p in np.asarray(loop, dtype=float):
            for k, q in enumerate(vertices):
                if np.max(np.abs(p - q)) <= tol * max(1.0, float(np.max(np.abs(q)))):
                    idx.append(k)
                    break
            else:
                vertices.append(p)
                idx.append(len(vertices) - 1)
        faces.append(idx)
    if not vertices:
        raise PolyhedronError("no faces given")
    return build_polyhedron(np.array(vertices), faces, min_sin_angle)


def box_polyhedron(lo, hi, min_sin_angle=DEFAULT_MIN_SIN_ANGLE) -> Polyhedron:
    """Axis-aligned box ``[lo1, hi1] x [lo2, hi2] x [lo3, hi3]``."""
    (x0, y0, z0), (x1, y1, z1) = lo, hi
    verts = np.array([
        [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
        [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1],
    ], dtype=float)
    faces = [
        [0, 3, 2, 1],  # bottom, a = -e3
        [4, 5, 6, 7],  # top
        [0, 1, 5, 4],  # y = y0
        [1, 2, 6, 5],  # x = x1
        [2, 3, 7, 6],  # y = y1
        [3, 0, 4, 7],  # x = x0
    ]
    return build_polyhedron(verts, faces, min_sin_angle)


def cube_box(size) -> Polyhedron:
    """The box ``[-L, L]^2 x [1/L, L]`` used for exhaustion sweeps."""
    L = float(size)
    return box_polyhedron((-L, -L, 1.0 / L), (L, L, L))


def cone_polyhedron(n, eps, s, min_sin_angle=0.0) -> Polyhedron:
    """Cone over a regular `n`-gon on ``{x3 = eps}`` with apex ``(0, 0, 1/eps)``.

    The base has circumradius ``rho = eps**(-s)`` and vertices at angles
    ``pi/n + 2 pi k/n``, so one base edge sits on ``x1 = rho cos(pi/n)``.  For
    large `s` the base/side angles become tiny; the angle bound defaults to 0
    (only exact degeneracy is rejected).
    """
    n = int(n)
    if n < 3:
        raise ValueError("cone needs n >= 3")
    if not 0.0 < eps < 1.0:
        raise ValueError("cone needs 0 < eps < 1 (apex above the base)")
    if not s > 0:
        raise ValueError("cone needs s > 0")
    rho = eps ** (-s)
    ang = np.pi / n + 2.0 * np.pi * np.arange(n) / n
    base = np.column_stack([rho * np.cos(ang), rho * np.sin(ang), np.full(n, eps)])
    verts = np.vstack([base, [[0.0, 0.0, 1.0 / eps]]])
    apex = n
    faces = [list(range(n - 1, -1, -1))]
    faces += [[k, (k + 1) % n, apex] for k in range(n)]
    return build_polyhedron(verts, faces, min_sin_angle)


def cone_radius(eps, s) -> float:
    return eps ** (-s)


def polyhedron_to_json(poly: Polyhedron, path=None) -> str:
    doc = {
        "vertices": poly.vertices.tolist(),
        "faces": [list(l) for l in poly.face_loops],
        "min_sin_angle": poly.min_sin_angle,
    }
    text = json.dumps(doc, indent=2)
    if path is not None:
        Path(path).write_text(text)
    return text


def polyhedron_from_json(source) -> Polyhedron:
    """Read a polyhedron from a JSON string, a path, or an already parsed dict."""
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            text = Path(source).read_text()
        doc = json.loads(text)
    return build_polyhedron(doc["vertices"], doc["faces"],
                            doc.get("min_sin_angle", DEFAULT_MIN_SIN_ANGLE))
