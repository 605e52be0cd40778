"""Adaptive Gauss quadrature on planar polygons and straight segments.

Integrands are callables taking an ``(N, 3)`` array of points and returning
``N`` values; the Euclidean area/length element is supplied by the rule, so
callers multiply in any metric weight themselves (``x3^-2`` for area,
``x3^-1`` for length).

Refinement has two stages.  First a graded mesh is built toward the point of
the face (or segment) that is hyperbolically closest to ``(0, 0, 1)``: cells
are split until their diameter is below ``2^(1 - grading)`` times the height
of that point plus their distance to it.  Every integrand in this package
concentrates there.  Then cells are refined adaptively, largest two-level
error first, until the summed error estimate meets the tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

__all__ = [
    "QuadResult",
    "QuadratureError",
    "QuadratureSpec",
    "integrate_edge",
    "integrate_face",
    "integrate_segment",
    "integrate_triangles",
    "line_rule",
    "triangle_rule",
    "triangulate",
]

MAX_PRESPLIT_LEVELS = 48


class QuadratureError(RuntimeError):
    """Raised when an integral fails to converge and the caller asked for strictness."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Orders, refinement limits and tolerances for face and edge integrals.

    `max_depth` counts adaptive refinement levels on top of the graded mesh.
    """

    face_order: int = 6
    edge_order: int = 8
    max_depth: int = 8
    rtol: float = 1e-8
    atol: float = 1e-15
    grading: float = 2.0

    def __post_init__(self):
        if self.face_order < 1 or self.edge_order < 1:
            raise ValueError("quadrature orders must be >= 1")
        if not self.rtol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")

    @property
    def grade_factor(self) -> float:
        return 2.0 ** (1.0 - self.grading)

    def replace(self, **kw) -> "QuadratureSpec":
        from dataclasses import replace
        return replace(self, **kw)


@dataclass
class QuadResult:
    value: float
    error: float
    converged: bool = True
    n_cells: int = 0
    depth: int = 0

    def __iter__(self):
        return iter((self.value, self.error))

    def __add__(self, other: "QuadResult") -> "QuadResult":
        return QuadResult(self.value + other.value, self.error + other.error,
                          self.converged and other.converged,
                          self.n_cells + other.n_cells, max(self.depth, other.depth))


ZERO = QuadResult(0.0, 0.0)


@lru_cache(maxsize=None)
def triangle_rule(order: int):
    """Collapsed Gauss rule on the reference triangle ``(0,0), (1,0), (0,1)``.

    Gauss-Jacobi (weight ``1 - u``) in the collapsed direction times
    Gauss-Legendre along the fibres; exact for total degree ``2*order - 1``.
    Returns barycentric coordinates ``(M, 3)`` and weights summing to 1/2.
    """
    xj, wj = roots_jacobi(order, 1.0, 0.0)
    xl, wl = roots_legendre(order)
    u = 0.5 * (1.0 + xj)
    v = 0.5 * (1.0 + xl)
    U, Vv = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wj / 4.0, wl / 2.0)
    s = U.ravel()
    t = (Vv * (1.0 - U)).ravel()
    bary = np.column_stack([1.0 - s - t, s, t])
    bary.setflags(write=False)
    w = W.ravel()
    w.setflags(write=False)
    return bary, w


@lru_cache(maxsize=None)
def line_rule(order: int):
    """Gauss-Legendre nodes on ``[0, 1]`` and weights summing to 1."""
    x, w = roots_legendre(order)
    return 0.5 * (1.0 + x), 0.5 * w


def triangulate(face) -> np.ndarray:
    """Fan triangulation of a convex polygon from its vertex-average centroid."""
    v = np.asarray(getattr(face, "vertices", face), dtype=float)
    if len(v) < 3:
        raise ValueError("polygon needs at least 3 vertices")
    c = v.mean(axis=0)
    tris = np.array([[c, v[i], v[(i + 1) % len(v)]] for i in range(len(v))])
    areas = 0.5 * np.linalg.norm(np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]), axis=1)
    scale = max(1.0, float(np.max(np.abs(v))))
    if np.any(areas <= 1e-14 * scale * scale):
        raise ValueError("degenerate polygon")
    return tris


def _tri_areas(tris):
    return 0.5 * np.linalg.norm(np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]), axis=1)


def _split4(tris):
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    kids = np.stack([
        np.stack([a, ab, ca], axis=1),
        np.stack([ab, b, bc], axis=1),
        np.stack([ca, bc, c], axis=1),
        np.stack([ab, bc, ca], axis=1),
    ], axis=1)
    return kids.reshape(-1, 3, 3)


def _apply_rule(tris, fn, order):
    bary, w = triangle_rule(order)
    pts = np.einsum("mk,tkd->tmd", bary, tris)
    vals = np.asarray(fn(pts.reshape(-1, 3)), dtype=float).reshape(len(tris), -1)
    return (vals @ w) * 2.0 * _tri_areas(tris)


def _grade_cells(cells, focus, factor, split, size, dist):
    if focus is None:
        return cells
    h = float(focus[2])
    for _ in range(MAX_PRESPLIT_LEVELS):
        need = size(cells) > factor * (h + dist(cells))
        if not np.any(need):
            break
        cells = np.concatenate([cells[~need], split(cells[need])])
    return cells


def _tri_diam(tris):
    e = np.stack([tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 1], tris[:, 0] - tris[:, 2]], axis=1)
    return np.max(np.linalg.norm(e, axis=2), axis=1)


def _adaptive(cells, fn, spec, rule, split, nkids):
    """Shared driver: global error-ordered refinement of independent cells."""
    coarse = rule(cells, fn)
    kids = split(cells)
    kid_vals = rule(kids, fn).reshape(len(cells), nkids)
    depth = np.zeros(len(cells), dtype=int)
    while True:
        fine = kid_vals.sum(axis=1)
        err = np.abs(fine - coarse)
        total = float(np.sum(fine))
        est = float(np.sum(err))
        tol = max(spec.atol, spec.rtol * abs(total))
        if est <= tol:
            return QuadResult(total, est, True, len(cells), int(depth.max(initial=0)))
        cand = np.flatnonzero((depth < spec.max_depth) & (err > 0))
        if len(cand) == 0:
            return QuadResult(total, est, False, len(cells), int(depth.max(initial=0)))
        order = cand[np.argsort(-err[cand], kind="stable")]
        cum = np.cumsum(err[order])
        target = est - 0.5 * tol
        nsel = int(np.searchsorted(cum, target) + 1)
        sel = np.sort(order[:max(1, min(nsel, len(order)))])
        keep = np.ones(len(cells), dtype=bool)
        keep[sel] = False
        new_cells = kids.reshape(len(cells), nkids, *cells.shape[1:])[sel].reshape(-1, *cells.shape[1:])
        new_coarse = kid_vals[sel].ravel()
        new_kids = split(new_cells)
        new_kid_vals = rule(new_kids, fn).reshape(len(new_cells), nkids)
        cells = np.concatenate([cells[keep], new_cells])
        coarse = np.concatenate([coarse[keep], new_coarse])
        kids = np.concatenate([kids.reshape(len(keep), nkids, *cells.shape[1:])[keep].reshape(-1, *cells.shape[1:]),
                               new_kids])
        kid_vals = np.concatenate([kid_vals[keep], new_kid_vals])
        depth = np.concatenate([depth[keep], np.repeat(depth[sel] + 1, nkids)])


def integrate_triangles(tris, fn, spec: QuadratureSpec = QuadratureSpec(), focus=None) -> QuadResult:
    """Integrate `fn` against Euclidean area over a set of triangles."""
    tris = np.asarray(tris, dtype=float).reshape(-1, 3, 3)

    def dist(t):
        return np.linalg.norm(t.mean(axis=1) - focus, axis=1)

    tris = _grade_cells(tris, None if focus is None else np.asarray(focus, float),
                        spec.grade_factor, _split4, _tri_diam, dist)
    return _adaptive(tris, fn, spec, lambda t, f: _apply_rule(t, f, spec.face_order), _split4, 4)


def integrate_face(face, fn, spec: QuadratureSpec = QuadratureSpec(), graded=True) -> QuadResult:
    """Integrate `fn` against Euclidean area over a convex planar face."""
    focus = getattr(face, "focus_point", None) if graded else None
    return integrate_triangles(triangulate(face), fn, spec, focus)


def _split2(segs):
    a, b = segs[:, 0], segs[:, 1]
    m = 0.5 * (a + b)
    return np.stack([np.stack([a, m], axis=1), np.stack([m, b], axis=1)], axis=1).reshape(-1, 2, 3)


def _apply_line(segs, fn, order):
    x, w = line_rule(order)
    d = segs[:, 1] - segs[:, 0]
    pts = segs[:, None, 0] + x[None, :, None] * d[:, None, :]
    vals = np.asarray(fn(pts.reshape(-1, 3)), dtype=float).reshape(len(segs), -1)
    return (vals @ w) * np.linalg.norm(d, axis=1)


def integrate_segment(start, end, fn, spec: QuadratureSpec = QuadratureSpec(), focus=None) -> QuadResult:
    """Integrate `fn` against Euclidean length along the segment ``start -> end``."""
    seg = np.array([[start, end]], dtype=float)

    def size(s):
        return np.linalg.norm(s[:, 1] - s[:, 0], axis=1)

    def dist(s):
        # distance from the focus to the segment itself, not its midpoint
        d = s[:, 1] - s[:, 0]
        t = np.clip(np.einsum("nd,nd->n", focus - s[:, 0], d) / np.einsum("nd,nd->n", d, d), 0.0, 1.0)
        return np.linalg.norm(s[:, 0] + t[:, None] * d - focus, axis=1)

    seg = _grade_cells(seg, None if focus is None else np.asarray(focus, float),
                       spec.grade_factor, _split2, size, dist)
    return _adaptive(seg, fn, spec, lambda s, f: _apply_line(s, f, spec.edge_order), _split2, 2)


def integrate_edge(edge, fn, spec: QuadratureSpec = QuadratureSpec(), graded=True) -> QuadResult:
    """Integrate along an :class:`~ahmass.polyhedron.Edge`, graded toward its focus point."""
    focus = edge.focus_point if graded else None
    return integrate_segment(edge.endpoints[0], edge.endpoints[1], fn, spec, focus)
