"""Closed-form background geometry of the upper half-space model.

The background metric is ``b = (dx1^2 + dx2^2 + dx3^2) / x3^2`` on
``{x3 > 0}``, the base point is ``o = (0, 0, 1)`` and the static potential is
``V = 1/x3``.  Every function here accepts either a single point or an array of
points with trailing dimension 3 and broadcasts over the leading axes.

Planar faces are described by a Euclidean unit normal ``a``.  Because ``b`` is
conformal to the Euclidean metric, the ``b``-unit normal is ``x3 * a``, every
face is umbilic and its background mean curvature is the constant ``-2 a3``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BASE_POINT",
    "Point",
    "as_points",
    "background_christoffel",
    "background_dihedral_angle",
    "background_mean_curvature",
    "background_metric",
    "background_second_fundamental_form",
    "cosh_distance",
    "normal_derivative_V",
    "outward_normal_bar",
    "static_potential",
    "static_potential_gradient",
    "background_metric_derivative",
    "ball_to_halfspace",
    "geodesic_sphere",
]


@dataclass(frozen=True)
class Point:
    """A point of the open upper half-space."""

    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        if not self.x3 > 0:
            raise ValueError(f"point must have x3 > 0, got x3={self.x3!r}")

    def __array__(self, dtype=None, copy=None):
        return np.array([self.x1, self.x2, self.x3], dtype=dtype or float)

    def __iter__(self):
        return iter((self.x1, self.x2, self.x3))


BASE_POINT = Point(0.0, 0.0, 1.0)


def as_points(p) -> np.ndarray:
    """Convert `p` to a float array of shape ``(..., 3)``, checking ``x3 > 0``."""
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1:] != (3,):
        raise ValueError(f"points need a trailing axis of length 3, got {arr.shape}")
    if np.any(~(arr[..., 2] > 0)):
        raise ValueError("points must lie in the open upper half-space (x3 > 0)")
    return arr


def cosh_distance(p):
    r"""Return ``cosh r`` with `r` the hyperbolic distance from ``(0, 0, 1)``.

    Uses ``2 cosh r = (x1^2 + x2^2 + x3^2 + 1) / x3``.
    """
    p = as_points(p)
    return 0.5 * (np.sum(p * p, axis=-1) + 1.0) / p[..., 2]


def static_potential(p):
    """Return ``V = 1/x3``."""
    return 1.0 / as_points(p)[..., 2]


def static_potential_gradient(p):
    """Coordinate differential ``dV = (0, 0, -1/x3^2)``."""
    p = as_points(p)
    out = np.zeros_like(p)
    out[..., 2] = -1.0 / p[..., 2] ** 2
    return out


def background_metric(p):
    """Components ``b_ij = delta_ij / x3^2`` with shape ``(..., 3, 3)``."""
    p = as_points(p)
    return np.eye(3) / p[..., 2, None, None] ** 2


def background_metric_derivative(p):
    """Partials ``d_k b_ij`` indexed ``[..., k, i, j]``."""
    p = as_points(p)
    out = np.zeros(p.shape[:-1] + (3, 3, 3))
    out[..., 2, :, :] = -2.0 * np.eye(3) / p[..., 2, None, None] ** 3
    return out


def background_christoffel(p):
    r"""Christoffel symbols of ``b`` indexed ``[..., k, i, j]`` for Gamma^k_ij.

    Closed form: Gamma^3_11 = Gamma^3_22 = 1/x3 and
    Gamma^1_13 = Gamma^2_23 = Gamma^3_33 = -1/x3, all others zero.
    """
    p = as_points(p)
    inv = 1.0 / p[..., 2]
    out = np.zeros(p.shape[:-1] + (3, 3, 3))
    out[..., 2, 0, 0] = inv
    out[..., 2, 1, 1] = inv
    out[..., 2, 2, 2] = -inv
    for i in (0, 1):
        out[..., i, i, 2] = -inv
        out[..., i, 2, i] = -inv
    return out


def _unit(a):
    a = np.asarray(a, dtype=float)
    return a / np.linalg.norm(a, axis=-1, keepdims=True)


def _normal_of(face_or_normal):
    a = getattr(face_or_normal, "normal", face_or_normal)
    return np.asarray(a, dtype=float)


def outward_normal_bar(face, p):
    """The ``b``-unit outward normal ``x3 * a`` of a face at `p`.

    `face` may be a :class:`~ahmass.polyhedron.Face` or a Euclidean unit normal.
    """
    a = _normal_of(face)
    p = as_points(p)
    return p[..., 2, None] * a


def normal_derivative_V(face, p):
    """Derivative of ``V`` along the outward ``b``-normal, equal to ``-a3 V``."""
    a = _normal_of(face)
    return -a[2] * static_potential(p)


def background_second_fundamental_form(face, p, tangents):
    """Second fundamental form of a planar face under ``b``.

    With the convention ``A(Y, Z) = b(nabla_Y nu, Z)`` for the outward normal
    this equals ``-a3 * b`` restricted to the face.  `tangents` is a ``(2, 3)``
    array of Euclidean vectors spanning the plane; the result has shape
    ``(..., 2, 2)``.
    """
    a = _normal_of(face)
    t = np.asarray(tangents, dtype=float)
    gram = t @ t.T
    x3 = as_points(p)[..., 2]
    return -a[2] * gram / x3[..., None, None] ** 2


def background_mean_curvature(face):
    """Constant mean curvature ``-2 a3`` of a planar face under ``b``."""
    return -2.0 * _normal_of(face)[2]


def background_dihedral_angle(normal_a, normal_b=None):
    """Interior dihedral angle ``pi - arccos(a_A . a_B)`` along an edge.

    Accepts either two outward unit normals or an edge-like object with
    ``normals`` attribute.  Parallel faces are rejected.
    """
    if normal_b is None:
        normal_a, normal_b = normal_a.normals
    c = float(np.dot(_unit(normal_a), _unit(normal_b)))
    if abs(c) >= 1.0 - 1e-15:
        raise ValueError("degenerate dihedral angle: adjacent faces are parallel")
    return np.pi - np.arccos(c)


def ball_to_halfspace(q):
    """Isometry from the Poincare ball onto the upper half-space sending 0 to o.

    ``x = (2 q1, 2 q2, 1 - |q|^2) / (q1^2 + q2^2 + (1 + q3)^2)``; the direction
    ``+e3`` in the ball points toward the boundary point ``x3 -> 0``.
    """
    q = np.asarray(q, dtype=float)
    den = q[..., 0] ** 2 + q[..., 1] ** 2 + (1.0 + q[..., 2]) ** 2
    out = np.empty_like(q)
    out[..., 0] = 2.0 * q[..., 0] / den
    out[..., 1] = 2.0 * q[..., 1] / den
    out[..., 2] = (1.0 - np.sum(q * q, axis=-1)) / den
    return out


def geodesic_sphere(r, n_theta=128, n_phi=256):
    """Quadrature nodes on the geodesic sphere of radius `r` about ``o``.

    In half-space coordinates the sphere is the Euclidean sphere with center
    ``(0, 0, cosh r)`` and radius ``sinh r``.  Nodes are laid out in geodesic
    polar coordinates at ``o`` (Gauss-Legendre in the cosine of the polar
    angle, uniform in azimuth), where the area element is the uniform
    ``sinh(r)^2 dOmega``.

    Returns ``(points, normals, weights)``: half-space points, ``b``-unit
    outward normals and the weights of ``d sigma_bar``.
    """
    if not r > 0:
        raise ValueError("sphere radius must be positive")
    ct, wt = np.polynomial.legendre.leggauss(int(n_theta))
    phi = 2.0 * np.pi * np.arange(int(n_phi)) / n_phi
    st = np.sqrt(1.0 - ct ** 2)
    omega = np.stack(np.broadcast_arrays(
        st[:, None] * np.cos(phi)[None, :],
        st[:, None] * np.sin(phi)[None, :],
        ct[:, None]), axis=-1).reshape(-1, 3)
    weights = (np.repeat(wt, n_phi) * (2.0 * np.pi / n_phi)) * np.sinh(r) ** 2
    pts = ball_to_halfspace(np.tanh(0.5 * r) * omega)
    center = np.array([0.0, 0.0, np.cosh(r)])
    normals = (pts - center) / np.sinh(r) * pts[:, 2:3]
    return pts, normals, weights
