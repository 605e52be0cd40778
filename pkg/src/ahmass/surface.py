"""Geometry of planar faces and edges under the perturbed metric ``g = b + e``.

All routines are pointwise and vectorized over an ``(N, 3)`` array of points
lying on the face (or edge) in question.  Faces are exactly planar in
coordinates, so curvature comes entirely from the metric: with constant
Euclidean tangents ``t_a`` the second fundamental form is
``A(t_a, t_b) = -g(nu, nabla_{t_a} t_b) = -nu^k Gamma_{k,ij} t_a^i t_b^j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .halfspace import (
    as_points,
    background_metric_derivative,
    static_potential,
)
from .metric import MetricError, MetricField, christoffel_bar

__all__ = [
    "FaceFrame",
    "christoffel_g",
    "dihedral_angle_g",
    "edge_conormal",
    "face_frame",
    "g_unit_normal",
    "umbilic_bracket",
    "mean_curvature_g",
    "metric_g",
    "second_fundamental_form_g",
    "x_dual_field",
]

ANGLE_CLAMP = 1e-12


@dataclass(frozen=True)
class FaceFrame:
    face: object
    t1: np.ndarray
    t2: np.ndarray
    normal: np.ndarray


def face_frame(face) -> FaceFrame:
    t1, t2 = face.tangents
    return FaceFrame(face, t1, t2, face.normal)


def _pts(p):
    return as_points(p).reshape(-1, 3)


def metric_g(field: MetricField, p):
    """Components of ``g = b + e`` and their partials at the points."""
    p = _pts(p)
    x3 = p[:, 2]
    g = np.eye(3) / x3[:, None, None] ** 2 + field.e(p)
    dg = background_metric_derivative(p) + field.de(p)
    return g, dg


def _inverse_g(field, p):
    # invert the Euclidean-scaled matrix I + x3^2 e for conditioning
    x3 = p[:, 2]
    scaled = np.eye(3) + x3[:, None, None] ** 2 * field.e(p)
    lam = np.linalg.eigvalsh(scaled)[:, 0]
    if np.any(lam <= 1e-10):
        raise MetricError("g = b + e is degenerate at a quadrature point")
    return x3[:, None, None] ** 2 * np.linalg.inv(scaled)


def christoffel_g(field: MetricField, p) -> np.ndarray:
    """Christoffel symbols ``Gamma^k_ij`` of ``g``, assembled as
    ``Gamma_bar + g^{-1}(first-kind symbols of e + e * Gamma_bar)``."""
    p = _pts(p)
    ginv = _inverse_g(field, p)
    e = field.e(p)
    de = field.de(p)
    gb = christoffel_bar(p)
    # Gamma^k_ij - Gamma_bar^k_ij = g^{kl} (nabla_bar_i e_jl + nabla_bar_j e_il - nabla_bar_l e_ij) / 2
    nab = de - np.einsum("nlki,nlj->nkij", gb, e) - np.einsum("nlkj,nil->nkij", gb, e)
    first = 0.5 * (np.einsum("nijl->nlij", nab) + np.einsum("njil->nlij", nab) - nab)
    return gb + np.einsum("nkl,nlij->nkij", ginv, first)


def g_unit_normal(field: MetricField, face, p) -> np.ndarray:
    """``nu = g^{ij} a_j d_i / sqrt(g^{kl} a_k a_l)``, the outward ``g``-unit normal."""
    p = _pts(p)
    a = np.asarray(getattr(face, "normal", face), dtype=float)
    up = _inverse_g(field, p) @ a
    return up / np.sqrt(up @ a)[:, None]


def second_fundamental_form_g(field: MetricField, face, p, tangents=None) -> np.ndarray:
    """``A_ab = g(nabla_{t_a} nu, t_b)`` on the Euclidean tangent frame, shape ``(N, 2, 2)``."""
    p = _pts(p)
    t = face.tangents if tangents is None else np.asarray(tangents, dtype=float)
    _, dg = metric_g(field, p)
    nu = g_unit_normal(field, face, p)
    # Gamma_{k,ij} t_a^i t_b^j = (d_i g_jk + d_j g_ik - d_k g_ij) t_a^i t_b^j / 2
    d_t = np.einsum("nijk,ai->najk", dg, t)
    term1 = np.einsum("najk,bj->nabk", d_t, t)
    term2 = np.swapaxes(term1, 1, 2)
    term3 = np.einsum("nkij,ai,bj->nabk", dg, t, t)
    gam = 0.5 * (term1 + term2 - term3)
    return -np.einsum("nk,nabk->nab", nu, gam)


def mean_curvature_g(field: MetricField, face, p) -> np.ndarray:
    """Mean curvature ``H = h^{ab} A_ab`` of a planar face under ``g``."""
    p = _pts(p)
    t = face.tangents
    g, _ = metric_g(field, p)
    h = np.einsum("ai,nij,bj->nab", t, g, t)
    A = second_fundamental_form_g(field, face, p, t)
    return np.einsum("nab,nab->n", np.linalg.inv(h), A)


def dihedral_angle_g(field: MetricField, edge, p) -> np.ndarray:
    """Interior angle ``pi - arccos(g(nu_A, nu_B))`` along an edge."""
    p = _pts(p)
    g, _ = metric_g(field, p)
    na = g_unit_normal(field, edge.normals[0], p)
    nb = g_unit_normal(field, edge.normals[1], p)
    c = np.einsum("ni,nij,nj->n", na, g, nb)
    if np.any(np.abs(c) > 1.0 + ANGLE_CLAMP):
        raise ValueError("cos of dihedral angle outside [-1, 1] beyond clamp tolerance")
    return np.pi - np.arccos(np.clip(c, -1.0, 1.0))


def edge_conormal(face, start, end, p, field: MetricField | None = None) -> np.ndarray:
    """Unit conormal of the edge ``start -> end`` (oriented as in the face loop).

    Tangent to the face, orthogonal to the edge and pointing out of the face;
    unit for ``b`` when `field` is None, else for ``g = b + e``.
    """
    p = _pts(p)
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    w = face.outward_conormal(start, end)
    if field is None:
        return p[:, 2, None] * w
    g, _ = metric_g(field, p)
    T = (end - start) / np.linalg.norm(end - start)
    gwT = np.einsum("i,nij,j->n", w, g, T)
    gTT = np.einsum("i,nij,j->n", T, g, T)
    n = w[None, :] - (gwT / gTT)[:, None] * T[None, :]
    return n / np.sqrt(np.einsum("ni,nij,nj->n", n, g, n))[:, None]


def x_dual_field(field: MetricField, face, p) -> np.ndarray:
    """Face-tangent ``X`` with ``b(X, t) = e(nu_bar, t)`` for every tangent ``t``."""
    p = _pts(p)
    x3 = p[:, 2]
    t = face.tangents
    nu_bar = x3[:, None] * face.normal
    coeff = np.einsum("ni,nij,aj->na", nu_bar, field.e(p), t)
    return x3[:, None] ** 2 * (coeff @ t)


def umbilic_bracket(field: MetricField, face, p) -> np.ndarray:
    """``(tr_b e - e(nu_bar, nu_bar)) dV(nu_bar) - V <A_bar, e>_b`` on a face.

    For planar faces ``dV(nu_bar) = -a3 V`` and ``A_bar = -a3 b|_F``, so the
    two pieces cancel identically; the expression is assembled term by term
    so the cancellation can be checked rather than assumed.
    """
    p = _pts(p)
    x3 = p[:, 2]
    a = face.normal
    e = field.e(p)
    V = static_potential(p)
    nu_bar = x3[:, None] * a
    e_nn = np.einsum("ni,nij,nj->n", nu_bar, e, nu_bar)
    tr = x3 ** 2 * np.trace(e, axis1=1, axis2=2)
    dV_nu = -x3 ** -2 * nu_bar[:, 2]
    # b-orthonormal tangent frame E_a = x3 t_a; A_bar(E_a, E_b) = -a3 delta_ab
    E = x3[:, None, None] * face.tangents[None]
    e_tan = np.einsum("nai,nij,nbj->nab", E, e, E)
    A_dot_e = -a[2] * np.trace(e_tan, axis1=1, axis2=2)
    return (tr - e_nn) * dV_nu - V * A_dot_e
