"""Mass flux of ``e`` through polyhedra and spheres, and the curvature/angle side.

The mass integrand is the 1-form

    U = V div_b e - V d(tr_b e) + (tr_b e) dV - e(grad_b V, .)

with ``V = 1/x3``.  Fluxes are reported raw, with no ``1/(16 pi)``-type
normalization.  Area and length elements of ``b`` are ``x3^-2 dA`` and
``x3^-1 dl``.
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .halfspace import as_points, cosh_distance, geodesic_sphere
from .metric import MetricField, div_b_e
from .polyhedron import Edge, Face, Polyhedron, segment_min_cosh
from .quadrature import QuadResult, QuadratureError, QuadratureSpec, integrate_edge, \
    integrate_face, integrate_segment
from .surface import dihedral_angle_g, edge_conormal, mean_curvature_g

__all__ = [
    "MassBreakdown",
    "error_integral_edge",
    "error_integral_face",
    "evaluate_theorem",
    "face_flux",
    "face_identity_residual",
    "mass_integrand_U",
    "polyhedral_mass",
    "sphere_mass",
    "theorem_rhs",
]

DEFAULT_QUAD = QuadratureSpec()


@dataclass
class MassBreakdown:
    """Both sides of the polyhedral mass identity for one (field, polyhedron) pair.

    ``residual = flux_total - mean_curv_term - angle_term``.  Fields that a
    given routine does not compute are left as NaN.
    """

    flux_total: float = float("nan")
    per_face_flux: dict = field(default_factory=dict)
    mean_curv_term: float = float("nan")
    angle_term: float = float("nan")
    face_error_bound: float = float("nan")
    edge_error_bound: float = float("nan")
    residual: float = float("nan")
    quad_error: float = 0.0
    refinement_depth: int = 0
    converged: bool = True

    def update_residual(self) -> None:
        self.residual = self.flux_total - self.mean_curv_term - self.angle_term

    def merge(self, other: "MassBreakdown") -> "MassBreakdown":
        out = MassBreakdown(**asdict(self))
        for k in ("flux_total", "mean_curv_term", "angle_term", "face_error_bound", "edge_error_bound"):
            v = getattr(other, k)
            if not np.isnan(v):
                setattr(out, k, v)
        if other.per_face_flux:
            out.per_face_flux = dict(other.per_face_flux)
        out.quad_error = self.quad_error + other.quad_error
        out.refinement_depth = max(self.refinement_depth, other.refinement_depth)
        out.converged = self.converged and other.converged
        out.update_residual()
        return out

    def to_json(self, path=None) -> str:
        doc = asdict(self)
        doc["per_face_flux"] = {str(k): v for k, v in self.per_face_flux.items()}
        text = json.dumps(doc, indent=2, allow_nan=True)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, text) -> "MassBreakdown":
        if not str(text).lstrip().startswith("{"):
            text = Path(text).read_text()
        doc = json.loads(text)
        doc["per_face_flux"] = {int(k): v for k, v in doc["per_face_flux"].items()}
        return cls(**doc)


def mass_integrand_U(field: MetricField, p) -> np.ndarray:
    """Coordinate components of the 1-form ``U`` at the points, shape ``(..., 3)``."""
    pts = as_points(p)
    shape = pts.shape[:-1]
    flat = pts.reshape(-1, 3)
    x3 = flat[:, 2]
    e = field.e(flat)
    de = field.de(flat)
    V = 1.0 / x3
    tr_e = np.trace(e, axis1=1, axis2=2)
    tr_b = x3 ** 2 * tr_e
    d_tr = x3[:, None] ** 2 * np.trace(de, axis1=2, axis2=3)
    d_tr[:, 2] += 2.0 * x3 * tr_e
    dV = np.zeros_like(flat)
    dV[:, 2] = -V / x3
    # grad_b V = -d_3, so e(grad_b V, .) = -e_3j
    U = V[:, None] * (div_b_e(field, flat) - d_tr) + tr_b[:, None] * dV + e[:, 2, :]
    return U.reshape(shape + (3,))


def _check(res: QuadResult, what: str, strict: bool) -> QuadResult:
    if not res.converged:
        msg = f"{what}: quadrature did not converge (error estimate {res.error:.3g})"
        if strict:
            raise QuadratureError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
    return res


def _flux_density(field, face):
    a = face.normal

    def fn(p):
        # U(nu_bar) dsigma_bar = U . (x3 a) x3^-2 dA
        return mass_integrand_U(field, p) @ a / p[:, 2]
    return fn


def face_flux(field: MetricField, face: Face, quad: QuadratureSpec = DEFAULT_QUAD,
              strict=False) -> QuadResult:
    """``int_F U(nu_bar) dsigma_bar`` over one face."""
    return _check(integrate_face(face, _flux_density(field, face), quad), f"flux face {face.face_id}", strict)


def _map(fn, items, threads):
    items = list(items)
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def _sum_results(results):
    # fixed left-to-right reduction order for reproducibility
    total = QuadResult(0.0, 0.0)
    for r in results:
        total = total + r
    return total


def polyhedral_mass(field: MetricField, poly: Polyhedron, quad: QuadratureSpec = DEFAULT_QUAD,
                    threads=1, strict=False) -> MassBreakdown:
    """Total flux of ``U`` through the boundary of `poly`, face by face."""
    res = _map(lambda f: face_flux(field, f, quad, strict), poly.faces, threads)
    tot = _sum_results(res)
    return MassBreakdown(
        flux_total=tot.value,
        per_face_flux={f.face_id: r.value for f, r in zip(poly.faces, res)},
        quad_error=tot.error, refinement_depth=tot.depth, converged=tot.converged)


def sphere_mass(field: MetricField, r: float, resolution=(128, 256)) -> float:
    """Flux of ``U`` through the geodesic sphere of radius `r` about ``(0,0,1)``."""
    pts, normals, weights = geodesic_sphere(r, *resolution)
    vals = np.einsum("ni,ni->n", mass_integrand_U(field, pts), normals)
    return float(vals @ weights)


def _mean_curv_density(field, face):
    hbar = -2.0 * face.normal[2]

    def fn(p):
        V = 1.0 / p[:, 2]
        return -2.0 * V * (mean_curvature_g(field, face, p) - hbar) / p[:, 2] ** 2
    return fn


def _angle_density(field, edge):
    abar = edge.background_angle

    def fn(p):
        return 2.0 * (dihedral_angle_g(field, edge, p) - abar) / p[:, 2] ** 2
    return fn


def _angle_quad(edge, quad):
    """Floor the absolute tolerance at roundoff of the full angle integral.

    ``alpha - alpha_bar`` cannot be resolved below a few ulps of ``alpha``;
    for conformal fields it is pure noise and would never meet ``atol``.
    With ``x3`` linear along the edge, ``int dl / x3^2 = L / (z0 z1)``.
    """
    (z0, z1), length = edge.endpoints[:, 2], edge.length
    scale = 2.0 * edge.background_angle * length / (z0 * z1)
    return quad.replace(atol=max(quad.atol, 64 * np.finfo(float).eps * scale))


def _cosh_density(tau, power):
    expo = -2.0 * tau + 1.0

    def fn(p):
        return cosh_distance(p) ** expo / p[:, 2] ** power
    return fn


def _faces_of(obj):
    if isinstance(obj, Polyhedron):
        return obj.faces
    if isinstance(obj, Face):
        return [obj]
    return list(obj)


def error_integral_face(faces, tau: float, quad: QuadratureSpec = DEFAULT_QUAD, threads=1) -> QuadResult:
    """``int cosh(r)^(-2 tau + 1) dsigma_bar`` over a face, a list of faces or a polyhedron."""
    if not tau > 1.5:
        raise ValueError("tau must exceed 3/2")
    fn = _cosh_density(tau, 2)
    return _sum_results(_map(lambda f: integrate_face(f, fn, quad), _faces_of(faces), threads))


def error_integral_edge(edges, tau: float, quad: QuadratureSpec = DEFAULT_QUAD, threads=1) -> QuadResult:
    """``int cosh(r)^(-2 tau + 1) dlambda_bar`` over edges.

    `edges` may hold :class:`Edge` objects or ``(start, end)`` point pairs.
    """
    if not tau > 1.5:
        raise ValueError("tau must exceed 3/2")
    if isinstance(edges, (Edge, tuple)) and not isinstance(edges, list):
        edges = [edges]
    fn = _cosh_density(tau, 1)

    def one(edge):
        if isinstance(edge, Edge):
            return integrate_edge(edge, fn, quad)
        s, e = np.asarray(edge[0], float), np.asarray(edge[1], float)
        return integrate_segment(s, e, fn, quad, segment_min_cosh(s, e)[0])

    return _sum_results(_map(one, edges, threads))


def theorem_rhs(field: MetricField, poly: Polyhedron, quad: QuadratureSpec = DEFAULT_QUAD,
                threads=1, strict=False, tau=None) -> MassBreakdown:
    """Curvature side of the identity plus the error-bound integrals.

    ``mean_curv_term = -int 2V(H - H_bar) dsigma_bar`` over all faces,
    ``angle_term = 2 int V(alpha - alpha_bar) dlambda_bar`` over all edges, and
    the bounds integrate ``cosh(r)^(-2 tau + 1)`` with `tau` taken from the field.
    """
    tau = field.tau if tau is None else tau
    for edge in poly.edges:
        if np.sin(edge.background_angle) < poly.min_sin_angle:
            raise ValueError(f"edge {edge.edge_id}: dihedral angle violates sin bound")
    mc = _sum_results(_map(
        lambda f: _check(integrate_face(f, _mean_curv_density(field, f), quad),
                         f"mean curvature face {f.face_id}", strict), poly.faces, threads))
    ang = _sum_results(_map(
        lambda e: _check(integrate_edge(e, _angle_density(field, e), _angle_quad(e, quad)),
                         f"angle edge {e.edge_id}", strict), poly.edges, threads))
    fb = error_integral_face(poly, tau, quad, threads)
    eb = error_integral_edge(poly.edges, tau, quad, threads)
    tot = mc + ang
    return MassBreakdown(
        mean_curv_term=mc.value, angle_term=ang.value,
        face_error_bound=fb.value, edge_error_bound=eb.value,
        quad_error=tot.error, refinement_depth=tot.depth, converged=tot.converged)


def evaluate_theorem(field: MetricField, poly: Polyhedron, quad: QuadratureSpec = DEFAULT_QUAD,
                     threads=1, strict=False) -> MassBreakdown:
    """Flux side and curvature side together, with the residual filled in."""
    return polyhedral_mass(field, poly, quad, threads, strict).merge(
        theorem_rhs(field, poly, quad, threads, strict))


def face_identity_residual(field: MetricField, face: Face, poly: Polyhedron,
                           quad: QuadratureSpec = DEFAULT_QUAD, signed=False) -> float:
    """Integrated defect of ``2V(H - H_bar) = -U(nu_bar) - div_F(V X)`` on one face.

    The divergence is integrated to ``int_{dF} V e(nu_bar, n_bar) dlambda_bar``
    with ``n_bar`` the outward ``b``-unit conormal.  Returns the absolute value
    of ``int 2V(H - H_bar) + int U(nu_bar) + int_{dF} V e(nu_bar, n_bar)``.
    """
    mc = integrate_face(face, _mean_curv_density(field, face), quad).value
    flux = integrate_face(face, _flux_density(field, face), quad).value
    bnd = 0.0
    for edge, start, end in poly.edges_of(face.face_id):
        def fn(p, start=start, end=end):
            nu_bar = p[:, 2, None] * face.normal
            nb = edge_conormal(face, start, end, p)
            return np.einsum("ni,nij,nj->n", nu_bar, field.e(p), nb) / p[:, 2] ** 2
        bnd += integrate_segment(start, end, fn, quad, edge.focus_point).value
    # mean-curvature density is -2V(H - H_bar); flip it back
    val = -mc + flux + bnd
    return val if signed else abs(val)
