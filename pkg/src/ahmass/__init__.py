"""Hyperbolic mass of asymptotically hyperbolic metrics over polyhedra.

Works in the upper half-space model ``b = x3^-2 (dx1^2 + dx2^2 + dx3^2)`` with
static potential ``V = 1/x3``.  The main entry points are

* :func:`polyhedral_mass` and :func:`sphere_mass` for the flux of the mass
  integrand through a polyhedron or a geodesic sphere,
* :func:`theorem_rhs` / :func:`evaluate_theorem` for the mean-curvature and
  dihedral-angle deficit integrals,
* :func:`builtin_family` for test perturbations ``e`` with ``g = b + e``.
"""

from .halfspace import (
    BASE_POINT,
    Point,
    background_dihedral_angle,
    background_mean_curvature,
    background_second_fundamental_form,
    cosh_distance,
    geodesic_sphere,
    normal_derivative_V,
    outward_normal_bar,
    static_potential,
)
from .mass import (
    MassBreakdown,
    error_integral_edge,
    error_integral_face,
    evaluate_theorem,
    face_flux,
    face_identity_residual,
    mass_integrand_U,
    polyhedral_mass,
    sphere_mass,
    theorem_rhs,
)
from .metric import (
    DecayReport,
    MetricField,
    builtin_family,
    christoffel_bar,
    decay_check,
    div_b_e,
    evaluate_de,
    evaluate_e,
    trace_b_e,
)
from .polyhedron import (
    Polyhedron,
    PolyhedronError,
    box_polyhedron,
    build_polyhedron,
    cone_polyhedron,
    cube_box,
    polyhedron_from_json,
    polyhedron_to_json,
)
from .quadrature import QuadratureSpec, integrate_edge, integrate_face, integrate_segment, triangulate
from .surface import (
    dihedral_angle_g,
    edge_conormal,
    g_unit_normal,
    mean_curvature_g,
    x_dual_field,
)

__all__ = [
    "background_dihedral_angle",
    "background_mean_curvature",
    "background_second_fundamental_form",
    "BASE_POINT",
    "box_polyhedron",
    "build_polyhedron",
    "builtin_family",
    "christoffel_bar",
    "cone_polyhedron",
    "cosh_distance",
    "cube_box",
    "decay_check",
    "DecayReport",
    "dihedral_angle_g",
    "div_b_e",
    "edge_conormal",
    "error_integral_edge",
    "error_integral_face",
    "evaluate_de",
    "evaluate_e",
    "evaluate_theorem",
    "face_flux",
    "face_identity_residual",
    "g_unit_normal",
    "geodesic_sphere",
    "integrate_edge",
    "integrate_face",
    "integrate_segment",
    "mass_integrand_U",
    "MassBreakdown",
    "mean_curvature_g",
    "MetricField",
    "normal_derivative_V",
    "outward_normal_bar",
    "Point",
    "polyhedral_mass",
    "Polyhedron",
    "polyhedron_from_json",
    "polyhedron_to_json",
    "PolyhedronError",
    "QuadratureSpec",
    "sphere_mass",
    "static_potential",
    "theorem_rhs",
    "trace_b_e",
    "triangulate",
    "x_dual_field",
]

__version__ = "0.1.0"
