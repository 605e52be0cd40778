"""Perturbation tensors ``e`` with ``g = b + e`` and their background calculus.

Tensors are stored with lowered indices in the Euclidean coordinate basis.
Evaluators are vectorized: ``field.e(points)`` returns shape ``(N, 3, 3)`` and
``field.de(points)`` returns ``(N, 3, 3, 3)`` indexed ``[n, k, i, j]`` for
``d_k e_ij``.  Index raising always goes through ``b^{ij} = x3^2 delta^{ij}``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .halfspace import as_points, background_christoffel, cosh_distance, geodesic_sphere

__all__ = [
    "DecayReport",
    "MetricError",
    "MetricField",
    "builtin_family",
    "christoffel_bar",
    "covariant_derivative_bar",
    "decay_check",
    "div_b_e",
    "evaluate_de",
    "evaluate_e",
    "norm_b",
    "trace_b_e",
]

FD_REL_STEP = 1e-5
PD_THRESHOLD = 1e-10


class MetricError(ValueError):
    """The perturbed metric ``b + e`` is not positive definite."""


christoffel_bar = background_christoffel


@dataclass(frozen=True)
class MetricField:
    """A symmetric perturbation ``e`` of the half-space metric.

    `evaluator` maps an ``(N, 3)`` array of points to ``(N, 3, 3)``.
    `partials` (optional) returns ``(N, 3, 3, 3)`` coordinate derivatives;
    without it, central differences with step ``1e-5 * x3`` are used.
    `tau` is the declared decay rate and must exceed 3/2.
    """

    evaluator: Callable
    partials: Optional[Callable] = None
    tau: float = 3.0
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.tau > 1.5:
            raise ValueError(f"decay rate tau must exceed 3/2, got {self.tau}")

    def e(self, points) -> np.ndarray:
        pts = as_points(points).reshape(-1, 3)
        val = np.asarray(self.evaluator(pts), dtype=float)
        return 0.5 * (val + np.swapaxes(val, -1, -2))

    def de(self, points) -> np.ndarray:
        pts = as_points(points).reshape(-1, 3)
        if self.partials is not None:
            d = np.asarray(self.partials(pts), dtype=float)
        else:
            d = _central_difference(self.e, pts)
        return 0.5 * (d + np.swapaxes(d, -1, -2))

    @property
    def has_analytic_partials(self) -> bool:
        return self.partials is not None

    def check_positive(self, points) -> None:
        pts = as_points(points).reshape(-1, 3)
        scaled = np.eye(3) + pts[:, 2, None, None] ** 2 * self.e(pts)
        lam = np.linalg.eigvalsh(scaled)[:, 0]
        if np.any(lam <= PD_THRESHOLD):
            k = int(np.argmin(lam))
            raise MetricError(f"g = b + e is not positive definite at {pts[k].tolist()}")

    def scaled(self, c: float) -> "MetricField":
        """The field ``c * e`` with the same declared decay."""
        c = float(c)
        part = None if self.partials is None else (lambda p: c * self.partials(p))
        return MetricField(lambda p: c * self.evaluator(p), part, self.tau,
                           f"{c:g}*{self.name}", dict(self.params))

    def __add__(self, other: "MetricField") -> "MetricField":
        part = None
        if self.partials is not None and other.partials is not None:
            part = lambda p: self.partials(p) + other.partials(p)
        return MetricField(lambda p: self.evaluator(p) + other.evaluator(p), part,
                           min(self.tau, other.tau), f"{self.name}+{other.name}")

    def rotated(self, R) -> "MetricField":
        """Push-forward under a rotation `R` that fixes the ``x3`` axis.

        Such rotations are isometries of ``b``; the new field satisfies
        ``e'(R p) = R e(p) R^T``.
        """
        R = np.asarray(R, dtype=float)
        if not (np.allclose(R @ R.T, np.eye(3), atol=1e-14) and np.allclose(R[2], [0, 0, 1])):
            raise ValueError("rotation must be orthogonal and fix the x3 axis")

        def ev(p):
            return np.einsum("ia,nab,jb->nij", R, self.evaluator(p @ R), R)

        def part(p):
            return np.einsum("kc,ia,ncab,jb->nkij", R, R, self.partials(p @ R), R)

        return MetricField(ev, part if self.partials is not None else None, self.tau,
                           f"rot({self.name})", dict(self.params))


def _central_difference(fn, pts):
    h = FD_REL_STEP * pts[:, 2]
    out = np.empty((len(pts), 3, 3, 3))
    for k in range(3):
        step = np.zeros_like(pts)
        step[:, k] = h
        out[:, k] = (fn(pts + step) - fn(pts - step)) / (2.0 * h)[:, None, None]
    return out


def evaluate_e(field: MetricField, p) -> np.ndarray:
    """``e_ij`` at `p`; raises :class:`MetricError` if ``b + e`` is not positive definite."""
    pts = as_points(p)
    field.check_positive(pts)
    return field.e(pts).reshape(pts.shape[:-1] + (3, 3))


def evaluate_de(field: MetricField, p) -> np.ndarray:
    """``d_k e_ij`` at `p` indexed ``[..., k, i, j]``."""
    pts = as_points(p)
    field.check_positive(pts)
    return field.de(pts).reshape(pts.shape[:-1] + (3, 3, 3))


def trace_b_e(field: MetricField, p):
    """``tr_b e = x3^2 delta^{ij} e_ij``."""
    pts = as_points(p)
    e = field.e(pts).reshape(pts.shape[:-1] + (3, 3))
    return pts[..., 2] ** 2 * np.trace(e, axis1=-2, axis2=-1)


def div_b_e(field: MetricField, p) -> np.ndarray:
    r"""Covector ``(div_b e)_j = b^{ik} (nabla_bar_i e)_{kj}``."""
    pts = as_points(p)
    nab = covariant_derivative_bar(field, pts)
    return pts[..., 2, None] ** 2 * np.einsum("...iij->...j", nab)


def covariant_derivative_bar(field: MetricField, p) -> np.ndarray:
    r"""``(nabla_bar_k e)_ij = d_k e_ij - Gamma^l_ki e_lj - Gamma^l_kj e_il``."""
    pts = as_points(p)
    shape = pts.shape[:-1]
    flat = pts.reshape(-1, 3)
    e = field.e(flat)
    de = field.de(flat)
    gam = christoffel_bar(flat)
    out = de - np.einsum("nlki,nlj->nkij", gam, e) - np.einsum("nlkj,nil->nkij", gam, e)
    return out.reshape(shape + (3, 3, 3))


def norm_b(tensor, p):
    """``b``-norm of a covariant tensor of rank 1, 2 or 3 given in coordinates.

    Since ``b^{ij} = x3^2 delta^{ij}``, this is ``x3^rank`` times the Frobenius
    norm of the components.
    """
    t = np.asarray(tensor, dtype=float)
    x3 = as_points(p)[..., 2]
    rank = t.ndim - x3.ndim
    flat = t.reshape(x3.shape + (-1,))
    return x3 ** rank * np.linalg.norm(flat, axis=-1)


# -- built-in families --------------------------------------------------------

def _cosh_and_grad(p):
    x1, x2, x3 = p[:, 0], p[:, 1], p[:, 2]
    c = cosh_distance(p)
    dc = np.column_stack([x1 / x3, x2 / x3, (x3 * x3 - x1 * x1 - x2 * x2 - 1.0) / (2.0 * x3 * x3)])
    return c, dc


def _scalar_times_b(psi, dpsi, p):
    """``e = psi b`` and its partials from a scalar and its gradient."""
    x3 = p[:, 2]
    e = psi[:, None, None] / x3[:, None, None] ** 2 * np.eye(3)
    d = dpsi / x3[:, None] ** 2
    d[:, 2] -= 2.0 * psi / x3 ** 3
    de = d[:, :, None, None] * np.eye(3)
    return e, de


def _check_tau_prime(tau_prime):
    tau_prime = float(tau_prime)
    if not 1.5 < tau_prime <= 6.0:
        raise ValueError(f"tau' must lie in (3/2, 6], got {tau_prime}")
    return tau_prime


def _zero(tau=6.0):
    return MetricField(lambda p: np.zeros((len(p), 3, 3)),
                       lambda p: np.zeros((len(p), 3, 3, 3)), tau, "zero", {})


def _conformal(m=1.0, tau_prime=3.0, tau=None):
    m = float(m)
    tp = _check_tau_prime(tau_prime)

    def phi(p):
        c, dc = _cosh_and_grad(p)
        val = m * c ** (-tp)
        return val, (-tp * m * c ** (-tp - 1.0))[:, None] * dc

    def ev(p):
        return _scalar_times_b(*phi(p), p)[0]

    def part(p):
        return _scalar_times_b(*phi(p), p)[1]

    return MetricField(ev, part, tp if tau is None else float(tau), "conformal",
                       {"m": m, "tau_prime": tp})


def _anisotropic(m=1.0, tau_prime=3.0, diag=(1.0, 2.0, -1.0), tau=None):
    m = float(m)
    tp = _check_tau_prime(tau_prime)
    D = np.diag(np.asarray(diag, dtype=float))

    def psi(p):
        c, dc = _cosh_and_grad(p)
        x3 = p[:, 2]
        val = m * c ** (-tp) / x3 ** 2
        grad = (-tp * m * c ** (-tp - 1.0) / x3 ** 2)[:, None] * dc
        grad[:, 2] -= 2.0 * val / x3
        return val, grad

    def ev(p):
        return psi(p)[0][:, None, None] * D

    def part(p):
        return psi(p)[1][:, :, None, None] * D

    return MetricField(ev, part, tp if tau is None else float(tau), "anisotropic",
                       {"m": m, "tau_prime": tp, "diag": list(np.diag(D))})


def _bump(amplitude=0.1, center=(0.0, 0.0, 1.0), radius=0.5, tau=6.0):
    amp = float(amplitude)
    c0 = np.asarray(center, dtype=float)
    R = float(radius)
    if not (R > 0 and c0[2] - R > 0):
        raise ValueError("bump support ball must lie inside x3 > 0")

    def psi(p):
        d = p - c0
        q = np.sum(d * d, axis=1) / R ** 2
        inside = q < 1.0
        w = np.where(inside, 1.0 - q, 0.0)
        return amp * w ** 3, (-6.0 * amp * w ** 2 / R ** 2)[:, None] * d

    def ev(p):
        return _scalar_times_b(*psi(p), p)[0]

    def part(p):
        return _scalar_times_b(*psi(p), p)[1]

    return MetricField(ev, part, float(tau), "bump",
                       {"amplitude": amp, "center": c0.tolist(), "radius": R})


_FAMILIES = {
    "zero": _zero,
    "conformal": _conformal,
    "anisotropic": _anisotropic,
    "bump": _bump,
}


def builtin_family(name: str, **params) -> MetricField:
    """Construct a named test field.

    ``zero``
        ``e = 0``.
    ``conformal`` (``m``, ``tau_prime``)
        ``e = m cosh(r)^(-tau') b``.
    ``anisotropic`` (``m``, ``tau_prime``, ``diag``)
        ``e_ij = m cosh(r)^(-tau') x3^-2 D_ij`` with constant diagonal ``D``.
    ``bump`` (``amplitude``, ``center``, ``radius``)
        ``e = A (1 - |p - c|^2/R^2)^3 b`` inside the Euclidean ball, zero outside.

    Each family declares its decay rate ``tau`` (``tau'`` for the power-law
    families); passing ``tau`` explicitly overrides the declaration.
    """
    try:
        factory = _FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown field family {name!r}; choose from {sorted(_FAMILIES)}") from None
    return factory(**params)


# -- decay verification ----------------------------------------------------------

@dataclass
class DecayReport:
    radii: np.ndarray
    sup_norm: np.ndarray
    ratio: np.ndarray
    sup_dnorm: np.ndarray
    dratio: np.ndarray
    tau: float
    passed: bool

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["radius", "sup_norm", "ratio", "sup_dnorm", "dratio"])
        for row in zip(self.radii, self.sup_norm, self.ratio, self.sup_dnorm, self.dratio):
            w.writerow([repr(float(x)) for x in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _trend_ok(values, factor=2.0):
    # each later value stays within `factor` of every earlier one
    running_min = np.minimum.accumulate(values)
    return bool(np.all(values <= factor * running_min + 1e-300))


def decay_check(field: MetricField, radii, tau=None, resolution=(16, 32)) -> DecayReport:
    """Sample geodesic spheres and check ``|e|_b e^(tau r)`` and ``|nabla_bar e|_b e^(tau r)``.

    Passes when neither weighted sup increases by more than a factor 2 along
    the radii.  `tau` defaults to the field's declared rate.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) == 0 or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be a non-empty strictly increasing sequence")
    tau = field.tau if tau is None else float(tau)
    sup, dsup = [], []
    for r in radii:
        pts, _, _ = geodesic_sphere(r, *resolution)
        sup.append(float(np.max(norm_b(field.e(pts), pts))))
        dsup.append(float(np.max(norm_b(covariant_derivative_bar(field, pts), pts))))
    sup, dsup = np.array(sup), np.array(dsup)
    w = np.exp(tau * radii)
    ratio, dratio = sup * w, dsup * w
    return DecayReport(radii, sup, ratio, dsup, dratio, tau,
                       _trend_ok(ratio) and _trend_ok(dratio))
