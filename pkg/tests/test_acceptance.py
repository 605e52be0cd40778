"""Acceptance suite: one test and one PASS/FAIL summary line per criterion.

Each criterion is run at its stated tolerance and runtime budget.  The lines
are collected by the ``acceptance`` fixture and printed in the terminal
summary under "acceptance criteria".
"""

import time
from math import factorial

import numpy as np

from ahmass.experiments import load_config, run_cone_sweep, run_theorem_check
from ahmass.halfspace import (
    background_metric,
    normal_derivative_V,
    outward_normal_bar,
    static_potential,
)
from ahmass.mass import face_flux, face_identity_residual, mass_integrand_U, polyhedral_mass, sphere_mass
from ahmass.metric import builtin_family
from ahmass.polyhedron import box_polyhedron, cone_polyhedron, cube_box
from ahmass.quadrature import QuadratureSpec, line_rule, integrate_face, triangle_rule
from ahmass.surface import dihedral_angle_g, mean_curvature_g, second_fundamental_form_g

from conftest import random_face, random_points_on, random_tetrahedron
from test_halfspace import fd_christoffel
from test_quadrature import tilted_closed_form, tilted_rectangle

ZERO = builtin_family("zero")


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_c01_background_closed_forms(acceptance):
    rng = np.random.default_rng(101)
    with Timer() as t:
        err_fd_A = err_fd_H = err_an_A = err_an_H = 0.0
        for _ in range(200):
            face = random_face(rng)
            p = random_points_on(face, rng, 1)
            x3 = p[0, 2]
            a3 = face.normal[2]
            tang = face.tangents
            b = background_metric(p[0])
            # finite-difference path: Christoffels from differenced metric components
            G = fd_christoffel(p[0])
            nu = outward_normal_bar(face, p)[0]
            A_fd = -np.einsum("i,ij,jab->ab", nu, b, np.einsum("jkl,ak,bl->jab", G, tang, tang))
            H_fd = np.trace(np.linalg.inv(tang @ b @ tang.T) @ A_fd)
            # analytic path: the g-machinery with e = 0 and exact partials
            A_an = second_fundamental_form_g(ZERO, face, p)[0]
            H_an = mean_curvature_g(ZERO, face, p)[0]
            # compare in the b-orthonormal frame x3 * t_a, where A_bar = -a3 delta
            err_fd_A = max(err_fd_A, np.max(np.abs(x3 ** 2 * A_fd + a3 * np.eye(2))))
            err_fd_H = max(err_fd_H, abs(H_fd + 2 * a3))
            err_an_A = max(err_an_A, np.max(np.abs(x3 ** 2 * A_an + a3 * np.eye(2))))
            err_an_H = max(err_an_H, abs(H_an + 2 * a3))
    ok = max(err_fd_A, err_fd_H) <= 1e-8 and max(err_an_A, err_an_H) <= 1e-12 and t.elapsed < 5
    acceptance("C1 background closed forms", ok,
               f"FD max err {max(err_fd_A, err_fd_H):.2e} (tol 1e-8), analytic {max(err_an_A, err_an_H):.2e} "
               f"(tol 1e-12), {t.elapsed:.2f}s")
    assert ok


def test_c02_normal_derivative_of_V(acceptance):
    rng = np.random.default_rng(102)
    with Timer() as t:
        err = 0.0
        h = 1e-5
        for _ in range(100):
            face = random_face(rng)
            p = random_points_on(face, rng, 10)
            nu = outward_normal_bar(face, p)
            fd = (static_potential(p + h * nu) - static_potential(p - h * nu)) / (2 * h)
            exact = -face.normal[2] * static_potential(p)
            err = max(err, np.max(np.abs(fd - exact)), np.max(np.abs(normal_derivative_V(face, p) - exact)))
    ok = err <= 1e-8 and t.elapsed < 1
    acceptance("C2 dV(nu_bar) = -a3 V", ok, f"1000 points, max err {err:.2e} (tol 1e-8), {t.elapsed:.2f}s")
    assert ok


def test_c03_conformal_angle_invariance(acceptance):
    rng = np.random.default_rng(103)
    fields = [builtin_family("conformal", m=m, tau_prime=tp) for m, tp in ((0.8, 2.0), (-0.4, 3.0), (2.0, 5.0))]
    with Timer() as t:
        err_conf = err_zero = 0.0
        n = 0
        while n < 100:
            for e in random_tetrahedron(rng).edges:
                pts = e.endpoints[0] + rng.uniform(0, 1, (3, 1)) * (e.endpoints[1] - e.endpoints[0])
                for f in fields:
                    err_conf = max(err_conf, np.max(np.abs(dihedral_angle_g(f, e, pts) - e.background_angle)))
                err_zero = max(err_zero, np.max(np.abs(dihedral_angle_g(ZERO, e, pts) - e.background_angle)))
                n += 1
    ok = err_conf <= 1e-10 and err_zero <= 1e-12 and t.elapsed < 5
    acceptance("C3 conformal angle invariance", ok,
               f"{n} edges, conformal max err {err_conf:.2e} (tol 1e-10), e=0 {err_zero:.2e}, {t.elapsed:.2f}s")
    assert ok


def test_c04_zero_and_compact_support(acceptance):
    with Timer() as t:
        polys = [cube_box(4), cone_polyhedron(5, 0.3, 1.0), box_polyhedron((-1, -2, 0.5), (3, 1, 2))]
        zero_mass = max(abs(polyhedral_mass(ZERO, p).flux_total) for p in polys)
        bump = builtin_family("bump", amplitude=0.3, center=(0.5, -0.5, 1.2), radius=0.6)
        per_face = polyhedral_mass(bump, polys[2]).per_face_flux.values()
        bump_max = max(abs(v) for v in per_face)
    ok = zero_mass < 1e-10 and bump_max < 1e-13 and t.elapsed < 10
    acceptance("C4 zero and compact-support mass", ok,
               f"|mass(e=0)| {zero_mass:.1e} (tol 1e-10), bump per-face {bump_max:.1e} (tol 1e-13), "
               f"{t.elapsed:.2f}s")
    assert ok


def test_c05_oracle_equivalence(acceptance):
    field = builtin_family("conformal", m=1.0, tau_prime=3.0)
    with Timer() as t:
        sph = {r: sphere_mass(field, r) for r in (4.0, 5.0, 6.0)}
        box = polyhedral_mass(field, cube_box(16)).flux_total
    vals = list(sph.values())
    cauchy = max(abs(a - b) / max(abs(a), abs(b)) for i, a in enumerate(vals) for b in vals[i + 1:])
    gap = abs(box - sph[6.0]) / abs(sph[6.0])
    ok_cauchy = cauchy <= 1e-3
    ok_box = gap <= 0.02
    ok = ok_cauchy and ok_box and t.elapsed < 120
    acceptance("C5 sphere/box oracle equivalence", ok,
               f"sphere pairwise gap {cauchy:.3%} (tol 0.1%: {'ok' if ok_cauchy else 'FAIL'}), "
               f"box L=16 vs sphere(6) {gap:.2%} (tol 2%: {'ok' if ok_box else 'FAIL'}), {t.elapsed:.1f}s")
    assert ok


def test_c06_theorem_residual_decay(acceptance, tmp_path):
    cfg = load_config("theorem-check", overrides={"out_dir": str(tmp_path)})
    with Timer() as t:
        rep = run_theorem_check(cfg)
    res = np.abs(rep.column("residual"))
    K = rep.info["K"]
    ok = rep.passed and t.elapsed < 120
    acceptance("C6 residual decay over boxes", ok,
               f"|residual| {', '.join(f'{r:.4g}' for r in res)}; K {', '.join(f'{k:.3g}' for k in K)} "
               f"(spread {max(K) / min(K):.2f}x < 2x), {t.elapsed:.1f}s")
    assert ok


def test_c07_face_identity_quadratic(acceptance):
    cone = cone_polyhedron(4, 0.5, 1.0, 0.05)
    spec = QuadratureSpec(rtol=1e-11)
    ratios = []
    with Timer() as t:
        for name in ("anisotropic", "conformal"):
            base = builtin_family(name, m=1.0, tau_prime=2.0)
            for fid in (0, 1):
                res = [face_identity_residual(base.scaled(m), cone.faces[fid], cone, spec)
                       for m in (0.1, 0.05, 0.025)]
                ratios += [res[0] / res[1], res[1] / res[2]]
    ok = all(3 <= r <= 5 for r in ratios) and t.elapsed < 60
    acceptance("C7 face identity is O(m^2)", ok,
               f"ratios {', '.join(f'{r:.2f}' for r in ratios)} (band [3, 5]), {t.elapsed:.1f}s")
    assert ok


def test_c08_cone_sweep(acceptance, tmp_path):
    cfg = load_config("cone-sweep", overrides={"out_dir": str(tmp_path)})
    with Timer() as t:
        rep = run_cone_sweep(cfg)
    tau = rep.info["tau"]
    cols_ok = all(c["passed"] for c in rep.checks if c["gating"])
    p = rep.info["E2_exponent"]
    exp_ok = abs(p - (2 * tau - 2)) <= 0.5
    top, scale = rep.column("E1_top"), rep.column("E1_top_scale")
    C = top[0] / scale[0]
    top_ok = bool(np.all(top <= 10 * C * scale))
    ok = cols_ok and exp_ok and top_ok and t.elapsed < 180
    acceptance("C8 cone sweep", ok,
               f"columns decreasing: {'ok' if cols_ok else 'FAIL'}; E2 exponent {p:.3f} vs {2 * tau - 2:g} "
               f"+-0.5: {'ok' if exp_ok else 'FAIL'}; E1 top <= 10 C bound (C={C:.3g}): "
               f"{'ok' if top_ok else 'FAIL'}; {t.elapsed:.1f}s")
    assert ok


def test_c09_quadrature_exactness(acceptance):
    with Timer() as t:
        err_poly = 0.0
        for order in range(1, 9):
            bary, w = triangle_rule(order)
            x, y = bary[:, 1], bary[:, 2]
            for deg in range(2 * order):
                for a in range(deg + 1):
                    exact = factorial(a) * factorial(deg - a) / factorial(deg + 2)
                    err_poly = max(err_poly, abs(w @ (x ** a * y ** (deg - a)) - exact))
            s, v = line_rule(order)
            for deg in range(2 * order):
                err_poly = max(err_poly, abs(v @ s ** deg - 1 / (deg + 1)))
        err_tilt = 0.0
        for z0, beta in [(1.0, 0.0), (0.5, 0.3), (0.1, 1.2), (2.0, np.pi / 2), (0.01, 0.7), (0.05, 1.5)]:
            val = integrate_face(tilted_rectangle(z0, beta), lambda p: p[:, 2] ** -2.0,
                                 QuadratureSpec(rtol=1e-13, max_depth=30)).value
            err_tilt = max(err_tilt, abs(val / tilted_closed_form(z0, beta) - 1))
    ok = err_poly <= 1e-13 and err_tilt <= 1e-10 and t.elapsed < 5
    acceptance("C9 quadrature exactness", ok,
               f"polynomial max err {err_poly:.1e} (tol 1e-13), tilted rectangles rel err {err_tilt:.1e} "
               f"(tol 1e-10), {t.elapsed:.2f}s")
    assert ok


def _slope_at_zero(f, h=1e-4):
    """d/dm at m = 0 by Richardson-extrapolated central differences."""
    d1 = (f(h) - f(-h)) / (2 * h)
    d2 = (f(h / 2) - f(-h / 2)) / h
    return (4 * d2 - d1) / 3


def test_c10_linearity(acceptance):
    rng = np.random.default_rng(110)
    base = builtin_family("anisotropic", m=1.0, tau_prime=2.5, diag=(1.0, 2.0, -1.0))
    cone = cone_polyhedron(5, 0.3, 1.0, 0.05)
    with Timer() as t:
        pts = np.column_stack([rng.uniform(-3, 3, 100), rng.uniform(-3, 3, 100), np.exp(rng.uniform(-1, 1, 100))])
        U1 = mass_integrand_U(base, pts)
        flux1 = polyhedral_mass(base, cone).flux_total
        face1 = face_flux(base, cone.faces[1]).value
        lin_err = 0.0
        for m in (0.5, -0.3, 3.0):
            f = base.scaled(m)
            lin_err = max(lin_err,
                          np.max(np.abs(mass_integrand_U(f, pts) - m * U1)) / np.max(np.abs(m * U1)),
                          abs(polyhedral_mass(f, cone).flux_total / (m * flux1) - 1),
                          abs(face_flux(f, cone.faces[1]).value / (m * face1) - 1))
        # deficits: remainder after the first-order term shrinks 4x per halving of m
        face = cone.faces[2]
        edge = cone.edges[0]
        fp = random_points_on(face, rng, 5)
        ep = edge.endpoints[0] + rng.uniform(0.1, 0.9, (5, 1)) * (edge.endpoints[1] - edge.endpoints[0])
        ratios = []
        for fn, pts_, ref in ((lambda f, q: mean_curvature_g(f, face, q), fp, -2 * face.normal[2]),
                              (lambda f, q: dihedral_angle_g(f, edge, q), ep, edge.background_angle)):
            slope = _slope_at_zero(lambda m: fn(base.scaled(m), pts_))
            rem = [np.abs(fn(base.scaled(m), pts_) - ref - m * slope) for m in (0.04, 0.02, 0.01)]
            ratios += list(rem[0] / rem[1]) + list(rem[1] / rem[2])
    ok_lin = lin_err <= 1e-10
    ok_rich = all(3.5 <= r <= 4.5 for r in ratios)
    ok = ok_lin and ok_rich and t.elapsed < 30
    acceptance("C10 linearity", ok,
               f"U/flux max rel dev {lin_err:.1e} (tol 1e-10); deficit Richardson ratios in "
               f"[{min(ratios):.2f}, {max(ratios):.2f}] (expect 4); {t.elapsed:.1f}s")
    assert ok
