import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ahmass.halfspace import background_metric, cosh_distance, static_potential_gradient
from ahmass.metric import (
    MetricError,
    MetricField,
    builtin_family,
    christoffel_bar,
    covariant_derivative_bar,
    decay_check,
    div_b_e,
    evaluate_de,
    evaluate_e,
    norm_b,
    trace_b_e,
)

from oracles import conformal_dphi, conformal_phi


def random_points(rng, n, spread=3.0):
    return np.column_stack([rng.uniform(-spread, spread, n), rng.uniform(-spread, spread, n),
                            np.exp(rng.uniform(-1.5, 1.5, n))])


def b_field():
    """``e = b`` itself, with exact partials."""
    def ev(p):
        return background_metric(p)

    def part(p):
        x3 = p[:, 2]
        d = np.zeros((len(p), 3, 3, 3))
        d[:, 2] = (-2.0 / x3 ** 3)[:, None, None] * np.eye(3)
        return d
    return MetricField(ev, part, name="b")


class TestChristoffel:
    def test_values(self):
        G = christoffel_bar([0, 0, 1])
        assert G[2, 0, 0] == 1.0 and G[0, 0, 2] == -1.0 and G[2, 2, 2] == -1.0
        assert christoffel_bar([7, -3, 2])[2, 1, 1] == 0.5

    def test_metric_compatibility(self, rng):
        p = random_points(rng, 20)
        nabla_b = covariant_derivative_bar(b_field(), p)
        assert np.max(np.abs(nabla_b) * p[:, 2, None, None, None] ** 3) < 1e-12


class TestEvaluate:
    def test_zero_family(self, rng):
        p = random_points(rng, 5)
        z = builtin_family("zero")
        assert not np.any(evaluate_e(z, p)) and not np.any(evaluate_de(z, p))
        assert not np.any(trace_b_e(z, p)) and not np.any(div_b_e(z, p))

    def test_conformal_definition(self, rng):
        p = random_points(rng, 30)
        f = builtin_family("conformal", m=0.7, tau_prime=2.5)
        expect = (0.7 * cosh_distance(p) ** -2.5 / p[:, 2] ** 2)[:, None, None] * np.eye(3)
        np.testing.assert_allclose(evaluate_e(f, p), expect, rtol=1e-14)

    def test_conformal_tau3_closed_form(self, rng):
        p = random_points(rng, 30)
        x1, x2, x3 = p.T
        phi = 8 * x3 ** 3 / (x1 ** 2 + x2 ** 2 + x3 ** 2 + 1) ** 3
        f = builtin_family("conformal", m=1.0, tau_prime=3.0)
        np.testing.assert_allclose(evaluate_e(f, p)[:, 0, 0] * x3 ** 2, phi, rtol=1e-13)

    def test_conformal_m0_is_zero(self, rng):
        p = random_points(rng, 10)
        f = builtin_family("conformal", m=0.0)
        assert not np.any(evaluate_e(f, p)) and not np.any(evaluate_de(f, p))

    @pytest.mark.parametrize("name, params", [
        ("conformal", {"m": 1.0, "tau_prime": 3.0}),
        ("conformal", {"m": -0.4, "tau_prime": 1.7}),
        ("anisotropic", {"m": 0.5, "tau_prime": 2.0}),
        ("bump", {"amplitude": 0.2, "center": (0.3, -0.2, 1.5), "radius": 0.8}),
    ])
    def test_fd_matches_analytic_partials(self, rng, name, params):
        f = builtin_family(name, **params)
        fd = MetricField(f.evaluator, None, f.tau)
        p = random_points(rng, 100, spread=1.5)
        scale = p[:, 2, None, None, None] ** 3  # b-norm weight of a rank-3 tensor
        err = np.abs(evaluate_de(fd, p) - evaluate_de(f, p)) * scale
        assert np.max(err) < 1e-6

    def test_derivative_symmetric(self, rng):
        f = builtin_family("anisotropic", m=0.3)
        d = evaluate_de(MetricField(f.evaluator), random_points(rng, 10))
        np.testing.assert_array_equal(d, np.swapaxes(d, -1, -2))

    def test_bump_outside_support_exactly_zero(self):
        f = builtin_family("bump", amplitude=0.3, center=(0, 0, 2), radius=0.5)
        p = np.array([[0, 0, 2.5], [1, 1, 1], [0, 0.6, 2.0], [5, 5, 0.1]])
        assert not np.any(f.e(p)) and not np.any(f.de(p))
        assert np.all(f.e([[0, 0, 2.0]])[0].diagonal() > 0)

    def test_positive_definiteness(self):
        f = builtin_family("conformal", m=-2.0, tau_prime=3.0)
        with pytest.raises(MetricError):
            f.check_positive([[0, 0, 1]])
        builtin_family("conformal", m=-0.5).check_positive([[0, 0, 1]])

    @pytest.mark.parametrize("tp", [1.5, 1.0, 0.0, 7.0])
    def test_tau_prime_range(self, tp):
        with pytest.raises(ValueError):
            builtin_family("conformal", tau_prime=tp)

    def test_declared_tau(self):
        assert builtin_family("conformal", tau_prime=2.5).tau == 2.5
        with pytest.raises(ValueError):
            MetricField(lambda p: 0 * p, tau=1.5)

    def test_unknown_family(self):
        with pytest.raises(ValueError, match="unknown field family"):
            builtin_family("schwarzschild")


class TestTraceDivergence:
    def test_trace_and_divergence_of_conformal(self, rng):
        p = random_points(rng, 50)
        m, t = 0.8, 2.5
        f = builtin_family("conformal", m=m, tau_prime=t)
        phi = conformal_phi(p, m, t)
        np.testing.assert_allclose(trace_b_e(f, p), 3 * phi, rtol=1e-13)
        np.testing.assert_allclose(div_b_e(f, p), conformal_dphi(p, m, t),
                                   rtol=1e-10, atol=1e-13 * np.max(np.abs(phi)))

    def test_conformal_identity(self, rng):
        p = random_points(rng, 100)
        m, t = 1.3, 3.0
        f = builtin_family("conformal", m=m, tau_prime=t)
        dtr = 3 * conformal_dphi(p, m, t)  # d(tr_b e) = 3 dphi
        lhs = div_b_e(f, p) - dtr
        np.testing.assert_allclose(lhs, -2 * conformal_dphi(p, m, t), atol=1e-8)

    def test_linearity(self, rng):
        p = random_points(rng, 30)
        e1 = builtin_family("conformal", m=1.0, tau_prime=2.0)
        e2 = builtin_family("anisotropic", m=1.0, tau_prime=3.0, diag=(0.5, -1, 2))
        combo = e1.scaled(0.3) + e2.scaled(-1.7)
        for op in (trace_b_e, div_b_e):
            np.testing.assert_allclose(op(combo, p), 0.3 * op(e1, p) - 1.7 * op(e2, p),
                                       rtol=1e-13, atol=1e-15)


class TestNorm:
    @settings(max_examples=50)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_scaled_components_equal_contraction(self, seed):
        rng = np.random.default_rng(seed)
        p = random_points(rng, 1)
        e = rng.normal(size=(3, 3))
        e = e + e.T
        binv = np.linalg.inv(background_metric(p[0]))
        contraction = np.einsum("ik,jl,ij,kl->", binv, binv, e, e)
        assert norm_b(e, p[0]) ** 2 == pytest.approx(contraction, rel=1e-12)

    def test_conformal_norm(self, rng):
        p = random_points(rng, 10)
        f = builtin_family("conformal", m=0.5, tau_prime=3.0)
        np.testing.assert_allclose(norm_b(f.e(p), p), np.sqrt(3) * 0.5 * cosh_distance(p) ** -3.0,
                                   rtol=1e-13)

    def test_covector_norm_of_dV(self, rng):
        p = random_points(rng, 10)
        np.testing.assert_allclose(norm_b(static_potential_gradient(p), p), 1 / p[:, 2], rtol=1e-14)


class TestRotation:
    def test_rotated_field_is_pushforward(self, rng):
        th = 0.7
        R = np.array([[np.cos(th), -np.sin(th), 0], [np.sin(th), np.cos(th), 0], [0, 0, 1]])
        f = builtin_family("anisotropic", m=0.4)
        fr = f.rotated(R)
        p = random_points(rng, 10)
        np.testing.assert_allclose(fr.e(p @ R.T), np.einsum("ia,nab,jb->nij", R, f.e(p), R), atol=1e-15)
        fd = MetricField(fr.evaluator)
        np.testing.assert_allclose(fr.de(p) * p[:, 2, None, None, None] ** 3,
                                   fd.de(p) * p[:, 2, None, None, None] ** 3, atol=1e-7)

    def test_rejects_non_axial_rotation(self):
        with pytest.raises(ValueError):
            builtin_family("zero").rotated(np.eye(3)[[2, 1, 0]])


class TestDecayCheck:
    radii = [2.0, 3.0, 4.0, 5.0, 6.0]

    def test_zero_passes(self):
        rep = decay_check(builtin_family("zero"), self.radii)
        assert rep.passed and not np.any(rep.sup_norm)

    def test_conformal_declared_rate_passes(self):
        rep = decay_check(builtin_family("conformal", m=1.0, tau_prime=3.0), self.radii)
        assert rep.passed
        # |phi b|_b = sqrt(3) |phi| and phi = cosh^-3 r on the sphere
        np.testing.assert_allclose(rep.sup_norm, np.sqrt(3) * np.cosh(self.radii) ** -3.0, rtol=1e-12)

    def test_wrong_rate_fails(self):
        rep = decay_check(builtin_family("conformal", m=1.0, tau_prime=2.0), self.radii, tau=3.0)
        assert not rep.passed

    def test_radii_validation(self):
        with pytest.raises(ValueError):
            decay_check(builtin_family("zero"), [3.0, 2.0])

    def test_csv(self):
        text = decay_check(builtin_family("zero"), [1.0, 2.0]).to_csv()
        lines = text.splitlines()
        assert lines[0] == "radius,sup_norm,ratio,sup_dnorm,dratio" and len(lines) == 3
