"""Scale functions: partial fractions, boundary behavior, periodic family."""

import numpy as np
import pytest
from scipy.integrate import quad

from peridiv import (
    NumericError,
    PhaseTypeLevyModel,
    build_periodic,
    build_scale,
    folded_normal_phase_fit,
)

Q, R = 0.05, 0.1


def folded_model(c=0.5, sigma=0.2, kappa=2.0):
    alpha, t_mat = folded_normal_phase_fit()
    return PhaseTypeLevyModel(c=c, sigma=sigma, kappa=kappa,
                              alpha=alpha, T=t_mat)


def exp_model(c=1.5, sigma=0.0, kappa=1.0, rate=1.0):
    return PhaseTypeLevyModel(c=c, sigma=sigma, kappa=kappa,
                              alpha=np.array([1.0]),
                              T=np.array([[-rate]]))


def numeric_laplace(rep, theta):
    # independent quadrature of the transform; the integrand decays like
    # e^{(phi - theta) x} so the truncation point keeps the tail < 1e-16
    upper = 42.0 / (theta - rep.phi_q)
    val, _ = quad(lambda x: np.exp(-theta * x) * rep.W(x), 0.0, upper,
                  epsabs=1e-14, epsrel=1e-12, limit=400)
    return val


class TestBuildScale:
    def test_root_structure(self):
        rep = build_scale(folded_model(), Q)
        positive = [t for t in rep.roots if t.real > 0]
        assert len(positive) == 1
        assert positive[0].real == pytest.approx(rep.model.phi(Q), rel=1e-10)

    def test_coeffs_equal_inverse_psi_prime(self):
        model = folded_model()
        rep = build_scale(model, Q)
        for theta, coef in zip(rep.roots, rep.coeffs):
            assert coef == pytest.approx(1.0 / model.psi_prime(theta),
                                         rel=1e-9)

    def test_laplace_transform_quadrature_oracle(self):
        for model in (exp_model(), folded_model()):
            rep = build_scale(model, Q)
            theta = rep.phi_q + 1.0
            closed = rep.laplace_transform(theta)
            assert closed == pytest.approx(
                1.0 / (model.laplace_exponent(theta) - Q), rel=1e-12)
            assert closed == pytest.approx(numeric_laplace(rep, theta),
                                           rel=1e-9)

    def test_rejects_redundant_representation(self):
        # Exp(1) written with a duplicated state makes psi(theta) - q share
        # a root with det(theta I - T)
        model = PhaseTypeLevyModel(
            c=1.5, sigma=0.0, kappa=1.0,
            alpha=np.array([0.5, 0.5]),
            T=np.diag([-1.0, -1.0]),
        )
        with pytest.raises(NumericError, match="minimal"):
            build_scale(model, Q)

    def test_cached_per_model(self):
        model = folded_model()
        assert build_scale(model, Q) is build_scale(model, Q)


class TestScaleEvaluations:
    def test_zero_on_negative_halfline(self):
        rep = build_scale(folded_model(), Q)
        assert rep.W(-1.0) == 0.0
        assert rep.Wbar(-2.0) == 0.0
        assert rep.Z(-3.0) == 1.0
        assert rep.Zbar(-3.0) == -3.0

    def test_boundary_sigma_zero(self):
        rep = build_scale(exp_model(c=1.5), Q)
        assert rep.w_at_zero == pytest.approx(1.0 / 1.5, rel=1e-9)

    def test_boundary_sigma_positive(self):
        rep = build_scale(folded_model(sigma=0.2), Q)
        assert abs(rep.w_at_zero) <= 1e-9
        assert rep.w_prime_at_zero == pytest.approx(2.0 / 0.04, rel=1e-9)

    def test_asymptotic_growth_rate(self):
        model = folded_model()
        rep = build_scale(model, Q)
        x = 50.0 / rep.phi_q
        limit = 1.0 / model.psi_prime(rep.phi_q)
        assert np.exp(-rep.phi_q * x) * rep.W(x) == pytest.approx(
            limit, rel=1e-6)

    def test_strictly_increasing(self):
        rep = build_scale(folded_model(), Q)
        xs = np.linspace(0.01, 8.0, 200)
        vals = rep.W(xs)
        assert np.all(np.diff(vals) > 0)

    def test_wbar_is_integral_of_w(self):
        rep = build_scale(folded_model(), Q)
        for x in (0.4, 1.3, 3.0):
            val, _ = quad(rep.W, 0.0, x, epsabs=1e-13, epsrel=1e-11)
            assert rep.Wbar(x) == pytest.approx(val, rel=1e-9)

    def test_z_and_zbar_relations(self):
        rep = build_scale(folded_model(), Q)
        assert rep.Z(0.0) == pytest.approx(1.0, abs=1e-12)
        for x in (0.5, 2.0):
            assert rep.Z(x) == pytest.approx(1.0 + Q * rep.Wbar(x), rel=1e-12)
            val, _ = quad(rep.Z, 0.0, x, epsabs=1e-13, epsrel=1e-11)
            assert rep.Zbar(x) == pytest.approx(val, rel=1e-9)

    def test_w_prime_finite_difference(self):
        rep = build_scale(folded_model(), Q)
        h = 1e-6
        for x in (0.5, 1.0, 2.5):
            fd = (rep.W(x + h) - rep.W(x - h)) / (2 * h)
            assert rep.W_prime(x) == pytest.approx(fd, rel=1e-7)

    def test_values_are_real(self):
        rep = build_scale(folded_model(), Q)
        xs = np.linspace(0.0, 10.0, 50)
        raw = np.exp(np.multiply.outer(xs, rep.roots)) @ rep.coeffs
        assert np.max(np.abs(raw.imag)) < 1e-10 * np.max(np.abs(raw.real))


class TestPeriodicFamily:
    def test_j_at_zero_and_below(self):
        prep = build_periodic(build_scale(folded_model(), Q), R)
        assert prep.J(0.0) == pytest.approx(1.0, rel=1e-12)
        x = -2.0
        assert prep.J(x) == pytest.approx(np.exp(prep.phi_qr * x), rel=1e-12)
        assert prep.Zqr(x) == pytest.approx(
            (R + Q * np.exp(prep.phi_qr * x)) / (R + Q), rel=1e-12)

    def test_j_full_mass_identity(self):
        # r * int_0^inf e^{-phi_qr z} W(z) dz = 1 makes J positive
        rep = build_scale(folded_model(), Q)
        prep = build_periodic(rep, R)
        val, _ = quad(lambda z: np.exp(-prep.phi_qr * z) * rep.W(z),
                      0.0, 42.0 / (prep.phi_qr - rep.phi_q),
                      epsabs=1e-13, epsrel=1e-11, limit=400)
        assert R * val == pytest.approx(1.0, rel=1e-8)

    def test_j_positive(self):
        prep = build_periodic(build_scale(folded_model(), Q), R)
        xs = np.linspace(-5.0, 10.0, 100)
        assert np.all(prep.J(xs) > 0)

    def test_j_closed_form_vs_quadrature(self):
        rep = build_scale(folded_model(), Q)
        prep = build_periodic(rep, R)
        for x in (0.5, 1.7, 4.0):
            integral, _ = quad(
                lambda z: np.exp(-prep.phi_qr * z) * rep.W(z), 0.0, x,
                epsabs=1e-13, epsrel=1e-11)
            direct = np.exp(prep.phi_qr * x) * (1.0 - R * integral)
            assert prep.J(x) == pytest.approx(direct, rel=1e-8)

    def test_zqr_definition_and_derivative(self):
        rep = build_scale(folded_model(), Q)
        prep = build_periodic(rep, R)
        assert prep.Zqr(0.0) == pytest.approx(1.0, rel=1e-12)
        h = 1e-6
        for x in (0.5, 1.0, 2.0):
            assert prep.Zqr(x) == pytest.approx(
                (R * rep.Z(x) + Q * prep.J(x)) / (R + Q), rel=1e-12)
            fd = (prep.Zqr(x + h) - prep.Zqr(x - h)) / (2 * h)
            assert prep.Zqr_prime(x) == pytest.approx(fd, rel=1e-7)
            assert prep.Zqr_prime(x) == pytest.approx(
                Q / (R + Q) * prep.phi_qr * prep.J(x), rel=1e-12)

    def test_zqr_strictly_increasing(self):
        prep = build_periodic(build_scale(folded_model(), Q), R)
        xs = np.linspace(-3.0, 6.0, 120)
        assert np.all(np.diff(prep.Zqr(xs)) > 0)

    def test_h_values(self):
        model = folded_model()
        rep = build_scale(model, Q)
        prep = build_periodic(rep, R)
        drift = model.psi_prime_at_zero()
        assert prep.H(0.0) == pytest.approx(R / (R + Q) * drift / Q,
                                            rel=1e-12)
        y = -1.3
        assert prep.H(y) == pytest.approx(R / (R + Q) * (y + drift / Q),
                                          rel=1e-12)
        y = 2.1
        assert prep.H(y) == pytest.approx(
            R / (R + Q) * (rep.Zbar(y) + drift / Q), rel=1e-12)
