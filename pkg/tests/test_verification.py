"""Generator quadrature, HJB certification, dominance, and payout maxima.

The quadrature generator is the independent referee for every closed-form
curve, so it is itself validated first on curves with analytically known
images: constants, affine functions, and exponentials, whose generator
action reduces to the Laplace exponent.
"""

import numpy as np
import pytest

from peridiv import (
    CertificationError,
    PhaseTypeLevyModel,
    ProblemSpec,
    dominance_scan,
    folded_normal_phase_fit,
    hjb_check_bailout,
    hjb_check_dividends,
    make_curve,
    make_optimal_curve,
    solve_barrier,
)
from peridiv.verification import (
    GeneratorCurve,
    HjbReport,
    apply_generator,
    hjb_closed_residual,
    max_term_brute,
    max_term_closed,
    smoothfit_fd,
)

Q, R = 0.05, 0.1


def folded_model(c=0.5, sigma=0.2):
    alpha, t_mat = folded_normal_phase_fit()
    return PhaseTypeLevyModel(c=c, sigma=sigma, kappa=2.0,
                              alpha=alpha, T=t_mat)


def div_spec(rho=0.0):
    return ProblemSpec(kind="dividends", q=Q, r=R, rho=rho)


def bail_spec(beta=2.0):
    return ProblemSpec(kind="bailout", q=Q, r=R, beta=beta)


def optimal_curve(model, spec):
    sol = solve_barrier(model, spec)
    return sol, make_optimal_curve(model, spec, sol.level, sol.is_zero)


class TestGeneratorOnKnownCurves:
    def test_constants_are_killed(self):
        model = folded_model()
        g = GeneratorCurve(value=lambda x: 7.0, deriv1=lambda x: 0.0,
                           deriv2=lambda x: 0.0, tail_intercept=7.0)
        for x in (0.1, 1.0, 5.0):
            assert abs(apply_generator(model, g, x)) < 1e-10

    def test_identity_maps_to_mean_drift(self):
        # L x = -c + kappa E[Z] = psi'(0+) with a sign flip
        model = folded_model()
        g = GeneratorCurve(value=lambda x: x, deriv1=lambda x: 1.0,
                           deriv2=lambda x: 0.0, tail_slope=1.0)
        want = -model.psi_prime_at_zero()
        for x in (0.2, 2.0):
            assert apply_generator(model, g, x) == pytest.approx(want,
                                                                 rel=1e-9)

    @pytest.mark.parametrize("theta", [0.5, 1.0, 3.0])
    def test_exponentials_are_eigenfunctions(self, theta):
        # L e^{-theta x} = psi(theta) e^{-theta x} ties the quadrature
        # path directly to the Laplace exponent
        model = folded_model()
        g = GeneratorCurve(
            value=lambda x: np.exp(-theta * x),
            deriv1=lambda x: -theta * np.exp(-theta * x),
            deriv2=lambda x: theta ** 2 * np.exp(-theta * x),
        )
        for x in (0.3, 1.0, 2.0):
            want = model.laplace_exponent(theta) * np.exp(-theta * x)
            assert apply_generator(model, g, x) == pytest.approx(want,
                                                                 rel=1e-9)

    def test_vector_input(self):
        model = folded_model()
        g = GeneratorCurve(value=lambda x: x, deriv1=lambda x: 1.0,
                           deriv2=lambda x: 0.0, tail_slope=1.0)
        out = apply_generator(model, g, np.array([0.5, 1.0, 2.0]))
        assert out.shape == (3,)
        assert np.allclose(out, -model.psi_prime_at_zero(), rtol=1e-9)

    def test_no_jump_model(self):
        model = PhaseTypeLevyModel(c=1.0, sigma=0.3, kappa=0.0)
        g = GeneratorCurve(
            value=lambda x: np.exp(-2.0 * x),
            deriv1=lambda x: -2.0 * np.exp(-2.0 * x),
            deriv2=lambda x: 4.0 * np.exp(-2.0 * x),
        )
        want = model.laplace_exponent(2.0) * np.exp(-2.0)
        assert apply_generator(model, g, 1.0) == pytest.approx(want,
                                                               rel=1e-12)


class TestValueCurveResiduals:
    def test_harmonic_below_barrier(self):
        model = folded_model()
        sol, curve = optimal_curve(model, div_spec())
        for x in (0.25 * sol.level, 0.5 * sol.level, 0.9 * sol.level):
            gen = apply_generator(model, curve, x)
            resid = gen - Q * float(curve.value(x))
            assert abs(resid) < 1e-6 * (1.0 + abs(float(curve.value(x))))

    def test_closed_residual_above_barrier(self):
        model = folded_model()
        sol, curve = optimal_curve(model, div_spec())
        for x in (1.2 * sol.level, 2.0 * sol.level, 4.0 * sol.level):
            gen = apply_generator(model, curve, x)
            resid = gen - Q * float(curve.value(x))
            closed = hjb_closed_residual(curve, x)
            assert resid == pytest.approx(closed, rel=1e-6)

    def test_closed_residual_zero_barrier(self):
        model = folded_model(c=2.0)
        sol, curve = optimal_curve(model, div_spec())
        assert sol.is_zero
        gen = apply_generator(model, curve, 1.0)
        resid = gen - Q * float(curve.value(1.0))
        assert resid == pytest.approx(hjb_closed_residual(curve, 1.0),
                                      rel=1e-6)

    def test_closed_residual_vanishes_below(self):
        model = folded_model()
        _, curve = optimal_curve(model, div_spec())
        assert hjb_closed_residual(curve, 0.3) == 0.0
        out = hjb_closed_residual(curve, np.array([0.1, curve.b + 1.0]))
        assert out[0] == 0.0 and out[1] != 0.0


class TestMaxTerm:
    def test_zero_below_barrier(self):
        model = folded_model()
        _, curve = optimal_curve(model, div_spec())
        assert max_term_closed(curve, 0.5 * curve.b) == 0.0

    def test_positive_above_barrier(self):
        model = folded_model()
        _, curve = optimal_curve(model, div_spec())
        assert max_term_closed(curve, curve.b + 1.0) > 0.0

    def test_brute_force_agrees_with_closed(self):
        model = folded_model()
        _, curve = optimal_curve(model, div_spec())
        rng = np.random.default_rng(3)
        for _ in range(12):
            x = float(rng.uniform(0.05, 2.5 * curve.b))
            closed = max_term_closed(curve, x)
            brute, bound = max_term_brute(curve, x, n=400)
            assert brute <= closed + 1e-12
            assert closed - brute <= bound

    def test_brute_at_origin(self):
        model = folded_model()
        _, curve = optimal_curve(model, div_spec())
        assert max_term_brute(curve, 0.0) == (0.0, 0.0)


class TestHjbChecks:
    def test_dividends_passes(self):
        model = folded_model()
        spec = div_spec()
        sol = solve_barrier(model, spec)
        report = hjb_check_dividends(model, spec, sol, n_grid=40)
        assert report.passed and not report.failures
        x_worst, worst = report.worst()
        assert abs(worst) < 1e-7
        assert report.extras["value_at_zero"] == pytest.approx(0.0,
                                                               abs=1e-10)
        assert report.extras["slope_at_barrier"] == pytest.approx(1.0,
                                                                  abs=1e-10)

    def test_dividends_zero_barrier_passes(self):
        model = folded_model(c=2.0)
        spec = div_spec()
        sol = solve_barrier(model, spec)
        report = hjb_check_dividends(model, spec, sol, n_grid=40)
        assert report.passed
        assert report.barrier == 0.0

    def test_bailout_passes(self):
        model = folded_model()
        spec = bail_spec(beta=2.0)
        sol = solve_barrier(model, spec)
        report = hjb_check_bailout(model, spec, sol, n_grid=40)
        assert report.passed
        assert report.extras["boundary_gap"] <= 1e-9
        assert report.extras["max_slope"] <= 2.0 + 1e-9
        assert report.extras["max_curvature"] <= 1e-10

    def test_failure_carries_report(self):
        model = folded_model()
        spec = div_spec()
        sol = solve_barrier(model, spec)
        with pytest.raises(CertificationError) as exc:
            hjb_check_dividends(model, spec, sol, n_grid=25, tol=1e-18)
        report = exc.value.report
        assert isinstance(report, HjbReport)
        assert not report.passed
        assert report.failures
        assert "HJB residual" in str(exc.value)

    def test_bailout_boundary_enforced(self):
        # the smooth-fit multiplier at a wrong barrier breaks u'(0) = beta
        from peridiv import BarrierSolution

        model = folded_model()
        spec = bail_spec()
        wrong = BarrierSolution(kind="bailout", level=0.9, is_zero=False,
                                residual=0.0, iterations=0,
                                smoothfit_report=None)
        with pytest.raises(CertificationError, match="boundary"):
            hjb_check_bailout(model, spec, wrong, n_grid=25)


class TestDominance:
    def test_default_alternatives_dividends(self):
        model = folded_model()
        spec = div_spec()
        sol = solve_barrier(model, spec)
        entries = dominance_scan(model, spec, sol, n_grid=150)
        assert len(entries) == 4
        assert [e.barrier for e in entries] == pytest.approx(
            [0.0, 0.5 * sol.level, 1.5 * sol.level, 2.0 * sol.level])
        for e in entries:
            assert e.min_gap > 0.0

    def test_zero_barrier_alternatives(self):
        model = folded_model(c=2.0)
        spec = div_spec()
        sol = solve_barrier(model, spec)
        entries = dominance_scan(model, spec, sol, n_grid=150)
        assert len(entries) == 3
        assert all(e.barrier > 0.0 for e in entries)
        for e in entries:
            assert e.min_gap > 0.0

    def test_bailout_dominance(self):
        model = folded_model()
        spec = bail_spec()
        sol = solve_barrier(model, spec)
        entries = dominance_scan(model, spec, sol,
                                 b_list=[0.0, 0.2, 1.0, 2.0], n_grid=150)
        for e in entries:
            assert e.min_gap > 0.0

    def test_optimum_skipped_in_custom_list(self):
        model = folded_model()
        spec = div_spec()
        sol = solve_barrier(model, spec)
        entries = dominance_scan(model, spec, sol,
                                 b_list=[sol.level, 2.0 * sol.level],
                                 n_grid=60)
        assert len(entries) == 1


class TestSmoothFitFd:
    def test_matches_analytic_limits(self):
        model = folded_model()
        _, curve = optimal_curve(model, div_spec())
        fd = smoothfit_fd(curve)
        d = curve.derivs_at_barrier()
        assert fd["d2_left"] == pytest.approx(d.d2_left, abs=1e-5)
        assert fd["d2_right"] == pytest.approx(d.d2_right, abs=1e-5)
        assert fd["d3_left"] == pytest.approx(d.d3_left, rel=1e-2)
        assert fd["d3_right"] == pytest.approx(d.d3_right, rel=1e-2)

    def test_detects_third_derivative_jump_sigma_zero(self):
        alpha, t_mat = folded_normal_phase_fit()
        model = PhaseTypeLevyModel(c=0.5, sigma=0.0, kappa=2.0,
                                   alpha=alpha, T=t_mat)
        _, curve = optimal_curve(model, div_spec())
        fd = smoothfit_fd(curve)
        assert abs(fd["d2_left"] - fd["d2_right"]) < 1e-4
        assert abs(fd["d3_left"] - fd["d3_right"]) > 1e-2
