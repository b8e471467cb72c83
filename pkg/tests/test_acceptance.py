"""Release acceptance suite.

Eleven end-to-end criteria, one test each, covering transform identities,
boundary behaviour, smooth fit, the barrier dichotomy, HJB certification
for both problems, Monte Carlo agreement, dominance over suboptimal
barriers, the continuous-observation limit, terminal-payoff sweeps, and
the payout maximiser.  Each test prints a single summary line and enforces
its stated tolerance and time budget.

Reference setup: c=0.5, sigma=0.2 (or 0), kappa=2, folded-normal jump fit,
q=0.05, r=0.1, rho=0, beta=2; the strong-drift variant uses c=2.0.
"""

import time

import numpy as np
import pytest

from peridiv import (
    McConfig,
    PhaseTypeLevyModel,
    ProblemSpec,
    build_periodic,
    build_scale,
    classical_limits,
    dominance_scan,
    f,
    folded_normal_phase_fit,
    hjb_check_bailout,
    hjb_check_dividends,
    make_optimal_curve,
    r_sweep,
    rho_sweep,
    simulate_bailout,
    simulate_dividends,
    solve_b_star,
    solve_barrier,
    threshold_I,
    u_dagger,
    v_star,
)
from peridiv.verification import max_term_brute, max_term_closed

Q, R = 0.05, 0.1
X_EVAL = (0.5, 1.0, 2.0, 4.0)
R_LIST = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0)
RHO_LIST = (-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)


def folded_model(c=0.5, sigma=0.2):
    alpha, t_mat = folded_normal_phase_fit()
    return PhaseTypeLevyModel(c=c, sigma=sigma, kappa=2.0,
                              alpha=alpha, T=t_mat)


def exp_model(c, sigma):
    return PhaseTypeLevyModel(c=c, sigma=sigma, kappa=1.0,
                              alpha=np.array([1.0]),
                              T=np.array([[-1.0]]))


def div_spec(rho=0.0, r=R):
    return ProblemSpec(kind="dividends", q=Q, r=r, rho=rho)


def bail_spec(beta=2.0, r=R):
    return ProblemSpec(kind="bailout", q=Q, r=r, beta=beta)


def announce(n, message):
    print("criterion {:02d} PASS: {}".format(n, message))


def test_c01_scale_laplace_transform_identity():
    # int_0^inf e^{-theta x} W^(q)(x) dx = 1/(psi(theta) - q) for
    # theta > Phi(q), at 5 random abscissae per model, 1e-8 relative
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    models = [exp_model(1.5, 0.0), exp_model(1.5, 0.4), folded_model()]
    for model in models:
        rep = build_scale(model, Q)
        for _ in range(5):
            theta = rep.phi_q + float(rng.uniform(0.1, 10.0))
            lhs = rep.laplace_transform(theta)
            rhs = 1.0 / (model.laplace_exponent(theta) - Q)
            rel = abs(lhs - rhs) / abs(rhs)
            worst = max(worst, rel)
            assert rel < 1e-8
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    announce(1, "transform identity on 3 models, worst rel err "
                "{:.2e} in {:.2f}s (budget 1e-8, 5s)".format(worst, elapsed))


def test_c02_scale_boundary_behaviour():
    # W(0+) = 1/c without diffusion; with diffusion W(0+) = 0 and
    # W'(0+) = 2/sigma^2, all to 1e-9
    rep0 = build_scale(exp_model(1.5, 0.0), Q)
    assert abs(rep0.w_at_zero - 1.0 / 1.5) < 1e-9
    gaps = [abs(rep0.w_at_zero - 1.0 / 1.5)]
    for model in (exp_model(1.5, 0.4), folded_model(sigma=0.2)):
        rep = build_scale(model, Q)
        assert abs(rep.w_at_zero) < 1e-9
        assert abs(rep.w_prime_at_zero - 2.0 / model.sigma ** 2) < 1e-9
        gaps += [abs(rep.w_at_zero),
                 abs(rep.w_prime_at_zero - 2.0 / model.sigma ** 2)]
    announce(2, "boundary values match on 3 models, worst gap {:.2e} "
                "(budget 1e-9)".format(max(gaps)))


def test_c03_smooth_fit_at_optimum():
    # with diffusion the optimal curve pastes twice differentiably and
    # the third derivative also matches; without diffusion only the
    # second derivative pastes
    start = time.perf_counter()
    sol = solve_b_star(folded_model(), div_spec())
    rep = sol.smoothfit_report
    assert abs(rep.d2_gap) < 1e-7
    assert abs(rep.d3_gap) < 1e-7
    sol0 = solve_b_star(folded_model(sigma=0.0), div_spec())
    assert abs(sol0.smoothfit_report.d2_gap) < 1e-7
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    announce(3, "smooth-fit gaps d2={:.1e} d3={:.1e} (sigma>0), "
                "d2={:.1e} (sigma=0) in {:.2f}s (budget 1e-7, 1s)".format(
                    rep.d2_gap, rep.d3_gap, sol0.smoothfit_report.d2_gap,
                    elapsed))


def test_c04_barrier_dichotomy():
    # strong drift: the analytic sign test forces a zero barrier; weak
    # drift: the barrier equation has a root with residual <= 1e-10
    model_hi = folded_model(c=2.0)
    spec = div_spec()
    assert model_hi.psi_prime_at_zero() >= threshold_I(model_hi, spec)
    sol_hi = solve_b_star(model_hi, spec)
    assert sol_hi.is_zero

    model_lo = folded_model(c=0.5)
    assert model_lo.psi_prime_at_zero() < threshold_I(model_lo, spec)
    sol_lo = solve_b_star(model_lo, spec)
    assert not sol_lo.is_zero
    residual = abs(float(f(model_lo, spec, sol_lo.level)))
    assert residual <= 1e-10
    announce(4, "dichotomy: c=2.0 gives barrier 0 by sign test, c=0.5 "
                "gives barrier {:.6f} with residual {:.1e} "
                "(budget 1e-10)".format(sol_lo.level, residual))


def test_c05_hjb_certification_dividends():
    # quadrature generator vs closed form (1e-6 rel) and HJB residual
    # (1e-5 abs) on 200 grid points, for both dichotomy cases
    start = time.perf_counter()
    model = folded_model()
    spec = div_spec()
    report = hjb_check_dividends(model, spec, solve_barrier(model, spec),
                                 n_grid=200)
    assert report.passed
    _, worst = report.worst()
    model_hi = folded_model(c=2.0)
    report_hi = hjb_check_dividends(model_hi, spec,
                                    solve_barrier(model_hi, spec),
                                    n_grid=200)
    assert report_hi.passed
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    announce(5, "dividend HJB certified on 200 points, worst residual "
                "{:.2e} in {:.1f}s (budget 1e-5, 30s)".format(
                    abs(worst), elapsed))


def test_c06_hjb_certification_bailout():
    # same certification plus u'(0) = beta to 1e-9, slope cap u' <= beta
    # and concavity along the grid
    start = time.perf_counter()
    model = folded_model()
    spec = bail_spec(beta=2.0)
    report = hjb_check_bailout(model, spec, solve_barrier(model, spec),
                               n_grid=200)
    assert report.passed
    assert report.extras["boundary_gap"] <= 1e-9
    assert report.extras["max_slope"] <= 2.0 + 1e-9
    assert report.extras["max_curvature"] <= 1e-10
    _, worst = report.worst()
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    announce(6, "bail-out HJB certified, worst residual {:.2e}, "
                "boundary gap {:.1e}, max slope {:.6f} in {:.1f}s".format(
                    abs(worst), report.extras["boundary_gap"],
                    report.extras["max_slope"], elapsed))


def test_c07_monte_carlo_agreement():
    # 1e5 paths per start level; closed form must sit inside the
    # 3-sigma band, widened by the reported discretisation and horizon
    # bias bounds for the injection leg
    start = time.perf_counter()
    model = folded_model()
    cfg = McConfig(paths=100000, seed=0, horizon_eps=1e-5, dt_max=0.01)
    horizon_allowance = 1e-3

    dspec = div_spec()
    dsol = solve_barrier(model, dspec)
    worst_z = 0.0
    for x in X_EVAL:
        est = simulate_dividends(model, dspec, dsol.level, x, cfg)
        exact = float(v_star(model, dspec, dsol, x))
        tol = 3.0 * est.stderr + horizon_allowance
        assert abs(est.mean - exact) < tol, \
            "dividends x={}: {} vs {}".format(x, est.mean, exact)
        worst_z = max(worst_z, abs(est.mean - exact) / est.stderr)

    bspec = bail_spec(beta=2.0)
    bsol = solve_barrier(model, bspec)
    for x in X_EVAL:
        est = simulate_bailout(model, bspec, bsol.level, x, cfg)
        exact = float(u_dagger(model, bspec, bsol, x))
        tol = (3.0 * est.stderr + horizon_allowance
               + est.extras["bias_injection_discount"])
        assert abs(est.mean - exact) < tol, \
            "bail-out x={}: {} vs {}".format(x, est.mean, exact)
        worst_z = max(worst_z, abs(est.mean - exact) / est.stderr)

    elapsed = time.perf_counter() - start
    assert elapsed < 120.0
    announce(7, "Monte Carlo matches closed form at 8 start levels, "
                "worst |z|={:.2f} in {:.0f}s (budget 3 s.e., 120s)".format(
                    worst_z, elapsed))


def test_c08_dominance_over_suboptimal_barriers():
    # optimal curve dominates barriers 0, b/2, 1.5b, 2b pointwise on
    # 400 grid points, violations below 1e-9
    model = folded_model()
    worst = np.inf
    for spec in (div_spec(), bail_spec(beta=2.0)):
        sol = solve_barrier(model, spec)
        entries = dominance_scan(model, spec, sol, n_grid=400)
        for entry in entries:
            assert entry.min_gap >= -1e-9, \
                "{} b={}".format(spec.kind, entry.barrier)
            worst = min(worst, entry.min_gap)
    announce(8, "optimal curves dominate 8 alternatives on 400 points, "
                "smallest margin {:.2e} (violation budget 1e-9)".format(
                    worst))


def test_c09_classical_limit():
    # barriers converge monotonically to the continuous-observation
    # barrier as the decision rate grows, and periodic values never
    # exceed the classical value
    model = folded_model()
    xs = np.array(X_EVAL)
    for spec in (div_spec(), bail_spec(beta=2.0)):
        entries, classical = r_sweep(model, spec, R_LIST)
        gaps = [e.gap_to_classical for e in entries]
        assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:])), \
            spec.kind
        g5 = gaps[R_LIST.index(5.0)]
        g05 = gaps[R_LIST.index(0.5)]
        assert g5 < g05
        ceiling = classical_limits(model, spec).value(xs)
        for r in R_LIST:
            sp = spec.with_r(r)
            sol = solve_barrier(model, sp)
            curve = make_optimal_curve(model, sp, sol.level, sol.is_zero)
            assert np.all(curve.value(xs) <= ceiling + 1e-12), \
                "{} r={}".format(spec.kind, r)
    announce(9, "barrier gaps to the classical limit shrink across "
                "r={}..{} for both problems and values stay below the "
                "classical ceiling".format(R_LIST[0], R_LIST[-1]))


def test_c10_terminal_payoff_sweep():
    # the barrier falls as the terminal payoff rises, and at the largest
    # payoff the value function is no longer monotone in the surplus
    model = folded_model()
    entries = rho_sweep(model, div_spec(), RHO_LIST)
    levels = [e.level for e in entries]
    assert all(b <= a + 1e-12 for a, b in zip(levels, levels[1:]))
    assert entries[-1].value_nonmonotone
    assert not entries[RHO_LIST.index(0.0)].value_nonmonotone
    announce(10, "barrier falls from {:.4f} to {:.4f} across rho={}..{}; "
                 "value dips at rho={}".format(
                     levels[0], levels[-1], RHO_LIST[0], RHO_LIST[-1],
                     RHO_LIST[-1]))


def test_c11_payout_maximiser():
    # closed-form payout maximum agrees with a 1000-point grid search at
    # 50 random surplus levels, within the grid's discretisation bound
    model = folded_model()
    spec = div_spec()
    sol = solve_barrier(model, spec)
    curve = make_optimal_curve(model, spec, sol.level, sol.is_zero)
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(50):
        x = float(rng.uniform(0.01, 3.0 * sol.level))
        closed = max_term_closed(curve, x)
        brute, bound = max_term_brute(curve, x, n=1000)
        assert brute <= closed + 1e-12
        assert closed - brute <= bound
        worst = max(worst, closed - brute)
    announce(11, "payout maximiser verified at 50 random levels, worst "
                 "grid shortfall {:.2e} within its bound".format(worst))
