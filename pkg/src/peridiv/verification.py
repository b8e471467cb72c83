"""Independent certification of candidate value curves.

The checks here deliberately avoid the closed-form machinery used to build
the curves: the integro-differential generator is applied by adaptive
quadrature against the phase-type jump density, and the resulting
Hamilton-Jacobi-Bellman residual is measured on a grid.  Closed-form
references are recomputed from scratch so a bug in the curve construction
cannot certify itself.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import CertificationError, NumericError
from .valuation import (
    KIND_BAILOUT,
    ValueCurve,
    make_curve,
    make_optimal_curve,
)

__all__ = [
    "GeneratorCurve",
    "HjbReport",
    "DominanceEntry",
    "apply_generator",
    "hjb_closed_residual",
    "max_term_closed",
    "max_term_brute",
    "hjb_check_dividends",
    "hjb_check_bailout",
    "dominance_scan",
    "smoothfit_fd",
]


@dataclass(frozen=True)
class GeneratorCurve:
    """Minimal curve adapter accepted by apply_generator.

    value, deriv1 and deriv2 are scalar callables.  tail_slope and
    tail_intercept describe the exact affine behaviour of the curve for
    large arguments, used to integrate the jump tail analytically.  kink
    marks a point where the second derivative jumps (quadrature splits
    there); None means the curve is smooth.
    """

    value: object
    deriv1: object
    deriv2: object = None
    tail_slope: float = 0.0
    tail_intercept: float = 0.0
    kink: object = None


def _curve_parts(curve):
    kink = getattr(curve, "kink", None)
    slope = float(curve.tail_slope)
    intercept = float(curve.tail_intercept)
    return kink, slope, intercept


def apply_generator(model, curve, x):
    """Evaluate the extended generator of the surplus process on a curve.

    Returns L g(x) = -c g'(x) + (sigma^2/2) g''(x)
                     + kappa * int_0^inf (g(x+z) - g(x)) f_Z(z) dz.

    The jump integral is truncated where the phase-type tail mass falls
    below 1e-12 and the remainder is integrated in closed form against the
    curve's affine tail.  Raises NumericError when the quadrature does not
    converge.
    """
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x_arr.shape)
    kink, slope, intercept = _curve_parts(curve)
    has_jumps = model.kappa > 0.0
    z_tail = model.jump_tail_cut(1e-12) if has_jumps else 0.0
    for i, xx in np.ndenumerate(x_arr):
        gx = float(curve.value(xx))
        acc = -model.c * float(curve.deriv1(xx))
        if model.sigma > 0.0:
            acc += 0.5 * model.sigma ** 2 * float(curve.deriv2(xx))
        if has_jumps:
            upper = z_tail
            if kink is not None and kink > xx:
                upper += kink - xx
            pts = None
            if kink is not None and 0.0 < kink - xx < upper:
                pts = [kink - xx]

            def integrand(z, _x=xx, _gx=gx):
                return (float(curve.value(_x + z)) - _gx) * model.jump_density(z)

            res = quad(
                integrand,
                0.0,
                upper,
                points=pts,
                epsabs=1e-12,
                epsrel=1e-9,
                limit=300,
                full_output=1,
            )
            if len(res) > 3:
                raise NumericError(
                    "generator quadrature failed at x={:.6g}: {} "
                    "(error estimate {:.3e})".format(xx, res[3], res[1])
                )
            val = res[0]
            tail_mass = model.jump_tail_mass(upper)
            if tail_mass > 0.0:
                val += (slope * xx + intercept - gx) * tail_mass
                val += slope * model.jump_tail_mean(upper)
            acc += model.kappa * val
        out[i] = acc
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return float(out.flat[0])
    return out


def hjb_closed_residual(curve, x):
    """Reference value of (L - q) applied to a barrier-style value curve.

    Zero at and below the barrier; above it the residual of the affine
    continuation is an explicit exponential-linear expression in the
    curve's multiplier k.
    """
    spec = curve.spec
    b = curve.b
    phi_r = curve.prep.phi_qr
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    scale_f = spec.q * spec.r / (spec.r + spec.q)
    above = x_arr > b
    out = np.zeros(x_arr.shape)
    if np.any(above):
        xa = x_arr[above]
        out[above] = -scale_f * (
            curve.k * (1.0 - np.exp(phi_r * (b - xa))) + (xa - b)
        )
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return float(out.flat[0])
    return out


def max_term_closed(curve, x):
    """Best immediate payout value max_{0<=l<=x} l + g(x-l) - g(x).

    For a barrier curve the maximiser is l = 0 below the barrier and
    l = x - b above it.
    """
    b = curve.b
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros(x_arr.shape)
    above = x_arr > b
    if np.any(above):
        gb = float(curve.value(b))
        xa = x_arr[above]
        out[above] = xa - b + gb - np.array([float(curve.value(v)) for v in xa])
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return float(out.flat[0])
    return out


def max_term_brute(curve, x, n=1000):
    """Grid search for the payout maximum, with a discretisation bound.

    Returns (value, bound) where bound dominates the gap to the true
    continuous maximum: the objective has slope 1 - g' in the payout size,
    so a step of x/n misses at most (x/n) * max(1 + |g'|) / 2.
    """
    x = float(x)
    if x <= 0.0:
        return 0.0, 0.0
    ls = np.linspace(0.0, x, n + 1)
    gx = float(curve.value(x))
    vals = ls + np.array([float(curve.value(x - l)) for l in ls]) - gx
    d1 = np.array([float(curve.deriv1(x - l)) for l in ls])
    bound = (x / n) * (1.0 + np.max(np.abs(d1))) / 2.0
    return float(np.max(vals)), bound


@dataclass
class HjbReport:
    """Grid evidence that a curve satisfies the optimality equation."""

    kind: str
    barrier: float
    grid: np.ndarray
    curve_values: np.ndarray
    generator_values: np.ndarray
    closed_reference: np.ndarray
    max_term: np.ndarray
    hjb_residual: np.ndarray
    tolerances: dict
    passed: bool = False
    failures: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def worst(self):
        """Largest absolute HJB residual and where it occurs."""
        idx = int(np.argmax(np.abs(self.hjb_residual)))
        return float(self.grid[idx]), float(self.hjb_residual[idx])


def _default_grid(curve, n_grid, x_max):
    if x_max is None:
        x_max = curve.b + 5.0 / curve.prep.phi_qr
    return np.linspace(1e-4, float(x_max), n_grid)


def _hjb_core(model, spec, curve, n_grid, x_max, tol, closed_rel_tol):
    grid = _default_grid(curve, n_grid, x_max)
    values = np.array([float(curve.value(x)) for x in grid])
    gen = apply_generator(model, curve, grid)
    closed = hjb_closed_residual(curve, grid)
    mterm = max_term_closed(curve, grid)
    gen_minus_q = gen - spec.q * values
    hjb = gen_minus_q + spec.r * mterm

    failures = []
    gap = np.abs(gen_minus_q - closed)
    gap_tol = closed_rel_tol * (1.0 + np.abs(closed))
    bad = gap > gap_tol
    if np.any(bad):
        idx = int(np.argmax(gap - gap_tol))
        failures.append(
            "generator residual disagrees with closed form at "
            "{} grid points (worst x={:.6g}, gap={:.3e})".format(
                int(np.sum(bad)), grid[idx], gap[idx]
            )
        )
    bad_hjb = np.abs(hjb) > tol
    if np.any(bad_hjb):
        idx = int(np.argmax(np.abs(hjb)))
        failures.append(
            "HJB residual exceeds {:.1e} at {} grid points "
            "(worst x={:.6g}, residual={:.3e})".format(
                tol, int(np.sum(bad_hjb)), grid[idx], hjb[idx]
            )
        )
    if np.any(mterm < -1e-12):
        failures.append("payout maximum is negative somewhere on the grid")

    report = HjbReport(
        kind=spec.kind,
        barrier=curve.b,
        grid=grid,
        curve_values=values,
        generator_values=gen,
        closed_reference=closed,
        max_term=mterm,
        hjb_residual=hjb,
        tolerances={"hjb": tol, "closed_rel": closed_rel_tol},
        failures=failures,
    )
    return report


def hjb_check_dividends(
    model,
    spec,
    solution,
    n_grid=200,
    x_max=None,
    tol=1e-5,
    closed_rel_tol=1e-6,
):
    """Certify an optimal dividend curve on a grid; raise on failure.

    Measures the quadrature generator against the closed-form residual,
    the full HJB residual with the exact payout maximum, and positivity
    of the payout gain above the barrier.  Returns the HjbReport on
    success and raises CertificationError carrying it otherwise.
    """
    curve = make_optimal_curve(model, spec, solution.level, solution.is_zero)
    report = _hjb_core(model, spec, curve, n_grid, x_max, tol, closed_rel_tol)
    report.extras["value_at_zero"] = float(curve.value(0.0))
    report.extras["slope_at_barrier"] = float(curve.deriv1(solution.level))
    report.passed = not report.failures
    if not report.passed:
        raise CertificationError(
            "dividend HJB certification failed: " + "; ".join(report.failures),
            report=report,
        )
    return report


def hjb_check_bailout(
    model,
    spec,
    solution,
    n_grid=200,
    x_max=None,
    tol=1e-5,
    closed_rel_tol=1e-6,
    boundary_tol=1e-9,
):
    """Certify an optimal bail-out curve; raise on failure.

    On top of the generator and HJB checks this enforces the reflection
    boundary condition u'(0) = beta, the global slope bound u' <= beta,
    and concavity of the curve on the grid.
    """
    curve = make_optimal_curve(model, spec, solution.level, solution.is_zero)
    report = _hjb_core(model, spec, curve, n_grid, x_max, tol, closed_rel_tol)

    beta = spec.beta
    slope0 = float(curve.deriv1(0.0))
    report.extras["boundary_slope"] = slope0
    report.extras["boundary_gap"] = abs(slope0 - beta)
    if abs(slope0 - beta) > boundary_tol:
        report.failures.append(
            "injection boundary condition violated: u'(0)={:.12g} "
            "with beta={:.12g}".format(slope0, beta)
        )
    slopes = np.array([float(curve.deriv1(x)) for x in report.grid])
    report.extras["max_slope"] = float(np.max(slopes))
    if np.any(slopes > beta + boundary_tol):
        report.failures.append("curve slope exceeds the injection cost beta")
    curv_left = np.array([curve.deriv2(x) for x in report.grid])
    report.extras["max_curvature"] = float(np.max(curv_left))
    if np.any(curv_left > 1e-10):
        report.failures.append("curve is not concave on the grid")

    report.passed = not report.failures
    if not report.passed:
        raise CertificationError(
            "bail-out HJB certification failed: " + "; ".join(report.failures),
            report=report,
        )
    return report


@dataclass(frozen=True)
class DominanceEntry:
    """Pointwise comparison of the optimal curve against one alternative."""

    barrier: float
    min_gap: float
    argmin: float


def dominance_scan(model, spec, solution, b_list=None, n_grid=400, x_max=None):
    """Compare the optimal curve against suboptimal barrier curves.

    Evaluates optimal minus alternative on a shared grid for each barrier
    in b_list (defaults to 0, half, 1.5x and twice the optimum) and
    reports the minimum gap per alternative.  Never raises; callers decide
    what gap is acceptable.
    """
    opt = make_optimal_curve(model, spec, solution.level, solution.is_zero)
    if b_list is None:
        b = solution.level
        if b > 0.0:
            b_list = [0.0, 0.5 * b, 1.5 * b, 2.0 * b]
        else:
            unit = 1.0 / opt.prep.phi_qr
            b_list = [0.5 * unit, unit, 2.0 * unit]
    grid = _default_grid(opt, n_grid, x_max)
    opt_vals = np.array([float(opt.value(x)) for x in grid])
    entries = []
    for b_alt in b_list:
        if abs(b_alt - solution.level) < 1e-12 and not solution.is_zero:
            continue
        alt = make_curve(model, spec, float(b_alt))
        alt_vals = np.array([float(alt.value(x)) for x in grid])
        diff = opt_vals - alt_vals
        idx = int(np.argmin(diff))
        entries.append(
            DominanceEntry(
                barrier=float(b_alt),
                min_gap=float(diff[idx]),
                argmin=float(grid[idx]),
            )
        )
    return entries


def smoothfit_fd(curve, h=1e-4):
    """One-sided finite-difference derivatives at the barrier.

    Cross-checks the analytic one-sided limits using only curve values.
    Returns a dict with second and third derivatives from each side,
    accurate to O(h^2).
    """
    b = curve.b
    f = lambda y: float(curve.value(y))
    left = [f(b - j * h) for j in range(5)]
    right = [f(b + j * h) for j in range(5)]
    d2_left = (2 * left[0] - 5 * left[1] + 4 * left[2] - left[3]) / h ** 2
    d2_right = (2 * right[0] - 5 * right[1] + 4 * right[2] - right[3]) / h ** 2
    d3_left = (
        5 * left[0] - 18 * left[1] + 24 * left[2] - 14 * left[3] + 3 * left[4]
    ) / (2 * h ** 3)
    d3_right = (
        -5 * right[0]
        + 18 * right[1]
        - 24 * right[2]
        + 14 * right[3]
        - 3 * right[4]
    ) / (2 * h ** 3)
    return {
        "d2_left": d2_left,
        "d2_right": d2_right,
        "d3_left": d3_left,
        "d3_right": d3_right,
    }
