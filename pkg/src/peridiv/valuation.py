"""Closed-form expected NPVs under periodic barrier strategies.

Every curve handled here (the NPV v_b of the dividends problem, the NPV
u_b of the bail-out problem, and the optimal value functions) shares one
functional form,

    g(x) = k * Z^{q,r}(b - x) - H^{q,r}(b - x),      x >= 0,

differing only in the barrier b and the scalar coefficient k:

    dividends, barrier b:   k = (H^{q,r}(b) + rho) / Z^{q,r}(b)
    bail-out,  barrier b:   k = (r Z^(q)(b)/(r+q) - beta) / Z^{q,r}'(b)
    either problem at its optimal barrier:  k = -1/Phi(q+r)

since the smooth-fit condition is exactly k = -1/Phi(q+r).  Derivatives
follow one chain of scale-function identities, valid on both sides of
the barrier through the below-zero conventions of the scale functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import NumericError
from .model import PhaseTypeLevyModel
from .scale import PeriodicScaleRep, ScaleFunctionRep, build_periodic, build_scale

__all__ = [
    "ProblemSpec",
    "ValueCurve",
    "CurveDerivatives",
    "make_curve",
    "make_optimal_curve",
    "v_b",
    "v_b_derivs",
    "v_star",
    "u_b",
    "u_dagger",
    "classical_limits",
    "ClassicalSolution",
]

KIND_DIVIDENDS = "dividends"
KIND_BAILOUT = "bailout"


@dataclass(frozen=True)
class ProblemSpec:
    """Problem parameters: discounting q, decision rate r, and the
    problem-specific payoff parameter (rho at ruin, or injection cost beta)."""

    kind: str
    q: float
    r: float
    rho: float = 0.0
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in (KIND_DIVIDENDS, KIND_BAILOUT):
            raise ValueError(f"kind must be 'dividends' or 'bailout', got {self.kind!r}")
        if self.q <= 0.0:
            raise ValueError("q must be positive")
        if self.r <= 0.0:
            raise ValueError("r must be positive")
        if self.kind == KIND_BAILOUT:
            if self.beta is None or self.beta <= 1.0:
                raise ValueError("bailout requires beta > 1")
            if self.rho != 0.0:
                raise ValueError("rho applies to the dividends problem only")
        elif self.beta is not None:
            raise ValueError("beta applies to the bailout problem only")

    def with_r(self, r: float) -> "ProblemSpec":
        return ProblemSpec(self.kind, self.q, r, self.rho, self.beta)

    def with_rho(self, rho: float) -> "ProblemSpec":
        return ProblemSpec(self.kind, self.q, self.r, rho, self.beta)


def _reps(model: PhaseTypeLevyModel, spec: ProblemSpec) -> tuple[ScaleFunctionRep, PeriodicScaleRep]:
    rep = build_scale(model, spec.q)
    return rep, build_periodic(rep, spec.r)


@dataclass(frozen=True)
class CurveDerivatives:
    """One-sided derivative bundle of a value curve at a point."""

    d1: float
    d2_left: float
    d2_right: float
    d3_left: float
    d3_right: float


@dataclass(frozen=True, eq=False)
class ValueCurve:
    """A periodic-strategy NPV curve g(x) = k Z^{q,r}(b-x) - H^{q,r}(b-x)."""

    model: PhaseTypeLevyModel
    spec: ProblemSpec
    b: float
    k: float
    rep: ScaleFunctionRep
    prep: PeriodicScaleRep

    def value(self, x):
        return self.k * self.prep.Zqr(self.b - np.asarray(x, dtype=float)) - self.prep.H(
            self.b - np.asarray(x, dtype=float)
        )

    def deriv1(self, x):
        """g'(x) = r/(r+q) Z^(q)(b-x) - k q/(r+q) Phi(q+r) J^{q,r}(b-x)."""
        y = self.b - np.asarray(x, dtype=float)
        q, r = self.spec.q, self.spec.r
        return (r * self.rep.Z(y) - self.k * q * self.prep.phi_qr * self.prep.J(y)) / (r + q)

    def deriv2(self, x):
        """Second derivative; at x = b this returns the left limit
        (W evaluated at 0 means W(0+))."""
        y = self.b - np.asarray(x, dtype=float)
        q, r = self.spec.q, self.spec.r
        phi = self.prep.phi_qr
        w = self.rep.W(y)
        return (
            -r * q * w + self.k * q * (phi**2 * self.prep.J(y) - r * phi * w)
        ) / (r + q)

    def deriv3(self, x):
        """Third derivative away from b; at x = b this is the left limit."""
        y = self.b - np.asarray(x, dtype=float)
        q, r = self.spec.q, self.spec.r
        phi = self.prep.phi_qr
        w = self.rep.W(y)
        wp = self.rep.W_prime(y)
        return (
            r * q * wp
            + self.k * q * (-(phi**3) * self.prep.J(y) + r * phi**2 * w + r * phi * wp)
        ) / (r + q)

    def derivs_at_barrier(self) -> CurveDerivatives:
        """Analytic one-sided limits of g', g'', g''' at x = b."""
        q, r = self.spec.q, self.spec.r
        phi = self.prep.phi_qr
        w0 = self.rep.w_at_zero
        wp0 = self.rep.w_prime_at_zero
        d1 = (r - self.k * q * phi) / (r + q)
        d2_left = (-r * q * w0 + self.k * q * (phi**2 - r * phi * w0)) / (r + q)
        d2_right = self.k * q * phi**2 / (r + q)
        d3_left = (
            r * q * wp0 + self.k * q * (-(phi**3) + r * phi**2 * w0 + r * phi * wp0)
        ) / (r + q)
        d3_right = -self.k * q * phi**3 / (r + q)
        return CurveDerivatives(d1, d2_left, d2_right, d3_left, d3_right)

    @property
    def tail_slope(self) -> float:
        """Slope of the affine asymptote: g(x) ~ r/(r+q) x + intercept for large x."""
        return self.spec.r / (self.spec.r + self.spec.q)

    @property
    def tail_intercept(self) -> float:
        drift = self.model.psi_prime_at_zero()
        return self.tail_slope * (self.k - self.b - drift / self.spec.q)

    @property
    def kink(self) -> float:
        """Location where the curve switches between its two branches."""
        return self.b


def make_curve(model: PhaseTypeLevyModel, spec: ProblemSpec, b: float) -> ValueCurve:
    """NPV curve of the barrier-b periodic strategy for either problem."""
    if b < 0.0:
        raise ValueError("barrier must be nonnegative")
    rep, prep = _reps(model, spec)
    if spec.kind == KIND_DIVIDENDS:
        k = float((prep.H(b) + spec.rho) / prep.Zqr(b))
    else:
        k = float(
            (spec.r * rep.Z(b) / (spec.r + spec.q) - spec.beta) / prep.Zqr_prime(b)
        )
    return ValueCurve(model=model, spec=spec, b=b, k=k, rep=rep, prep=prep)


def make_optimal_curve(model: PhaseTypeLevyModel, spec: ProblemSpec, level: float,
                       is_zero: bool = False) -> ValueCurve:
    """Value-function curve at the solved barrier.

    For a positive barrier the smooth-fit coefficient k = -1/Phi(q+r) is
    used directly, avoiding cancellation in the generic ratio.  The
    degenerate dividends case b* = 0 falls back to the generic barrier-0
    NPV, which is the value function there.
    """
    rep, prep = _reps(model, spec)
    if is_zero:
        if spec.kind != KIND_DIVIDENDS:
            raise ValueError("a zero barrier is only optimal in the dividends problem")
        return make_curve(model, spec, 0.0)
    return ValueCurve(model=model, spec=spec, b=float(level), k=-1.0 / prep.phi_qr,
                      rep=rep, prep=prep)


# ----------------------------------------------------------------------
# flat convenience wrappers
# ----------------------------------------------------------------------


def v_b(model: PhaseTypeLevyModel, spec: ProblemSpec, b: float, x):
    """Expected NPV of the dividends barrier-b strategy started at x."""
    if spec.kind != KIND_DIVIDENDS:
        raise ValueError("v_b requires a dividends spec")
    return make_curve(model, spec, b).value(x)


def u_b(model: PhaseTypeLevyModel, spec: ProblemSpec, b: float, x):
    """Expected NPV (dividends minus beta-weighted injections) at barrier b."""
    if spec.kind != KIND_BAILOUT:
        raise ValueError("u_b requires a bailout spec")
    return make_curve(model, spec, b).value(x)


def _derivs_at(curve: ValueCurve, x: float) -> CurveDerivatives:
    if x == curve.b:
        return curve.derivs_at_barrier()
    d1 = float(curve.deriv1(x))
    d2 = float(curve.deriv2(x))
    d3 = float(curve.deriv3(x))
    return CurveDerivatives(d1, d2, d2, d3, d3)


def v_b_derivs(model: PhaseTypeLevyModel, spec: ProblemSpec, b: float, x: float) -> CurveDerivatives:
    """First three derivatives of v_b at x, one-sided at the barrier."""
    if spec.kind != KIND_DIVIDENDS:
        raise ValueError("v_b_derivs requires a dividends spec")
    return _derivs_at(make_curve(model, spec, b), float(x))


def u_b_derivs(model: PhaseTypeLevyModel, spec: ProblemSpec, b: float, x: float) -> CurveDerivatives:
    """First three derivatives of u_b at x, one-sided at the barrier."""
    if spec.kind != KIND_BAILOUT:
        raise ValueError("u_b_derivs requires a bailout spec")
    return _derivs_at(make_curve(model, spec, b), float(x))


def v_star(model: PhaseTypeLevyModel, spec: ProblemSpec, solution, x):
    """Dividends value function at the solved barrier (BarrierSolution)."""
    return make_optimal_curve(model, spec, solution.level, solution.is_zero).value(x)


def u_dagger(model: PhaseTypeLevyModel, spec: ProblemSpec, solution, x):
    """Bail-out value function at the solved barrier (BarrierSolution)."""
    return make_optimal_curve(model, spec, solution.level, False).value(x)


# ----------------------------------------------------------------------
# classical (r -> infinity) reference solution
# ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ClassicalSolution:
    """Barrier and value curve of the continuous-observation limit."""

    kind: str
    barrier: float
    rep: ScaleFunctionRep

    def value(self, x):
        y = self.barrier - np.asarray(x, dtype=float)
        drift = self.rep.model.psi_prime_at_zero()
        return -self.rep.Zbar(y) - drift / self.rep.q

    def deriv1(self, x):
        return self.rep.Z(self.barrier - np.asarray(x, dtype=float))


def classical_limits(model: PhaseTypeLevyModel, spec: ProblemSpec) -> ClassicalSolution:
    """Classical continuous-reflection solution, the r -> infinity limit.

    Dividends: the barrier solves Zbar^(q)(b) = -psi'(0+)/q - rho, which
    requires psi'(0+) + q rho < 0.  Bail-out: the barrier solves
    Z^(q)(b) = beta and always exists for beta > 1.  The value curve is
    x -> -Zbar^(q)(b - x) - psi'(0+)/q in both cases.
    """
    rep = build_scale(model, spec.q)
    drift = model.psi_prime_at_zero()
    if spec.kind == KIND_DIVIDENDS:
        target = -drift / spec.q - spec.rho
        if target <= 0.0:
            raise NumericError(
                "classical barrier undefined: psi'(0+) + q*rho must be negative"
            )
        fun = lambda b: float(rep.Zbar(b)) - target
        newton_slope = rep.Z
    else:
        target = spec.beta
        fun = lambda b: float(rep.Z(b)) - target
        newton_slope = lambda b: spec.q * rep.W(b)
    hi = 1.0
    for _ in range(200):
        if fun(hi) > 0.0:
            break
        hi *= 2.0
    else:
        raise NumericError("classical barrier bracket not found")
    root = brentq(fun, 0.0, hi, xtol=1e-14, rtol=8.9e-16, maxiter=200)
    for _ in range(2):
        slope = float(newton_slope(root))
        if slope <= 0.0:
            break
        root -= fun(root) / slope
    if abs(fun(root)) > 1e-10:
        raise NumericError(f"classical barrier residual {fun(root):.3e} too large")
    return ClassicalSolution(kind=spec.kind, barrier=float(root), rep=rep)
