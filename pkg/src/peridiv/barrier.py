"""Smooth-fit equations and solvers for the optimal barriers.

The dividends barrier b* is the root of

    f(b) = Zbar^(q)(b) + psi'(0+)/q + (q+r)/r * rho
           + (r+q)/(r Phi(q+r)) * Z^{q,r}(b),

which exists iff psi'(0+) < I_{r,q} := -(q/r)(q+r)(rho + 1/Phi(q+r));
otherwise the optimal strategy takes all the money at the first
opportunity and b* = 0.  The bail-out barrier b+ solves
fhat(b) = Z^{q,r}(b) - beta = 0 and always exists for beta > 1.
Both f and fhat are strictly increasing, so a doubling bracket plus
bisection is unconditionally safe; Newton is only a polish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import NumericError
from .model import PhaseTypeLevyModel
from .valuation import (
    KIND_BAILOUT,
    KIND_DIVIDENDS,
    ProblemSpec,
    ValueCurve,
    _reps,
    classical_limits,
    make_optimal_curve,
)

__all__ = [
    "SmoothFitReport",
    "BarrierSolution",
    "f",
    "f_prime",
    "f_hat",
    "f_hat_prime",
    "threshold_I",
    "solve_b_star",
    "solve_b_dagger",
    "solve_barrier",
    "r_sweep",
    "rho_sweep",
    "SweepEntry",
    "RhoSweepEntry",
]

_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class SmoothFitReport:
    """One-sided derivative gaps (left minus right) of the value curve at the barrier."""

    d1_gap: float
    d2_gap: float
    d3_gap: float


@dataclass(frozen=True)
class BarrierSolution:
    """Solver output: barrier level, residual and smooth-fit diagnostics."""

    kind: str
    level: float
    is_zero: bool
    residual: float
    iterations: int
    smoothfit_report: SmoothFitReport | None

    def __post_init__(self):
        if self.is_zero != (self.level == 0.0):
            raise ValueError("is_zero must mirror level == 0")
        if self.level > 0.0 and self.residual > _RESIDUAL_TOL:
            raise ValueError(
                f"barrier residual {self.residual:.3e} exceeds {_RESIDUAL_TOL}"
            )


def f(model: PhaseTypeLevyModel, spec: ProblemSpec, b) -> float | np.ndarray:
    """Smooth-fit function of the dividends problem; strictly increasing in b."""
    if spec.kind != KIND_DIVIDENDS:
        raise ValueError("f requires a dividends spec")
    rep, prep = _reps(model, spec)
    q, r = spec.q, spec.r
    out = (
        rep.Zbar(b)
        + model.psi_prime_at_zero() / q
        + (q + r) / r * spec.rho
        + (r + q) / (r * prep.phi_qr) * prep.Zqr(b)
    )
    return out


def f_prime(model: PhaseTypeLevyModel, spec: ProblemSpec, b) -> float | np.ndarray:
    """f'(b) = Z^(q)(b) + (q/r) J^{q,r}(b) > 0."""
    rep, prep = _reps(model, spec)
    return rep.Z(b) + spec.q / spec.r * prep.J(b)


def f_hat(model: PhaseTypeLevyModel, spec: ProblemSpec, b) -> float | np.ndarray:
    """Smooth-fit function of the bail-out problem, Z^{q,r}(b) - beta."""
    if spec.kind != KIND_BAILOUT:
        raise ValueError("f_hat requires a bailout spec")
    _, prep = _reps(model, spec)
    return prep.Zqr(b) - spec.beta


def f_hat_prime(model: PhaseTypeLevyModel, spec: ProblemSpec, b) -> float | np.ndarray:
    """fhat'(b) = Z^{q,r}'(b) = q/(r+q) Phi(q+r) J^{q,r}(b) > 0."""
    _, prep = _reps(model, spec)
    return prep.Zqr_prime(b)


def threshold_I(model: PhaseTypeLevyModel, spec: ProblemSpec) -> float:
    """Threshold I_{r,q}; b* > 0 exists iff psi'(0+) < I_{r,q}."""
    _, prep = _reps(model, spec)
    q, r = spec.q, spec.r
    return -(q / r) * (q + r) * (spec.rho + 1.0 / prep.phi_qr)


def _smoothfit_report(curve: ValueCurve) -> SmoothFitReport:
    d = curve.derivs_at_barrier()
    return SmoothFitReport(
        d1_gap=0.0,
        d2_gap=d.d2_left - d.d2_right,
        d3_gap=d.d3_left - d.d3_right,
    )


def _solve_increasing(fun, dfun, bracket_start: float, bracket_cap: float,
                      initial_guess: float | None) -> tuple[float, int]:
    """Root of a strictly increasing fun with fun(0) < 0; returns (root, iterations)."""
    if initial_guess is not None and initial_guess > 0.0:
        root = float(initial_guess)
        for it in range(1, 51):
            step = fun(root) / dfun(root)
            root -= step
            if root <= 0.0:
                break
            if abs(fun(root)) <= 1e-13 * max(1.0, abs(root)):
                return root, it
        # fall through to the bracketed solve when Newton wanders off

    hi = bracket_start
    iterations = 0
    while fun(hi) <= 0.0:
        hi *= 2.0
        iterations += 1
        if hi > bracket_cap:
            raise NumericError(
                f"no sign change of the smooth-fit function below {bracket_cap:.3g}"
            )
    root, res = brentq(fun, 0.0, hi, xtol=1e-14, rtol=8.9e-16, maxiter=200,
                       full_output=True)
    iterations += res.iterations
    for _ in range(2):
        root -= fun(root) / dfun(root)
        iterations += 1
    return float(root), iterations


def solve_b_star(model: PhaseTypeLevyModel, spec: ProblemSpec,
                 initial_guess: float | None = None) -> BarrierSolution:
    """Optimal dividends barrier.

    The zero case is decided by the analytic sign test psi'(0+) >= I_{r,q}
    rather than a root search; the identity psi'(0+) - I_{r,q} = q f(0)
    makes the two criteria equivalent.  For a positive barrier the
    reported residual |f(b*)| is at most 1e-10.
    """
    if spec.kind != KIND_DIVIDENDS:
        raise ValueError("solve_b_star requires a dividends spec")
    rep, prep = _reps(model, spec)
    drift = model.psi_prime_at_zero()
    if drift >= threshold_I(model, spec):
        # take-the-money-and-run: residual records the certificate f(0) >= 0
        return BarrierSolution(
            kind=spec.kind,
            level=0.0,
            is_zero=True,
            residual=float(f(model, spec, 0.0)),
            iterations=0,
            smoothfit_report=None,
        )
    fun = lambda b: float(f(model, spec, b))
    dfun = lambda b: float(f_prime(model, spec, b))
    root, iterations = _solve_increasing(
        fun, dfun, 1.0 / rep.phi_q, 1e3 / rep.phi_q, initial_guess
    )
    residual = abs(fun(root))
    if residual > _RESIDUAL_TOL:
        raise NumericError(f"b* residual {residual:.3e} exceeds {_RESIDUAL_TOL}")
    curve = make_optimal_curve(model, spec, root)
    return BarrierSolution(
        kind=spec.kind,
        level=root,
        is_zero=False,
        residual=residual,
        iterations=iterations,
        smoothfit_report=_smoothfit_report(curve),
    )


def solve_b_dagger(model: PhaseTypeLevyModel, spec: ProblemSpec,
                   initial_guess: float | None = None) -> BarrierSolution:
    """Optimal bail-out barrier; exists for every beta > 1 since fhat(0) = 1 - beta < 0."""
    if spec.kind != KIND_BAILOUT:
        raise ValueError("solve_b_dagger requires a bailout spec")
    rep, prep = _reps(model, spec)
    fun = lambda b: float(f_hat(model, spec, b))
    dfun = lambda b: float(f_hat_prime(model, spec, b))
    # fhat grows like exp(Phi(q) b), so the bracket cap must scale with
    # 1/Phi(q); 1/Phi(q+r) would undershoot badly when r >> q
    root, iterations = _solve_increasing(
        fun, dfun, 1.0 / prep.phi_qr, 1e3 / rep.phi_q, initial_guess
    )
    residual = abs(fun(root))
    if residual > _RESIDUAL_TOL:
        raise NumericError(f"b-dagger residual {residual:.3e} exceeds {_RESIDUAL_TOL}")
    curve = make_optimal_curve(model, spec, root)
    return BarrierSolution(
        kind=spec.kind,
        level=root,
        is_zero=False,
        residual=residual,
        iterations=iterations,
        smoothfit_report=_smoothfit_report(curve),
    )


def solve_barrier(model: PhaseTypeLevyModel, spec: ProblemSpec,
                  initial_guess: float | None = None) -> BarrierSolution:
    """Dispatch to the problem-appropriate solver."""
    if spec.kind == KIND_DIVIDENDS:
        return solve_b_star(model, spec, initial_guess)
    return solve_b_dagger(model, spec, initial_guess)


@dataclass(frozen=True)
class SweepEntry:
    r: float
    level: float
    is_zero: bool
    residual: float
    gap_to_classical: float


def r_sweep(model: PhaseTypeLevyModel, spec: ProblemSpec,
            r_list) -> tuple[list[SweepEntry], float]:
    """Barriers across decision rates plus the classical (r -> infinity) barrier.

    Returns (entries, classical_barrier).  Requires the classical limit
    to be defined (dividends: psi'(0+) + q*rho < 0).
    """
    classical = classical_limits(model, spec)
    entries = []
    for r in r_list:
        sol = solve_barrier(model, spec.with_r(float(r)))
        entries.append(
            SweepEntry(
                r=float(r),
                level=sol.level,
                is_zero=sol.is_zero,
                residual=sol.residual,
                gap_to_classical=abs(sol.level - classical.barrier),
            )
        )
    return entries, classical.barrier


@dataclass(frozen=True)
class RhoSweepEntry:
    rho: float
    level: float
    is_zero: bool
    residual: float
    value_nonmonotone: bool


def rho_sweep(model: PhaseTypeLevyModel, spec: ProblemSpec, rho_list,
              n_grid: int = 400) -> list[RhoSweepEntry]:
    """Dividends barriers across terminal payoffs rho.

    Each entry also reports whether the value function fails to be
    monotonically increasing, detected by the sign of its derivative on
    a grid over [0, level + 5/Phi(q+r)].
    """
    if spec.kind != KIND_DIVIDENDS:
        raise ValueError("rho_sweep applies to the dividends problem")
    entries = []
    for rho in rho_list:
        sp = spec.with_rho(float(rho))
        sol = solve_b_star(model, sp)
        curve = make_optimal_curve(model, sp, sol.level, sol.is_zero)
        x_max = sol.level + 5.0 / curve.prep.phi_qr
        grid = np.linspace(1e-6, x_max, n_grid)
        nonmono = bool(np.any(curve.deriv1(grid) < 0.0))
        entries.append(
            RhoSweepEntry(
                rho=float(rho),
                level=sol.level,
                is_zero=sol.is_zero,
                residual=sol.residual,
                value_nonmonotone=nonmono,
            )
        )
    return entries
