"""Optimal periodic dividend barriers for spectrally positive Levy processes.

The package computes, in closed form via scale functions, the value
functions and optimal barriers of two control problems for a company
whose surplus follows a spectrally positive Levy process of phase type:
dividend payments restricted to Poissonian decision times (with a
terminal payoff at ruin), and the same problem with compulsory capital
injections keeping the surplus nonnegative.  Independent certification
is provided by generator-residual checks and exact event-driven Monte
Carlo simulation.
"""

from .barrier import (
    BarrierSolution,
    RhoSweepEntry,
    SmoothFitReport,
    SweepEntry,
    f,
    f_hat,
    f_hat_prime,
    f_prime,
    r_sweep,
    rho_sweep,
    solve_b_dagger,
    solve_b_star,
    solve_barrier,
    threshold_I,
)
from .config import (
    ExperimentConfig,
    GridConfig,
    SweepConfig,
    VerificationConfig,
    config_from_dict,
    load_config,
)
from .errors import CertificationError, ConfigError, NumericError, PeridivError
from .model import PhaseTypeLevyModel, folded_normal_phase_fit
from .scale import PeriodicScaleRep, ScaleFunctionRep, build_periodic, build_scale
from .simulator import (
    McConfig,
    McEstimate,
    simulate_bailout,
    simulate_dividends,
)
from .valuation import (
    KIND_BAILOUT,
    KIND_DIVIDENDS,
    ClassicalSolution,
    CurveDerivatives,
    ProblemSpec,
    ValueCurve,
    classical_limits,
    make_curve,
    make_optimal_curve,
    u_b,
    u_b_derivs,
    u_dagger,
    v_b,
    v_b_derivs,
    v_star,
)
from .verification import (
    DominanceEntry,
    GeneratorCurve,
    HjbReport,
    apply_generator,
    dominance_scan,
    hjb_check_bailout,
    hjb_check_dividends,
    hjb_closed_residual,
    max_term_brute,
    max_term_closed,
    smoothfit_fd,
)

__version__ = "0.1.0"

__all__ = [
    "PeridivError",
    "ConfigError",
    "NumericError",
    "CertificationError",
    "PhaseTypeLevyModel",
    "folded_normal_phase_fit",
    "ScaleFunctionRep",
    "PeriodicScaleRep",
    "build_scale",
    "build_periodic",
    "ProblemSpec",
    "ValueCurve",
    "CurveDerivatives",
    "ClassicalSolution",
    "KIND_DIVIDENDS",
    "KIND_BAILOUT",
    "make_curve",
    "make_optimal_curve",
    "v_b",
    "u_b",
    "v_b_derivs",
    "u_b_derivs",
    "v_star",
    "u_dagger",
    "classical_limits",
    "BarrierSolution",
    "SmoothFitReport",
    "SweepEntry",
    "RhoSweepEntry",
    "solve_barrier",
    "solve_b_star",
    "solve_b_dagger",
    "threshold_I",
    "f",
    "f_prime",
    "f_hat",
    "f_hat_prime",
    "r_sweep",
    "rho_sweep",
    "GeneratorCurve",
    "HjbReport",
    "DominanceEntry",
    "apply_generator",
    "hjb_closed_residual",
    "hjb_check_dividends",
    "hjb_check_bailout",
    "dominance_scan",
    "max_term_closed",
    "max_term_brute",
    "smoothfit_fd",
    "McConfig",
    "McEstimate",
    "simulate_dividends",
    "simulate_bailout",
    "ExperimentConfig",
    "GridConfig",
    "SweepConfig",
    "VerificationConfig",
    "load_config",
    "config_from_dict",
    "__version__",
]
