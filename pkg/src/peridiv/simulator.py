"""Monte Carlo certification of barrier strategy values.

The simulator shares nothing with the scale-function code: paths are built
from the model primitives (drift, diffusion, compound Poisson jumps) and
the strategy rules alone, so its estimates are independent evidence.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, NumericError

__all__ = [
    "McConfig",
    "McEstimate",
    "simulate_dividends",
    "simulate_bailout",
    "bridge_crossing_prob",
    "sample_bridge_min",
    "sample_min_and_endpoint",
]

RNG_ALGORITHM = "xoshiro256** (splitmix64-seeded, one stream per path)"


@dataclass(frozen=True)
class McConfig:
    """Simulation budget and accuracy knobs.

    horizon_eps sets the residual discount factor at truncation, so paths
    run until exp(-q t) <= horizon_eps.  dt_max bounds the reflected
    substep length for bail-out paths with diffusion; injections inside a
    substep are discounted at its end, which biases the injection leg down
    by at most a factor q*dt_max (each run reports the realised bound).
    """

    paths: int
    seed: int = 0
    horizon_eps: float = 1e-6
    dt_max: float = 0.01
    antithetic: bool = False

    def __post_init__(self):
        if self.paths <= 0:
            raise ConfigError("mc paths must be positive")
        if self.antithetic and self.paths % 2 != 0:
            raise ConfigError("antithetic sampling needs an even path count")
        if not 0.0 < self.horizon_eps < 1.0:
            raise ConfigError("horizon_eps must lie in (0, 1)")
        if self.dt_max <= 0.0:
            raise ConfigError("dt_max must be positive")


@dataclass(frozen=True)
class McEstimate:
    """Point estimate with its uncertainty and per-leg breakdown.

    components maps leg names (dividends, injections) to dicts with mean
    and stderr.  extras carries diagnostics: horizon, bias bounds, mean
    decision counts and the RNG identifier.
    """

    mean: float
    stderr: float
    paths_used: int
    components: dict
    ruin_fraction: float
    extras: dict = field(default_factory=dict)

    def interval(self, width=3.0):
        return self.mean - width * self.stderr, self.mean + width * self.stderr


def _ph_arrays(model):
    if model.m == 0:
        one = np.array([1.0])
        return one, one, one, np.ones((1, 1))
    alpha_cum = np.cumsum(model.alpha)
    alpha_cum[-1] = 1.0
    rates = -np.diag(model.T).copy()
    exit_p = model.exit_vector / rates
    trans_cum = np.ones((model.m, model.m))
    for j in range(model.m):
        stay = 1.0 - exit_p[j]
        if stay > 1e-14:
            row = model.T[j].copy()
            row[j] = 0.0
            row = row / rates[j] / stay
            trans_cum[j] = np.cumsum(row)
            trans_cum[j, -1] = 1.0
    return alpha_cum, rates, np.minimum(exit_p, 1.0), trans_cum


def _horizon(q, horizon_eps):
    return np.log(1.0 / horizon_eps) / q


def _reduce(samples, antithetic):
    # antithetic pairs are dependent, so aggregate per pair first
    if antithetic:
        samples = 0.5 * (samples[0::2] + samples[1::2])
    n = samples.shape[0]
    mean = float(np.mean(samples))
    if n > 1:
        stderr = float(np.std(samples, ddof=1) / np.sqrt(n))
    else:
        stderr = float("inf")
    return mean, stderr


def _check_inputs(model, q, r, barrier, x0, config):
    if not isinstance(config, McConfig):
        raise ConfigError("config must be an McConfig")
    if q <= 0.0 or r <= 0.0:
        raise ConfigError("q and r must be positive")
    if barrier < 0.0:
        raise ConfigError("barrier must be nonnegative")
    if x0 < 0.0:
        raise ConfigError("starting level must be nonnegative")
    if not np.isfinite([q, r, barrier, x0]).all():
        raise NumericError("non-finite simulation inputs")


def simulate_dividends(model, spec, barrier, x0, config):
    """Estimate the value of a periodic dividend barrier by simulation.

    Pays the excess above the barrier at Poisson decision epochs with rate
    spec.r, discounts at spec.q, and absorbs the path at its first passage
    below zero.  Returns an McEstimate whose mean is the discounted
    dividend total.
    """
    q, r = spec.q, spec.r
    _check_inputs(model, q, r, barrier, x0, config)
    n = config.paths
    alpha_cum, rates, absorb_p, trans_cum = _ph_arrays(model)
    t_max = _horizon(q, config.horizon_eps)
    div = np.zeros(n)
    ruin = np.zeros(n, np.uint8)
    end_time = np.zeros(n)
    nobs = np.zeros(n, np.int64)
    _kernels.run_dividends(
        n, np.uint64(config.seed), config.antithetic, float(x0),
        float(barrier), model.c, model.sigma, model.kappa, r, q, t_max,
        alpha_cum, rates, absorb_p, trans_cum, div, ruin, end_time, nobs,
    )
    mean, stderr = _reduce(div, config.antithetic)
    return McEstimate(
        mean=mean,
        stderr=stderr,
        paths_used=n,
        components={"dividends": {"mean": mean, "stderr": stderr}},
        ruin_fraction=float(np.mean(ruin)),
        extras={
            "horizon": t_max,
            "bias_horizon_factor": float(config.horizon_eps),
            "mean_end_time": float(np.mean(end_time)),
            "mean_decisions": float(np.mean(nobs)),
            "antithetic": config.antithetic,
            "rng": RNG_ALGORITHM,
        },
    )


def simulate_bailout(model, spec, barrier, x0, config):
    """Estimate the value of a bail-out dividend barrier by simulation.

    Same payout rule as the dividend problem, but the path is reflected at
    zero by capital injections charged at spec.beta per unit.  The mean is
    discounted dividends minus beta times discounted injections.
    """
    q, r, beta = spec.q, spec.r, spec.beta
    _check_inputs(model, q, r, barrier, x0, config)
    if beta is None:
        raise ConfigError("bail-out simulation needs spec.beta")
    n = config.paths
    alpha_cum, rates, absorb_p, trans_cum = _ph_arrays(model)
    t_max = _horizon(q, config.horizon_eps)
    div = np.zeros(n)
    inj = np.zeros(n)
    raw = np.zeros(n)
    gap = np.zeros(n)
    nobs = np.zeros(n, np.int64)
    _kernels.run_bailout(
        n, np.uint64(config.seed), config.antithetic, float(x0),
        float(barrier), model.c, model.sigma, model.kappa, r, q, t_max,
        config.dt_max, alpha_cum, rates, absorb_p, trans_cum,
        div, inj, raw, gap, nobs,
    )
    combined = div - beta * inj
    mean, stderr = _reduce(combined, config.antithetic)
    div_mean, div_se = _reduce(div, config.antithetic)
    inj_mean, inj_se = _reduce(inj, config.antithetic)
    return McEstimate(
        mean=mean,
        stderr=stderr,
        paths_used=n,
        components={
            "dividends": {"mean": div_mean, "stderr": div_se},
            "injections": {"mean": inj_mean, "stderr": inj_se},
        },
        ruin_fraction=0.0,
        extras={
            "horizon": t_max,
            "bias_horizon_factor": float(config.horizon_eps),
            "bias_injection_discount": float(beta * np.mean(gap)),
            "mean_injected_mass": float(np.mean(raw)),
            "mean_decisions": float(np.mean(nobs)),
            "antithetic": config.antithetic,
            "rng": RNG_ALGORITHM,
        },
    )


def bridge_crossing_prob(u_start, u_end, sigma, dt):
    """Probability that a Brownian bridge between positive endpoints dips
    below zero."""
    if u_start <= 0.0 or u_end <= 0.0:
        return 1.0
    return float(np.exp(-2.0 * u_start * u_end / (sigma ** 2 * dt)))


def sample_bridge_min(u_start, u_end, sigma, dt, rng):
    """Draw the minimum of a Brownian bridge via inversion of its law."""
    big_l = -0.5 * sigma ** 2 * dt * np.log(rng.uniform())
    d = u_start - u_end
    return 0.5 * ((u_start + u_end) - np.sqrt(d * d + 4.0 * big_l))


def sample_min_and_endpoint(u_start, c, sigma, dt, rng):
    """Draw the endpoint and running minimum of one drifted segment."""
    u_end = u_start - c * dt + sigma * np.sqrt(dt) * rng.standard_normal()
    return sample_bridge_min(u_start, u_end, sigma, dt, rng), u_end
