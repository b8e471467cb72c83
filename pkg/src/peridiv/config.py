"""Experiment configuration loading and validation.

Configurations are JSON objects with up to six blocks: model, problem,
grid, mc, sweep and verification.  Validation is strict: unknown keys
anywhere are rejected, and every diagnostic names the offending key by
its dotted path.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import PhaseTypeLevyModel, folded_normal_phase_fit
from .simulator import McConfig
from .valuation import KIND_BAILOUT, KIND_DIVIDENDS, ProblemSpec

__all__ = [
    "GridConfig",
    "SweepConfig",
    "VerificationConfig",
    "ExperimentConfig",
    "load_config",
    "config_from_dict",
]

BUILTIN_JUMP_LAWS = {"builtin_folded_normal": folded_normal_phase_fit}


@dataclass(frozen=True)
class GridConfig:
    """Evaluation grid: x_max is inferred from the solution when None."""

    x_max: object = None
    n_points: int = 201
    x_eval: tuple = (0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class SweepConfig:
    r_list: tuple = ()
    rho_list: tuple = ()
    b_list: tuple = ()


@dataclass(frozen=True)
class VerificationConfig:
    hjb_tol: float = 1e-5
    closed_rel_tol: float = 1e-6
    grid_points: int = 200


@dataclass(frozen=True)
class ExperimentConfig:
    model: PhaseTypeLevyModel
    problem: ProblemSpec
    grid: GridConfig
    mc: McConfig
    sweep: SweepConfig
    verification: VerificationConfig
    raw: dict


def _require_mapping(value, path):
    if not isinstance(value, dict):
        raise ConfigError("{} must be an object".format(path))
    return value


def _reject_unknown(block, allowed, path):
    unknown = sorted(set(block) - set(allowed))
    if unknown:
        raise ConfigError(
            "unknown key{} {} in {} (allowed: {})".format(
                "s" if len(unknown) > 1 else "",
                ", ".join(repr(k) for k in unknown),
                path,
                ", ".join(sorted(allowed)),
            )
        )


def _number(block, key, path, default=None, required=False):
    if key not in block:
        if required:
            raise ConfigError("missing required key {}.{}".format(path, key))
        return default
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError("{}.{} must be a number".format(path, key))
    return float(value)


def _integer(block, key, path, default=None, required=False):
    if key not in block:
        if required:
            raise ConfigError("missing required key {}.{}".format(path, key))
        return default
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError("{}.{} must be an integer".format(path, key))
    return value


def _boolean(block, key, path, default=False):
    value = block.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError("{}.{} must be true or false".format(path, key))
    return value


def _float_list(block, key, path):
    if key not in block:
        return ()
    value = block[key]
    if not isinstance(value, list):
        raise ConfigError("{}.{} must be a list of numbers".format(path, key))
    out = []
    for i, item in enumerate(value):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(
                "{}.{}[{}] must be a number".format(path, key, i)
            )
        out.append(float(item))
    return tuple(out)


def _matrix(block, key, path):
    value = block.get(key)
    if not isinstance(value, list) or not all(
        isinstance(row, list) for row in value
    ):
        raise ConfigError("{}.{} must be a list of rows".format(path, key))
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError("{}.{} is not numeric: {}".format(path, key, exc))
    if arr.ndim != 2:
        raise ConfigError("{}.{} must be two-dimensional".format(path, key))
    return arr


def _parse_model(block):
    path = "model"
    block = _require_mapping(block, path)
    _reject_unknown(
        block, {"c", "sigma", "kappa", "alpha", "T", "jump_law"}, path
    )
    c = _number(block, "c", path, required=True)
    sigma = _number(block, "sigma", path, default=0.0)
    kappa = _number(block, "kappa", path, default=0.0)
    alpha = None
    t_mat = None
    if "jump_law" in block:
        if "alpha" in block or "T" in block:
            raise ConfigError(
                "model.jump_law excludes explicit model.alpha / model.T"
            )
        name = block["jump_law"]
        if name not in BUILTIN_JUMP_LAWS:
            raise ConfigError(
                "unknown model.jump_law {!r} (available: {})".format(
                    name, ", ".join(sorted(BUILTIN_JUMP_LAWS))
                )
            )
        alpha, t_mat = BUILTIN_JUMP_LAWS[name]()
    elif "alpha" in block or "T" in block:
        if "alpha" not in block or "T" not in block:
            raise ConfigError("model.alpha and model.T must come together")
        alpha = np.array(
            _float_list(block, "alpha", path), dtype=float
        )
        t_mat = _matrix(block, "T", path)
    elif kappa > 0.0:
        raise ConfigError(
            "model.kappa > 0 needs a jump law (jump_law or alpha + T)"
        )
    try:
        return PhaseTypeLevyModel(
            c=c, sigma=sigma, kappa=kappa, alpha=alpha, T=t_mat
        )
    except ValueError as exc:
        raise ConfigError("model: {}".format(exc))


def _parse_problem(block):
    path = "problem"
    block = _require_mapping(block, path)
    _reject_unknown(block, {"kind", "q", "r", "rho", "beta"}, path)
    kind = block.get("kind")
    if kind not in (KIND_DIVIDENDS, KIND_BAILOUT):
        raise ConfigError(
            "problem.kind must be {!r} or {!r}".format(
                KIND_DIVIDENDS, KIND_BAILOUT
            )
        )
    q = _number(block, "q", path, required=True)
    r = _number(block, "r", path, required=True)
    kwargs = {}
    if kind == KIND_DIVIDENDS:
        if "beta" in block:
            raise ConfigError("problem.beta only applies to bail-out runs")
        kwargs["rho"] = _number(block, "rho", path, default=0.0)
    else:
        if "rho" in block:
            raise ConfigError("problem.rho only applies to dividend runs")
        kwargs["beta"] = _number(block, "beta", path, required=True)
    try:
        return ProblemSpec(kind=kind, q=q, r=r, **kwargs)
    except ValueError as exc:
        raise ConfigError("problem: {}".format(exc))


def _parse_grid(block):
    path = "grid"
    block = _require_mapping(block, path)
    _reject_unknown(block, {"x_max", "n_points", "x_eval"}, path)
    x_max = _number(block, "x_max", path)
    if x_max is not None and x_max <= 0.0:
        raise ConfigError("grid.x_max must be positive")
    n_points = _integer(block, "n_points", path, default=201)
    if n_points < 2:
        raise ConfigError("grid.n_points must be at least 2")
    x_eval = _float_list(block, "x_eval", path)
    if "x_eval" in block:
        if not x_eval:
            raise ConfigError("grid.x_eval must not be empty")
        if any(x < 0.0 for x in x_eval):
            raise ConfigError("grid.x_eval entries must be nonnegative")
    else:
        x_eval = GridConfig.x_eval
    return GridConfig(x_max=x_max, n_points=n_points, x_eval=x_eval)


def _parse_mc(block):
    path = "mc"
    block = _require_mapping(block, path)
    _reject_unknown(
        block, {"paths", "seed", "horizon_eps", "dt_max", "antithetic"}, path
    )
    try:
        return McConfig(
            paths=_integer(block, "paths", path, default=100000),
            seed=_integer(block, "seed", path, default=0),
            horizon_eps=_number(block, "horizon_eps", path, default=1e-6),
            dt_max=_number(block, "dt_max", path, default=0.01),
            antithetic=_boolean(block, "antithetic", path),
        )
    except ConfigError as exc:
        raise ConfigError("mc: {}".format(exc))


def _parse_sweep(block):
    path = "sweep"
    block = _require_mapping(block, path)
    _reject_unknown(block, {"r_list", "rho_list", "b_list"}, path)
    sweep = SweepConfig(
        r_list=_float_list(block, "r_list", path),
        rho_list=_float_list(block, "rho_list", path),
        b_list=_float_list(block, "b_list", path),
    )
    if any(r <= 0.0 for r in sweep.r_list):
        raise ConfigError("sweep.r_list entries must be positive")
    if any(b < 0.0 for b in sweep.b_list):
        raise ConfigError("sweep.b_list entries must be nonnegative")
    return sweep


def _parse_verification(block):
    path = "verification"
    block = _require_mapping(block, path)
    _reject_unknown(
        block, {"hjb_tol", "closed_rel_tol", "grid_points"}, path
    )
    hjb_tol = _number(block, "hjb_tol", path, default=1e-5)
    closed_rel_tol = _number(block, "closed_rel_tol", path, default=1e-6)
    grid_points = _integer(block, "grid_points", path, default=200)
    if hjb_tol <= 0.0 or closed_rel_tol <= 0.0:
        raise ConfigError("verification tolerances must be positive")
    if grid_points < 2:
        raise ConfigError("verification.grid_points must be at least 2")
    return VerificationConfig(
        hjb_tol=hjb_tol,
        closed_rel_tol=closed_rel_tol,
        grid_points=grid_points,
    )


def config_from_dict(data):
    """Validate a parsed configuration object."""
    data = _require_mapping(data, "configuration")
    _reject_unknown(
        data,
        {"model", "problem", "grid", "mc", "sweep", "verification"},
        "configuration",
    )
    for key in ("model", "problem"):
        if key not in data:
            raise ConfigError(
                "missing required configuration block {!r}".format(key)
            )
    return ExperimentConfig(
        model=_parse_model(data["model"]),
        problem=_parse_problem(data["problem"]),
        grid=_parse_grid(data.get("grid", {})),
        mc=_parse_mc(data.get("mc", {})),
        sweep=_parse_sweep(data.get("sweep", {})),
        verification=_parse_verification(data.get("verification", {})),
        raw=data,
    )


def load_config(path):
    """Read and validate a JSON configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("cannot read config {}: {}".format(path, exc))
    except json.JSONDecodeError as exc:
        raise ConfigError("invalid JSON in {}: {}".format(path, exc))
    return config_from_dict(data)
