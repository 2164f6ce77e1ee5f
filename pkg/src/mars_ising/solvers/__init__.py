"""MARS and the baseline heuristics behind one contract: ``(problem, params, seed) -> RunResult``."""

from ._common import DivergedError, RunResult, SolverError, make_rng, run_seed
from .baselines import (
    MfaParams,
    NmfaParams,
    SaParams,
    Schedule,
    SimCimParams,
    mfa_probability,
    mfa_run,
    nmfa_run,
    nmfa_step,
    normalized_field,
    sa_chain,
    sa_run,
    simcim_force,
    simcim_run,
    simcim_step,
    thermal_average,
)
from .mars import (
    MarsParams,
    StartMode,
    UpdateOrder,
    cooling_levels,
    mars_descent,
    mars_relax,
    mars_run_count,
    mars_sweep,
    mars_task,
)

PARAMS = {
    "mars": MarsParams,
    "sa": SaParams,
    "mfa": MfaParams,
    "nmfa": NmfaParams,
    "simcim": SimCimParams,
}

_RUNNERS = {
    "sa": sa_run,
    "mfa": mfa_run,
    "nmfa": nmfa_run,
    "simcim": simcim_run,
}


def solver_name(params) -> str:
    for name, cls in PARAMS.items():
        if isinstance(params, cls):
            return name
    raise TypeError(f"unknown parameter record {type(params).__name__}")


def run_count(params, runs: int) -> int:
    """Number of runs a batch executes; a MARS grid sweep fixes its own count."""
    if isinstance(params, MarsParams):
        return mars_run_count(params, runs)
    if runs < 1:
        raise ValueError("runs must be >= 1")
    return runs


def run_indexed(problem, params, base_seed: int, index: int) -> RunResult:
    """Run ``index`` of a batch; the seed depends only on ``(base_seed, index)``."""
    if isinstance(params, MarsParams):
        return mars_task(problem, params, base_seed, index)
    return _RUNNERS[solver_name(params)](problem, params, run_seed(base_seed, index))


__all__ = [
    "DivergedError", "RunResult", "SolverError", "make_rng", "run_seed",
    "MarsParams", "StartMode", "UpdateOrder", "cooling_levels", "mars_descent", "mars_relax", "mars_run_count",
    "mars_sweep", "mars_task",
    "SaParams", "Schedule", "sa_chain", "sa_run", "MfaParams", "mfa_probability", "mfa_run", "NmfaParams", "nmfa_run", "nmfa_step",
    "normalized_field", "SimCimParams", "simcim_force", "simcim_run", "simcim_step", "thermal_average",
    "PARAMS", "solver_name", "run_count", "run_indexed",
]
