"""Mean-field annealing from a random state.

A descent starts from spins drawn uniformly in (-1, 1) and a start
temperature ``t``. The temperature drops by ``c_step`` before every level and
at each positive level the continuous spins relax to a fixed point of
``s_i = -tanh((sum_j J_ij s_j + h_i) / T)``. The rounded final state is the
answer; many cheap descents from different temperatures are run and the best
kept.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass

import numpy as np

from ..model import IsingProblem, ProblemError, round_spins
from . import _kernels
from ._common import DivergedError, RunResult, check_positive, make_rng, param_field, run_seed

TEMPERATURE_STREAM = 1


class StartMode(str, enum.Enum):
    GRID = "grid"
    UNIFORM = "uniform"


class UpdateOrder(str, enum.Enum):
    SEQUENTIAL = "sequential"
    SYNCHRONOUS = "synchronous"


@dataclass(frozen=True)
class MarsParams:
    t_min: float = param_field(0.0, "lower bound of the start-temperature range")
    t_max: float = param_field(30.0, "upper bound of the start-temperature range")
    t_step: float = param_field(1.0, "spacing of grid start temperatures")
    c_step: float = param_field(1.0, "temperature decrement per cooling level")
    d_min: float = param_field(1e-4, "fixed-point threshold on the largest spin change")
    start_mode: StartMode = param_field(StartMode.GRID, "grid sweep or uniform random start temperatures",
                                        choices=[m.value for m in StartMode])
    update: UpdateOrder = param_field(UpdateOrder.SEQUENTIAL, "in-place or trial-buffer relaxation sweeps",
                                      choices=[m.value for m in UpdateOrder])
    max_sweeps: int = param_field(1_000_000, "hard cap on relaxation sweeps per descent")

    def __post_init__(self):
        object.__setattr__(self, "start_mode", StartMode(self.start_mode))
        object.__setattr__(self, "update", UpdateOrder(self.update))
        check_positive("t_min", self.t_min, allow_zero=True)
        if not self.t_max > self.t_min:
            raise ValueError(f"t_max must exceed t_min, got [{self.t_min}, {self.t_max}]")
        check_positive("t_step", self.t_step)
        check_positive("c_step", self.c_step)
        check_positive("d_min", self.d_min)
        check_positive("max_sweeps", self.max_sweeps)

    def grid_temperatures(self) -> np.ndarray:
        count = math.floor((self.t_max - self.t_min) / self.t_step + 1e-9) + 1
        # rounding keeps 0.1-spaced grids from landing a hair above integers
        return np.round(self.t_min + self.t_step * np.arange(count), 12)


def cooling_levels(start_temp: float, c_step: float) -> np.ndarray:
    """Positive temperatures ``start - k * c_step`` for k = 1, 2, ..."""
    count = math.ceil(start_temp / c_step) + 1
    levels = start_temp - c_step * np.arange(1, count + 1)
    return levels[levels > 0.0]


def _relax(problem: IsingProblem, s: np.ndarray, levels: np.ndarray, params: MarsParams):
    sequential = params.update is UpdateOrder.SEQUENTIAL
    h = np.ascontiguousarray(problem.field)
    if problem.is_sparse:
        A = problem._adjacency
        return _kernels.relax_sparse(A.indptr, A.indices, A.data, h, s, levels,
                                     params.d_min, params.max_sweeps, sequential)
    return _kernels.relax_dense(problem.couplings, h, s, levels, params.d_min, params.max_sweeps, sequential)


def mars_relax(problem: IsingProblem, s: np.ndarray, start_temp: float, params: MarsParams) -> int:
    """Cool the continuous state ``s`` in place from ``start_temp``; returns the sweep count.

    Raises :class:`DivergedError` when the relaxation exceeds
    ``params.max_sweeps``.
    """
    if not start_temp > 0:
        raise ProblemError(f"start temperature must be positive, got {start_temp}")
    levels = cooling_levels(float(start_temp), params.c_step)
    sweeps, status = _relax(problem, s, levels, params)
    if status == _kernels.SWEEP_CAP:
        raise DivergedError(f"relaxation did not settle within {sweeps} sweeps at t={start_temp}", s, sweeps)
    return sweeps


def mars_descent(problem: IsingProblem, start_temp: float, params: MarsParams, seed) -> RunResult:
    """One descent from a fresh random state at ``start_temp``."""
    if not start_temp > 0:
        raise ProblemError(f"start temperature must be positive, got {start_temp}")
    started = time.perf_counter()
    s = make_rng(seed).uniform(-1.0, 1.0, problem.n)
    sweeps = mars_relax(problem, s, start_temp, params)
    return RunResult.from_spins(problem, round_spins(s), start_temp, sweeps, time.perf_counter() - started)


def _skipped(problem: IsingProblem, start_temp: float, seed) -> RunResult:
    s = make_rng(seed).uniform(-1.0, 1.0, problem.n)
    return RunResult.from_spins(problem, round_spins(s), start_temp, 0, 0.0, skipped=True)


def mars_run_count(params: MarsParams, runs: int | None = None) -> int:
    if params.start_mode is StartMode.GRID:
        grid = params.grid_temperatures()
        if not np.any(grid > 0.0):
            raise ValueError("temperature grid contains no positive start temperature")
        return grid.size
    if runs is None or runs < 1:
        raise ValueError("uniform start mode needs runs >= 1")
    return runs


def mars_start_temperature(params: MarsParams, base_seed: int, index: int) -> float:
    if params.start_mode is StartMode.GRID:
        return float(params.grid_temperatures()[index])
    return float(make_rng(run_seed(base_seed, index, TEMPERATURE_STREAM)).uniform(params.t_min, params.t_max))


def mars_task(problem: IsingProblem, params: MarsParams, base_seed: int, index: int) -> RunResult:
    """Descent number ``index`` of a sweep; identical whoever executes it."""
    start_temp = mars_start_temperature(params, base_seed, index)
    seed = run_seed(base_seed, index)
    if start_temp <= 0.0:
        return _skipped(problem, start_temp, seed)
    return mars_descent(problem, start_temp, params, seed)


def mars_sweep(problem: IsingProblem, params: MarsParams, seed: int, runs: int | None = None) -> list[RunResult]:
    """All descents of a sweep, in run-index order, on the calling thread.

    Grid mode ignores ``runs``. A zero start temperature yields a result
    flagged ``skipped``.
    """
    return [mars_task(problem, params, seed, i) for i in range(mars_run_count(params, runs))]
