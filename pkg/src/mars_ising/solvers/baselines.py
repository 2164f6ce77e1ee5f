"""Reference heuristics: Metropolis simulated annealing, mean-field annealing,
noisy mean-field annealing and a simulated coherent Ising machine."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..model import IsingProblem, energy, round_spins
from . import _kernels
from ._common import RunResult, check_positive, interpolate_schedule, make_rng, param_field

SA_CHUNK = 1 << 16


class Schedule(str, enum.Enum):
    GEOMETRIC = "geometric"
    LINEAR = "linear"


@dataclass(frozen=True)
class SaParams:
    t_init: float = param_field(5.0, "initial temperature")
    t_final: float = param_field(0.01, "final temperature")
    schedule: Schedule = param_field(Schedule.GEOMETRIC, "cooling law between t_init and t_final",
                                     choices=[m.value for m in Schedule])
    mc_steps: int = param_field(100_000, "number of single-spin-flip Metropolis steps")

    def __post_init__(self):
        object.__setattr__(self, "schedule", Schedule(self.schedule))
        check_positive("t_final", self.t_final, allow_zero=True)
        degenerate = self.t_init == 0 and self.t_final == 0
        if not (degenerate or self.t_init > self.t_final):
            raise ValueError(f"need t_init > t_final >= 0, got {self.t_init} -> {self.t_final}")
        if self.schedule is Schedule.GEOMETRIC and self.t_final == 0 and not degenerate:
            raise ValueError("geometric cooling needs t_final > 0")
        check_positive("mc_steps", self.mc_steps)

    def temperatures(self, start: int, stop: int) -> np.ndarray:
        """Temperatures of steps ``start..stop-1``, hitting t_final at the last step."""
        k = np.arange(start, stop, dtype=np.float64)
        span = max(self.mc_steps - 1, 1)
        if self.t_init == self.t_final:
            return np.full(k.size, float(self.t_init))
        if self.schedule is Schedule.LINEAR:
            return self.t_init + (self.t_final - self.t_init) * k / span
        ratio = (self.t_final / self.t_init) ** (1.0 / span)
        return self.t_init * ratio**k


def _csr(problem: IsingProblem) -> sp.csr_matrix:
    return problem._adjacency if problem.is_sparse else sp.csr_matrix(problem.couplings)


def sa_chain(problem: IsingProblem, params: SaParams, seed) -> tuple[np.ndarray, np.ndarray]:
    """Metropolis annealing from a random configuration; returns ``(best, final)`` spins."""
    rng = make_rng(seed)
    n = problem.n
    A = _csr(problem)
    h = np.ascontiguousarray(problem.field)
    spins = rng.choice(np.array([-1.0, 1.0]), size=n)
    fields = np.asarray(A @ spins, dtype=np.float64)
    current = energy(problem, spins)
    best = current
    best_spins = spins.copy()
    for start in range(0, params.mc_steps, SA_CHUNK):
        stop = min(start + SA_CHUNK, params.mc_steps)
        picks = rng.integers(0, n, stop - start)
        uniforms = rng.random(stop - start)
        current, best = _kernels.metropolis_chunk(
            A.indptr, A.indices, A.data, h, spins, fields, picks, uniforms,
            params.temperatures(start, stop), current, best, best_spins,
        )
    # the running energy accumulates rounding, so settle the tie by re-evaluation
    if energy(problem, spins) < energy(problem, best_spins):
        best_spins = spins.copy()
    return best_spins.astype(np.int8), spins.astype(np.int8)


def sa_run(problem: IsingProblem, params: SaParams, seed) -> RunResult:
    started = time.perf_counter()
    best, _ = sa_chain(problem, params, seed)
    return RunResult.from_spins(problem, best, params.t_init, params.mc_steps, time.perf_counter() - started)


@dataclass(frozen=True)
class MfaParams:
    t_init: float = param_field(10.0, "initial temperature")
    t_final: float = param_field(0.05, "stop once the temperature drops below this")
    t_decay: float = param_field(0.9, "geometric cooling factor per level")
    init_noise_sigma: float = param_field(0.01, "std of the Gaussian offset added to the initial 1/2 averages")
    max_relax_iters: int = param_field(1000, "sweep cap per temperature level")
    d_min: float = param_field(1e-4, "fixed-point threshold on the largest average change")

    def __post_init__(self):
        check_positive("t_final", self.t_final)
        if not self.t_init > self.t_final:
            raise ValueError(f"need t_init > t_final, got {self.t_init} -> {self.t_final}")
        if not 0 < self.t_decay < 1:
            raise ValueError(f"t_decay must lie in (0, 1), got {self.t_decay}")
        check_positive("init_noise_sigma", self.init_noise_sigma, allow_zero=True)
        check_positive("max_relax_iters", self.max_relax_iters)
        check_positive("d_min", self.d_min)


def mfa_probability(phi, T: float):
    """Spin-up average ``1 / (1 + exp(phi / T))`` in [0, 1]."""
    return 0.5 * (1.0 - np.tanh(0.5 * np.asarray(phi, dtype=np.float64) / T))


def mfa_run(problem: IsingProblem, params: MfaParams, seed) -> RunResult:
    """Mean-field annealing on spin-up averages in [0, 1], thresholded at 1/2 at the end."""
    started = time.perf_counter()
    rng = make_rng(seed)
    n = problem.n
    J = problem.couplings
    h = np.ascontiguousarray(problem.field)
    p = np.clip(0.5 + rng.normal(0.0, params.init_noise_sigma, n), 0.0, 1.0)
    sweeps = 0
    T = params.t_init
    while T >= params.t_final:
        for _ in range(params.max_relax_iters):
            d = _kernels.mfa_sweep(J, h, p, rng.permutation(n), T)
            sweeps += 1
            if d <= params.d_min:
                break
        T *= params.t_decay
    spins = np.where(p > 0.5, 1, -1).astype(np.int8)
    return RunResult.from_spins(problem, spins, params.t_init, sweeps, time.perf_counter() - started)


@dataclass(frozen=True)
class NmfaParams:
    alpha: float = param_field(0.15, "weight of the new thermal average in the convex update")
    noise_sigma: float = param_field(0.15, "std of Gaussian noise added to the normalized field")
    schedule: tuple = param_field((1.0, 0.5, 0.05), "temperature breakpoints stretched over iters")
    iters: int = param_field(1000, "number of update iterations")

    def __post_init__(self):
        object.__setattr__(self, "schedule", tuple(float(t) for t in self.schedule))
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        check_positive("noise_sigma", self.noise_sigma, allow_zero=True)
        check_positive("iters", self.iters)
        if not self.schedule or min(self.schedule) < 0:
            raise ValueError("schedule needs non-negative temperatures")


def normalized_field(problem: IsingProblem, state: np.ndarray) -> np.ndarray:
    """``(h + J s) / sqrt(h^2 + sum_j J_ij^2)``; isolated unbiased spins get 0."""
    norm = np.sqrt(problem.field**2 + problem.row_norms_sq)
    raw = problem.matvec(state) + problem.field
    out = np.zeros(problem.n)
    np.divide(raw, norm, out=out, where=norm > 0)
    return out


def thermal_average(phi: np.ndarray, T: float) -> np.ndarray:
    if T < _kernels.ZERO_TEMPERATURE:
        return -np.sign(phi)
    return -np.tanh(phi / T)


def nmfa_step(problem: IsingProblem, state: np.ndarray, T: float, alpha: float, noise: np.ndarray | None = None):
    """One synchronous update ``s <- alpha * s_hat + (1 - alpha) * s``."""
    phi = normalized_field(problem, state)
    if noise is not None:
        phi = phi + noise
    return alpha * thermal_average(phi, T) + (1.0 - alpha) * state


def nmfa_run(problem: IsingProblem, params: NmfaParams, seed) -> RunResult:
    started = time.perf_counter()
    rng = make_rng(seed)
    s = np.zeros(problem.n)
    temps = interpolate_schedule(params.schedule, params.iters)
    for T in temps:
        noise = rng.normal(0.0, params.noise_sigma, problem.n) if params.noise_sigma > 0 else None
        s = nmfa_step(problem, s, T, params.alpha, noise)
    return RunResult.from_spins(problem, round_spins(s), temps[0], params.iters, time.perf_counter() - started)


@dataclass(frozen=True)
class SimCimParams:
    step_size: float = param_field(0.1, "gradient step per iteration")
    noise_sigma: float = param_field(0.05, "std of Gaussian noise added each iteration")
    pump: tuple = param_field((-1.0, 1.0), "pump breakpoints stretched linearly over iters")
    iters: int = param_field(1000, "number of iterations")

    def __post_init__(self):
        object.__setattr__(self, "pump", tuple(float(p) for p in self.pump))
        check_positive("step_size", self.step_size)
        check_positive("noise_sigma", self.noise_sigma, allow_zero=True)
        check_positive("iters", self.iters)
        if not self.pump:
            raise ValueError("pump needs at least one breakpoint")

    def pump_schedule(self) -> np.ndarray:
        return interpolate_schedule(self.pump, self.iters)


def simcim_force(problem: IsingProblem, x: np.ndarray) -> np.ndarray:
    """Descent direction of the energy, ``-(1/2) sum_k J_jk x_k - h_j / 4``."""
    return -0.5 * problem.matvec(x) - 0.25 * problem.field


def simcim_step(problem: IsingProblem, x: np.ndarray, pump: float, step_size: float,
                noise: np.ndarray | None = None) -> np.ndarray:
    """``clip(x + step * (pump * x + F(x)) + noise, -1, 1)``."""
    out = x + step_size * (pump * x + simcim_force(problem, x))
    if noise is not None:
        out += noise
    return np.clip(out, -1.0, 1.0, out=out)


def simcim_run(problem: IsingProblem, params: SimCimParams, seed) -> RunResult:
    """Pumped, clamped gradient dynamics on amplitudes starting at zero."""
    started = time.perf_counter()
    rng = make_rng(seed)
    x = np.zeros(problem.n)
    pump = params.pump_schedule()
    for p_t in pump:
        noise = rng.normal(0.0, params.noise_sigma, problem.n) if params.noise_sigma > 0 else None
        x = simcim_step(problem, x, p_t, params.step_size, noise)
    return RunResult.from_spins(problem, round_spins(x), pump[0], params.iters, time.perf_counter() - started)
