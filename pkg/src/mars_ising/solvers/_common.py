from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from ..model import IsingProblem, cut_value, energy


class SolverError(RuntimeError):
    pass


class DivergedError(SolverError):
    """A relaxation hit its sweep cap. ``state`` holds the partial continuous state."""

    def __init__(self, message: str, state: np.ndarray, sweeps: int):
        super().__init__(message)
        self.state = state
        self.sweeps = sweeps


def run_seed(base_seed: int, index: int, stream: int = 0) -> int:
    """Derive the 64-bit seed of run ``index`` from ``base_seed``.

    The scheme is ``SeedSequence(base_seed, spawn_key=(index, stream))``
    followed by ``generate_state(1, uint64)``. Solvers feed the result to a
    Philox4x64 counter-based generator (see :func:`make_rng`), so every run has
    its own stream regardless of which worker executes it.
    """
    seq = np.random.SeedSequence(int(base_seed), spawn_key=(int(index), int(stream)))
    return int(seq.generate_state(1, np.uint64)[0])


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(int(seed)))


def check_positive(name: str, value, allow_zero: bool = False):
    if allow_zero:
        if not value >= 0:
            raise ValueError(f"{name} must be >= 0, got {value}")
    elif not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")


def interpolate_schedule(breakpoints, iters: int) -> np.ndarray:
    """Stretch breakpoints evenly over ``iters`` points by linear interpolation."""
    points = np.asarray(breakpoints, dtype=np.float64)
    if points.ndim != 1 or points.size == 0:
        raise ValueError("schedule needs at least one breakpoint")
    if points.size == 1 or iters == 1:
        return np.full(iters, points[0])
    return np.interp(np.linspace(0.0, 1.0, iters), np.linspace(0.0, 1.0, points.size), points)


@dataclass
class RunResult:
    """Outcome of a single solver run on one problem."""

    energy: float
    cut: float
    spins: np.ndarray
    start_temp: float
    descent_iters: int
    elapsed_seconds: float
    skipped: bool = False

    @classmethod
    def from_spins(cls, problem: IsingProblem, spins, start_temp, descent_iters, elapsed, skipped=False):
        spins = np.asarray(spins, dtype=np.int8)
        return cls(
            energy=energy(problem, spins),
            cut=cut_value(problem, spins),
            spins=spins,
            start_temp=float(start_temp),
            descent_iters=int(descent_iters),
            elapsed_seconds=float(elapsed),
            skipped=skipped,
        )

    def same_outcome(self, other: "RunResult") -> bool:
        """Equality ignoring ``elapsed_seconds``."""
        return (
            self.energy == other.energy
            and self.cut == other.cut
            and np.array_equal(self.spins, other.spins)
            and self.start_temp == other.start_temp
            and self.descent_iters == other.descent_iters
            and self.skipped == other.skipped
        )


def param_field(default, help: str, **kwargs):
    """Dataclass field carrying the CLI help string."""
    return dataclasses.field(default=default, metadata={"help": help, **kwargs})
