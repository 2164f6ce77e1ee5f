"""Seeded batch execution over a process pool and the statistics reported per batch."""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .model import IsingProblem
from .solvers import DivergedError, RunResult, run_count, run_indexed, solver_name

log = logging.getLogger(__name__)

ProgressCallback = Callable[[int, float], None]


class BatchError(RuntimeError):
    pass


@dataclass(frozen=True)
class BatchSpec:
    """``params`` selects the solver by its record type; ``workers=0`` means one per CPU."""

    params: object
    runs: int = 1
    base_seed: int = 0
    workers: int = 1
    label: str = ""

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if self.workers < 0:
            raise ValueError(f"workers must be >= 0, got {self.workers}")
        solver_name(self.params)

    @property
    def solver(self) -> str:
        return solver_name(self.params)

    @property
    def name(self) -> str:
        return self.label or self.solver


@dataclass
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray


@dataclass
class BatchStats:
    best_energy: float
    mean_energy: float
    best_cut: float
    mean_cut: float
    hit_count: int
    success_probability: float
    total_seconds: float
    mean_seconds_per_run: float
    best_result: RunResult
    energies: np.ndarray
    cuts: np.ndarray
    results: list  # index-addressed; None where the run failed
    failed_runs: list[int] = field(default_factory=list)
    skipped_runs: list[int] = field(default_factory=list)

    @property
    def runs(self) -> int:
        return int(self.energies.size)

    def summary(self, include_timing: bool = True) -> dict:
        out = {
            "runs": self.runs,
            "best_energy": self.best_energy,
            "mean_energy": self.mean_energy,
            "best_cut": self.best_cut,
            "mean_cut": self.mean_cut,
            "hit_count": self.hit_count,
            "success_probability": self.success_probability,
            "best_start_temp": self.best_result.start_temp,
            "failed_runs": list(self.failed_runs),
            "skipped_runs": list(self.skipped_runs),
        }
        if include_timing:
            out["total_seconds"] = self.total_seconds
            out["mean_seconds_per_run"] = self.mean_seconds_per_run
        return out

    def same_outcome(self, other: "BatchStats") -> bool:
        """Equality on everything except wall-clock fields."""
        if self.summary(False) != other.summary(False):
            return False
        if not (np.array_equal(self.energies, other.energies) and np.array_equal(self.cuts, other.cuts)):
            return False
        return all(
            (a is None and b is None) or (a is not None and b is not None and a.same_outcome(b))
            for a, b in zip(self.results, other.results)
        )


def resolve_workers(workers: int) -> int:
    return workers if workers > 0 else (os.cpu_count() or 1)


_worker_state: dict = {}


def _init_worker(problem, params, base_seed):
    # one BLAS thread per process keeps results independent of the pool size
    _worker_state["limits"] = threadpool_limits(1)
    _worker_state["job"] = (problem, params, base_seed)


def _execute(index: int):
    problem, params, base_seed = _worker_state["job"]
    return _guarded(problem, params, base_seed, index)


def _execute_chunk(indices):
    return [(i, _execute(i)) for i in indices]


def _guarded(problem, params, base_seed, index):
    try:
        return run_indexed(problem, params, base_seed, index)
    except DivergedError as exc:
        return exc


def _chunks(count: int, workers: int):
    size = max(1, min(64, count // (workers * 8) or 1))
    return [range(i, min(i + size, count)) for i in range(0, count, size)]


def run_batch(problem: IsingProblem, spec: BatchSpec, progress: ProgressCallback | None = None) -> BatchStats:
    """Execute ``spec.runs`` seeded runs and aggregate them.

    Run ``i`` is seeded from ``(spec.base_seed, i)`` only, so the statistics
    (apart from timings) do not depend on the worker count. Diverged runs are
    logged and left out of the statistics; a batch in which every run fails
    raises :class:`BatchError`.
    """
    count = run_count(spec.params, spec.runs)
    workers = min(resolve_workers(spec.workers), count)
    outcomes: list = [None] * count
    best_so_far = np.inf

    def record(i, outcome):
        nonlocal best_so_far
        outcomes[i] = outcome
        if isinstance(outcome, RunResult) and not outcome.skipped and outcome.energy < best_so_far:
            best_so_far = outcome.energy
        if progress is not None:
            progress(i, best_so_far)

    started = time.perf_counter()
    if workers <= 1:
        with threadpool_limits(1):
            for i in range(count):
                record(i, _guarded(problem, spec.params, spec.base_seed, i))
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(problem, spec.params, spec.base_seed)) as pool:
            futures = [pool.submit(_execute_chunk, chunk) for chunk in _chunks(count, workers)]
            for fut in as_completed(futures):
                for i, outcome in fut.result():
                    record(i, outcome)
    total = time.perf_counter() - started
    return aggregate(problem, outcomes, total)


def aggregate(problem: IsingProblem, outcomes: Sequence, total_seconds: float) -> BatchStats:
    results = []
    failed, skipped = [], []
    for i, outcome in enumerate(outcomes):
        if isinstance(outcome, DivergedError):
            failed.append(i)
            results.append(None)
            continue
        results.append(outcome)
        if outcome.skipped:
            skipped.append(i)
    if failed:
        log.warning("%d of %d runs diverged and were excluded", len(failed), len(outcomes))
    valid = [r for r in results if r is not None and not r.skipped]
    if not valid:
        raise BatchError(f"no usable runs: {len(failed)} diverged, {len(skipped)} skipped")
    energies = np.array([r.energy for r in valid])
    cuts = np.array([r.cut for r in valid])
    k = int(np.argmin(energies))
    best = valid[k]
    hits = int(sum(problem.energies_equal(float(e), best.energy) for e in energies))
    return BatchStats(
        best_energy=best.energy,
        mean_energy=float(np.mean(energies)),
        best_cut=best.cut,
        mean_cut=float(np.mean(cuts)),
        hit_count=hits,
        success_probability=hits / int(energies.size),
        total_seconds=total_seconds,
        mean_seconds_per_run=float(np.mean([r.elapsed_seconds for r in valid])),
        best_result=best,
        energies=energies,
        cuts=cuts,
        results=results,
        failed_runs=failed,
        skipped_runs=skipped,
    )


def success_probability(stats: BatchStats, reference_energy: float, tolerance: float) -> float:
    """Fraction of runs within ``tolerance`` of an external reference energy."""
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    return float(np.mean(np.abs(stats.energies - reference_energy) <= tolerance))


def histogram(energies, bins: int) -> Histogram:
    """Equal-width bins over [min, max]; the last bin is closed on the right."""
    values = np.asarray(energies, dtype=np.float64)
    if values.size == 0:
        raise ValueError("histogram needs at least one sample")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        return Histogram(np.array([lo - 0.5, lo + 0.5]), np.array([values.size]))
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return Histogram(edges, counts)


@dataclass
class ComparisonRow:
    label: str
    solver: str
    stats: BatchStats | None
    error: str | None = None


@dataclass
class ComparisonTable:
    rows: list[ComparisonRow]
    winner: str | None


def compare_solvers(problem: IsingProblem, specs: Sequence[BatchSpec],
                    progress: ProgressCallback | None = None) -> ComparisonTable:
    """One batch per spec; the winner has the lowest best energy, then lowest mean, then comes first."""
    if not specs:
        raise ValueError("compare_solvers needs at least one spec")
    rows = []
    for spec in specs:
        try:
            rows.append(ComparisonRow(spec.name, spec.solver, run_batch(problem, spec, progress)))
        except BatchError as exc:
            rows.append(ComparisonRow(spec.name, spec.solver, None, str(exc)))
    winner = None
    best = None
    for row in rows:
        if row.stats is None:
            continue
        if best is None:
            best, winner = row.stats, row.label
            continue
        s = row.stats
        if problem.energies_equal(s.best_energy, best.best_energy):
            better = s.mean_energy < best.mean_energy
        else:
            better = s.best_energy < best.best_energy
        if better:
            best, winner = s, row.label
    return ComparisonTable(rows, winner)
