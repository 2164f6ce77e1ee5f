"""Ising problem representation, energy and cut evaluation, and an exact small-N oracle.

Energies use the ordered double sum

    H(sigma) = sum_i sum_{j != i} J_ij sigma_i sigma_j + sum_i h_i sigma_i

so every unordered pair contributes twice. The cut value of the partition
encoded by sigma is ``(sum_ij J_ij - sum_ij J_ij sigma_i sigma_j) / 4``.
"""

from __future__ import annotations

import hashlib
import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

SPARSE_DENSITY_THRESHOLD = 0.10
BRUTE_FORCE_MAX_N = 26
REAL_ENERGY_ATOL = 1e-9


class ProblemError(ValueError):
    """Invalid problem data or mismatched dimensions."""


@dataclass(frozen=True, eq=False)
class IsingProblem:
    """Symmetric couplings with zero diagonal plus an external field.

    Arrays are copied and made read-only, so instances can be shared freely
    between workers. Problems with edge density below 10% also carry a CSR
    adjacency matrix which is used for all matrix-vector products.
    """

    couplings: np.ndarray
    field: np.ndarray = None
    name: str = ""
    _adjacency: sp.csr_matrix | None = dataclasses.field(default=None, init=False, repr=False)
    _integer: bool = dataclasses.field(default=False, init=False, repr=False)

    def __post_init__(self):
        J = np.array(self.couplings, dtype=np.float64)
        if J.ndim != 2 or J.shape[0] != J.shape[1] or J.shape[0] < 1:
            raise ProblemError(f"couplings must be a non-empty square matrix, got shape {J.shape}")
        n = J.shape[0]
        if not np.all(np.isfinite(J)):
            raise ProblemError("couplings contain non-finite values")
        if np.any(np.diag(J) != 0.0):
            raise ProblemError("couplings must have a zero diagonal")
        if not np.array_equal(J, J.T):
            raise ProblemError("couplings must be symmetric")
        h = np.zeros(n) if self.field is None else np.array(self.field, dtype=np.float64).reshape(-1)
        if h.shape != (n,):
            raise ProblemError(f"field has length {h.size}, expected {n}")
        if not np.all(np.isfinite(h)):
            raise ProblemError("field contains non-finite values")
        J.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "couplings", J)
        object.__setattr__(self, "field", h)
        object.__setattr__(self, "_integer", bool(np.all(J == np.round(J)) and np.all(h == np.round(h))))
        nnz = np.count_nonzero(J)
        if n > 1 and nnz / (n * (n - 1)) < SPARSE_DENSITY_THRESHOLD:
            object.__setattr__(self, "_adjacency", sp.csr_matrix(J))

    @classmethod
    def from_edges(cls, n: int, edges, field=None, name: str = "") -> "IsingProblem":
        """Build a problem from 0-based ``(i, j, w)`` triples (one per unordered pair)."""
        J = np.zeros((n, n))
        for i, j, w in edges:
            J[i, j] = J[j, i] = w
        return cls(J, field, name=name)

    @property
    def n(self) -> int:
        return self.couplings.shape[0]

    @property
    def is_sparse(self) -> bool:
        return self._adjacency is not None

    @property
    def has_field(self) -> bool:
        return bool(np.any(self.field))

    @property
    def is_integer(self) -> bool:
        """True when every coupling and field entry is an integer."""
        return self._integer

    @property
    def total_weight(self) -> float:
        """Sum of J_ij over all ordered pairs."""
        return float(self.couplings.sum())

    @property
    def row_norms_sq(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.couplings, self.couplings)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Return ``J @ x``; ``x`` may be a vector or an ``(n, k)`` block."""
        if self._adjacency is not None:
            return self._adjacency @ x
        return self.couplings @ x

    def content_hash(self) -> str:
        """SHA-256 over the shape, couplings and field (little-endian float64)."""
        digest = hashlib.sha256()
        digest.update(np.int64(self.n).tobytes())
        digest.update(np.ascontiguousarray(self.couplings, dtype="<f8").tobytes())
        digest.update(np.ascontiguousarray(self.field, dtype="<f8").tobytes())
        return digest.hexdigest()

    def energies_equal(self, a: float, b: float) -> bool:
        """Ground-state comparison: exact for integer data, 1e-9 absolute otherwise."""
        if self.is_integer:
            return a == b
        return abs(a - b) <= REAL_ENERGY_ATOL


def _as_spins(problem: IsingProblem, spins) -> np.ndarray:
    s = np.asarray(spins)
    if s.shape != (problem.n,):
        raise ProblemError(f"spin vector has shape {s.shape}, expected ({problem.n},)")
    return s.astype(np.float64, copy=False)


def _check_index(problem: IsingProblem, i: int) -> int:
    if not 0 <= i < problem.n:
        raise ProblemError(f"spin index {i} out of range for n={problem.n}")
    return int(i)


def coupling_term(problem: IsingProblem, spins) -> float:
    """Ordered double sum ``sum_{i,j} J_ij s_i s_j``."""
    s = _as_spins(problem, spins)
    return float(s @ problem.matvec(s))


def energy(problem: IsingProblem, spins) -> float:
    s = _as_spins(problem, spins)
    return float(s @ problem.matvec(s) + problem.field @ s)


def cut_value(problem: IsingProblem, spins) -> float:
    """Total weight of edges crossing the partition given by the sign of ``spins``."""
    return 0.25 * (problem.total_weight - coupling_term(problem, spins))


def local_field(problem: IsingProblem, state, i: int) -> float:
    """``sum_j J_ij s_j`` for spin ``i``; the external field is not included."""
    i = _check_index(problem, i)
    s = _as_spins(problem, state)
    if problem.is_sparse:
        row = problem._adjacency.getrow(i)
        return float(row.data @ s[row.indices])
    return float(problem.couplings[i] @ s)


def flip_delta(problem: IsingProblem, spins, i: int) -> float:
    """Energy change from negating spin ``i``, in O(N)."""
    s_i = float(_as_spins(problem, spins)[_check_index(problem, i)])
    return -2.0 * s_i * (2.0 * local_field(problem, spins, i) + problem.field[i])


def round_spins(state) -> np.ndarray:
    """Sign of each value as int8 spins; exact zeros go to +1."""
    values = np.asarray(state, dtype=np.float64)
    return np.where(values < 0.0, -1, 1).astype(np.int8)


def _enumeration_chunk(n: int, start: int, stop: int) -> np.ndarray:
    # bit (n-1-k) of the code is spin k, 0 -> -1, so codes ascend lexicographically
    codes = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (codes[:, None] >> shifts[None, :]) & 1
    return (2 * bits - 1).astype(np.float64)


def brute_force_ground_state(problem: IsingProblem, max_n: int = BRUTE_FORCE_MAX_N, chunk: int = 1 << 16):
    """Enumerate all 2^n configurations and return ``(energy, spins)`` of the minimum.

    Ties resolve to the lexicographically smallest spin pattern with -1 ordered
    before +1.
    """
    n = problem.n
    if n > max_n:
        raise ProblemError(f"brute force refused for n={n} (limit {max_n})")
    J, h = problem.couplings, problem.field
    best_energy = np.inf
    best_code = 0
    total = 1 << n
    for start in range(0, total, chunk):
        S = _enumeration_chunk(n, start, min(start + chunk, total))
        E = np.einsum("ki,ki->k", S @ J, S) + S @ h
        k = int(np.argmin(E))
        if E[k] < best_energy:
            best_energy = float(E[k])
            best_code = start + k
    spins = _enumeration_chunk(n, best_code, best_code + 1)[0].astype(np.int8)
    # report with the same evaluation path the solvers use
    return energy(problem, spins), spins
