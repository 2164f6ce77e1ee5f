"""Compiled inner loops. Every kernel mutates its state array in place."""

import math

import numba as nb
import numpy as np

ZERO_TEMPERATURE = 1e-12

# reassociation lets the dense row reductions vectorize; results stay
# deterministic for a given build and machine
DENSE_MATH = {"reassoc", "contract"}

# relax_* status codes
CONVERGED = 0
SWEEP_CAP = 1


@nb.njit(cache=True)
def _mf_value(phi, T):
    if T < ZERO_TEMPERATURE:
        if phi > 0.0:
            return -1.0
        if phi < 0.0:
            return 1.0
        return 0.0
    return -math.tanh(phi / T)


@nb.njit(cache=True, fastmath=DENSE_MATH)
def relax_dense(J, h, s, levels, d_min, max_sweeps, sequential):
    """Relax ``s = -tanh((J s + h) / T)`` to a fixed point at each level in turn.

    Returns ``(sweeps, status)``. In sequential mode each spin is overwritten
    as soon as its new value is known; otherwise a trial buffer is filled
    first and copied back after the sweep.
    """
    n = s.shape[0]
    trial = np.empty(n)
    sweeps = 0
    for T in levels:
        while True:
            d = 0.0
            for i in range(n):
                phi = h[i]
                for j in range(n):
                    phi += J[i, j] * s[j]
                v = _mf_value(phi, T)
                a = abs(v - s[i])
                if a > d:
                    d = a
                if sequential:
                    s[i] = v
                else:
                    trial[i] = v
            if not sequential:
                s[:] = trial
            sweeps += 1
            if d <= d_min:
                break
            if sweeps >= max_sweeps:
                return sweeps, SWEEP_CAP
    return sweeps, CONVERGED


@nb.njit(cache=True)
def relax_sparse(indptr, indices, data, h, s, levels, d_min, max_sweeps, sequential):
    """CSR counterpart of :func:`relax_dense`."""
    n = s.shape[0]
    trial = np.empty(n)
    sweeps = 0
    for T in levels:
        while True:
            d = 0.0
            for i in range(n):
                phi = h[i]
                for k in range(indptr[i], indptr[i + 1]):
                    phi += data[k] * s[indices[k]]
                v = _mf_value(phi, T)
                a = abs(v - s[i])
                if a > d:
                    d = a
                if sequential:
                    s[i] = v
                else:
                    trial[i] = v
            if not sequential:
                s[:] = trial
            sweeps += 1
            if d <= d_min:
                break
            if sweeps >= max_sweeps:
                return sweeps, SWEEP_CAP
    return sweeps, CONVERGED


@nb.njit(cache=True)
def metropolis_chunk(indptr, indices, data, h, spins, fields, picks, uniforms, temps,
                     energy, best_energy, best_spins):
    """Run ``len(picks)`` single-flip Metropolis steps.

    ``fields`` holds ``J @ spins`` and is kept current after every accepted
    flip. Returns the updated ``(energy, best_energy)``.
    """
    n = spins.shape[0]
    for k in range(picks.shape[0]):
        i = picks[k]
        T = temps[k]
        s_i = spins[i]
        delta = -2.0 * s_i * (2.0 * fields[i] + h[i])
        if delta < 0.0:
            accept = True
        elif T <= 0.0:
            accept = False
        else:
            accept = uniforms[k] < math.exp(-delta / T)
        if accept:
            spins[i] = -s_i
            for p in range(indptr[i], indptr[i + 1]):
                fields[indices[p]] -= 2.0 * s_i * data[p]
            energy += delta
            if energy < best_energy:
                best_energy = energy
                for q in range(n):
                    best_spins[q] = spins[q]
    return energy, best_energy


@nb.njit(cache=True, fastmath=DENSE_MATH)
def mfa_sweep(J, h, p, order, T):
    """One asynchronous pass over ``order`` for the [0, 1] spin-average encoding.

    The field on spin i is ``h_i + 2 sum_j J_ij m_j`` with ``m_j = 2 p_j - 1``
    and the update is ``p_i = 1 / (1 + exp(field / T))``. Returns the largest
    change.
    """
    n = p.shape[0]
    d = 0.0
    for k in range(order.shape[0]):
        i = order[k]
        phi = h[i]
        for j in range(n):
            phi += 2.0 * J[i, j] * (2.0 * p[j] - 1.0)
        if T < ZERO_TEMPERATURE:
            v = 0.0 if phi > 0.0 else (1.0 if phi < 0.0 else 0.5)
        else:
            # 1 / (1 + e^x) without overflow
            v = 0.5 * (1.0 - math.tanh(0.5 * phi / T))
        a = abs(v - p[i])
        if a > d:
            d = a
        p[i] = v
    return d
