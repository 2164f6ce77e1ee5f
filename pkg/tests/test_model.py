import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import enumerate_energies, random_symmetric
from mars_ising.model import (
    IsingProblem,
    ProblemError,
    brute_force_ground_state,
    coupling_term,
    cut_value,
    energy,
    flip_delta,
    local_field,
    round_spins,
)

UNIT_PAIR = np.array([[0.0, 1.0], [1.0, 0.0]])


@pytest.mark.parametrize(
    "field, spins, expected",
    [
        (None, (1, 1), 2.0),
        (None, (1, -1), -2.0),
        ((1, 1), (1, 1), 4.0),
    ],
)
def test_energy_examples(field, spins, expected):
    assert energy(IsingProblem(UNIT_PAIR, field), spins) == expected


@pytest.mark.parametrize("spins, expected", [((1, -1), 1.0), ((1, 1), 0.0)])
def test_cut_unit_edge(spins, expected):
    assert cut_value(IsingProblem(UNIT_PAIR), spins) == expected


def test_triangle_cut_and_its_maximum(triangle):
    assert cut_value(triangle, (1, 1, -1)) == 2.0
    best = max(cut_value(triangle, conf) for _, conf in enumerate_energies(triangle.couplings))
    assert best == 2.0


def test_local_field_examples(triangle):
    assert local_field(IsingProblem(UNIT_PAIR), (0.0, 0.5), 0) == 0.5
    assert local_field(triangle, np.zeros(3), 1) == 0.0
    for i in range(3):
        assert local_field(triangle, (1, 1, 1), i) == 2.0


def test_local_field_rejects_bad_index(triangle):
    with pytest.raises(ProblemError):
        local_field(triangle, (1, 1, 1), 3)


@pytest.mark.parametrize("spins, expected", [((1, 1), -4.0), ((1, -1), 4.0)])
def test_flip_delta_examples(spins, expected):
    assert flip_delta(IsingProblem(UNIT_PAIR), spins, 0) == expected


def test_flip_delta_matches_reevaluation_n8():
    rng = np.random.default_rng(8)
    p = IsingProblem(random_symmetric(rng, 8), rng.standard_normal(8))
    s = rng.choice([-1, 1], 8)
    for i in range(8):
        t = s.copy()
        t[i] = -t[i]
        assert flip_delta(p, s, i) == pytest.approx(energy(p, t) - energy(p, s), abs=1e-12)


def test_round_spins_examples():
    assert round_spins([0.3, -0.9]).tolist() == [1, -1]
    assert round_spins([0.0, -0.0]).tolist() == [1, 1]
    assert round_spins([0.1, 1.0, 1e-300]).tolist() == [1, 1, 1]
    assert round_spins([0.5]).dtype == np.int8


@pytest.mark.parametrize(
    "J, h, energy_, spins",
    [
        (UNIT_PAIR, None, -2.0, [-1, 1]),
        (np.zeros((1, 1)), [5.0], -5.0, [-1]),
    ],
)
def test_brute_force_examples(J, h, energy_, spins):
    e, s = brute_force_ground_state(IsingProblem(J, h))
    assert e == energy_
    assert s.tolist() == spins


def test_brute_force_triangle(triangle):
    e, _ = brute_force_ground_state(triangle)
    assert e == -2.0


def test_brute_force_refuses_large_n():
    with pytest.raises(ProblemError):
        brute_force_ground_state(IsingProblem(np.zeros((30, 30))))


@pytest.mark.parametrize("seed", range(6))
def test_brute_force_agrees_with_plain_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = 7
    J = random_symmetric(rng, n, integer=bool(seed % 2))
    h = rng.integers(-2, 3, n).astype(float)
    rows = enumerate_energies(J, h)
    e, s = brute_force_ground_state(IsingProblem(J, h))
    assert e == pytest.approx(min(r[0] for r in rows), abs=1e-9)
    assert e == energy(IsingProblem(J, h), s)


@pytest.mark.parametrize(
    "J, field, message",
    [
        (np.ones((2, 3)), None, "square"),
        (np.array([[0.0, 1.0], [2.0, 0.0]]), None, "symmetric"),
        (np.array([[1.0, 0.0], [0.0, 0.0]]), None, "diagonal"),
        (np.array([[0.0, np.nan], [np.nan, 0.0]]), None, "non-finite"),
        (UNIT_PAIR, [1.0, 2.0, 3.0], "field"),
    ],
)
def test_invalid_problems(J, field, message):
    with pytest.raises(ProblemError, match=message):
        IsingProblem(J, field)


def test_problem_arrays_are_read_only():
    p = IsingProblem(UNIT_PAIR)
    with pytest.raises(ValueError):
        p.couplings[0, 1] = 3.0


def test_sparse_and_dense_paths_agree():
    rng = np.random.default_rng(3)
    J = random_symmetric(rng, 60, integer=True, density=0.04)
    sparse = IsingProblem(J)
    assert sparse.is_sparse
    s = rng.choice([-1.0, 1.0], 60)
    assert energy(sparse, s) == float(s @ J @ s)
    for i in (0, 17, 59):
        assert local_field(sparse, s, i) == float(J[i] @ s)


def test_content_hash_tracks_data():
    a = IsingProblem(UNIT_PAIR)
    assert a.content_hash() == IsingProblem(UNIT_PAIR.copy()).content_hash()
    assert a.content_hash() != IsingProblem(UNIT_PAIR, [0.0, 1.0]).content_hash()
    assert a.content_hash() != IsingProblem(2 * UNIT_PAIR).content_hash()


def test_energies_equal_is_exact_for_integer_data():
    assert not IsingProblem(UNIT_PAIR).energies_equal(-2.0, -2.0 + 1e-12)
    assert IsingProblem(0.5 * UNIT_PAIR).energies_equal(-1.0, -1.0 + 1e-12)


# properties

problems = st.integers(2, 9).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(-5, 5, allow_nan=False), min_size=n * n, max_size=n * n),
        st.lists(st.floats(-5, 5, allow_nan=False), min_size=n, max_size=n),
        st.lists(st.sampled_from([-1, 1]), min_size=n, max_size=n),
    )
)


def _build(data):
    flat, h, spins = data
    n = len(h)
    J = np.triu(np.array(flat).reshape(n, n), 1)
    return IsingProblem(J + J.T, h), np.array(spins)


@settings(max_examples=60, deadline=None)
@given(problems)
def test_global_flip_symmetry_without_field(data):
    p, s = _build(data)
    q = IsingProblem(p.couplings)
    assert energy(q, s) == pytest.approx(energy(q, -s), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(problems)
def test_cut_energy_identity(data):
    p, s = _build(data)
    assert 4 * cut_value(p, s) + coupling_term(p, s) == pytest.approx(p.total_weight, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(problems, st.data())
def test_flip_delta_consistency(data, draw):
    p, s = _build(data)
    i = draw.draw(st.integers(0, p.n - 1))
    t = s.copy()
    t[i] = -t[i]
    assert energy(p, s) + flip_delta(p, s, i) == pytest.approx(energy(p, t), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(problems)
def test_oracle_minimality(data):
    p, s = _build(data)
    e, _ = brute_force_ground_state(p)
    assert e <= energy(p, s) + 1e-9


@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=20))
def test_round_is_idempotent(values):
    once = round_spins(values)
    assert np.array_equal(round_spins(once), once)
