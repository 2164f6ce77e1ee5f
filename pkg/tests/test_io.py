import io as stdio
import json

import numpy as np
import pytest

from conftest import find_gset
from mars_ising import io
from mars_ising.model import IsingProblem, ProblemError, cut_value
from mars_ising.runner import BatchSpec, run_batch
from mars_ising.solvers import MarsParams, SaParams


def parse(text):
    return io.parse_gset(stdio.StringIO(text), source="mem")


def test_parse_single_edge():
    g = parse("2 1\n1 2 1\n")
    assert g.n_vertices == 2 and g.edges == [(1, 2, 1)]


def test_parse_triangle_with_negative_edge():
    g = parse("3 3\n1 2 1\n2 3 -1\n1 3 1\n")
    assert g.edges == [(1, 2, 1), (2, 3, -1), (1, 3, 1)]
    p = io.gset_to_problem(g)
    assert p.couplings[1, 2] == p.couplings[2, 1] == -1
    assert cut_value(p, (1, 1, -1)) == 0.0


def test_comments_blank_lines_and_default_weight():
    g = parse("# header comment\n3 2\n\n1 2\n% note\n2 3 5\n")
    assert g.edges == [(1, 2, 1), (2, 3, 5)]


@pytest.mark.parametrize(
    "text, line, error",
    [
        ("", None, io.ParseError),
        ("3\n", 1, io.ParseError),
        ("2 1\n1 x 1\n", 2, io.ParseError),
        ("2 1\n1\n", 2, io.ParseError),
        ("2 1\n1 3 1\n", 2, io.StructureError),
        ("2 1\n2 2 1\n", 2, io.StructureError),
        ("3 2\n1 2 1\n2 1 4\n", 3, io.StructureError),
        ("2 2\n1 2 1\n", None, io.StructureError),
        ("2 1\n1 2 1\n1 2 1\n", 3, io.StructureError),
    ],
)
def test_parse_errors_carry_line_numbers(text, line, error):
    with pytest.raises(error) as info:
        parse(text)
    assert info.value.line == line
    if line is not None:
        assert f"mem:{line}:" in str(info.value)


def test_single_edge_cut():
    p = io.gset_to_problem(parse("2 1\n1 2 1\n"))
    assert cut_value(p, (1, -1)) == 1.0


def test_format_parse_fixed_point():
    g = io.generate_random_graph(40, 120, seed=3, weights=(-1, 1))
    text = io.format_gset(g)
    again = parse(text)
    assert again == g
    assert io.format_gset(again) == text


def test_problem_gset_round_trip_preserves_weight():
    g = io.generate_random_graph(30, 100, seed=1, weights=(1, 2, -1))
    p = io.gset_to_problem(g)
    assert p.total_weight == 2 * sum(w for *_, w in g.edges)
    assert io.problem_to_gset(p) == g


@pytest.mark.parametrize("problem", [
    IsingProblem(np.array([[0.0, 0.5], [0.5, 0.0]])),
    IsingProblem(np.zeros((2, 2)), [1.0, 0.0]),
])
def test_problem_to_gset_rejects_unrepresentable(problem):
    with pytest.raises(ProblemError):
        io.problem_to_gset(problem)


def test_random_graph_exact_edge_count():
    g = io.generate_random_graph(800, 19176, seed=1)
    assert g.n_vertices == 800 and len(g.edges) == 19176
    assert io.gset_to_problem(g).is_sparse


def test_real_g1_header_self_consistent():
    path = find_gset("G1")
    if path is None:
        pytest.skip("G1 not found in $MARS_ISING_GSET_DIR or tests/data")
    g = io.parse_gset(open(path), str(path))
    assert (g.n_vertices, len(g.edges)) == (800, 19176)


# SK generator

def test_sk_two_spins():
    p = io.generate_sk(2, 0)
    assert p.couplings[0, 1] == p.couplings[1, 0] != 0
    assert np.count_nonzero(p.couplings) == 2


def test_sk_statistics_n2000():
    J = io.generate_sk(2000, 42).couplings
    upper = J[np.triu_indices(2000, 1)]
    assert abs(upper.mean()) < 0.05
    assert 0.9 <= upper.var(ddof=1) <= 1.1


def test_sk_is_deterministic_and_seed_sensitive():
    assert np.array_equal(io.generate_sk(50, 7).couplings, io.generate_sk(50, 7).couplings)
    assert not np.array_equal(io.generate_sk(50, 7).couplings, io.generate_sk(50, 8).couplings)


def test_sk_rejects_tiny_n():
    with pytest.raises(ProblemError):
        io.generate_sk(1, 0)


# dense matrix files

def test_matrix_round_trip_sk500(tmp_path):
    p = io.generate_sk(500, 1)
    path = tmp_path / "sk.txt"
    io.write_matrix(p, path)
    q = io.read_matrix(path)
    assert np.array_equal(p.couplings, q.couplings)
    assert io.detect_format(path) == "matrix"


def test_matrix_round_trip_with_field(tmp_path):
    p = IsingProblem(np.array([[0.0, 0.1], [0.1, 0.0]]), [1 / 3, -2.0])
    path = tmp_path / "f.txt"
    io.write_matrix(p, path)
    q = io.load_problem(path)
    assert np.array_equal(q.field, p.field) and np.array_equal(q.couplings, p.couplings)


@pytest.mark.parametrize(
    "text, match",
    [
        ("2\n0 1\n2 0\n", "symmetric"),
        ("2\n0 1\n1 zz\n", "zz"),
        ("2\n0 1\n", "rows"),
        ("2\n0 1 3\n1 0\n", "values"),
        ("x\n", "size"),
    ],
)
def test_matrix_errors(text, match):
    with pytest.raises(io.ParseError, match=match):
        io.parse_matrix(text.splitlines(), source="m")


def test_matrix_error_location():
    with pytest.raises(io.ParseError) as info:
        io.parse_matrix("2\n0 1\n1 zz\n".splitlines(), source="m")
    assert info.value.line == 3


def test_detect_gset(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("2 1\n1 2 1\n")
    assert io.detect_format(path) == "gset"
    assert io.load_problem(path).n == 2


# result documents

@pytest.fixture
def batch(sk12):
    spec = BatchSpec(MarsParams(t_min=0, t_max=3, t_step=0.5), base_seed=3)
    return sk12, spec, run_batch(sk12, spec)


def test_result_round_trip(tmp_path, batch):
    problem, spec, stats = batch
    doc = io.make_document(problem, spec.solver, spec.params, stats)
    path = tmp_path / "r.json"
    io.save_result(doc, path)
    back = io.load_result(path, problem)
    assert back == doc
    assert back.energies == stats.energies.tolist()
    assert np.array_equal(back.best_spins(), stats.best_result.spins)
    assert back.params["start_mode"] == "grid"
    assert back.runs[0]["skipped"] is True


def test_result_without_timing_is_reproducible(batch):
    problem, spec, stats = batch
    again = run_batch(problem, spec)
    a = io.make_document(problem, "mars", spec.params, stats, include_timing=False).to_json()
    b = io.make_document(problem, "mars", spec.params, again, include_timing=False).to_json()
    assert a == b
    assert "seconds" not in a and json.loads(a)["timestamp"] is None


def test_result_version_mismatch(batch):
    problem, spec, stats = batch
    data = json.loads(io.make_document(problem, "mars", spec.params, stats).to_json())
    data["version"] = 99
    with pytest.raises(io.IncompatibleVersionError):
        io.ResultDocument.from_json(json.dumps(data))
    with pytest.raises(io.IncompatibleVersionError):
        io.ResultDocument.from_json("{}")


def test_result_integrity(tmp_path, batch):
    problem, spec, stats = batch
    path = tmp_path / "r.json"
    io.save_result(io.make_document(problem, "mars", spec.params, stats), path)
    with pytest.raises(io.IntegrityError):
        io.load_result(path, io.generate_sk(12, 6))


def test_result_marks_failed_runs(sk12):
    stats = run_batch(sk12, BatchSpec(SaParams(mc_steps=100), runs=2))
    stats.results[1] = None
    doc = io.make_document(sk12, "sa", SaParams(mc_steps=100), stats)
    assert doc.runs[1] == {"index": 1, "failed": True}
