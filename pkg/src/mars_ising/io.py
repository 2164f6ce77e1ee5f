"""Instance files, instance generators and result documents.

G-set (rudy) text: a header ``n m`` followed by ``m`` lines ``u v [w]`` with
1-based vertices; ``#`` and ``%`` start comment lines. Dense matrix text: a
line holding ``n``, then ``n`` rows of ``n`` reals, then optionally one more row
of ``n`` reals giving the external field.
"""

from __future__ import annotations

import datetime
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .model import IsingProblem, ProblemError

RESULT_FORMAT = "mars-ising-result"
RESULT_VERSION = 1


class ParseError(ValueError):
    """Malformed instance text; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.line = line


class StructureError(ParseError):
    """Well-formed lines that describe an impossible graph."""


class IncompatibleVersionError(ValueError):
    pass


class IntegrityError(ValueError):
    pass


@dataclass
class GsetGraph:
    n_vertices: int
    edges: list[tuple[int, int, int]]  # 1-based (u, v, w)

    def __post_init__(self):
        if self.n_vertices < 1:
            raise StructureError(f"vertex count must be positive, got {self.n_vertices}")
        seen = set()
        for u, v, _ in self.edges:
            if not (1 <= u <= self.n_vertices and 1 <= v <= self.n_vertices):
                raise StructureError(f"edge ({u}, {v}) outside 1..{self.n_vertices}")
            if u == v:
                raise StructureError(f"self-loop on vertex {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise StructureError(f"duplicate edge {key}")
            seen.add(key)

    @property
    def total_weight(self) -> int:
        return sum(w for _, _, w in self.edges)


def _content_lines(lines):
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text[0] in "#%":
            continue
        yield lineno, text


def _ints(text: str, lineno: int, source):
    try:
        return [int(tok) for tok in text.split()]
    except ValueError:
        raise ParseError(f"expected integers, got {text!r}", lineno, source) from None


def parse_gset(stream, source: str | None = None) -> GsetGraph:
    """Parse rudy/G-set text from a file object or any iterable of lines."""
    rows = _content_lines(stream)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise ParseError("empty input, expected header 'n m'", None, source) from None
    head = _ints(header, lineno, source)
    if len(head) != 2:
        raise ParseError(f"header must hold two integers, got {header!r}", lineno, source)
    n, m = head
    if n < 1 or m < 0:
        raise StructureError(f"bad header counts n={n} m={m}", lineno, source)
    edges = []
    seen = set()
    for lineno, text in rows:
        vals = _ints(text, lineno, source)
        if len(vals) == 2:
            vals.append(1)
        if len(vals) != 3:
            raise ParseError(f"edge line needs 'u v [w]', got {text!r}", lineno, source)
        u, v, w = vals
        if len(edges) == m:
            raise StructureError(f"more edge lines than the {m} declared", lineno, source)
        if not (1 <= u <= n and 1 <= v <= n):
            raise StructureError(f"vertex out of range 1..{n} in {text!r}", lineno, source)
        if u == v:
            raise StructureError(f"self-loop on vertex {u}", lineno, source)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise StructureError(f"duplicate edge {key}", lineno, source)
        seen.add(key)
        edges.append((u, v, w))
    if len(edges) != m:
        raise StructureError(f"header declares {m} edges, found {len(edges)}", None, source)
    return GsetGraph(n, edges)


def format_gset(graph: GsetGraph) -> str:
    lines = [f"{graph.n_vertices} {len(graph.edges)}"]
    lines += [f"{u} {v} {w}" for u, v, w in graph.edges]
    return "\n".join(lines) + "\n"


def gset_to_problem(graph: GsetGraph, name: str = "") -> IsingProblem:
    """Couplings ``J_uv = J_vu = w`` (0-based), zero field, so cut_value is the graph cut."""
    J = np.zeros((graph.n_vertices, graph.n_vertices))
    if graph.edges:
        e = np.asarray(graph.edges, dtype=np.int64)
        J[e[:, 0] - 1, e[:, 1] - 1] = e[:, 2]
        J[e[:, 1] - 1, e[:, 0] - 1] = e[:, 2]
    return IsingProblem(J, name=name)


def problem_to_gset(problem: IsingProblem) -> GsetGraph:
    if problem.has_field:
        raise ProblemError("G-set format cannot carry an external field")
    if not problem.is_integer:
        raise ProblemError("G-set format needs integer couplings")
    iu, ju = np.nonzero(np.triu(problem.couplings, 1))
    edges = [(int(i) + 1, int(j) + 1, int(problem.couplings[i, j])) for i, j in zip(iu, ju)]
    return GsetGraph(problem.n, edges)


def generate_sk(n: int, seed: int) -> IsingProblem:
    """Gaussian SK couplings: i.i.d. standard normals on the upper triangle, mirrored.

    Draws come from NumPy's ``Generator.standard_normal`` (ziggurat) on a
    Philox4x64 bit generator seeded with ``seed``, filled in row-major
    upper-triangle order. This choice is frozen so seeded instances stay
    reproducible.
    """
    if n < 2:
        raise ProblemError(f"SK instance needs n >= 2, got {n}")
    rng = np.random.Generator(np.random.Philox(int(seed)))
    J = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    J[iu] = rng.standard_normal(iu[0].size)
    J += J.T
    return IsingProblem(J, name=f"sk-{n}-{seed}")


def generate_random_graph(n: int, n_edges: int, seed: int, weights=(1,)) -> GsetGraph:
    """Uniform random simple graph with exactly ``n_edges`` edges, weights drawn from ``weights``."""
    total = n * (n - 1) // 2
    if not 0 <= n_edges <= total:
        raise ProblemError(f"cannot place {n_edges} edges on {n} vertices")
    rng = np.random.Generator(np.random.Philox(int(seed)))
    iu, ju = np.triu_indices(n, 1)
    chosen = np.sort(rng.choice(total, size=n_edges, replace=False))
    w = rng.choice(np.asarray(weights), size=n_edges)
    return GsetGraph(n, [(int(iu[k]) + 1, int(ju[k]) + 1, int(x)) for k, x in zip(chosen, w)])


def write_matrix(problem: IsingProblem, path) -> None:
    rows = [str(problem.n)]
    rows += [" ".join(repr(float(x)) for x in row) for row in problem.couplings]
    if problem.has_field:
        rows.append(" ".join(repr(float(x)) for x in problem.field))
    Path(path).write_text("\n".join(rows) + "\n")


def parse_matrix(lines, source: str | None = None, name: str = "") -> IsingProblem:
    rows = [(k, text) for k, text in enumerate(lines, start=1) if text.strip()]
    if not rows:
        raise ParseError("empty input, expected the matrix size", None, source)
    lineno, head = rows[0]
    try:
        n = int(head.strip())
    except ValueError:
        raise ParseError(f"first line must be the size n, got {head.strip()!r}", lineno, source) from None
    if n < 1:
        raise ParseError(f"matrix size must be positive, got {n}", lineno, source)
    body = rows[1:]
    if len(body) not in (n, n + 1):
        raise ParseError(f"expected {n} matrix rows (plus an optional field row), found {len(body)}",
                         None, source)
    values = []
    for lineno, text in body:
        toks = text.split()
        if len(toks) != n:
            raise ParseError(f"expected {n} values, found {len(toks)}", lineno, source)
        try:
            values.append([float(t) for t in toks])
        except ValueError:
            bad = next(t for t in toks if not _is_float(t))
            raise ParseError(f"non-numeric token {bad!r}", lineno, source) from None
    J = np.array(values[:n])
    h = np.array(values[n]) if len(values) > n else None
    try:
        return IsingProblem(J, h, name=name)
    except ProblemError as exc:
        raise ParseError(str(exc), None, source) from None


def _is_float(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def read_matrix(path) -> IsingProblem:
    path = Path(path)
    with path.open() as fh:
        return parse_matrix(fh, source=str(path), name=path.stem)


def read_gset(path) -> IsingProblem:
    path = Path(path)
    with path.open() as fh:
        return gset_to_problem(parse_gset(fh, source=str(path)), name=path.stem)


def detect_format(path) -> str:
    """``"gset"`` when the first content line holds two integers, ``"matrix"`` for one."""
    with Path(path).open() as fh:
        for _, text in _content_lines(fh):
            count = len(text.split())
            if count == 2:
                return "gset"
            if count == 1:
                return "matrix"
            raise ParseError(f"cannot tell instance format from first line {text!r}", None, str(path))
    raise ParseError("empty instance file", None, str(path))


def load_problem(path, fmt: str = "auto") -> IsingProblem:
    if fmt == "auto":
        fmt = detect_format(path)
    if fmt == "gset":
        return read_gset(path)
    if fmt == "matrix":
        return read_matrix(path)
    raise ValueError(f"unknown instance format {fmt!r}")


def _spin_string(spins) -> str:
    return "".join("+" if s > 0 else "-" for s in spins)


def _spins_from_string(text: str) -> np.ndarray:
    return np.array([1 if c == "+" else -1 for c in text], dtype=np.int8)


@dataclass
class ResultDocument:
    """Persisted outcome of a batch: problem identity, solver setup, statistics, runs."""

    problem_id: str
    problem_hash: str
    n: int
    solver: str
    params: dict
    stats: dict
    runs: list[dict] | None = None
    artifact_version: str = __version__
    timestamp: str | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "format": RESULT_FORMAT,
            "version": RESULT_VERSION,
            "artifact_version": self.artifact_version,
            "timestamp": self.timestamp,
            "problem": {"id": self.problem_id, "sha256": self.problem_hash, "n": self.n},
            "solver": {"name": self.solver, "params": self.params},
            "stats": self.stats,
            "runs": self.runs,
            "extra": self.extra,
        }
        return json.dumps(payload, indent=1, sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultDocument":
        data = json.loads(text)
        if data.get("format") != RESULT_FORMAT:
            raise IncompatibleVersionError(f"not a result document (format={data.get('format')!r})")
        if data.get("version") != RESULT_VERSION:
            raise IncompatibleVersionError(
                f"result document version {data.get('version')} is not supported (expected {RESULT_VERSION})")
        return cls(
            problem_id=data["problem"]["id"],
            problem_hash=data["problem"]["sha256"],
            n=data["problem"]["n"],
            solver=data["solver"]["name"],
            params=data["solver"]["params"],
            stats=data["stats"],
            runs=data["runs"],
            artifact_version=data["artifact_version"],
            timestamp=data["timestamp"],
            extra=data.get("extra", {}),
        )

    @property
    def energies(self) -> list[float]:
        if self.runs is None:
            raise ValueError("document has no per-run records")
        return [r["energy"] for r in self.runs if not r.get("skipped") and not r.get("failed")]

    def best_spins(self) -> np.ndarray:
        return _spins_from_string(self.stats["best_spins"])

    def verify(self, problem: IsingProblem) -> None:
        if problem.content_hash() != self.problem_hash:
            raise IntegrityError(
                f"problem hash {problem.content_hash()[:12]} does not match document hash {self.problem_hash[:12]}")


def params_to_dict(params) -> dict:
    out = {}
    for key, value in vars(params).items():
        if hasattr(value, "value"):
            value = value.value
        elif isinstance(value, tuple):
            value = list(value)
        out[key] = value
    return out


def make_document(problem: IsingProblem, solver: str, params, stats, include_runs: bool = True,
                  include_timing: bool = True, extra: dict | None = None) -> ResultDocument:
    """Build a document from a :class:`~mars_ising.runner.BatchStats`.

    With ``include_timing=False`` the timestamp and all wall-clock fields are
    dropped so repeated seeded runs produce byte-identical files.
    """
    summary = stats.summary(include_timing=include_timing)
    summary["best_spins"] = _spin_string(stats.best_result.spins)
    runs = None
    if include_runs:
        runs = []
        for idx, res in enumerate(stats.results):
            if res is None:
                runs.append({"index": idx, "failed": True})
                continue
            rec = {
                "index": idx,
                "energy": res.energy,
                "cut": res.cut,
                "start_temp": res.start_temp,
                "descent_iters": res.descent_iters,
            }
            if res.skipped:
                rec["skipped"] = True
            if include_timing:
                rec["elapsed_seconds"] = res.elapsed_seconds
            runs.append(rec)
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds") if include_timing else None
    return ResultDocument(
        problem_id=problem.name,
        problem_hash=problem.content_hash(),
        n=problem.n,
        solver=solver,
        params=params_to_dict(params),
        stats=summary,
        runs=runs,
        timestamp=stamp,
        extra=dict(extra or {}),
    )


def save_result(document: ResultDocument, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(document.to_json())
    os.replace(tmp, path)


def load_result(path, problem: IsingProblem | None = None) -> ResultDocument:
    doc = ResultDocument.from_json(Path(path).read_text())
    if problem is not None:
        doc.verify(problem)
    return doc
