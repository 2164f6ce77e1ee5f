"""Command-line front end: generate, solve, bench, hist and convert.

Exit codes: 0 success, 2 usage error, 3 bad input (missing/malformed files),
4 runtime failure (every run or row failed, unwritable output).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import enum
import io as _io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as mio
from .model import ProblemError
from .runner import BatchError, BatchSpec, compare_solvers, histogram, run_batch
from .solvers import PARAMS

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_RUNTIME = 4

WORKERS_ENV = "MARS_ISING_WORKERS"

# append-only: new columns go at the end, existing names never change
REPORT_COLUMNS = [
    "instance", "solver", "runs", "best_energy", "mean_energy", "best_cut", "mean_cut",
    "hit_count", "success_probability", "total_seconds", "mean_seconds_per_run", "error",
]


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(f"usage error: {message}", EXIT_USAGE)


def _flag(solver: str, name: str) -> str:
    return f"--{solver}-{name.replace('_', '-')}"


def _dest(solver: str, name: str) -> str:
    return f"{solver}__{name}"


def _float_list(text: str):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_param_flags(parser: argparse.ArgumentParser):
    for solver, cls in PARAMS.items():
        group = parser.add_argument_group(f"{solver} parameters")
        for f in dataclasses.fields(cls):
            default = f.default
            kwargs = {"dest": _dest(solver, f.name), "help": f.metadata.get("help", ""), "default": default}
            if isinstance(default, enum.Enum):
                kwargs["default"] = default.value
                kwargs["choices"] = f.metadata["choices"]
            elif isinstance(default, tuple):
                kwargs["type"] = _float_list
                kwargs["default"] = ",".join(repr(x) for x in default)
            elif isinstance(default, bool):
                kwargs["type"] = lambda s: s.lower() in ("1", "true", "yes")
            else:
                kwargs["type"] = type(default)
            group.add_argument(_flag(solver, f.name), **kwargs)


def _params_from_args(args, solver: str):
    cls = PARAMS[solver]
    values = {}
    for f in dataclasses.fields(cls):
        value = getattr(args, _dest(solver, f.name))
        if isinstance(f.default, tuple) and isinstance(value, str):
            value = _float_list(value)
        values[f.name] = value
    try:
        return cls(**values)
    except ValueError as exc:
        raise CliError(f"usage error: {exc}", EXIT_USAGE) from None


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"usage error: ${WORKERS_ENV} must be an integer, got {raw!r}", EXIT_USAGE) from None


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="mars-ising", description=__doc__.splitlines()[0], formatter_class=fmt)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a seeded Gaussian SK instance as a dense matrix",
                       formatter_class=fmt)
    p.add_argument("--n", type=int, required=True, help="number of spins (>= 2)")
    p.add_argument("--seed", type=int, default=0, help="instance seed")
    p.add_argument("--out", required=True, help="output matrix file")

    p = sub.add_parser("solve", help="run a seeded batch of one solver on an instance", formatter_class=fmt)
    p.add_argument("input", help="instance file (G-set or dense matrix)")
    p.add_argument("--format", choices=["auto", "gset", "matrix"], default="auto", help="instance format")
    p.add_argument("--solver", choices=sorted(PARAMS), default="mars", help="algorithm")
    p.add_argument("--runs", type=int, default=100, help="number of runs (MARS grid mode derives it from the grid)")
    p.add_argument("--seed", type=int, default=0, help="base seed; run i uses a sub-seed of (seed, i)")
    p.add_argument("--workers", type=int, default=None,
                   help=f"worker processes, 0 = one per CPU (default: ${WORKERS_ENV} or 1)")
    p.add_argument("--out", help="write the result document here")
    p.add_argument("--report", choices=["table", "csv", "json"], default="table", help="stdout report format")
    p.add_argument("--no-runs", action="store_true", help="omit per-run records from the result document")
    p.add_argument("--no-timing", action="store_true",
                   help="omit timestamp and wall-clock fields so seeded documents are byte-identical")
    _add_param_flags(p)

    p = sub.add_parser("bench", help="run every solver of a JSON config on every instance", formatter_class=fmt)
    p.add_argument("config", help="JSON file with 'instances' and 'solvers' lists")
    p.add_argument("--report", choices=["table", "csv", "json"], default="table", help="report format")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--workers", type=int, default=None,
                   help=f"override the config's worker count (default: ${WORKERS_ENV}, config, or 1)")

    p = sub.add_parser("hist", help="energy histogram of a result document as CSV", formatter_class=fmt)
    p.add_argument("result", help="result document written by 'solve --out'")
    p.add_argument("--bins", type=int, default=50, help="number of equal-width bins")
    p.add_argument("--out", help="write CSV here instead of stdout")

    p = sub.add_parser("convert", help="convert between G-set and dense matrix formats", formatter_class=fmt)
    p.add_argument("input", help="instance file")
    p.add_argument("output", help="output file")
    p.add_argument("--from", dest="src_format", choices=["auto", "gset", "matrix"], default="auto",
                   help="input format")
    p.add_argument("--to", choices=["gset", "matrix"], required=True, help="output format")
    return parser


def _banner(args):
    chosen = f"{getattr(args, 'solver', '')}__"
    items = {k.replace(chosen, f"{chosen[:-2]}_"): v for k, v in sorted(vars(args).items())
             if "__" not in k or k.startswith(chosen)}
    print("# mars-ising " + " ".join(f"{k}={v}" for k, v in items.items()), file=sys.stderr)


def _load_problem(path, fmt="auto"):
    try:
        return mio.load_problem(path, fmt)
    except FileNotFoundError:
        raise CliError(f"input error: no such file {path}", EXIT_INPUT) from None
    except (mio.ParseError, ProblemError, OSError) as exc:
        raise CliError(f"input error: {exc}", EXIT_INPUT) from None


def _write_text(path, text):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_RUNTIME) from None


def report_row(instance: str, solver: str, stats, error: str | None = None) -> dict:
    row = dict.fromkeys(REPORT_COLUMNS, "")
    row.update(instance=instance, solver=solver, error=error or "")
    if stats is not None:
        row.update(
            runs=stats.runs,
            best_energy=stats.best_energy,
            mean_energy=stats.mean_energy,
            best_cut=stats.best_cut,
            mean_cut=stats.mean_cut,
            hit_count=stats.hit_count,
            success_probability=stats.success_probability,
            total_seconds=stats.total_seconds,
            mean_seconds_per_run=stats.mean_seconds_per_run,
        )
    return row


def render_report(rows: list[dict], fmt: str) -> str:
    if fmt == "csv":
        buf = _io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})
        return buf.getvalue()
    if fmt == "json":
        return json.dumps({"columns": REPORT_COLUMNS, "rows": rows}, indent=1) + "\n"
    lines = [
        f"{'instance':<16} {'solver':<10} {'runs':>6} {'f_best(cut)':>13} {'f_avg(cut)':>13} "
        f"{'best_energy':>14} {'mean_energy':>14} {'hits':>6} {'P':>9} {'t(s)':>10}"
    ]
    for r in rows:
        if r["error"]:
            lines.append(f"{r['instance']:<16} {r['solver']:<10} FAILED: {r['error']}")
            continue
        lines.append(
            f"{r['instance']:<16} {r['solver']:<10} {r['runs']:>6} {r['best_cut']:>13.6g} {r['mean_cut']:>13.6g} "
            f"{r['best_energy']:>14.6f} {r['mean_energy']:>14.6f} {r['hit_count']:>6} "
            f"{r['success_probability']:>9.4g} {r['mean_seconds_per_run']:>10.4g}"
        )
    return "\n".join(lines) + "\n"


def _progress_printer(enabled: bool):
    if not enabled:
        return None

    def show(index, best):
        print(f"\rrun {index:>7}  best so far {best:.6f}", end="", file=sys.stderr, flush=True)

    return show


def cmd_generate(args) -> int:
    if args.n < 2:
        raise CliError(f"usage error: --n must be >= 2, got {args.n}", EXIT_USAGE)
    problem = mio.generate_sk(args.n, args.seed)
    try:
        mio.write_matrix(problem, args.out)
    except OSError as exc:
        raise CliError(f"cannot write {args.out}: {exc}", EXIT_RUNTIME) from None
    print(f"wrote SK instance n={args.n} seed={args.seed} sha256={problem.content_hash()} to {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    workers = args.workers
    if args.runs < 1 or workers < 0:
        raise CliError("usage error: --runs must be >= 1 and --workers >= 0", EXIT_USAGE)
    params = _params_from_args(args, args.solver)
    problem = _load_problem(args.input, args.format)
    try:
        spec = BatchSpec(params, runs=args.runs, base_seed=args.seed, workers=workers)
        stats = run_batch(problem, spec, _progress_printer(args.verbose))
    except ValueError as exc:
        raise CliError(f"usage error: {exc}", EXIT_USAGE) from None
    except BatchError as exc:
        raise CliError(f"runtime error: {exc}", EXIT_RUNTIME) from None
    if args.verbose:
        print(file=sys.stderr)
    if stats.failed_runs:
        print(f"warning: {len(stats.failed_runs)} runs diverged and were excluded", file=sys.stderr)
    doc = mio.make_document(problem, args.solver, params, stats, include_runs=not args.no_runs,
                            include_timing=not args.no_timing)
    if args.out:
        try:
            mio.save_result(doc, args.out)
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc}", EXIT_RUNTIME) from None
    if args.report == "json":
        sys.stdout.write(doc.to_json())
    else:
        sys.stdout.write(render_report([report_row(problem.name, args.solver, stats)], args.report))
    return EXIT_OK


def _bench_instances(config: dict, base: Path):
    for k, entry in enumerate(config.get("instances", [])):
        if "sk" in entry:
            sk = entry["sk"]
            name = entry.get("name", f"sk-{sk['n']}-{sk.get('seed', 0)}")
            yield name, lambda sk=sk: mio.generate_sk(int(sk["n"]), int(sk.get("seed", 0)))
        elif "path" in entry:
            path = base / entry["path"]
            name = entry.get("name", Path(entry["path"]).stem)
            yield name, lambda path=path, fmt=entry.get("format", "auto"): _load_problem(path, fmt)
        else:
            raise CliError(f"input error: instance #{k} needs 'path' or 'sk'", EXIT_INPUT)


def cmd_bench(args) -> int:
    try:
        config = json.loads(Path(args.config).read_text())
    except FileNotFoundError:
        raise CliError(f"input error: no such file {args.config}", EXIT_INPUT) from None
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"input error: {args.config}: {exc}", EXIT_INPUT) from None
    if args.workers is not None:
        workers = args.workers
    elif WORKERS_ENV in os.environ:
        workers = _default_workers()
    else:
        workers = int(config.get("workers", 1))
    seed = int(config.get("seed", 0))
    solvers = config.get("solvers", [])
    if not solvers:
        raise CliError("input error: config lists no solvers", EXIT_INPUT)
    specs = []
    for entry in solvers:
        name = entry.get("solver", "")
        if name not in PARAMS:
            raise CliError(f"input error: unknown solver {name!r}", EXIT_INPUT)
        try:
            params = PARAMS[name](**entry.get("params", {}))
            specs.append(BatchSpec(params, runs=int(entry.get("runs", 1)), base_seed=int(entry.get("seed", seed)),
                                   workers=workers, label=entry.get("label", name)))
        except (TypeError, ValueError) as exc:
            raise CliError(f"input error: solver {name!r}: {exc}", EXIT_INPUT) from None
    rows = []
    for inst_name, loader in _bench_instances(config, Path(args.config).parent):
        try:
            problem = loader()
        except CliError as exc:
            rows += [report_row(inst_name, s.name, None, str(exc)) for s in specs]
            continue
        table = compare_solvers(problem, specs)
        rows += [report_row(inst_name, r.label, r.stats, r.error) for r in table.rows]
        if args.report == "table":
            print(f"# {inst_name}: winner {table.winner}", file=sys.stderr)
    text = render_report(rows, args.report)
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    if rows and all(r["error"] for r in rows):
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_hist(args) -> int:
    if args.bins < 1:
        raise CliError(f"usage error: --bins must be >= 1, got {args.bins}", EXIT_USAGE)
    try:
        doc = mio.load_result(args.result)
    except FileNotFoundError:
        raise CliError(f"input error: no such file {args.result}", EXIT_INPUT) from None
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"input error: {args.result}: {exc}", EXIT_INPUT) from None
    if doc.runs is None:
        raise CliError("input error: the document has no per-run energies; re-run solve without --no-runs",
                       EXIT_INPUT)
    hist = histogram(doc.energies, args.bins)
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_left", "bin_right", "count"])
    for lo, hi, c in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.counts):
        writer.writerow([repr(float(lo)), repr(float(hi)), int(c)])
    if args.out:
        _write_text(args.out, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_convert(args) -> int:
    problem = _load_problem(args.input, args.src_format)
    if args.to == "matrix":
        try:
            mio.write_matrix(problem, args.output)
        except OSError as exc:
            raise CliError(f"cannot write {args.output}: {exc}", EXIT_RUNTIME) from None
    else:
        try:
            graph = mio.problem_to_gset(problem)
        except ProblemError as exc:
            raise CliError(f"input error: {exc}", EXIT_INPUT) from None
        _write_text(args.output, mio.format_gset(graph))
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "bench": cmd_bench,
    "hist": cmd_hist,
    "convert": cmd_convert,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.command == "solve" and args.workers is None:
            args.workers = _default_workers()
        _banner(args)
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"mars-ising: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
