"""CLI entry point for navstress.

Subcommands follow the benchmarking workflow: ``run`` one test, ``generate``
suites against a subject, ``rerun`` a suite against another subject,
``report`` and ``compare`` results, ``plot`` a log and ``seeds`` to copy
the bundled scenarios into a working directory.

Exit codes: 0 success, 1 invalid input (schema, validation, missing file,
mismatched suites, existing output without ``--force``), 2 execution error.
Progress goes to stderr; tables and machine-readable output go to stdout
and files.
"""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

from . import __version__
from .errors import (
    EmptyResults,
    EmptySuite,
    LogFormatError,
    NavstressError,
    OutputExists,
    SchemaError,
    SuiteFormatError,
    SuiteMismatch,
    UnknownSubject,
    ValidationError,
)
from .generator import SearchConfig, load_search_config, search
from .logfile import read_log
from .paths import default_out_root, default_workers
from .plotting import render_comparison, render_plot
from .predicates import parse_predicate
from .report import (
    aggregate,
    compare_reports,
    comparison_to_json,
    format_comparison,
    format_report,
    format_table,
    read_report,
    report_to_json,
    write_report,
)
from .scenario import SEED_NAMES, TestDefinition, load_test_definition, parse_test_definition, read_suite, seed_text
from .subjects import SUBJECT_KINDS, SubjectSpec
from .testbench import RESULTS_DIR, Category, execute_test, read_result, run_suite, write_result

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_EXECUTION = 2

_INVALID = (
    SchemaError,
    ValidationError,
    UnknownSubject,
    SuiteMismatch,
    SuiteFormatError,
    OutputExists,
    LogFormatError,
    EmptySuite,
    EmptyResults,
    FileNotFoundError,
)

REPORT_JSON = "report.json"
REPORT_TXT = "report.txt"
METADATA = "metadata.json"


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the validation code."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _add_subject(p: argparse.ArgumentParser, default: Optional[str] = "refnav_b") -> None:
    p.add_argument("--subject", choices=SUBJECT_KINDS, default=default, help="Navigation subject under test")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="Subject parameter (repeatable)")
    p.add_argument("--cmd", default="", help="Command line of an external subject (with --subject external)")


def _add_out(p: argparse.ArgumentParser, help_text: str) -> None:
    p.add_argument("--out", default=None, help=help_text)
    p.add_argument("--force", action="store_true", help="Replace an existing output")


def _add_workers(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workers", type=int, default=None, help="Worker processes (default: $NAVSTRESS_WORKERS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="navstress",
        description="Search-based simulation testing for robot navigation and obstacle avoidance.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("run", help="Run one test definition")
    p.add_argument("test", help="Test definition YAML (or a bundled seed name)")
    _add_subject(p)
    _add_out(p, "Output directory (log, result, plot)")
    p.add_argument("--no-plot", action="store_true", help="Skip the SVG plot")

    p = sub.add_parser("generate", help="Evolve seed tests into suites")
    p.add_argument("seeds", nargs="*", help="Seed files or bundled seed names (default: all bundled seeds)")
    _add_subject(p, default="refnav_a")
    _add_out(p, "Output directory; one suite sub-directory per seed")
    _add_workers(p)
    p.add_argument("--config", default=None, help="Search configuration YAML")
    p.add_argument("--iterations", type=int, default=None, help="Search iterations per seed")
    p.add_argument("--lambda", dest="offspring", type=int, default=None, help="Offspring per iteration")
    p.add_argument("--restart-after", type=int, default=None, help="Stale iterations before restarting from the seed")
    p.add_argument("--rng-seed", type=int, default=None, help="Search RNG seed")
    p.add_argument(
        "--waypoint-mutation",
        choices=["on", "off", "test"],
        default=None,
        help="Allow moving mission poses: on, off, or as each test says (default)",
    )
    p.add_argument("--target", default=None, help='Targeting predicate, e.g. "category=SafetyStop,min_gap<1.5"')

    p = sub.add_parser("rerun", help="Re-execute a suite against a subject")
    p.add_argument("suite", help="Suite directory, or a directory of suites")
    _add_subject(p)
    _add_out(p, "Output directory (logs, results, report)")
    _add_workers(p)
    p.add_argument("--plots", action="store_true", help="Also write one SVG per test")

    p = sub.add_parser("report", help="Summarise one or more result directories")
    p.add_argument("runs", nargs="+", help="Run directories or report.json files")
    p.add_argument("--json", action="store_true", help="Print the (first) report as JSON")

    p = sub.add_parser("compare", help="Compare two reports over the same suite")
    p.add_argument("a", help="Baseline run directory or report.json")
    p.add_argument("b", help="Candidate run directory or report.json")
    _add_out(p, "SVG file for the two-sided bar chart")
    p.add_argument("--json", action="store_true", help="Print the comparison as JSON")

    p = sub.add_parser("plot", help="Render a trajectory log as SVG")
    p.add_argument("log", help="Trajectory log (.ndjson)")
    p.add_argument("--test", required=True, help="Test definition the log was produced from")
    _add_out(p, "SVG output file (default: next to the log)")

    p = sub.add_parser("seeds", help="List or copy the bundled seed scenarios")
    _add_out(p, "Directory to copy the seed YAML files into")
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    """Build the argument parser and return parsed arguments."""
    return build_parser().parse_args(argv)


# --- helpers --------------------------------------------------------------------

def _parse_params(pairs: List[str]) -> Dict[str, str]:
    params = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ValidationError(f"--param expects KEY=VALUE, got {pair!r}")
        params[key.strip()] = value.strip()
    return params


def subject_spec(args: argparse.Namespace) -> SubjectSpec:
    """Subject recipe from ``--subject/--param/--cmd``; built once to validate parameters."""
    params = _parse_params(args.param)
    if args.cmd:
        if args.subject != "external":
            raise ValidationError("--cmd is only valid with --subject external")
        params["cmd"] = args.cmd
    spec = SubjectSpec.of(args.subject, params)
    spec.build().close()
    return spec


def _workers(args: argparse.Namespace) -> int:
    if args.workers is not None:
        if args.workers < 1:
            raise ValidationError(f"--workers must be >= 1, got {args.workers}")
        return args.workers
    try:
        return default_workers()
    except ValueError as e:
        raise ValidationError(str(e)) from e


def _load_test(ref: str) -> TestDefinition:
    path = Path(ref)
    if not path.exists() and ref in SEED_NAMES:
        return parse_test_definition(seed_text(ref))
    return load_test_definition(path)


def prepare_out(path: Path, force: bool, *, is_file: bool = False) -> Path:
    """Refuse to touch an existing output unless *force*; then start it afresh."""
    if path.exists():
        if not force:
            raise OutputExists(f"{path} already exists; pass --force to replace it")
        if path.is_dir() and not is_file:
            shutil.rmtree(path)
        elif path.is_file():
            path.unlink()
        else:
            raise OutputExists(f"{path} is a directory")
    if is_file:
        path.parent.mkdir(parents=True, exist_ok=True)
    else:
        path.mkdir(parents=True)
    return path


def write_metadata(out_dir: Path, argv: List[str], started: datetime) -> None:
    """Timestamps live only in this sidecar so every other artefact stays reproducible."""
    meta = {
        "navstress": __version__,
        "argv": argv,
        "started": started.isoformat(),
        "finished": datetime.now(timezone.utc).isoformat(),
    }
    (out_dir / METADATA).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def _load_report(ref: str):
    path = Path(ref)
    if path.is_dir():
        if (path / REPORT_JSON).is_file():
            return read_report(path / REPORT_JSON)
        results = [read_result(p) for p in sorted((path / RESULTS_DIR).glob("*.json"))]
        return aggregate(results, suite=path.name)
    return read_report(path)


# --- commands -------------------------------------------------------------------

def cmd_run(args: argparse.Namespace, argv: List[str]) -> int:
    started = datetime.now(timezone.utc)
    test = _load_test(args.test)
    spec = subject_spec(args)
    out = prepare_out(Path(args.out) if args.out else default_out_root() / "run" / test.name, args.force)

    result, _ = execute_test(test, spec, out, plot=not args.no_plot)
    write_result(result, out / "result.json")
    write_metadata(out, argv, started)

    m = result.metrics
    print(f"{test.name}: {result.category.value} ({spec.subject_id})")
    print(f"  min distance {m.min_obstacle_distance:.3f} m | min gap {m.min_obstacle_gap:.3f} m")
    print(f"  path length {m.path_length:.2f} m | deviation {m.deviation:.3f} m | duration {m.duration:.2f} s")
    if result.error:
        print(f"  error: {result.error}")
    return EXIT_OK


def _search_config(args: argparse.Namespace) -> SearchConfig:
    config = load_search_config(Path(args.config)) if args.config else SearchConfig()
    overrides = {
        "iterations": args.iterations,
        "offspring": args.offspring,
        "restart_after": args.restart_after,
        "rng_seed": args.rng_seed,
    }
    config = replace(config, **{k: v for k, v in overrides.items() if v is not None})
    if args.waypoint_mutation is not None:
        allow = {"on": True, "off": False, "test": None}[args.waypoint_mutation]
        config = replace(config, allow_waypoint_mutation=allow)
    config.validate()
    return config


def cmd_generate(args: argparse.Namespace, argv: List[str]) -> int:
    started = datetime.now(timezone.utc)
    seeds = [_load_test(s) for s in (args.seeds or SEED_NAMES)]
    names = [s.name for s in seeds]
    if len(set(names)) != len(names):
        raise ValidationError(f"seed names must be unique, got {names}")
    spec = subject_spec(args)
    config = _search_config(args)
    predicate = parse_predicate(args.target) if args.target else None
    workers = _workers(args)
    out = prepare_out(Path(args.out) if args.out else default_out_root() / "generate", args.force)

    results = []
    for seed in sorted(seeds, key=lambda s: s.name):
        run = search(seed, spec, config, predicate=predicate, workers=workers, out_dir=out / seed.name)
        results += run.results
        best_test, best_fit = run.state.best
        failures = sum(1 for r in run.results if r.category is not Category.SUCCESS)
        print(
            f"{seed.name}: {len(run.suite)} tests, {failures} non-success, "
            f"best fitness {best_fit.value:.3f} m ({best_test.name}, {best_fit.outcome.value})",
            file=sys.stderr,
        )

    report = aggregate(results, suite=out.name, subject_id=spec.subject_id)
    write_report(report, out / REPORT_JSON)
    (out / REPORT_TXT).write_text(format_report(report) + "\n", encoding="utf-8")
    write_metadata(out, argv, started)
    print(format_table([report]))
    return EXIT_OK


def cmd_rerun(args: argparse.Namespace, argv: List[str]) -> int:
    started = datetime.now(timezone.utc)
    suite = read_suite(Path(args.suite))
    spec = subject_spec(args)
    workers = _workers(args)
    out = prepare_out(Path(args.out) if args.out else default_out_root() / "rerun" / suite.name, args.force)

    results = run_suite(suite, spec, workers, out_dir=out, plot=args.plots)
    report = aggregate(results, suite=suite.name, subject_id=spec.subject_id)
    write_report(report, out / REPORT_JSON)
    (out / REPORT_TXT).write_text(format_report(report) + "\n", encoding="utf-8")
    write_metadata(out, argv, started)
    print(format_report(report))
    print()
    print(format_table([report]))
    return EXIT_OK


def cmd_report(args: argparse.Namespace, argv: List[str]) -> int:
    reports = [_load_report(r) for r in args.runs]
    if args.json:
        sys.stdout.write(report_to_json(reports[0]))
        return EXIT_OK
    if len(reports) == 1:
        print(format_report(reports[0]))
    else:
        print(format_table(reports))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace, argv: List[str]) -> int:
    cmp = compare_reports(_load_report(args.a), _load_report(args.b))
    if args.out:
        out = prepare_out(Path(args.out), args.force, is_file=True)
        out.write_text(render_comparison(cmp), encoding="utf-8")
    if args.json:
        sys.stdout.write(comparison_to_json(cmp))
    else:
        print(format_comparison(cmp))
    return EXIT_OK


def cmd_plot(args: argparse.Namespace, argv: List[str]) -> int:
    trace = read_log(Path(args.log))
    test = _load_test(args.test)
    out = Path(args.out) if args.out else Path(args.log).with_suffix(".svg")
    prepare_out(out, args.force, is_file=True)
    out.write_text(render_plot(trace, test), encoding="utf-8")
    print(out)
    return EXIT_OK


def cmd_seeds(args: argparse.Namespace, argv: List[str]) -> int:
    if not args.out:
        for name in SEED_NAMES:
            print(name)
        return EXIT_OK
    out = prepare_out(Path(args.out), args.force)
    for name in SEED_NAMES:
        (out / f"{name}.yaml").write_text(seed_text(name), encoding="utf-8")
        print(out / f"{name}.yaml")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "generate": cmd_generate,
    "rerun": cmd_rerun,
    "report": cmd_report,
    "compare": cmd_compare,
    "plot": cmd_plot,
    "seeds": cmd_seeds,
}


def main(argv=None) -> None:
    """Entry point: dispatch the subcommand and map failures to exit codes."""
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(message)s",
    )

    try:
        code = COMMANDS[args.command](args, argv)
    except _INVALID as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(EXIT_INVALID)
    except NavstressError as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(EXIT_EXECUTION)
    except Exception as e:
        log.debug("unhandled error", exc_info=True)
        print(f"Error: {type(e).__name__}: {e}", file=sys.stderr)
        sys.exit(EXIT_EXECUTION)
    if code:
        sys.exit(code)


if __name__ == "__main__":
    main()
