"""Command line entry point: ``streamclip {run,sweep,certify,gen,check}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from ..errors import ConfigError, IngestError, StreamClipError
from ..constraints import MatroidSpec
from ..oracle import feature_set_function, property_check
from .certify import certify
from .io import ORDER_GENERATOR, gen_stream, ingest, iter_elements, reorder, write_jsonl
from .runner import ALGORITHMS, RunParams, run_algorithm
from .sweep import VARIABLES, SweepSpec, rows_to_csv, run_sweep

log = logging.getLogger("streamclip")

EXIT_OK, EXIT_CONFIG, EXIT_INGEST, EXIT_CERT, EXIT_REFUSAL = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors are configuration errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="element file (JSON Lines); '-' reads standard input")
    p.add_argument("--seed", type=int, default=None, help="permute the stream with this seed")


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algo", choices=ALGORITHMS, default="stream-clipper")
    p.add_argument("--k", type=int)
    p.add_argument("--buffer", type=int, help="buffer capacity b")
    p.add_argument("--fhat", type=float, help="estimate of the optimum (auto if omitted)")
    p.add_argument("--tau-minus", type=float)
    p.add_argument("--tau-plus", type=float)
    p.add_argument("--delta-tau", type=float)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--c", type=float, default=1.0, help="swap-streaming improvement factor")
    p.add_argument("--n", type=int, help="stream length (minibatch)")
    p.add_argument("--budget", type=float)
    p.add_argument("--matroid", help="partition matroid as JSON text or a path to a JSON file")
    p.add_argument("--max-instances", type=int, default=256, help="sieve instance cap")
    p.add_argument("--swap-rule", choices=("clamp", "safe"), default="clamp",
                   help="stream-clipper: how swaps keep tau- <= tau+ (safe keeps certificates sound)")
    p.add_argument("--test-mode", action="store_true", help="log rejected elements and threshold traces")
    p.add_argument("--no-timing", action="store_true", help="omit wall times for byte-stable output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="streamclip", description="Streaming submodular summarization with two thresholds.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one algorithm on one stream")
    _add_input(run)
    _add_params(run)
    run.add_argument("--format", choices=("json", "csv"), default="json")

    sweep = sub.add_parser("sweep", help="cross-product of values, repeats and algorithms")
    _add_input(sweep)
    _add_params(sweep)
    sweep.add_argument("--variable", choices=VARIABLES, required=True)
    sweep.add_argument("--values", type=_floats, required=True, help="comma-separated values")
    sweep.add_argument("--algos", default="stream-clipper,sieve,lazy-greedy",
                       help="comma-separated algorithm names")
    sweep.add_argument("--repeats", type=int, default=1)
    sweep.add_argument("--fhat-relative", action="store_true",
                       help="treat fhat values as multiples of the lazy-greedy utility")
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    sweep.add_argument("--output", help="write here instead of standard output")

    cert = sub.add_parser("certify", help="check a clipper's certified bound against the exact optimum")
    _add_input(cert)
    _add_params(cert)

    gen = sub.add_parser("gen", help="write a seeded synthetic stream")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--features", type=int, required=True)
    gen.add_argument("--density", type=float, default=0.05)
    gen.add_argument("--weight-scale", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--categories", type=int, default=0, help="attach categories c0..c{m-1}")
    gen.add_argument("--cost-range", type=_floats, help="min,max for uniform costs")
    gen.add_argument("--output", help="file to write (default standard output)")

    check = sub.add_parser("check", help="sample submodularity, monotonicity and swap inequalities")
    check.add_argument("input")
    check.add_argument("--trials", type=int, default=10_000)
    check.add_argument("--seed", type=int, default=0)
    return parser


def _load(path: str) -> list:
    if path == "-":
        return list(iter_elements(sys.stdin))
    return ingest(path)


def _matroid(text: str | None) -> MatroidSpec | None:
    if text is None:
        return None
    candidate = Path(text)
    try:
        if not text.lstrip().startswith("{") and candidate.is_file():
            text = candidate.read_text(encoding="utf-8")
        return MatroidSpec.from_json(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--matroid is not valid JSON: {exc.msg}") from None


def _params(args: argparse.Namespace) -> RunParams:
    return RunParams(
        k=args.k, buffer=args.buffer, fhat=args.fhat, tau_minus=args.tau_minus, tau_plus=args.tau_plus,
        delta_tau=args.delta_tau, epsilon=args.epsilon, c=args.c, n=args.n, budget=args.budget,
        matroid=_matroid(args.matroid), max_instances=args.max_instances, swap_rule=args.swap_rule,
        test_mode=args.test_mode,
    )


def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True, default=_jsonable)


def _jsonable(obj):
    if hasattr(obj, "__dataclass_fields__"):
        from dataclasses import asdict
        return asdict(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


def cmd_run(args: argparse.Namespace) -> int:
    elements = reorder(_load(args.input), args.seed)
    result = run_algorithm(args.algo, elements, _params(args))
    timing = not args.no_timing
    if args.format == "csv":
        tel = result.telemetry
        wall = "" if not timing else format(tel.wall_ms, ".9g")
        print("algorithm,objective,size,evals,memory_units,wall_ms")
        print(f"{result.algorithm},{result.objective:.9g},{len(result.solution_ids)},"
              f"{tel.evaluations},{tel.memory_units},{wall}")
        return EXIT_OK
    doc = result.to_dict(timing)
    doc["order"] = {"generator": ORDER_GENERATOR, "seed": args.seed}
    print(_dump(doc))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    elements = _load(args.input)
    spec = SweepSpec(
        variable=args.variable, values=args.values, repeats=args.repeats,
        algorithms=[a.strip() for a in args.algos.split(",") if a.strip()],
        params=_params(args), seed=args.seed or 0, fhat_relative=args.fhat_relative,
    )
    rows = run_sweep(spec, elements, jobs=args.jobs)
    timing = not args.no_timing
    if args.format == "json":
        if not timing:
            for r in rows:
                r["wall_ms"] = None
        text = _dump({"order_generator": ORDER_GENERATOR, "rows": rows}) + "\n"
    else:
        text = rows_to_csv(rows, timing)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_certify(args: argparse.Namespace) -> int:
    elements = reorder(_load(args.input), args.seed)
    report = certify(args.algo, elements, _params(args))
    print(_dump(report))
    achieved = report["achieved"]
    bound = report.get("report", {}).get("bound", report.get("knapsack_bound", report.get("matroid_bound")))
    print(f"{report['status'].upper()}: achieved {achieved:.9g} vs bound "
          f"{'n/a' if bound is None else format(bound, '.9g')}")
    return EXIT_OK if report["status"] == "pass" else EXIT_CERT


def cmd_gen(args: argparse.Namespace) -> int:
    cost_range = None
    if args.cost_range is not None:
        if len(args.cost_range) != 2 or not 0 < args.cost_range[0] <= args.cost_range[1]:
            raise ConfigError("--cost-range needs min,max with 0 < min <= max")
        cost_range = tuple(args.cost_range)
    elements = gen_stream(args.n, args.features, args.density, args.weight_scale, args.seed,
                          n_categories=args.categories, cost_range=cost_range)
    write_jsonl(elements, args.output or sys.stdout)
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    elements = _load(args.input)
    if len(elements) < 3:
        raise IngestError("check needs at least 3 elements")
    rep = property_check(feature_set_function(elements), [e.id for e in elements], args.trials, args.seed)
    print(_dump(rep))
    return EXIT_OK if rep.clean else EXIT_CERT


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "certify": cmd_certify, "gen": cmd_gen, "check": cmd_check}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except StreamClipError as exc:
        print(f"streamclip: {exc}", file=sys.stderr)
        return exc.exit_code
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
