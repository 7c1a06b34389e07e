"""
Command-line front end.

    pivotsat solve formula.cnf
    pivotsat oracle formula.cnf
    pivotsat transform formula.cnf --check
    pivotsat trace formula.cnf --trace-dir trace/
    pivotsat fuzz campaign.cfg --seed 7 --csv scoreboard.csv
    pivotsat bench campaign.cfg
    pivotsat fixtures

Machine output goes to stdout, logs to stderr. Exit codes: 0 completed,
1 usage, parse or config error, 2 ABORT verdict, 3 fixture or strict
failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, TextIO

from config import (
    ConfigError,
    Settings,
    configure_logging,
    load_campaign_config,
    load_settings,
)
from cylinder import build_closed_digraphs, build_cylinder
from dot_export import TraceWriter, closed_to_dot, linearized_to_dot
from fixtures import run_fixtures
from formula import (
    CnfFormula,
    ContractViolation,
    ParseError,
    Status,
    Verdict,
    brute_force_sat,
    evaluate,
    parse_dimacs,
)
from harness import guard_failed, run_bench, run_campaign, write_scoreboard_csv
from linearize import linearize
from nested import decide
from pivot import certify_equisat, complete, emit_pcnf, to_pivoted
from schemas import (
    BoundRowSchema,
    CampaignReportSchema,
    CertificateSchema,
    FixtureResultSchema,
    VerdictSchema,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ABORT = 2
EXIT_FAILURE = 3

STRICT_SUITES = {"transform", "two_sat", "completion"}


class UsageError(Exception):
    """Bad command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, help="Campaign seed override")
    common.add_argument("--oracle-cap", type=int, help="Largest atom count the oracle accepts")
    common.add_argument("--budget-scale", type=float, help="Multiplier for every work budget")
    common.add_argument(
        "--strict", action="store_true", default=None, help="Fail on known-sound claim violations"
    )
    common.add_argument("--trace-dir", help="Directory for per-stage DOT files")
    common.add_argument("--format", choices=["json", "text"], default="json")
    common.add_argument("--verbose", "-v", action="store_true", help="Log at INFO level")

    parser = _Parser(prog="pivotsat", description="Pivoted 3-SAT pipeline and differential harness")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solve = commands.add_parser("solve", parents=[common], help="Pipeline verdict for a DIMACS file")
    solve.add_argument("input", nargs="?", default="-")
    solve.add_argument("--check-claims", action="store_true", help="Attach desk-scale claim checks")

    oracle = commands.add_parser("oracle", parents=[common], help="Brute-force verdict")
    oracle.add_argument("input", nargs="?", default="-")

    transform = commands.add_parser("transform", parents=[common], help="DIMACS to PCNF")
    transform.add_argument("input", nargs="?", default="-")
    transform.add_argument("--check", action="store_true", help="Append an equisat certificate")
    transform.add_argument("--complete", action="store_true", help="Emit the completed form")

    trace = commands.add_parser("trace", parents=[common], help="DOT file per pipeline stage")
    trace.add_argument("input", nargs="?", default="-")

    fuzz = commands.add_parser("fuzz", parents=[common], help="Run a differential campaign")
    fuzz.add_argument("config", nargs="?", help="Campaign config file (defaults apply if omitted)")
    fuzz.add_argument("--csv", help="Write the bound scoreboard as CSV to this path")

    bench = commands.add_parser("bench", parents=[common], help="Bound scoreboard only")
    bench.add_argument("config", nargs="?")

    fixtures = commands.add_parser("fixtures", parents=[common], help="Reproduce the worked examples")
    fixtures.add_argument("names", nargs="*")
    return parser


def _read_text(path: Optional[str]) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _write_json(data, stream: TextIO) -> None:
    stream.write(json.dumps(data, sort_keys=True, indent=2) + "\n")


def _write_verdict_text(verdict: Verdict, stream: TextIO) -> None:
    if verdict.status is Status.SAT:
        stream.write("s SATISFIABLE\n")
        if verdict.witness:
            lits = [a if verdict.witness[a] else -a for a in sorted(verdict.witness)]
            stream.write("v " + " ".join(str(lit) for lit in lits) + " 0\n")
    elif verdict.status is Status.UNSAT:
        stream.write("s UNSATISFIABLE\n")
    else:
        stream.write(f"c abort: {verdict.abort_reason}\ns UNKNOWN\n")


def _emit_verdict(verdict: Verdict, args, stream: TextIO) -> int:
    if args.format == "text":
        _write_verdict_text(verdict, stream)
    else:
        _write_json(VerdictSchema().dump(verdict), stream)
    return EXIT_ABORT if verdict.status is Status.ABORT else EXIT_OK


def _restrict_witness(f: CnfFormula, verdict: Verdict) -> Verdict:
    """Project a pivoted-formula witness onto f's atoms and re-check it."""
    if verdict.witness is None:
        return verdict
    witness = {a: verdict.witness.get(a, False) for a in range(1, f.num_atoms + 1)}
    if not evaluate(f, witness):
        logger.warning("Extracted witness does not satisfy the input formula; dropping it")
        witness = None
    return Verdict(verdict.status, witness, verdict.abort_reason, verdict.counters, verdict.details)


def cmd_solve(args, settings: Settings, out: TextIO) -> int:
    f = parse_dimacs(_read_text(args.input))
    trace = TraceWriter(args.trace_dir) if args.trace_dir else None
    verdict = decide(
        complete(to_pivoted(f)),
        budget_scale=settings.budget_scale,
        check_claims=args.check_claims,
        chain_cap=settings.chain_cap,
        entails_cap=settings.entails_cap,
        trace=trace,
    )
    return _emit_verdict(_restrict_witness(f, verdict), args, out)


def cmd_oracle(args, settings: Settings, out: TextIO) -> int:
    f = parse_dimacs(_read_text(args.input))
    return _emit_verdict(brute_force_sat(f, settings.oracle_cap), args, out)


def cmd_transform(args, settings: Settings, out: TextIO) -> int:
    f = parse_dimacs(_read_text(args.input))
    pf = to_pivoted(f)
    if args.complete:
        pf = complete(pf)
    out.write(emit_pcnf(pf))
    if not args.check:
        return EXIT_OK
    cert = certify_equisat(f, pf, settings.oracle_cap)
    payload = json.dumps(CertificateSchema().dump(cert), sort_keys=True)
    out.write(f"c certificate {payload}\n")
    if cert.aborted:
        return EXIT_ABORT
    if not cert.agree and settings.strict:
        return EXIT_FAILURE
    return EXIT_OK


def cmd_trace(args, settings: Settings, out: TextIO) -> int:
    f = parse_dimacs(_read_text(args.input))
    writer = TraceWriter(args.trace_dir or "trace")
    pf = complete(to_pivoted(f))
    verdict = decide(pf, budget_scale=settings.budget_scale, trace=writer)
    for cd in build_closed_digraphs(build_cylinder(pf)):
        path = writer.directory / f"closed-{cd.nec_atom}.dot"
        path.write_text(closed_to_dot(cd), encoding="utf-8")
        written = [path]
        if verdict.status is not Status.ABORT:
            lin_path = writer.directory / f"linearized-{cd.nec_atom}.dot"
            lin_path.write_text(
                linearized_to_dot(linearize(cd, settings.budget_scale)), encoding="utf-8"
            )
            written.append(lin_path)
        writer.written.extend(written)
    _write_json(
        {"status": verdict.status.value, "files": [str(p) for p in writer.written]}, out
    )
    return EXIT_ABORT if verdict.status is Status.ABORT else EXIT_OK


def _campaign(args):
    text = _read_text(args.config) if args.config else ""
    return load_campaign_config(
        text, seed=args.seed, oracle_cap=args.oracle_cap, budget_scale=args.budget_scale
    )


def cmd_fuzz(args, settings: Settings, out: TextIO) -> int:
    cfg = _campaign(args)
    report = run_campaign(cfg, settings)
    _write_json(CampaignReportSchema().dump(report), out)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as stream:
            write_scoreboard_csv(report.rows, stream)
    if settings.strict:
        strict_failures = [
            f for f in report.findings if f.suite in STRICT_SUITES and f.kind != "abort"
        ]
        if strict_failures or guard_failed(report.mutation_guard):
            logger.error(f"Strict campaign failure: {len(strict_failures)} sound-claim findings")
            return EXIT_FAILURE
    return EXIT_OK


def cmd_bench(args, settings: Settings, out: TextIO) -> int:
    cfg = _campaign(args)
    rows = run_bench(cfg, settings)
    if args.format == "text":
        write_scoreboard_csv(rows, out)
    else:
        _write_json(BoundRowSchema(many=True).dump(rows), out)
    return EXIT_OK


def cmd_fixtures(args, settings: Settings, out: TextIO) -> int:
    rows = run_fixtures(settings.budget_scale, args.names or None)
    if args.format == "text":
        for row in rows:
            mark = "PASS" if row.passed else "FAIL"
            out.write(
                f"{mark} {row.name}: expected {row.expected}, actual {row.actual}, "
                f"printed {row.printed}\n"
            )
    else:
        _write_json(FixtureResultSchema(many=True).dump(rows), out)
    return EXIT_OK if all(row.passed for row in rows) else EXIT_FAILURE


COMMANDS = {
    "solve": cmd_solve,
    "oracle": cmd_oracle,
    "transform": cmd_transform,
    "trace": cmd_trace,
    "fuzz": cmd_fuzz,
    "bench": cmd_bench,
    "fixtures": cmd_fixtures,
}


def main(argv: Optional[List[str]] = None, out: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"pivotsat: error: {e}\n")
        return EXIT_USAGE

    try:
        settings = load_settings()
        overrides: Dict[str, object] = {
            "oracle_cap": args.oracle_cap,
            "budget_scale": args.budget_scale,
            "strict": args.strict,
        }
        if args.verbose:
            overrides["log_level"] = "INFO"
        settings = settings.with_overrides(**overrides)
    except ConfigError as e:
        sys.stderr.write(f"pivotsat: config error: {e}\n")
        return EXIT_USAGE
    configure_logging(settings.log_level)

    try:
        return COMMANDS[args.command](args, settings, out)
    except (ParseError, ConfigError) as e:
        logger.error(f"{args.command}: {e}")
        sys.stderr.write(f"pivotsat: {e}\n")
        return EXIT_USAGE
    except OSError as e:
        sys.stderr.write(f"pivotsat: {e}\n")
        return EXIT_USAGE
    except ContractViolation as e:
        logger.error(f"{args.command}: contract violation: {e}")
        sys.stderr.write(f"pivotsat: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
