"""Command-line interface: ``mtbmc verify | gen | dump``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence, TextIO

from . import encoder as E
from .benchgen import FAMILIES, VARIANTS, BenchSpec, gen_bench
from .frontend import MtcSyntaxError, MtcTypeError, SourceProgram, load
from .pthreads import VerificationError
from .strategies import STRATEGIES, Report, Verdict, VerifyConfig, schedule_formula, seed_from_env, verify
from .symex import ExplorationLimit, ScheduleError

EXIT_CODES = {
    Verdict.SAFE: 0,
    Verdict.VIOLATED: 10,
    Verdict.BOUND_INSUFFICIENT: 20,
    Verdict.RESOURCE_OUT: 30,
}
EXIT_USAGE = 2


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strategy", choices=STRATEGIES, default="lazy")
    p.add_argument("--unwind", type=_positive, default=10, metavar="K")
    p.add_argument("--no-unwinding-assertions", action="store_true")
    p.add_argument("--bitwidth", type=_positive, default=32, metavar="W")
    p.add_argument("--por", choices=("on", "off"), default="on")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--conflict-limit", type=_positive, default=None, metavar="N")
    p.add_argument("--max-core", type=_positive, default=500, metavar="N")
    p.add_argument("--max-interleavings", type=_positive, default=None, metavar="N")
    p.add_argument("--division-checks", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtbmc", description="Bounded model checker for multi-threaded MTC programs.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="check programs")
    v.add_argument("files", nargs="+", type=Path)
    _add_config_flags(v)
    v.add_argument("--exhaustive", action="store_true", help="lazy: keep going after the first violation")
    v.add_argument("--format", choices=("human", "machine"), default="human")
    v.add_argument("--trace", action="store_true", help="print the counterexample trace")
    v.add_argument("--dump-smtlib", type=Path, default=None, metavar="DIR")
    v.add_argument("--dump-cnf", type=Path, default=None, metavar="DIR")

    g = sub.add_parser("gen", help="print a benchmark program")
    g.add_argument("family", choices=FAMILIES)
    g.add_argument("n", type=_positive)
    g.add_argument("--variant", choices=VARIANTS, default="unsat")

    d = sub.add_parser("dump", help="print the single-formula encoding of a program")
    d.add_argument("file", type=Path)
    _add_config_flags(d)
    d.add_argument("--as", dest="kind", choices=("smtlib", "cnf"), default="smtlib")
    d.add_argument("--unwinding", action="store_true", help="encode the loop-bound checks instead of the properties")
    return parser


def _config(args: argparse.Namespace, name: str = "program") -> VerifyConfig:
    seed = args.seed if args.seed is not None else seed_from_env()
    return VerifyConfig(
        strategy=args.strategy,
        unwind=args.unwind,
        width=args.bitwidth,
        por=args.por == "on",
        unwinding_assertions=not args.no_unwinding_assertions,
        seed=seed,
        max_core=args.max_core,
        conflict_limit=args.conflict_limit,
        exhaustive=getattr(args, "exhaustive", False),
        division_checks=args.division_checks,
        max_interleavings=args.max_interleavings,
        dump_smtlib=getattr(args, "dump_smtlib", None),
        dump_cnf=getattr(args, "dump_cnf", None),
        name=name,
    )


def format_report(path: str, report: Report, fmt: str, trace: bool) -> str:
    s = report.stats
    cex = report.counterexample
    if fmt == "machine":
        rec = [
            ("file", path),
            ("verdict", report.verdict.value),
            ("strategy", report.strategy),
            ("interleavings", s.interleavings),
            ("failed_interleavings", s.failed_interleavings),
            ("iterations", s.iterations),
            ("solver_calls", s.solver_calls),
            ("core_fallbacks", s.core_fallbacks),
            ("tag", report.tag or "-"),
            ("replay", "-" if cex is None else ("ok" if cex.replay_ok else "failed")),
        ]
        if cex is not None and cex.ts:
            rec.append(("schedule", ",".join(f"{k}={v}" for k, v in sorted(cex.ts.items(), key=lambda kv: int(kv[0][2:])))))
        lines = [f"{k}={v}" for k, v in rec]
        if trace and cex is not None:
            lines += [f"step={st.format()}" for st in cex.steps]
        lines.append(f"wall_time={s.wall_time:.3f}")
        return "\n".join(lines)
    head = f"{path}: {report.verdict.value}"
    if report.tag:
        head += f" ({report.tag})"
    lines = [head]
    for w in report.warnings:
        lines.append(f"  warning: {w}")
    if report.message:
        lines.append(f"  {report.message}")
    stats = f"  strategy={report.strategy} #I={s.interleavings} #IF={s.failed_interleavings} solver_calls={s.solver_calls}"
    if report.strategy == "uw":
        stats += f" iterations={s.iterations}"
    lines.append(stats + f" time={s.wall_time:.2f}s")
    if cex is not None:
        if cex.ts:
            sched = " ".join(f"{k}={v}" for k, v in sorted(cex.ts.items(), key=lambda kv: int(kv[0][2:])))
            lines.append(f"  schedule: {sched}")
        if not cex.replay_ok:
            lines.append(f"  replay check failed: {cex.replay_note}")
        if trace:
            lines.append("  trace:")
            lines += [f"    {st.format()}" for st in cex.steps]
    return "\n".join(lines)


def _load(path: Path):
    return load(SourceProgram.from_file(path))


def _cmd_verify(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    status = 0
    for i, path in enumerate(args.files):
        try:
            program = _load(path)
            report = verify(program, _config(args, path.stem))
        except (OSError, MtcSyntaxError, MtcTypeError, VerificationError, ScheduleError) as e:
            print(f"{path}: error: {e}", file=err)
            status = max(status, EXIT_USAGE)
            continue
        if i:
            print(file=out)
        print(format_report(str(path), report, args.format, args.trace), file=out)
        status = max(status, EXIT_CODES[report.verdict])
    return status


def _cmd_gen(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    try:
        text = gen_bench(BenchSpec(args.family, args.n, args.variant))
    except ValueError as e:
        print(f"error: {e}", file=err)
        return EXIT_USAGE
    out.write(text)
    return 0


def _cmd_dump(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    try:
        program = _load(args.file)
        f = schedule_formula(program, _config(args, args.file.stem), args.unwinding)
    except (OSError, MtcSyntaxError, MtcTypeError, VerificationError, ScheduleError) as e:
        print(f"{args.file}: error: {e}", file=err)
        return EXIT_USAGE
    except ExplorationLimit as e:
        print(f"{args.file}: {e}", file=err)
        return EXIT_CODES[Verdict.RESOURCE_OUT]
    if args.kind == "smtlib":
        out.write(E.to_smtlib(f))
    else:
        out.write(E.bitblast(f).cnf.to_dimacs())
    return 0


def main(argv: Optional[Sequence[str]] = None, out: TextIO = sys.stdout, err: TextIO = sys.stderr) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else 0
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.ERROR,
        format="%(levelname)s %(name)s: %(message)s",
        stream=err,
    )
    try:
        handler = {"verify": _cmd_verify, "gen": _cmd_gen, "dump": _cmd_dump}[args.command]
        return handler(args, out, err)
    except ValueError as e:
        print(f"error: {e}", file=err)
        return EXIT_USAGE


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
