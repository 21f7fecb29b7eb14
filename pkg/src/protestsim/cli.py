"""Command line: run, batch, compare, snapshot, verify-trace.

Exit status is 0 on success, 1 when an input scenario or trace cannot be
parsed or validated, and 2 for anything that goes wrong while running.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

from .engine import REPORT_FIELDS, Comparison, compare, run, run_batch
from .model import ScenarioError
from .reports import (
    TickOutOfRange,
    TraceError,
    emit_report,
    emit_snapshot,
    emit_trace,
    read_trace,
    replay_trace,
    report_record,
)
from .scenario_io import parse_scenario

log = logging.getLogger("protestsim")

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2


class InputError(Exception):
    """Raised for problems with what the user handed us (exit status 1)."""


def seed_range(text: str) -> List[int]:
    """``A..B`` (inclusive), ``A,B,C`` or a single integer."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}; use A..B or A,B,C") from None


def _load(path: str, ticks: Optional[int] = None):
    try:
        s = parse_scenario(path)
    except ScenarioError as exc:
        raise InputError(str(exc)) from None
    if ticks is not None:
        if ticks < 0:
            raise InputError("--ticks must be >= 0")
        s = replace(s, max_ticks=ticks)
    return s


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _load(args.scenario, args.ticks)
    seed = scenario.seed if args.seed is None else args.seed
    report, records = run(scenario, seed, trace=bool(args.trace))
    table, record = emit_report(report)
    print(f"scenario {scenario.name}")
    print(table, end="")
    if args.report:
        Path(args.report).write_text(record + "\n", encoding="utf-8")
    if args.trace:
        emit_trace(scenario, seed, records, args.trace)
        log.info("wrote %d trace records to %s", len(records), args.trace)
    return EXIT_OK


def cmd_batch(args: argparse.Namespace) -> int:
    scenario = _load(args.scenario, args.ticks)
    result = run_batch(scenario, args.seeds, workers=args.workers)
    print(f"scenario {scenario.name}, {len(result.reports)} runs, seeds {args.seeds[0]}..{args.seeds[-1]}")
    print(f"{'field':<26}{'mean':>10}{'median':>10}{'min':>10}{'max':>10}")
    for name in REPORT_FIELDS:
        st = result.stats[name]
        print(f"{name:<26}{st.mean:>10.3f}{st.median:>10.3f}{st.min:>10g}{st.max:>10g}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for r in result.reports:
                fh.write(json.dumps(report_record(r)) + "\n")
    return EXIT_OK


_PAIR_COLUMNS = (
    ("wounded_protesters", "wnd prot"),
    ("wounded_police", "wnd pol"),
    ("obstacles_destroyed", "fences"),
    ("dead_protesters", "dead prot"),
    ("dead_police", "dead pol"),
    ("goal_achieved", "goal"),
)


def format_comparison(cmp: Comparison) -> str:
    a, b = cmp.a.scenario, cmp.b.scenario
    head = f"{'seed':>6}" + "".join(f"{label:>14}" for _, label in _PAIR_COLUMNS)
    lines = [f"paired seeds: a={a} b={b}  (cells are a/b)", head]
    for row in cmp.pairs:
        cells = []
        for name, _ in _PAIR_COLUMNS:
            x, y = getattr(row.a, name), getattr(row.b, name)
            if isinstance(x, bool):
                cells.append(f"{'yes' if x else 'no'}/{'yes' if y else 'no'}")
            else:
                cells.append(f"{x.value:g}/{y.value:g}")
        lines.append(f"{row.seed:>6}" + "".join(f"{c:>14}" for c in cells))
    n = len(cmp.pairs)
    lines.append("")
    lines.append(f"pairs with b >= a, wounded protesters: {cmp.fraction('wounded_protesters', '>='):.2f}")
    lines.append(f"pairs with b >= a, destroyed obstacles: {cmp.fraction('obstacles_destroyed', '>='):.2f}")
    pol = sum(1 for r in cmp.b.reports if r.wounded_police.value > 0) / n
    lines.append(f"runs of b with wounded police: {pol:.2f}")
    for side, res in (("a", cmp.a), ("b", cmp.b)):
        rate = sum(r.goal_achieved for r in res.reports) / n
        st = res.stats
        lines.append(
            f"{side}: goal rate {rate:.2f}, median wounded protesters {st['wounded_protesters'].median:g}, "
            f"wounded police {st['wounded_police'].median:g}, dead protesters {st['dead_protesters'].median:g}, "
            f"dead police {st['dead_police'].median:g}"
        )
    return "\n".join(lines) + "\n"


def cmd_compare(args: argparse.Namespace) -> int:
    a = _load(args.a, args.ticks)
    b = _load(args.b, args.ticks)
    print(format_comparison(compare(a, b, args.seeds, workers=args.workers)), end="")
    return EXIT_OK


def cmd_snapshot(args: argparse.Namespace) -> int:
    try:
        trace = read_trace(args.trace)
    except (TraceError, ScenarioError) as exc:
        raise InputError(str(exc)) from None
    try:
        emit_snapshot(trace, args.tick, args.out)
    except TickOutOfRange as exc:
        raise InputError(str(exc)) from None
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    scenario = _load(args.scenario) if args.scenario else None
    try:
        ok = replay_trace(args.trace, scenario)
    except (TraceError, ScenarioError) as exc:
        raise InputError(str(exc)) from None
    print("trace reproduces" if ok else "trace differs from replay")
    return EXIT_OK if ok else EXIT_RUNTIME


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        # bad arguments are input errors too, not argparse's default status 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="protestsim", description="Protest crowd vs. police agent simulation.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="one replication, prints the outcome table")
    r.add_argument("--scenario", required=True, help="scenario file, or case1 / case2")
    r.add_argument("--seed", type=int, help="defaults to the scenario's run.seed")
    r.add_argument("--ticks", type=int, help="override run.max_ticks")
    r.add_argument("--trace", help="write a JSONL trace here")
    r.add_argument("--report", help="write the JSON report record here")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("batch", help="replications over a seed range")
    b.add_argument("--scenario", required=True)
    b.add_argument("--seeds", type=seed_range, required=True, help="A..B inclusive")
    b.add_argument("--ticks", type=int)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out", help="write one JSON report record per seed here")
    b.set_defaults(func=cmd_batch)

    c = sub.add_parser("compare", help="paired-seed comparison of two scenarios")
    c.add_argument("--a", required=True)
    c.add_argument("--b", required=True)
    c.add_argument("--seeds", type=seed_range, required=True)
    c.add_argument("--ticks", type=int)
    c.add_argument("--workers", type=int, default=1)
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("snapshot", help="SVG of agent positions at one traced tick")
    s.add_argument("--trace", required=True)
    s.add_argument("--tick", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_snapshot)

    v = sub.add_parser("verify-trace", help="re-run a trace from its footer and compare bytes")
    v.add_argument("--trace", required=True)
    v.add_argument("--scenario", help="needed unless the trace came from a bundled scenario")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - top-level reporter
        log.debug("runtime failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
