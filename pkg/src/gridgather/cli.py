"""Command line front end: ``gridgather <command> [flags]``.

Exit status: 0 gathered (or check passed), 1 bad input or precondition,
2 budget exhausted, 3 false detection, invariant violation or failed check.
"""

from __future__ import annotations

import argparse
import sys

from .engine import ReplayError, Trace, replay
from .grid import Cell, Configuration, GridError, enum_limit, enumerate_polyominoes, lemma_sweep
from .harness import (
    EXIT_BUDGET, EXIT_FAILURE, EXIT_GATHERED, EXIT_INPUT, MACHINES, HarnessError,
    auditors_for, demo_freeze, demo_lockstep, exit_code, machine_spec, parse_sizes,
    read_scenario, run_scenario, sweep,
)
from .machine import MachineError


def _cmd_run(args) -> int:
    scn = read_scenario(args.scenario)
    if args.machine:
        scn.machine = args.machine
        machine_spec(scn.machine)
    trace = run_scenario(scn, seed=args.seed, max_rounds=args.max_rounds)
    if args.trace:
        trace.write(args.trace)
    print(trace.verdict.text())
    return exit_code(trace.verdict)


def _cmd_sweep(args) -> int:
    sizes = parse_sizes(args.sizes)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    progress = None
    if args.progress:
        def progress(i, total):
            if i % 500 == 0 or i == total:
                print(f"  {i}/{total}", file=sys.stderr)
    report = sweep(args.machine, sizes, strategies, seeds=args.seeds,
                   max_rounds=args.max_rounds, scenarios=args.scenarios, progress=progress)
    sys.stdout.write(report.text(verbose=args.verbose))
    if not report.passed:
        return EXIT_FAILURE
    return EXIT_GATHERED if report.budget_exhausted == 0 else EXIT_BUDGET


def _cmd_enumerate(args) -> int:
    sizes = parse_sizes(args.sizes)
    for n in sizes:
        polys = enumerate_polyominoes(n, contractible_only=args.contractible)
        print(f"{n} {len(polys)}")
        if args.list:
            for p in polys:
                print("  " + " ".join(f"{c.x},{c.y}" for c in p.sorted_cells()))
    return EXIT_GATHERED


def _cmd_verify_lemma(args) -> int:
    if args.max_size > enum_limit():
        raise HarnessError(f"max size {args.max_size} exceeds the enumeration limit {enum_limit()}")
    checked, bad = lemma_sweep(args.max_size)
    print(f"checked {checked} contractible polyominoes of sizes 2..{args.max_size}")
    for cfg in bad:
        print("counterexample " + " ".join(f"{c.x},{c.y}" for c in cfg.sorted_cells()))
    print(f"counterexamples {len(bad)}")
    return EXIT_GATHERED if not bad else EXIT_FAILURE


def _cmd_demo_lockstep(args) -> int:
    machines = [args.machine] if args.machine else ["contractible", "connected"]
    ok = True
    for m in machines:
        report = demo_lockstep(args.distance, m, args.max_rounds)
        sys.stdout.write(report.text())
        ok = ok and report.passed
    return EXIT_GATHERED if ok else EXIT_FAILURE


def _cmd_demo_freeze(args) -> int:
    report = demo_freeze(args.t, seeds=args.seeds, n=args.n, max_rounds=args.max_rounds,
                         machine=args.machine or "general")
    sys.stdout.write(report.text())
    return EXIT_GATHERED if report.false_detections == 0 else EXIT_FAILURE


def _cmd_replay(args) -> int:
    try:
        trace = Trace.read(args.trace)
    except OSError as exc:
        raise HarnessError(f"{args.trace}: {exc.strerror}") from None
    except ValueError as exc:
        raise HarnessError(str(exc)) from None
    if args.scenario:
        scn = read_scenario(args.scenario)
        cfg, machine, input = scn.cells, scn.machine, scn.input
    else:
        try:
            agents = trace.header["agents"].split()
            cfg = Configuration([Cell(*map(int, a.split(","))) for a in agents])
            machine = trace.header["machine"]
        except (KeyError, ValueError):
            raise HarnessError(f"{args.trace}: header lacks agents or machine; pass --scenario") from None
        input = trace.header.get("input", "-")
        input = None if input == "-" else input
    spec = machine_spec(machine)
    try:
        again = replay(trace, cfg, spec, input, auditors=auditors_for(machine))
    except ReplayError as exc:
        print(f"replay failed: {exc}")
        return EXIT_FAILURE
    print(f"replay ok: {len(trace.events)} events, {again.verdict.text()}")
    return EXIT_GATHERED


class _Parser(argparse.ArgumentParser):
    # status 2 means BudgetExhausted here, so usage errors exit with 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gridgather", description="Gathering simulator for grid agents.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run one scenario file")
    r.add_argument("--scenario", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--max-rounds", type=int)
    r.add_argument("--trace", help="write the trace here")
    r.add_argument("--machine", help="override the scenario's machine")
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("sweep", help="audited sweep over polyominoes or random placements")
    s.add_argument("--machine", required=True, choices=MACHINES + ("general-lazy", "contractible-plain"))
    s.add_argument("--sizes", required=True, help="e.g. 1-8 or 2,3")
    s.add_argument("--strategies", default="lockstep,random-fair")
    s.add_argument("--seeds", type=int, default=20)
    s.add_argument("--max-rounds", type=int, default=100_000)
    s.add_argument("--scenarios", type=int, default=50, help="random placements per size (general machine)")
    s.add_argument("--verbose", action="store_true", help="list every run")
    s.add_argument("--progress", action="store_true")
    s.set_defaults(func=_cmd_sweep)

    e = sub.add_parser("enumerate", help="count fixed polyominoes")
    e.add_argument("--sizes", required=True)
    e.add_argument("--contractible", action="store_true", help="hole-free ones only")
    e.add_argument("--list", action="store_true")
    e.set_defaults(func=_cmd_enumerate)

    v = sub.add_parser("verify-lemma", help="exhaustive leaf-or-corner check")
    v.add_argument("--max-size", type=int, default=8)
    v.set_defaults(func=_cmd_verify_lemma)

    d = sub.add_parser("demo-lockstep", help="two deterministic agents never close the gap")
    d.add_argument("--distance", type=int, default=3)
    d.add_argument("--machine", choices=("contractible", "connected", "contractible-plain", "general"))
    d.add_argument("--max-rounds", type=int, default=10_000)
    d.set_defaults(func=_cmd_demo_lockstep)

    f = sub.add_parser("demo-freeze", help="three agents, the far one frozen for t rounds")
    f.add_argument("--t", type=int, default=100)
    f.add_argument("--seeds", type=int, default=20)
    f.add_argument("--n", type=int, default=3, help="agent count handed to the machine")
    f.add_argument("--max-rounds", type=int, default=1_000_000)
    f.add_argument("--machine", choices=("general", "general-lazy"))
    f.set_defaults(func=_cmd_demo_freeze)

    rp = sub.add_parser("replay", help="re-execute a trace and compare")
    rp.add_argument("--trace", required=True)
    rp.add_argument("--scenario")
    rp.set_defaults(func=_cmd_replay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HarnessError, GridError, MachineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
