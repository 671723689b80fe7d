"""Scenario files, sweeps, and the two impossibility demonstrators."""

from __future__ import annotations

import random
import re
import statistics
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .connected import MapAuditor, cg_machine, target_cell
from .contractible import ShrinkingAuditor, cc_machine
from .engine import (
    Auditor, FreezeSubset, Lockstep, Outcome, Strategy, Trace,
    parse_strategy, run,
)
from .general import APPROACHES, BagAuditor, gg_machine
from .grid import (
    Configuration, GridError, distance, enumerate_polyominoes,
    is_connected, is_contractible, parse_configuration, format_configuration,
)
from .machine import MachineSpec, encode_count

MACHINES = ("contractible", "connected", "general")

EXIT_GATHERED = 0
EXIT_INPUT = 1
EXIT_BUDGET = 2
EXIT_FAILURE = 3


class HarnessError(ValueError):
    """Bad scenario, flag or precondition; the CLI maps it to exit status 1."""


def exit_code(outcome: Outcome) -> int:
    if outcome.kind == "Gathered":
        return EXIT_GATHERED
    if outcome.kind == "BudgetExhausted":
        return EXIT_BUDGET
    return EXIT_FAILURE


# --------------------------------------------------------------------------
# machines


def machine_spec(name: str) -> MachineSpec:
    """Spec by machine or trace name (``general-lazy`` selects an approach)."""
    if name == "contractible":
        return cc_machine()
    if name == "contractible-plain":
        return cc_machine(yielding=False)
    if name == "connected":
        return cg_machine()
    if name == "general":
        return gg_machine()
    if name.startswith("general-") and name[8:] in APPROACHES:
        return gg_machine(name[8:])
    raise HarnessError(f"unknown machine {name!r}")


def auditors_for(machine: str) -> list[Auditor]:
    base = machine.split("-", 1)[0]
    if base == "contractible":
        return [ShrinkingAuditor()]
    if base == "connected":
        return [MapAuditor()]
    if base == "general":
        return [BagAuditor()]
    return []


# --------------------------------------------------------------------------
# scenarios


@dataclass
class Scenario:
    machine: str
    cells: Configuration
    n: Optional[int] = None
    strategy: str = "random-fair"
    seed: int = 0
    max_rounds: int = 100_000
    source: str = "<scenario>"

    @property
    def input(self) -> Optional[str]:
        return None if self.n is None else encode_count(self.n)

    def text(self) -> str:
        lines = [f"machine: {self.machine}"]
        if self.n is not None:
            lines.append(f"n: {self.n}")
        lines += [f"strategy: {self.strategy}", f"seed: {self.seed}",
                  f"max_rounds: {self.max_rounds}", "cells:"]
        return "\n".join(lines) + "\n" + format_configuration(self.cells)


_INT_KEYS = ("n", "seed", "max_rounds")


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    """Parse ``key: value`` lines followed by a ``cells:`` block.

    Instead of a cells block, ``generator: polyomino SIZE INDEX`` or
    ``generator: random K SEED`` builds the configuration.
    """
    values: dict = {}
    where: dict = {}
    lines = text.splitlines()
    cells_at = None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        m = re.match(r"\s*([A-Za-z_]+)\s*:\s*(.*?)\s*$", line)
        if not m:
            col = len(line) - len(line.lstrip()) + 1
            raise HarnessError(f"{source}:{lineno}:{col}: expected 'key: value'")
        key, value = m.group(1), m.group(2)
        vcol = m.start(2) + 1
        if key == "cells":
            if value:
                raise HarnessError(f"{source}:{lineno}:{vcol}: cells block starts on the next line")
            cells_at = lineno
            break
        if key in values:
            raise HarnessError(f"{source}:{lineno}:{m.start(1) + 1}: duplicate key {key!r}")
        if key in _INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError:
                raise HarnessError(f"{source}:{lineno}:{vcol}: {key} must be an integer, got {value!r}") from None
        elif key in ("machine", "strategy", "generator"):
            values[key] = value
        else:
            raise HarnessError(f"{source}:{lineno}:{m.start(1) + 1}: unknown key {key!r}")
        where[key] = (lineno, vcol)

    if "machine" not in values:
        raise HarnessError(f"{source}:1:1: missing 'machine'")
    machine = values["machine"]
    try:
        machine_spec(machine)
    except HarnessError:
        line, col = where["machine"]
        raise HarnessError(f"{source}:{line}:{col}: unknown machine {machine!r}") from None
    if "strategy" in values:
        try:
            parse_strategy(values["strategy"])
        except ValueError as exc:
            line, col = where["strategy"]
            raise HarnessError(f"{source}:{line}:{col}: {exc}") from None
    for key in ("max_rounds", "n"):
        if key in values and values[key] < 1:
            line, col = where[key]
            raise HarnessError(f"{source}:{line}:{col}: {key} must be positive")

    if cells_at is not None:
        if "generator" in values:
            line, col = where["generator"]
            raise HarnessError(f"{source}:{line}:{col}: give either a generator or a cells block")
        body = "\n".join(lines[cells_at:])
        try:
            cells = parse_configuration(body, source, first_line=cells_at + 1)
        except GridError as exc:
            raise HarnessError(str(exc)) from None
    elif "generator" in values:
        line, col = where["generator"]
        cells = _generate(values["generator"], f"{source}:{line}:{col}")
    else:
        raise HarnessError(f"{source}:{len(lines) + 1}:1: missing 'cells:' block")
    if len(cells) == 0:
        raise HarnessError(f"{source}:{(cells_at or 0) + 1}:1: empty configuration")

    return Scenario(
        machine=machine,
        cells=cells,
        n=values.get("n"),
        strategy=values.get("strategy", "random-fair"),
        seed=values.get("seed", 0),
        max_rounds=values.get("max_rounds", 100_000),
        source=source,
    )


def read_scenario(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise HarnessError(f"{path}: {exc.strerror}") from None
    return parse_scenario(text, str(path))


def _generate(spec: str, at: str) -> Configuration:
    parts = spec.split()
    try:
        args = [int(p) for p in parts[1:]]
    except ValueError:
        raise HarnessError(f"{at}: generator arguments must be integers") from None
    if parts and parts[0] == "polyomino" and len(args) == 2:
        size, index = args
        try:
            polys = enumerate_polyominoes(size)
        except GridError as exc:
            raise HarnessError(f"{at}: {exc}") from None
        if not 0 <= index < len(polys):
            raise HarnessError(f"{at}: polyomino index {index} outside 0..{len(polys) - 1}")
        return polys[index]
    if parts and parts[0] == "random" and len(args) == 2:
        k, seed = args
        if k < 1:
            raise HarnessError(f"{at}: need at least one agent")
        return random_configuration(k, random.Random(seed))
    raise HarnessError(f"{at}: expected 'polyomino SIZE INDEX' or 'random K SEED'")


def check_preconditions(scn: Scenario) -> None:
    base = scn.machine.split("-", 1)[0]
    if base == "contractible" and not is_contractible(scn.cells):
        raise HarnessError("configuration not contractible")
    if base == "connected" and not is_connected(scn.cells):
        raise HarnessError("configuration not connected")
    if base == "general":
        if scn.n is None:
            raise HarnessError("general machine needs n")
        if scn.n != len(scn.cells):
            raise HarnessError(f"n={scn.n} but the configuration has {len(scn.cells)} agents")


def run_scenario(scn: Scenario, *, seed: Optional[int] = None, max_rounds: Optional[int] = None,
                 record: bool = True, audit: bool = True) -> Trace:
    check_preconditions(scn)
    return run(
        scn.cells, machine_spec(scn.machine), scn.input, parse_strategy(scn.strategy),
        seed=scn.seed if seed is None else seed,
        max_rounds=scn.max_rounds if max_rounds is None else max_rounds,
        auditors=auditors_for(scn.machine) if audit else (),
        record=record,
    )


def random_configuration(k: int, rng: random.Random, reach: int = 6) -> Configuration:
    """``k`` distinct cells; pairs sit within distance ``reach``, larger groups in a reach-by-reach box."""
    if k == 1:
        return Configuration([(0, 0)])
    if k == 2:
        while True:
            x, y = rng.randint(-reach, reach), rng.randint(-reach, reach)
            if 1 <= abs(x) + abs(y) <= reach:
                return Configuration([(0, 0), (x, y)])
    box = [(x, y) for x in range(reach) for y in range(reach)]
    if k > len(box):
        raise HarnessError(f"{k} agents do not fit in a {reach}x{reach} box")
    return Configuration(rng.sample(box, k))


# --------------------------------------------------------------------------
# sweeps


@dataclass
class RunRecord:
    cells: Configuration
    strategy: str
    seed: int
    outcome: Outcome
    note: str = ""

    @property
    def failed(self) -> bool:
        return self.outcome.kind in ("FalseDetection", "Error") or bool(self.note)

    def line(self) -> str:
        cells = ";".join(f"{c.x},{c.y}" for c in self.cells.sorted_cells())
        extra = f" [{self.note}]" if self.note else ""
        return f"{cells} {self.strategy} seed={self.seed} {self.outcome.text()}{extra}"


@dataclass
class SweepReport:
    machine: str
    max_rounds: int
    records: list = field(default_factory=list)

    def add(self, rec: RunRecord) -> None:
        self.records.append(rec)

    def merge(self, other: "SweepReport") -> "SweepReport":
        return SweepReport(self.machine, self.max_rounds, self.records + other.records)

    def count(self, kind: str) -> int:
        return sum(r.outcome.kind == kind and not r.note for r in self.records)

    @property
    def gathered(self) -> int:
        return self.count("Gathered")

    @property
    def budget_exhausted(self) -> int:
        return self.count("BudgetExhausted")

    @property
    def false_detection(self) -> int:
        return sum(r.outcome.kind == "FalseDetection" for r in self.records)

    @property
    def violations(self) -> int:
        return sum(r.outcome.kind == "Error" or bool(r.note) for r in self.records)

    @property
    def passed(self) -> bool:
        return self.false_detection == 0 and self.violations == 0

    def rounds(self) -> list[int]:
        return sorted(r.outcome.round for r in self.records if r.outcome.kind == "Gathered" and not r.note)

    def stall_repro(self) -> Optional[Scenario]:
        """Smallest budget-exhausted scenario, as a scenario file."""
        stalls = [r for r in self.records if r.outcome.kind == "BudgetExhausted"]
        if not stalls:
            return None
        r = min(stalls, key=lambda r: (len(r.cells), r.cells.sorted_cells(), r.seed))
        n = len(r.cells) if self.machine.startswith("general") else None
        return Scenario(self.machine, r.cells, n, r.strategy, r.seed, self.max_rounds)

    def text(self, verbose: bool = False) -> str:
        total = len(self.records)
        out = [
            f"machine {self.machine} runs {total} max_rounds {self.max_rounds}",
            f"gathered {self.gathered}",
            f"budget-exhausted {self.budget_exhausted}",
            f"false-detection {self.false_detection}",
            f"invariant-violations {self.violations}",
        ]
        rs = self.rounds()
        if rs:
            out.append(f"rounds min {rs[0]} median {statistics.median_low(rs)} max {rs[-1]}")
        for r in self.records:
            if verbose or r.failed:
                out.append(r.line())
        repro = self.stall_repro()
        if repro is not None:
            out.append("minimal stall repro:")
            out += ["  " + ln for ln in repro.text().splitlines()]
        out.append("PASS" if self.passed else "FAIL")
        return "\n".join(out) + "\n"


def parse_sizes(text: str) -> list[int]:
    """``3``, ``1-8``, ``1..8`` or comma lists of those."""
    sizes: list[int] = []
    for part in text.split(","):
        part = part.strip()
        m = re.fullmatch(r"(\d+)\s*(?:-|\.\.)\s*(\d+)", part)
        try:
            if m:
                lo, hi = int(m.group(1)), int(m.group(2))
                if lo > hi:
                    raise HarnessError(f"empty size range {part!r}")
                sizes.extend(range(lo, hi + 1))
            else:
                sizes.append(int(part))
        except ValueError:
            raise HarnessError(f"bad size {part!r}") from None
    if any(s < 1 for s in sizes):
        raise HarnessError("sizes must be positive")
    return sizes


def _audit_one(machine: str, spec: MachineSpec, cells: Configuration, strategy: Strategy,
               seed: int, max_rounds: int, input: Optional[str]) -> RunRecord:
    auditors = auditors_for(machine)
    tr = run(cells, spec, input, strategy, seed=seed, max_rounds=max_rounds,
             auditors=auditors, record=False)
    out = tr.verdict
    note = ""
    if machine == "connected" and out.kind == "Gathered" and out.cell != target_cell(cells):
        note = f"gathered at {out.cell.x},{out.cell.y}, expected {target_cell(cells).x},{target_cell(cells).y}"
    return RunRecord(cells, strategy.describe(), seed, out, note)


def _jobs_for(machine: str, sizes: Sequence[int], strategies: Sequence[str], seeds: int,
              scenarios: int) -> list:
    spec = machine_spec(machine)
    base = machine.split("-", 1)[0]
    jobs = []
    for size in sizes:
        if base == "general":
            rng = random.Random(f"scenarios:{size}")
            configs = [random_configuration(size, rng) for _ in range(scenarios)]
        else:
            configs = enumerate_polyominoes(size, contractible_only=(base == "contractible"))
        for cfg in configs:
            for name in strategies:
                once = name == "lockstep" and not spec.randomized
                for seed in range(1 if once else seeds):
                    jobs.append((cfg, name, seed))
    return jobs


def sweep(machine: str, sizes: Sequence[int], strategies: Sequence[str] = ("lockstep", "random-fair"),
          seeds: int = 20, max_rounds: int = 100_000, scenarios: int = 50, progress=None) -> SweepReport:
    """Cross product of configurations, strategies and seeds, every run audited.

    Deterministic machines run each polyomino of each size; the general
    machine runs ``scenarios`` random placements per agent count with
    ``n`` set correctly.  Lockstep on a deterministic machine is run once.
    """
    spec = machine_spec(machine)
    for name in strategies:
        try:
            parse_strategy(name)
        except ValueError as exc:
            raise HarnessError(str(exc)) from None
    report = SweepReport(machine, max_rounds)
    jobs = _jobs_for(machine, sizes, strategies, seeds, scenarios)
    general = machine.startswith("general")
    for i, (cfg, name, seed) in enumerate(jobs):
        input = encode_count(len(cfg)) if general else None
        report.add(_audit_one(machine, spec, cfg, parse_strategy(name), seed, max_rounds, input))
        if progress is not None:
            progress(i + 1, len(jobs))
    return report


# --------------------------------------------------------------------------
# demonstrators


@dataclass
class LockstepReport:
    distance: int
    machine: str
    rounds: int
    distances: set
    outcome: Outcome
    last_round: int = 0
    halted: bool = False

    @property
    def passed(self) -> bool:
        return self.distances == {self.distance}

    def text(self) -> str:
        seen = ",".join(str(d) for d in sorted(self.distances))
        status = "PASS" if self.passed else "FAIL"
        note = (f"all agents halted by round {self.last_round}; positions fixed from then on\n"
                if self.halted else "")
        return (f"machine {self.machine} distance {self.distance} rounds {self.rounds}\n"
                f"distances seen {seen}\nverdict {self.outcome.text()}\n{note}{status}\n")


class _DistanceAuditor(Auditor):
    def start(self, world):
        self.seen = {distance(*world.cells)}
        self.last = 0

    def on_round(self, world, commits):
        self.seen.add(distance(*world.cells))
        self.last = world.round


def demo_lockstep(d: int, machine: str, rounds: int = 10_000) -> LockstepReport:
    """Two copies of a deterministic machine, ``d`` apart, activated in lockstep."""
    if d <= 1:
        raise HarnessError("distance must be larger than 1")
    if rounds < 1:
        raise HarnessError("rounds must be positive")
    spec = machine_spec(machine)
    if spec.randomized or spec.requires_input:
        raise HarnessError(f"machine {machine!r} is randomized; the demonstration needs a deterministic one")
    aud = _DistanceAuditor()
    tr = run(Configuration([(0, 0), (d, 0)]), spec, None, Lockstep(), max_rounds=rounds,
             auditors=[aud], record=False, stop_on_verdict=False)
    halted = all(tr.world.final_flags)
    return LockstepReport(d, machine, rounds, aud.seen, tr.verdict, aud.last, halted)


def freeze_configuration(t: int) -> Configuration:
    return Configuration([(0, 0), (0, 2), (0, t + 3)])


@dataclass
class FreezeReport:
    t: int
    n: int
    outcomes: list

    @property
    def false_detections(self) -> int:
        return sum(o.kind == "FalseDetection" for o in self.outcomes)

    def text(self) -> str:
        lines = [f"t {self.t} n {self.n} seeds {len(self.outcomes)}"]
        lines += [f"seed {i} {o.text()}" for i, o in enumerate(self.outcomes)]
        lines.append(f"false-detection {self.false_detections}")
        return "\n".join(lines) + "\n"


def demo_freeze(t: int, seeds: int = 20, n: int = 3, max_rounds: int = 1_000_000,
                machine: str = "general") -> FreezeReport:
    """Three agents at (0,0), (0,2), (0,t+3); the far one sleeps through rounds 1..t.

    The other two are activated together every round.  ``n`` is handed to
    the machine as is, so a wrong value serves as a negative control.
    """
    if t < 1:
        raise HarnessError("t must be at least 1")
    if n < 1:
        raise HarnessError("n must be positive")
    spec = machine_spec(machine)
    cfg = freeze_configuration(t)
    outcomes = []
    for seed in range(seeds):
        strategy = FreezeSubset([2], t + 1, Lockstep())
        tr = run(cfg, spec, encode_count(n), strategy, seed=seed, max_rounds=max_rounds,
                 auditors=[BagAuditor()] if n == len(cfg) else [], record=False)
        outcomes.append(tr.verdict)
    return FreezeReport(t, n, outcomes)


__all__ = [
    "HarnessError", "Scenario", "parse_scenario", "read_scenario", "check_preconditions",
    "run_scenario", "random_configuration", "RunRecord", "SweepReport", "sweep", "parse_sizes",
    "demo_lockstep", "demo_freeze", "freeze_configuration", "machine_spec", "auditors_for",
    "exit_code", "MACHINES",
]
