"""Round-based asynchronous execution of anonymous agents.

Each agent alternates *looks* and *commits* at rounds chosen by a
scheduler strategy.  A look reads the world as it stood at the start of
the round and fixes the next state; the matching commit (strictly later)
applies the state change and the move at the end of its round, so the
result is visible from the following round on.  Between the two the agent
is inert and shows its old state in its old cell.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .grid import Cell, Configuration
from .machine import (
    MachineError,
    MachineSpec,
    Move,
    Observation,
    initial_state_of,
    multiset,
)

LOOK = "LOOK"
COMMIT = "COMMIT"
BIT = "BIT"

TRACE_VERSION = "1"


class EngineError(RuntimeError):
    pass


class InvariantViolation(AssertionError):
    pass


class ReplayError(EngineError):
    pass


# --------------------------------------------------------------------------
# outcomes


@dataclass(frozen=True)
class Outcome:
    kind: str  # Gathered | FalseDetection | BudgetExhausted | Error
    round: int = 0
    cell: Optional[tuple] = None
    agent: Optional[int] = None
    witness: Optional[int] = None
    description: str = ""

    @classmethod
    def gathered(cls, r, cell):
        return cls("Gathered", r, cell=tuple(cell))

    @classmethod
    def false_detection(cls, r, agent, witness):
        return cls("FalseDetection", r, agent=agent, witness=witness)

    @classmethod
    def budget(cls, r):
        return cls("BudgetExhausted", r)

    @classmethod
    def error(cls, description, r=0):
        return cls("Error", r, description=" ".join(description.split()))

    @property
    def is_gathered(self):
        return self.kind == "Gathered"

    def text(self) -> str:
        if self.kind == "Gathered":
            return f"Gathered {self.round} {self.cell[0]},{self.cell[1]}"
        if self.kind == "FalseDetection":
            return f"FalseDetection {self.round} {self.agent} witness={self.witness}"
        if self.kind == "BudgetExhausted":
            return f"BudgetExhausted {self.round}"
        return f"Error {self.round} {self.description}"

    @classmethod
    def parse(cls, text: str) -> "Outcome":
        parts = text.split()
        kind = parts[0]
        if kind == "Gathered":
            x, y = parts[2].split(",")
            return cls.gathered(int(parts[1]), (int(x), int(y)))
        if kind == "FalseDetection":
            return cls.false_detection(int(parts[1]), int(parts[2]), int(parts[3].split("=")[1]))
        if kind == "BudgetExhausted":
            return cls.budget(int(parts[1]))
        if kind == "Error":
            return cls.error(" ".join(parts[2:]), int(parts[1]))
        raise ValueError(f"unknown outcome {text!r}")


RUNNING = None


def check_outcome(world: "World", entered_final: Iterable[int] = ()) -> Optional[Outcome]:
    """Verdict for the world at the end of a round, or ``RUNNING``.

    ``entered_final`` lists agents whose commit in this round took them to
    the final state; any of them not sharing a cell with every other agent
    is a false detection.
    """
    single = len(world.occupancy) == 1
    for a in sorted(entered_final):
        if not single:
            here = world.cells[a]
            witness = next(b for b in range(world.n) if world.cells[b] != here)
            return Outcome.false_detection(world.round, a, witness)
    if single and all(world.final_flags):
        return Outcome.gathered(world.round, world.cells[0])
    return RUNNING


# --------------------------------------------------------------------------
# scheduler strategies


class Strategy:
    """Chooses activation rounds.  Subclasses override the three hooks."""

    name = "strategy"
    fair = True
    window = None  # fairness bound in rounds, if any

    def start(self, n_agents: int, rng: random.Random) -> None:
        self.rng = rng
        self.n_agents = n_agents

    def first_look(self, agent: int) -> Optional[int]:
        raise NotImplementedError

    def commit_round(self, agent: int, look_round: int) -> Optional[int]:
        raise NotImplementedError

    def next_look(self, agent: int, commit_round: int) -> Optional[int]:
        raise NotImplementedError

    def describe(self) -> str:
        return self.name


class Lockstep(Strategy):
    """Every agent looks in round r and commits in round r+1, repeatedly."""

    name = "lockstep"
    window = 2

    def first_look(self, agent):
        return 1

    def commit_round(self, agent, look_round):
        return look_round + 1

    def next_look(self, agent, commit_round):
        return commit_round + 1


class RandomFair(Strategy):
    """Independent truncated-geometric delays before every look and commit.

    Each waiting round an idle agent looks with probability ``p_look`` and a
    pending agent commits with probability ``p_commit``; delays are capped at
    ``cap`` rounds, so every agent completes a look/commit pair within
    ``2 * cap`` rounds.
    """

    name = "random-fair"

    def __init__(self, p_look: float = 0.5, p_commit: float = 0.5, cap: int = 8):
        if not (0 < p_look <= 1 and 0 < p_commit <= 1):
            raise ValueError("probabilities must lie in (0, 1]")
        if cap < 1:
            raise ValueError("cap must be at least 1")
        self.p_look = p_look
        self.p_commit = p_commit
        self.cap = cap
        self.window = 2 * cap

    def _delay(self, p):
        # rounds until success, 1..cap
        rnd = self.rng.random
        d = 1
        while d < self.cap and rnd() >= p:
            d += 1
        return d

    def first_look(self, agent):
        return self._delay(self.p_look)

    def commit_round(self, agent, look_round):
        return look_round + self._delay(self.p_commit)

    def next_look(self, agent, commit_round):
        return commit_round + self._delay(self.p_look)

    def describe(self):
        return f"random-fair:{self.p_look:g},{self.p_commit:g},{self.cap}"


class Scripted(Strategy):
    """Replays an explicit list of ``(round, agent, LOOK|COMMIT)`` events."""

    name = "scripted"
    fair = False

    def __init__(self, events: Iterable[tuple[int, int, str]]):
        self.events = sorted(events, key=lambda e: (e[1], e[0]))

    def start(self, n_agents, rng):
        super().start(n_agents, rng)
        queues: dict[int, list] = {a: [] for a in range(n_agents)}
        for r, a, kind in self.events:
            if a not in queues:
                raise EngineError(f"scripted event for unknown agent {a}")
            queues[a].append((r, kind))
        for a, q in queues.items():
            for i, (r, kind) in enumerate(q):
                expected = LOOK if i % 2 == 0 else COMMIT
                if kind != expected:
                    raise EngineError(f"agent {a}: expected {expected} at position {i}, got {kind} in round {r}")
                if i and r <= q[i - 1][0]:
                    raise EngineError(f"agent {a}: {kind} in round {r} does not follow round {q[i - 1][0]}")
                if r < 1:
                    raise EngineError(f"agent {a}: round {r} < 1")
        self._queues = {a: list(reversed(q)) for a, q in queues.items()}

    def _pop(self, agent):
        q = self._queues[agent]
        return q.pop()[0] if q else None

    def first_look(self, agent):
        return self._pop(agent)

    def commit_round(self, agent, look_round):
        r = self._pop(agent)
        if r is None:
            raise EngineError(f"agent {agent}: look in round {look_round} has no matching commit")
        return r

    def next_look(self, agent, commit_round):
        return self._pop(agent)


class FreezeSubset(Strategy):
    """Holds the ``frozen`` agents inert before ``thaw_round``; others follow ``inner``."""

    def __init__(self, frozen: Iterable[int], thaw_round: int, inner: Strategy):
        if thaw_round < 1:
            raise ValueError("thaw_round must be at least 1")
        self.frozen = frozenset(frozen)
        self.thaw_round = thaw_round
        self.inner = inner
        self.fair = inner.fair
        self.window = inner.window
        self.name = f"freeze({inner.name})"

    def start(self, n_agents, rng):
        super().start(n_agents, rng)
        self.inner.start(n_agents, rng)

    def _hold(self, agent, r):
        if r is not None and agent in self.frozen and r < self.thaw_round:
            return self.thaw_round
        return r

    def first_look(self, agent):
        return self._hold(agent, self.inner.first_look(agent))

    def commit_round(self, agent, look_round):
        return self.inner.commit_round(agent, look_round)

    def next_look(self, agent, commit_round):
        return self._hold(agent, self.inner.next_look(agent, commit_round))

    def describe(self):
        frozen = ",".join(str(a) for a in sorted(self.frozen)) or "-"
        return f"freeze:{frozen}@{self.thaw_round}:{self.inner.describe()}"


def freeze_subset_strategy(frozen, thaw_round, inner) -> FreezeSubset:
    return FreezeSubset(frozen, thaw_round, inner)


def parse_strategy(text: str) -> Strategy:
    """``lockstep`` | ``random-fair[:p_look,p_commit,cap]`` | ``freeze:ids@round:inner``."""
    text = text.strip()
    if text == "lockstep":
        return Lockstep()
    if text == "random-fair":
        return RandomFair()
    if text.startswith("random-fair:"):
        parts = text.split(":", 1)[1].split(",")
        if len(parts) != 3:
            raise ValueError(f"bad random-fair parameters in {text!r}")
        return RandomFair(float(parts[0]), float(parts[1]), int(parts[2]))
    if text.startswith("freeze:"):
        _, ids, rest = text.split(":", 2)
        ids, _, thaw = ids.partition("@")
        frozen = [] if ids in ("", "-") else [int(i) for i in ids.split(",")]
        return FreezeSubset(frozen, int(thaw), parse_strategy(rest))
    raise ValueError(f"unknown strategy {text!r}")


# --------------------------------------------------------------------------
# world and traces


class World:
    """Mutable simulation state; auditors receive it read-only."""

    def __init__(self, cells: Sequence[Cell], states: Sequence, spec: MachineSpec):
        self.n = len(cells)
        self.cells = [Cell(*c) for c in cells]
        self.states = list(states)
        self.final_flags = [spec.is_final(q) for q in self.states]
        self.pending: list = [None] * self.n  # (next_state, move, look_round)
        self.round = 0
        self.occupancy: dict = {}
        for a, c in enumerate(self.cells):
            self.occupancy.setdefault(c, []).append(a)

    def visible(self, c) -> list:
        return [self.states[a] for a in self.occupancy.get(c, ())]

    def configuration(self) -> Configuration:
        return Configuration({c: len(a) for c, a in self.occupancy.items()})

    def observation(self, agent: int) -> Observation:
        x, y = self.cells[agent]
        occ = self.occupancy
        states = self.states
        here = [states[b] for b in occ[(x, y)] if b != agent]
        sides = []
        for c in ((x, y + 1), (x + 1, y), (x, y - 1), (x - 1, y)):
            ids = occ.get(c)
            sides.append(multiset([states[b] for b in ids]) if ids else ())
        return Observation(multiset(here), sides[0], sides[1], sides[2], sides[3])


@dataclass
class CommitEvent:
    round: int
    agent: int
    state_before: object
    state_after: object
    cell_before: Cell
    cell_after: Cell
    move: Move
    look_round: int


class Auditor:
    """Invariant checker hooked into a run; raise InvariantViolation to fail it."""

    def start(self, world: World) -> None:
        pass

    def on_commit(self, world: World, ev: CommitEvent) -> None:
        pass

    def on_round(self, world: World, commits: list[CommitEvent]) -> None:
        pass


class FairnessAuditor(Auditor):
    """Every agent not in a final state completes a look/commit pair within ``window`` rounds."""

    def __init__(self, window: int, start_round: int = 0):
        self.window = window
        self.start_round = start_round

    def start(self, world):
        self.last = [self.start_round] * world.n

    def on_commit(self, world, ev):
        self.last[ev.agent] = ev.round

    def on_round(self, world, commits):
        for a, r in enumerate(self.last):
            if not world.final_flags[a] and world.round - r > self.window:
                raise InvariantViolation(f"agent {a} starved: no commit since round {r}, now {world.round}")


def scenario_digest(cfg: Configuration, machine: str, input: Optional[str]) -> str:
    body = machine + "|" + (input or "-") + "|" + ";".join(f"{c.x},{c.y}" for c in cfg.sorted_cells())
    return hashlib.blake2b(body.encode(), digest_size=8).hexdigest()


@dataclass
class Trace:
    header: dict
    events: list = field(default_factory=list)  # (round, agent, kind, detail)
    verdict: Optional[Outcome] = None
    rounds: int = 0

    def lines(self) -> list[str]:
        return [f"{r} {a} {k} {d}" for r, a, k, d in self.events]

    def text(self) -> str:
        out = [f"#! {k} {v}" for k, v in self.header.items()]
        out.extend(self.lines())
        out.append(f"#verdict {self.verdict.text() if self.verdict else '-'}")
        return "".join(line + "\n" for line in out)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.text())

    @classmethod
    def parse(cls, text: str, source: str = "<trace>") -> "Trace":
        """Inverse of :meth:`text`; errors name ``source:line:column``."""
        header: dict = {}
        events = []
        verdict = None
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line:
                continue
            if line.startswith("#!"):
                key, _, value = line[2:].strip().partition(" ")
                header[key] = value
            elif line.startswith("#verdict"):
                body = line[len("#verdict"):].strip()
                try:
                    verdict = None if body == "-" else Outcome.parse(body)
                except ValueError as exc:
                    raise ValueError(f"{source}:{lineno}:{line.index(body) + 1}: {exc}") from None
            elif line.startswith("#"):
                continue
            else:
                parts = line.split(" ", 3)
                if len(parts) < 3:
                    raise ValueError(f"{source}:{lineno}:1: expected 'round agent event detail'")
                for i in (0, 1):
                    if not parts[i].isdigit():
                        col = sum(len(p) + 1 for p in parts[:i]) + 1
                        raise ValueError(f"{source}:{lineno}:{col}: expected an integer, got {parts[i]!r}")
                if parts[2] not in (LOOK, COMMIT, BIT):
                    col = len(parts[0]) + len(parts[1]) + 3
                    raise ValueError(f"{source}:{lineno}:{col}: unknown event {parts[2]!r}")
                detail = parts[3] if len(parts) == 4 else ""
                events.append((int(parts[0]), int(parts[1]), parts[2], detail))
        return cls(header, events, verdict)

    @classmethod
    def read(cls, path) -> "Trace":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read(), str(path))

    def schedule(self) -> list[tuple[int, int, str]]:
        return [(r, a, k) for r, a, k, _ in self.events if k in (LOOK, COMMIT)]

    def bits(self) -> dict:
        return {(r, a): int(d) for r, a, k, d in self.events if k == BIT}


def _cell_text(c) -> str:
    return f"{c[0]},{c[1]}"


# --------------------------------------------------------------------------
# the run loop


def run(
    cfg: Configuration,
    spec: MachineSpec,
    input: Optional[str] = None,
    strategy: Optional[Strategy] = None,
    seed: int = 0,
    max_rounds: int = 100_000,
    *,
    auditors: Sequence[Auditor] = (),
    bits: Optional[Callable[[int, int], int]] = None,
    record: bool = True,
    stop_on_verdict: bool = True,
    agent_order: Optional[Sequence[Cell]] = None,
) -> Trace:
    """Execute one scenario and return its trace.

    Agents are numbered in (y, x) order of their starting cells unless
    ``agent_order`` fixes it.  ``bits`` overrides the random-bit source
    (used by replay).  With ``stop_on_verdict=False`` the run continues to
    ``max_rounds`` after a verdict; the first verdict is kept.
    """
    strategy = strategy or Lockstep()
    header = {
        "gridgather-trace": TRACE_VERSION,
        "machine": spec.name,
        "scenario": "-",
        "seed": str(seed),
        "strategy": strategy.describe(),
        "max_rounds": str(max_rounds),
        "input": input or "-",
    }
    trace = Trace(header)
    try:
        if len(cfg) == 0:
            raise EngineError("empty configuration")
        if not cfg.is_initial:
            raise EngineError("initial configuration must have one agent per cell")
        if max_rounds < 1:
            raise EngineError("max_rounds must be at least 1")
        header["scenario"] = scenario_digest(cfg, spec.name, input)
        q0 = initial_state_of(spec, input)
    except (EngineError, MachineError) as exc:
        trace.verdict = Outcome.error(str(exc))
        return trace

    order = list(agent_order) if agent_order is not None else cfg.sorted_cells()
    header["agents"] = " ".join(_cell_text(c) for c in order)
    world = World(order, [q0] * len(order), spec)
    n = world.n
    sched_rng = random.Random(f"sched:{seed}")
    bit_rng = random.Random(f"bits:{seed}")
    if bits is None:
        def bits(r, a, _g=bit_rng.getrandbits):
            return _g(1)

    events = trace.events
    transition = spec.transition
    action = spec.action
    is_final = spec.is_final
    randomized = spec.randomized
    verdict: Optional[Outcome] = None

    for aud in auditors:
        aud.start(world)

    heap: list = []
    try:
        strategy.start(n, sched_rng)
        for a in range(n):
            if world.final_flags[a]:
                continue
            r = strategy.first_look(a)
            if r is not None:
                heapq.heappush(heap, (r, a))
    except EngineError as exc:
        trace.verdict = Outcome.error(str(exc))
        return trace

    last_round = 0
    try:
        while heap:
            r = heap[0][0]
            if r > max_rounds:
                break
            due = []
            while heap and heap[0][0] == r:
                due.append(heapq.heappop(heap)[1])
            due.sort()
            world.round = r
            last_round = r
            looks = [a for a in due if world.pending[a] is None]
            commits = [a for a in due if world.pending[a] is not None]
            for a in looks:
                obs = world.observation(a)
                b = bits(r, a) if randomized else None
                q = world.states[a]
                q2 = transition(q, obs, b)
                world.pending[a] = (q2, action(q2), r)
                if record:
                    events.append((r, a, LOOK, obs.digest()))
                    if randomized:
                        events.append((r, a, BIT, str(b)))
                cr = strategy.commit_round(a, r)
                if cr is None or cr <= r:
                    raise EngineError(f"agent {a}: commit round {cr} not after look round {r}")
                heapq.heappush(heap, (cr, a))
            if not commits:
                continue
            applied = []
            for a in commits:
                q2, mv, lr = world.pending[a]
                c0 = world.cells[a]
                dx, dy = mv.vector
                applied.append(CommitEvent(r, a, world.states[a], q2, c0, Cell(c0[0] + dx, c0[1] + dy), mv, lr))
            occ = world.occupancy
            entered = []
            for ev in applied:
                a = ev.agent
                if ev.cell_after != ev.cell_before:
                    ids = occ[ev.cell_before]
                    ids.remove(a)
                    if not ids:
                        del occ[ev.cell_before]
                    occ.setdefault(ev.cell_after, []).append(a)
                    world.cells[a] = ev.cell_after
                world.states[a] = ev.state_after
                world.pending[a] = None
                fin = is_final(ev.state_after)
                if fin and not world.final_flags[a]:
                    entered.append(a)
                world.final_flags[a] = fin
            for ids in occ.values():
                ids.sort()
            for ev in applied:
                if record:
                    events.append((r, ev.agent, COMMIT,
                                   f"{ev.state_before.label} {ev.state_after.label} "
                                   f"{_cell_text(ev.cell_before)} {_cell_text(ev.cell_after)}"))
                for aud in auditors:
                    aud.on_commit(world, ev)
                if not world.final_flags[ev.agent]:
                    nr = strategy.next_look(ev.agent, r)
                    if nr is not None:
                        if nr <= r:
                            raise EngineError(f"agent {ev.agent}: look round {nr} not after commit round {r}")
                        heapq.heappush(heap, (nr, ev.agent))
            for aud in auditors:
                aud.on_round(world, applied)
            if verdict is None:
                verdict = check_outcome(world, entered)
                if verdict is not None and stop_on_verdict:
                    break
    except InvariantViolation as exc:
        verdict = Outcome.error(f"invariant: {exc}", world.round)
    except (EngineError, MachineError) as exc:
        verdict = Outcome.error(str(exc), world.round)

    trace.verdict = verdict if verdict is not None else Outcome.budget(max_rounds)
    trace.rounds = last_round
    trace.world = world  # type: ignore[attr-defined]
    return trace


def replay(trace: Trace, cfg: Configuration, spec: MachineSpec, input: Optional[str] = None,
           auditors: Sequence[Auditor] = ()) -> Trace:
    """Re-execute ``trace``'s schedule and random bits; demand identical events."""
    digest = scenario_digest(cfg, spec.name, input)
    if trace.header.get("scenario") != digest:
        raise ReplayError(f"scenario digest mismatch: trace has {trace.header.get('scenario')}, scenario is {digest}")
    recorded = trace.bits()

    def bits(r, a):
        try:
            return recorded[(r, a)]
        except KeyError:
            raise EngineError(f"no recorded random bit for agent {a} in round {r}") from None

    order = None
    if "agents" in trace.header:
        order = [Cell(*map(int, t.split(","))) for t in trace.header["agents"].split()]
    try:
        again = run(cfg, spec, input, Scripted(trace.schedule()),
                    seed=int(trace.header.get("seed", 0)),
                    max_rounds=int(trace.header.get("max_rounds", 100_000)),
                    auditors=auditors, bits=bits, agent_order=order)
    except EngineError as exc:
        raise ReplayError(str(exc)) from exc
    if "strategy" in trace.header:
        again.header["strategy"] = trace.header["strategy"]
    old, new = trace.lines(), again.lines()
    for i, (x, y) in enumerate(zip(old, new)):
        if x != y:
            raise ReplayError(f"divergence at event {i}: recorded {x!r}, replayed {y!r}")
    if len(old) != len(new):
        i = min(len(old), len(new))
        rec = old[i] if i < len(old) else "<end>"
        rep = new[i] if i < len(new) else "<end>"
        raise ReplayError(f"divergence at event {i}: recorded {rec!r}, replayed {rep!r}")
    if trace.verdict != again.verdict:
        raise ReplayError(f"verdict mismatch: recorded {trace.verdict}, replayed {again.verdict}")
    return again
