"""Randomized gathering machine that is told the number of agents.

Agents wander, and whenever two of them come within one step of each
other they hold a contest decided by their characteristics (the move
sequences from their starting cells).  Losers stop and wait; winners
collect them into a bag of relative paths.  The agent that ends up with
n-1 agents in its bag fetches every waiting agent, hands it the way back
to the champion's starting cell, and finally returns there itself.

Characteristics can grow long, so they are kept as cons cells carrying a
rolling hash and the cumulative displacement; the full string is only
built when a contest needs a lexicographic comparison.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional

from .engine import Auditor, InvariantViolation
from .machine import MachineError, MachineSpec, Move, Observation, decode_count

_VEC = {"N": (0, 1), "E": (1, 0), "S": (0, -1), "W": (-1, 0)}
_INV = {"N": "S", "E": "W", "S": "N", "W": "E", "P": "P"}
_ORDER = {"N": "0", "E": "1", "S": "2", "W": "3"}
_MOVE = {"N": Move.N, "E": Move.E, "S": Move.S, "W": Move.W}
_SIDES = ("P", "N", "E", "S", "W")
_MOD = (1 << 61) - 1


class Char:
    """Immutable characteristic: a cons list of moves."""

    __slots__ = ("prev", "letter", "length", "hash", "disp", "_s")

    def __init__(self, prev: Optional["Char"], letter: str):
        self.prev = prev
        self.letter = letter
        if prev is None:
            self.length, self.hash, self.disp = 1, _code(letter), _VEC[letter]
        else:
            self.length = prev.length + 1
            self.hash = (prev.hash * 5 + _code(letter)) % _MOD
            px, py = prev.disp
            dx, dy = _VEC[letter]
            self.disp = (px + dx, py + dy)
        self._s = None

    def order_string(self) -> str:
        """Letters mapped so that plain string order is N<E<S<W lexicographic order."""
        if self._s is None:
            out = []
            node = self
            while node is not None:
                if node._s is not None:
                    out.append(node._s[::-1])
                    break
                out.append(_ORDER[node.letter])
                node = node.prev
            self._s = "".join(out)[::-1]
        return self._s

    def moves(self) -> str:
        inv = {v: k for k, v in _ORDER.items()}
        return "".join(inv[c] for c in self.order_string())


def _code(letter):
    return "NESW".index(letter) + 1


def extend(c: Optional[Char], letter: str) -> Char:
    return Char(c, letter)


def char_id(c: Optional[Char]) -> tuple[int, int]:
    return (0, 0) if c is None else (c.length, c.hash)


def char_disp(c: Optional[Char]) -> tuple[int, int]:
    return (0, 0) if c is None else c.disp


def char_string(c: Optional[Char]) -> str:
    return "" if c is None else c.moves()


def char_key(c: Optional[Char]) -> str:
    return "" if c is None else c.order_string()


def char_from_moves(moves: str) -> Optional[Char]:
    c = None
    for m in moves:
        c = Char(c, m)
    return c


def compare_chars(a: Optional[Char], b: Optional[Char]) -> int:
    if char_id(a) == char_id(b):
        return 0
    ka, kb = char_key(a), char_key(b)
    return (ka > kb) - (ka < kb)


def contest(me: Optional[Char], rivals) -> str:
    """``"lose"`` or ``"win"`` against ``rivals``, a list of (direction, Char).

    A larger characteristic wins; between equal ones the agent South or
    West of the other loses.
    """
    for d, c in rivals:
        cmp = compare_chars(c, me)
        if cmp > 0:
            return "lose"
        if cmp == 0:
            if d == "P":
                raise MachineError("equal characteristics in one cell")
            if d in ("N", "E"):
                return "lose"
    return "win"


# --------------------------------------------------------------------------
# paths and bags


def canonical_path(off) -> str:
    """Shortest path to ``off``: vertical letters first, then horizontal."""
    dx, dy = off
    return ("N" * dy if dy >= 0 else "S" * -dy) + ("E" * dx if dx >= 0 else "W" * -dx)


def path_order_key(path: str) -> str:
    return "".join(_ORDER[m] for m in path)


def guiding_plan(bag) -> list[str]:
    """Distinct bag paths in visiting order (N<E<S<W, prefixes first)."""
    return sorted({canonical_path(o) for o in bag}, key=path_order_key)


def absorb(bag, direction: str, loser_bag) -> tuple:
    """Bag after taking in a loser ``direction`` of us (``P`` = same cell) and its bag."""
    vx, vy = _VEC.get(direction, (0, 0))
    grown = list(bag) + [(vx, vy)] + [(vx + x, vy + y) for x, y in loser_bag]
    return tuple(sorted(grown))


def rebase(bag, letter: str) -> tuple:
    dx, dy = _VEC[letter]
    return tuple(sorted((x - dx, y - dy) for x, y in bag))


# --------------------------------------------------------------------------
# approach strategies


class LazyWalk:
    """Each decision: stay with probability 1/2, else step to a uniform random neighbour.

    One random bit arrives per look, so a step takes three looks: one for
    stay-or-go and two for the direction.
    """

    name = "lazy"
    initial = ("d",)

    def step(self, s, bit):
        stage = s[0]
        if stage == "d":
            return (("b",), "") if bit else (("d",), "")
        if stage == "b":
            return ("c", bit), ""
        return ("d",), "NESW"[2 * s[1] + bit]


@lru_cache(maxsize=None)
def sweep(radius: int) -> str:
    """Boustrophedon tour seeing every cell within ``radius`` (sup norm), back to start."""
    moves = []
    x, y = 0, 0

    def go(tx, ty):
        nonlocal x, y
        for ch in canonical_path((tx - x, ty - y)):
            moves.append(ch)
        x, y = tx, ty

    row = -radius + 1
    east = True
    while True:
        go(-radius if east else radius, row)
        go(radius if east else -radius, row)
        if row + 1 >= radius:
            break
        row = min(row + 3, radius - 1)
        east = not east
    go(0, 0)
    return "".join(moves)


class PhasedSearch:
    """Coin-flip phases of growing radius: search the neighbourhood or sit still.

    Phase ``k`` uses radius ``base * 2**k``, so the work spent before the
    radius first exceeds a distance ``D`` stays within a constant factor of
    the final tour, about ``D**2`` moves.  A searcher walks the sweep tour and
    returns to where the phase began; a waiter stays put.  Both phases last
    twice the tour length, so a waiter is still in place while a searcher
    nearby tours.
    """

    name = "phased"

    def __init__(self, base: int = 1):
        self.base = base
        self.initial = (1, "u", 0)

    def step(self, s, bit):
        k, mode, idx = s
        tour = sweep(self.base << k)
        if mode == "u":
            mode = "s" if bit else "w"
            idx = 0
        move = tour[idx] if mode == "s" and idx < len(tour) else ""
        idx += 1
        if idx >= 2 * len(tour):
            return (k + 1, "u", 0), move
        return (k, mode, idx), move


APPROACHES = {"lazy": LazyWalk, "phased": PhasedSearch}


# --------------------------------------------------------------------------
# states

APPROACH = "approach"
CONTEST = "contest"
LOST = "lost"  # waiting, not yet confirmed by the winner
HELD = "held"  # waiting, in somebody's bag
GUIDE = "guide"
FINAL = "final"
OMEGA = "omega"

ACTIVE = frozenset((APPROACH, CONTEST, GUIDE))
WAITING = frozenset((LOST, HELD))


@dataclass(frozen=True, eq=False)
class GGState:
    phase: str
    n: int
    char: Optional[Char] = None
    bag: tuple = ()
    strat: tuple = ()
    move: str = ""
    lost_to: Optional[tuple] = None  # (direction of winner, winner char id)
    absorbed: frozenset = frozenset()  # {(direction of loser, loser char id)}
    route: str = ""  # pending guiding moves
    back: Optional[Char] = None  # characteristic still to be retraced (final walk)
    targets: tuple = ()  # remaining guiding targets, offsets from home
    home: tuple = (0, 0)  # offset to the guiding base cell
    visiting: bool = False
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def cid(self):
        return char_id(self.char)

    @property
    def key(self) -> str:
        k = self._cache.get("key")
        if k is None:
            length, h = self.cid
            parts = [
                self.phase, str(self.n), f"{length}:{h:x}",
                ";".join(f"{x},{y}" for x, y in self.bag),
                ",".join(map(str, self.strat)), self.move,
                "-" if self.lost_to is None else f"{self.lost_to[0]}@{self.lost_to[1][0]}:{self.lost_to[1][1]:x}",
                ";".join(f"{d}@{i[0]}:{i[1]:x}" for d, i in sorted(self.absorbed)),
                self.route, "%d:%x" % char_id(self.back), ";".join(f"{x},{y}" for x, y in self.targets),
                f"{self.home[0]},{self.home[1]}", "v" if self.visiting else "",
            ]
            k = self._cache["key"] = "|".join(parts)
        return k

    @property
    def label(self) -> str:
        if self.phase == OMEGA:
            return "ω"
        h = hashlib.blake2b(self.key.encode(), digest_size=4).hexdigest()
        return f"{self.phase}:{h}"

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, GGState):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)


def _moved(q: GGState, letter: str, **kw) -> GGState:
    """State after committing one step ``letter``: characteristic and bag follow."""
    return replace(q, char=extend(q.char, letter), bag=rebase(q.bag, letter), move=letter,
                   _cache={}, **kw)


def _still(q: GGState, **kw) -> GGState:
    return replace(q, move="", _cache={}, **kw)


# --------------------------------------------------------------------------
# transition


class GeneralMachine:
    def __init__(self, approach=None):
        self.approach = approach or PhasedSearch()

    def initial(self, n: int) -> GGState:
        return GGState(APPROACH, n, strat=self.approach.initial)

    def transition(self, q: GGState, obs: Observation, bit) -> GGState:
        if q.phase == OMEGA:
            return q
        seen = [(d, s) for d, ms in zip(_SIDES, obs) for _, s in ms]
        if q.phase in (APPROACH, CONTEST):
            return self._basic(q, seen, bit)
        if q.phase in WAITING:
            return self._waiting(q, seen)
        if q.phase == GUIDE:
            return self._guide(q, seen)
        return self._final(q, obs)

    # Basic Approach --------------------------------------------------

    def _basic(self, q, seen, bit):
        me = q.cid
        pointing = [(d, s) for d, s in seen if s.phase == LOST and s.lost_to == (_INV[d], me)]
        rivals = [(d, s) for d, s in seen if s.phase in (APPROACH, CONTEST)]
        absorbed, bag = q.absorbed, q.bag
        if q.phase == CONTEST:
            bigger = [(d, s) for d, s in rivals if s.phase == CONTEST]
            if bigger and contest(q.char, [(d, s.char) for d, s in bigger]) == "lose":
                winner = next(
                    (d, s) for d, s in sorted(bigger, key=lambda p: (char_key(p[1].char), p[0]), reverse=True)
                    if contest(q.char, [(d, s.char)]) == "lose"
                )
                return _still(q, phase=LOST, lost_to=(winner[0], winner[1].cid))
            for d, s in pointing:
                tag = (d, s.cid)
                if tag not in absorbed:
                    absorbed = absorbed | {tag}
                    bag = absorb(bag, d, s.bag)
            if pointing or rivals:
                return _still(q, absorbed=absorbed, bag=bag)
        elif rivals or pointing:
            return _still(q, phase=CONTEST)
        # no contest in sight
        if len(bag) >= q.n - 1:
            return self._start_guiding(replace(q, absorbed=frozenset(), _cache={}), seen)
        strat, mv = self.approach.step(q.strat, bit)
        if mv:
            return _moved(q, mv, phase=APPROACH, strat=strat, absorbed=frozenset())
        return _still(q, phase=APPROACH, strat=strat, absorbed=frozenset())

    # waiting -------------------------------------------------------------

    def _waiting(self, q, seen):
        me = q.cid
        if q.phase == LOST:
            d, wid = q.lost_to
            winner = [s for dd, s in seen if dd == d and s.cid == wid]
            if any((_INV[d], me) in s.absorbed for s in winner):
                return _still(q, phase=HELD)
            if not winner or all(s.phase not in (APPROACH, CONTEST) for s in winner):
                return _still(q, phase=APPROACH, lost_to=None)
            return q
        # held: wait for the champion, but never leave before our own losers confirm
        mine = [s for d, s in seen if s.phase == LOST and s.lost_to == (_INV[d], me)]
        if mine:
            return q
        for d, s in seen:
            if d == "P" and s.phase == GUIDE and s.visiting:
                return self._walk(replace(q, phase=FINAL, back=s.char, _cache={}))
        return q

    # Guiding -------------------------------------------------------------

    def _start_guiding(self, q, seen):
        plan = guiding_plan(q.bag)
        targets = tuple(_path_end(p) for p in plan)
        g = replace(q, phase=GUIDE, targets=targets, home=(0, 0), visiting=False,
                    route=canonical_path(targets[0]) if targets else "", _cache={})
        return self._guide(g, seen)

    def _guide(self, q, seen):
        if q.route:
            return self._step_route(q)
        if q.targets and q.home == (-q.targets[0][0], -q.targets[0][1]):
            # standing on the current target
            if any(d == "P" and s.phase in WAITING for d, s in seen):
                return q if q.visiting else _still(q, visiting=True)
            bag = tuple(o for o in q.bag if o != (0, 0))
            rest = q.targets[1:]
            route = canonical_path(q.home)
            if rest:
                route += canonical_path(rest[0])
            q = replace(q, bag=bag, targets=rest, visiting=False, route=route, _cache={})
            return self._step_route(q) if route else self._guide(q, ())
        if not q.targets:
            return self._walk(replace(q, phase=FINAL, back=q.char, visiting=False, _cache={}))
        return self._step_route(replace(q, route=canonical_path((q.targets[0][0] + q.home[0],
                                                                  q.targets[0][1] + q.home[1])), _cache={}))

    def _step_route(self, q):
        m = q.route[0]
        dx, dy = _VEC[m]
        return _moved(q, m, route=q.route[1:], home=(q.home[0] - dx, q.home[1] - dy), visiting=False)

    # Final ---------------------------------------------------------------

    def _walk(self, q):
        if q.back is not None:
            return _moved(q, _INV[q.back.letter], back=q.back.prev)
        return _still(q) if q.move else q

    def _final(self, q, obs):
        if q.back is None:
            # only agents that have finished their walk count; passers-by may leave again
            others = sum(k for k, s in obs.a_P if s.phase in (FINAL, OMEGA) and s.back is None)
            if others == q.n - 1:
                return GG_OMEGA
        return self._walk(q)


def _path_end(path: str) -> tuple[int, int]:
    x = y = 0
    for m in path:
        dx, dy = _VEC[m]
        x += dx
        y += dy
    return x, y


GG_OMEGA = GGState(OMEGA, 0)


def gg_action(q: GGState) -> Move:
    return _MOVE[q.move] if q.move else Move.P


def _gg_final(q) -> bool:
    return q.phase == OMEGA


def gg_machine(approach: str = "phased") -> MachineSpec:
    try:
        strategy = APPROACHES[approach]()
    except KeyError:
        raise MachineError(f"unknown approach strategy {approach!r}") from None
    m = GeneralMachine(strategy)

    return MachineSpec(
        name="general" if approach == "phased" else f"general-{approach}",
        initial_state=None,
        transition=m.transition,
        action=gg_action,
        is_final=_gg_final,
        randomized=True,
        finite_state=False,
        input_fn=lambda s: m.initial(decode_count(s)),
        requires_input=True,
    )


# --------------------------------------------------------------------------
# auditors


class BagAuditor(Auditor):
    """Characteristic, bag-conservation and path-validity checks."""

    def start(self, world):
        self.starts = list(world.cells)
        self.max_bag = 0

    def on_commit(self, world, ev):
        q = ev.state_after
        if q.phase == OMEGA:
            return
        sx, sy = self.starts[ev.agent]
        dx, dy = char_disp(q.char)
        if (sx + dx, sy + dy) != tuple(ev.cell_after):
            raise InvariantViolation(f"agent {ev.agent}: characteristic does not lead to its cell")

    def on_round(self, world, commits):
        states, cells = world.states, world.cells
        n = world.n
        where = {}
        for a in range(n):
            where.setdefault(cells[a], []).append(a)

        def absorbed_by_winner(a):
            q = states[a]
            d, wid = q.lost_to
            vx, vy = _VEC.get(d, (0, 0))
            c = (cells[a][0] + vx, cells[a][1] + vy)
            return any(states[b].cid == wid and (_INV[d], q.cid) in states[b].absorbed
                       for b in where.get(c, ()))

        top = []
        held = {}
        released = 0
        for a in range(n):
            ph = states[a].phase
            if ph in ACTIVE:
                top.append(a)
            elif ph == LOST and not absorbed_by_winner(a):
                top.append(a)
            elif ph in WAITING:
                held[cells[a]] = held.get(cells[a], 0) + 1
            else:
                released += 1
        total = released
        targets = {}
        for a in top:
            q = states[a]
            bag = q.bag
            if q.phase == GUIDE and q.visiting:
                # agents already handed their way home leave the bag on the next look
                here = held.get(cells[a], 0)
                at = [o for o in bag if o == (0, 0)]
                bag = [o for o in bag if o != (0, 0)] + at[:here]
            total += 1 + len(bag)
            self.max_bag = max(self.max_bag, len(bag))
            for x, y in bag:
                c = (cells[a][0] + x, cells[a][1] + y)
                targets[c] = targets.get(c, 0) + 1
        if total != n:
            raise InvariantViolation(f"bag conservation: {total} agents accounted for, {n} present, round {world.round}")
        if targets != held:
            raise InvariantViolation(f"bag paths do not match waiting agents in round {world.round}")
