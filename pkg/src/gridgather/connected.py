"""Deterministic map-building machine for connected configurations.

Every agent roots a depth-first search that is carried out purely by
writing direction sequences into memory; nobody moves until the map is
known everywhere.  Sequences are strings over ``NESW`` with lowercase
letters standing for primed (backward) arrows, so ``mirror("NE") == "ws"``.

Where a sequence sits and whose search it belongs to is recovered from
geometry alone: a clean sequence held at cell ``h`` was started at
``h - disp(seq)``, and a sequence ending in primed letters belongs to the
holder one step past the end of its walk.  Agents know the relative
position of the neighbours they read from, so they can always tell
searches apart even though all agents are anonymous.
"""

from __future__ import annotations

import hashlib
from typing import Optional

from .engine import Auditor, InvariantViolation
from .grid import Cell
from .machine import MachineSpec, Move, Observation

_VEC = {"N": (0, 1), "E": (1, 0), "S": (0, -1), "W": (-1, 0)}
_INV = {"N": "S", "E": "W", "S": "N", "W": "E"}
_SIDE_LETTERS = ("N", "E", "S", "W")  # observation order
_MOVE = {"N": Move.N, "E": Move.E, "S": Move.S, "W": Move.W}


def mirror(s: str) -> str:
    """Reverse and toggle primes."""
    return s[::-1].swapcase()


def is_clean(s: str) -> bool:
    return s.isupper() or not s


def signed_disp(s: str) -> tuple[int, int]:
    """Displacement of the walk; primed letters step backwards."""
    x = y = 0
    for ch in s:
        dx, dy = _VEC[ch.upper()]
        if ch.islower():
            x -= dx
            y -= dy
        else:
            x += dx
            y += dy
    return x, y


def root_offset(s: str) -> tuple[int, int]:
    """Position of the search root relative to the agent holding ``s``."""
    x, y = signed_disp(s)
    if s and s[-1].islower():
        dx, dy = _VEC[s[-1].upper()]
        return -x - dx, -y - dy
    return -x, -y


def split_closed(s: str) -> Optional[tuple[str, str]]:
    """Split ``P + b + mirror(b)`` into ``(P, b)``; None for clean sequences."""
    k = len(s) - len(s.rstrip("nesw"))
    if k == 0 or 2 * k > len(s):
        return None
    b = s[len(s) - 2 * k: len(s) - k]
    if not b.isupper() or s[len(s) - k:] != mirror(b):
        return None
    return s[: len(s) - 2 * k], b


def seq_text(s: str) -> str:
    """Canonical text: comma-separated letters with apostrophes for primes."""
    return ",".join(ch.upper() + "'" if ch.islower() else ch for ch in s)


def parse_seq(text: str) -> str:
    if not text:
        return ""
    out = []
    for tok in text.split(","):
        if tok in _VEC:
            out.append(tok)
        elif len(tok) == 2 and tok[0] in _VEC and tok[1] == "'":
            out.append(tok[0].lower())
        else:
            raise ValueError(f"bad sequence token {tok!r}")
    return "".join(out)


class Board:
    """Analysed view of a set of sequences, cached on the owning state."""

    __slots__ = ("seqs", "clean", "closed", "rooted")

    def __init__(self, seqs: frozenset):
        self.seqs = seqs
        self.clean = [s for s in seqs if s.isupper()]
        # (prefix, first letter of the returning branch) of every closed sequence
        self.closed = set()
        # root offset -> [clean count, closed-loop prefixes]
        self.rooted: dict = {}
        for s in seqs:
            off = root_offset(s)
            entry = self.rooted.get(off)
            if entry is None:
                entry = self.rooted[off] = [0, []]
            sp = split_closed(s)
            if sp is None:
                entry[0] += 1
            else:
                self.closed.add((sp[0], sp[1][0]))
                if sp[0] == "":
                    entry[1].append(sp[1])


_EMPTY_BOARD = Board(frozenset())


class CGState:
    """Full visible memory of one agent."""

    __slots__ = ("board", "hist", "red", "red_hist", "informed", "ready", "walking",
                 "omega", "cmap", "n", "plan", "move", "_key", "_hash", "_b", "_r")

    def __init__(self, board=frozenset(), hist=frozenset(), red=frozenset(), red_hist=frozenset(),
                 informed=False, ready=False, walking=False, omega=False,
                 cmap=None, n=None, plan="", move=""):
        self.board = board
        self.hist = hist
        self.red = red
        self.red_hist = red_hist
        self.informed = informed
        self.ready = ready
        self.walking = walking
        self.omega = omega
        self.cmap = cmap
        self.n = n
        self.plan = plan
        self.move = move
        self._key = None
        self._hash = None
        self._b = None
        self._r = None

    def replace(self, **kw) -> "CGState":
        d = {f: getattr(self, f) for f in _FIELDS}
        d.update(kw)
        return CGState(**d)

    @property
    def phase(self) -> str:
        if self.omega:
            return "omega"
        if self.walking:
            return "walk"
        if self.ready:
            return "ready"
        if self.informed:
            return "informed"
        return "map"

    @property
    def key(self) -> str:
        if self._key is None:
            parts = [
                self.phase,
                "B:" + ";".join(seq_text(s) for s in sorted(self.board)),
                "H:" + ";".join(seq_text(s) for s in sorted(self.hist)),
                "R:" + ";".join(seq_text(s) for s in sorted(self.red)),
                "RH:" + ";".join(seq_text(s) for s in sorted(self.red_hist)),
                "M:" + ("-" if self.cmap is None else ";".join(f"{x},{y}" for x, y in self.cmap)),
                f"n:{self.n if self.n is not None else '-'}",
                f"P:{self.move}|{self.plan}",
            ]
            self._key = "|".join(parts)
        return self._key

    @property
    def label(self) -> str:
        if self.omega:
            return "ω"
        h = hashlib.blake2b(self.key.encode(), digest_size=4).hexdigest()
        return f"{self.phase}:{h}"

    @property
    def black(self) -> Board:
        if self._b is None:
            self._b = Board(self.board) if self.board else _EMPTY_BOARD
        return self._b

    @property
    def redb(self) -> Board:
        if self._r is None:
            self._r = Board(self.red) if self.red else _EMPTY_BOARD
        return self._r

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, CGState):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key)
        return self._hash

    def __repr__(self):
        return f"CGState({self.label})"


_FIELDS = ("board", "hist", "red", "red_hist", "informed", "ready", "walking", "omega",
           "cmap", "n", "plan", "move")

CG_INITIAL = CGState()
CG_OMEGA = CGState(omega=True)


# --------------------------------------------------------------------------
# one search layer (black or red)


def _layer_step(board: set, hist: set, sides, own_root: bool, boards_of, participates) -> None:
    """Apply the forward, bounce and completion rules in place.

    ``sides`` lists ``(letter, states)`` for occupied neighbour cells;
    ``boards_of(state)`` returns the relevant Board of a neighbour or None
    when that neighbour does not take part.
    """
    leaf = len(sides) == 1
    # forward arrows and loop closures
    for d, states in sides:
        x = _INV[d]  # our direction as seen from that neighbour
        dx, dy = _VEC[d]
        for q in states:
            nb = boards_of(q)
            if nb is None:
                continue
            candidates = nb.clean
            if participates(q):
                candidates = [""] + candidates
            for alpha in candidates:
                key = alpha + x
                if key in hist:
                    continue
                pos = _walk_position(alpha, dx, dy)
                if alpha and pos == len(alpha) - 1:
                    continue  # we are the parent of this arrow
                hist.add(key)
                if pos >= 0 or leaf:
                    board.add(key + x.lower())
                else:
                    board.add(key)
    # completions
    if leaf:
        return
    letters = [d for d, _ in sides]
    for sigma in sorted(s for s in board if s and s.isupper()):
        x = sigma[-1]
        parent = _INV[x]
        alpha = sigma[:-1]
        side_map = dict(sides)
        if parent not in side_map:
            continue
        if not _holds(side_map[parent], alpha, boards_of, participates):
            continue
        found = []
        ok = True
        for d in letters:
            if d == parent:
                continue
            hits = []
            for q in side_map[d]:
                nb = boards_of(q)
                if nb is None:
                    continue
                if (sigma, d) in nb.closed:
                    hits.extend(t for t in nb.seqs if t.startswith(sigma + d) and _closes(t, sigma, d))
            if not hits:
                ok = False
                break
            found.extend(hits)
        if ok and found:
            board.discard(sigma)
            for t in found:
                board.add(t + x.lower())


def _holds(states, alpha, boards_of, participates) -> bool:
    for q in states:
        nb = boards_of(q)
        if nb is None:
            continue
        if alpha == "" and participates(q):
            return True
        if alpha in nb.seqs:
            return True
    return False


def _closes(t: str, sigma: str, d: str) -> bool:
    sp = split_closed(t)
    return sp is not None and sp[0] == sigma and sp[1][0] == d


def _walk_position(alpha: str, dx: int, dy: int) -> int:
    """Index at which the walk ``alpha`` (held one step away at (dx, dy)) visits us, or -1."""
    x, y = signed_disp(alpha)
    cx, cy = dx - x, dy - y  # root relative to us
    if cx == 0 and cy == 0:
        return 0
    for i, ch in enumerate(alpha, 1):
        vx, vy = _VEC[ch]
        cx += vx
        cy += vy
        if cx == 0 and cy == 0:
            return i
    return -1


def _search_done(sides, boards_of) -> Optional[list]:
    """Loops of our own search seen at every neighbour, or None if incomplete."""
    loops = []
    for d, states in sides:
        dx, dy = _VEC[d]
        want = (-dx, -dy)
        seen_any = False
        for q in states:
            nb = boards_of(q)
            if nb is None:
                return None
            entry = nb.rooted.get(want)
            if entry is None:
                continue
            if entry[0]:
                return None  # still a forward arrow of ours out there
            seen_any = seen_any or bool(entry[1])
            loops.extend(entry[1])
        if not seen_any:
            return None
    return loops


def build_map(loops) -> frozenset:
    """Cells (relative to self) visited by the closed walks ``loops``."""
    cells = {(0, 0)}
    for g in loops:
        x = y = 0
        for ch in g:
            dx, dy = _VEC[ch]
            x += dx
            y += dy
            cells.add((x, y))
    return frozenset(cells)


def walk_plan(cmap) -> str:
    """Moves from the origin to the East-most cell of the North-most row of ``cmap``."""
    tx, ty = max(cmap, key=lambda c: (c[1], c[0]))
    if ty < 0:
        raise ValueError("target lies South of the walker")
    return "N" * ty + ("E" * tx if tx >= 0 else "W" * -tx)


def _black(q):
    return q.black


def _red(q):
    return q.redb if q.informed else None


def _always(q):
    return True


def _is_informed(q):
    return q.informed


def cg_transition(q: CGState, obs: Observation, bit=None) -> CGState:
    if q.omega:
        return q
    a_p = obs.a_P
    sides = [(d, [s for _, s in ms]) for d, ms in zip(_SIDE_LETTERS, obs[1:]) if ms]
    visible = [s for _, s in a_p] + [s for _, ss in sides for s in ss]

    if q.ready:
        others = sum(k for k, _ in a_p)
        if others == q.n - 1:
            return CG_OMEGA
        if q.walking:
            if q.plan:
                return q.replace(move=q.plan[0], plan=q.plan[1:])
            return q.replace(move="") if q.move else q
        if all(s.ready or s.omega for s in visible):
            plan = walk_plan(q.cmap)
            if plan:
                return q.replace(walking=True, move=plan[0], plan=plan[1:])
            return q.replace(walking=True)
        return q

    if any(s.ready or s.omega for s in visible):
        if q.informed:
            return q.replace(ready=True)

    board = set(q.board)
    hist = set(q.hist)
    _layer_step(board, hist, sides, True, _black, _always)
    informed, cmap, n = q.informed, q.cmap, q.n
    if not informed:
        loops = _search_done(sides, _black)
        if loops is not None:
            informed = True
            cmap = tuple(sorted(build_map(loops), key=lambda c: (c[1], c[0])))
            n = len(cmap)
    red, red_hist, ready = q.red, q.red_hist, False
    if informed:
        red = set(q.red)
        red_hist = set(q.red_hist)
        if q.informed:
            _layer_step(red, red_hist, sides, True, _red, _is_informed)
        red = frozenset(red)
        red_hist = frozenset(red_hist)
        if q.informed and all(s.informed for _, ss in sides for s in ss):
            ready = _search_done(sides, _red) is not None
    return CGState(frozenset(board), frozenset(hist), red, red_hist, informed, ready,
                   False, False, cmap, n, "", "")


def cg_action(q: CGState) -> Move:
    return _MOVE[q.move] if q.move else Move.P


def _cg_final(q) -> bool:
    return q.omega


def cg_machine() -> MachineSpec:
    return MachineSpec(
        name="connected",
        initial_state=CG_INITIAL,
        transition=cg_transition,
        action=cg_action,
        is_final=_cg_final,
        randomized=False,
        finite_state=False,
    )


def target_cell(cells) -> Cell:
    """East-most cell of the North-most row."""
    return Cell(*max(cells, key=lambda c: (c[1], c[0])))


class MapAuditor(Auditor):
    """Nobody moves before ready; every fresh map matches the initial configuration."""

    def start(self, world):
        self.truth = frozenset(world.occupancy)
        self.informed_maps = 0

    def on_commit(self, world, ev):
        before, after = ev.state_before, ev.state_after
        if ev.cell_after != ev.cell_before and not after.ready:
            raise InvariantViolation(f"agent {ev.agent} moved before it was ready")
        if after.informed and not before.informed:
            cx, cy = ev.cell_before
            got = frozenset((cx + x, cy + y) for x, y in after.cmap)
            if got != self.truth:
                raise InvariantViolation(f"agent {ev.agent} built a wrong map in round {ev.round}")
            self.informed_maps += 1
        if not after.omega and not before.omega:
            lost = before.board - after.board
            for s in lost:
                if not s.isupper() or not any(t.startswith(s) and len(t) > len(s) for t in after.board):
                    raise InvariantViolation(f"agent {ev.agent} erased {seq_text(s)!r} without completing it")
