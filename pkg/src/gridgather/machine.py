"""Agent abstraction: moves, observations and the machine contract.

An agent is a copy of a state machine.  At a look it reads an
:class:`Observation` (the multisets of visible states in its own cell
and the four neighbouring cells) and computes its next state; the move it
makes at the matching commit is ``action(next_state)``.

States are arbitrary immutable objects exposing ``key`` (canonical text,
used for ordering and digests) and ``label`` (compact trace text without
spaces).
"""

from __future__ import annotations

import enum
import hashlib
from collections import Counter
from dataclasses import dataclass
from typing import Any, Callable, Mapping, NamedTuple, Optional, Sequence

from .grid import neighbors


class MachineError(ValueError):
    pass


class Move(enum.Enum):
    N = "N"
    E = "E"
    S = "S"
    W = "W"
    P = "P"

    @property
    def vector(self) -> tuple[int, int]:
        return _VECTORS[self]

    def inverse(self) -> "Move":
        return _INVERSE[self]


_VECTORS = {Move.N: (0, 1), Move.E: (1, 0), Move.S: (0, -1), Move.W: (-1, 0), Move.P: (0, 0)}
_INVERSE = {Move.N: Move.S, Move.E: Move.W, Move.S: Move.N, Move.W: Move.E, Move.P: Move.P}
DIRECTIONS = (Move.N, Move.E, Move.S, Move.W)


class Observation(NamedTuple):
    """Five multisets, each a tuple of ``(count, state)`` sorted by state key."""

    a_P: tuple
    a_N: tuple
    a_E: tuple
    a_S: tuple
    a_W: tuple

    def side(self, d: Move) -> tuple:
        return self[_SIDE_INDEX[d]]

    def sides(self) -> tuple:
        """The four neighbour multisets in N, E, S, W order."""
        return self[1:]

    def occupied(self) -> tuple[bool, bool, bool, bool]:
        return (bool(self[1]), bool(self[2]), bool(self[3]), bool(self[4]))

    def text(self) -> str:
        parts = []
        for name, ms in zip(("P", "N", "E", "S", "W"), self):
            parts.append(name + "[" + ",".join(f"{k}*{q.key}" for k, q in ms) + "]")
        return ";".join(parts)

    def digest(self) -> str:
        return hashlib.blake2b(self.text().encode(), digest_size=6).hexdigest()


_SIDE_INDEX = {Move.P: 0, Move.N: 1, Move.E: 2, Move.S: 3, Move.W: 4}

EMPTY_OBSERVATION = Observation((), (), (), (), ())


def multiset(states) -> tuple:
    """Group states into sorted ``(count, state)`` pairs."""
    if not states:
        return ()
    if len(states) == 1:
        return ((1, states[0]),)
    counts = Counter(states)
    return tuple(sorted(((k, q) for q, k in counts.items()), key=lambda p: p[1].key))


def observe(world: Mapping[Any, Sequence], c, self_state) -> Observation:
    """Observation of the agent in state ``self_state`` standing at ``c``.

    ``world`` maps occupied cells to the list of visible states there.  The
    observing agent itself is removed once from its own cell.
    """
    here = list(world.get(c, ()))
    try:
        here.remove(self_state)
    except ValueError:
        raise MachineError(f"no agent in state {self_state!r} at {tuple(c)}") from None
    sides = [multiset(list(world.get(nb, ()))) for nb in neighbors(c)]
    return Observation(multiset(here), *sides)


@dataclass(frozen=True)
class MachineSpec:
    name: str
    initial_state: Any
    transition: Callable  # (state, Observation, bit or None) -> state
    action: Callable  # state -> Move
    is_final: Callable  # state -> bool
    randomized: bool = False
    finite_state: bool = False
    input_fn: Optional[Callable[[str], Any]] = None
    requires_input: bool = False


def _check_binary(s: str):
    if not isinstance(s, str) or not s or any(ch not in "01" for ch in s):
        raise MachineError(f"malformed input string {s!r}")


def initial_state_of(spec: MachineSpec, input: Optional[str] = None):
    if input is None:
        if spec.requires_input:
            raise MachineError(f"machine {spec.name!r} needs an initial input")
        return spec.initial_state
    if spec.input_fn is None:
        raise MachineError(f"machine {spec.name!r} takes no initial input")
    _check_binary(input)
    return spec.input_fn(input)


def step(spec: MachineSpec, q, obs: Observation, bit: Optional[int] = None):
    """One look: the next state and the move made at the matching commit."""
    if spec.randomized and bit is None:
        raise MachineError(f"machine {spec.name!r} needs a random bit")
    if not spec.randomized and bit is not None:
        raise MachineError(f"machine {spec.name!r} is deterministic")
    if bit is not None and bit not in (0, 1):
        raise MachineError(f"random bit must be 0 or 1, got {bit!r}")
    if spec.is_final(q):
        return q, Move.P
    q2 = spec.transition(q, obs, bit)
    return q2, spec.action(q2)


def encode_count(n: int) -> str:
    """Big-endian binary without leading zeros."""
    if not isinstance(n, int) or n < 1:
        raise MachineError(f"agent count must be a positive integer, got {n!r}")
    return format(n, "b")


def decode_count(s: str) -> int:
    _check_binary(s)
    if len(s) > 1 and s[0] == "0":
        raise MachineError(f"leading zero in input {s!r}")
    n = int(s, 2)
    if n < 1:
        raise MachineError("agent count must be at least 1")
    return n
