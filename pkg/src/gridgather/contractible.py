"""Finite automaton gathering connected hole-free configurations.

Agents only ever move onto occupied cells: leaves step into their single
neighbouring cell, and NE/NW corners sitting on a 2x2 block step South
after a handshake with the agent below them.  Two-cell standoffs are
broken by the ask/agree handshake, under which S- and W-leaves move only
with the consent of their neighbours.
"""

from __future__ import annotations

import enum

from .engine import Auditor, InvariantViolation
from .grid import GridError, is_contractible
from .machine import MachineSpec, Move, Observation
from . import kernels


class CC(enum.Enum):
    IDLE = "idle"
    LEAF_ASKING = "leaf-asking"
    LEAF_AGREE = "leaf-agree"
    MOVE_N = "move-North"
    MOVE_E = "move-East"
    MOVE_S = "move-South"
    MOVE_W = "move-West"
    NE_QUESTION = "NE-question"
    NE_AGREE = "NE-agree"
    NW_QUESTION = "NW-question"
    NW_AGREE = "NW-agree"
    OMEGA = "ω"

    @property
    def key(self) -> str:
        return self.value

    @property
    def label(self) -> str:
        return self.value


_ACTION = {CC.MOVE_N: Move.N, CC.MOVE_E: Move.E, CC.MOVE_S: Move.S, CC.MOVE_W: Move.W}


def cc_action(q: CC) -> Move:
    return _ACTION.get(q, Move.P)


def _has(ms, state) -> bool:
    return any(q is state for _, q in ms)


def _all(ms, state) -> bool:
    return bool(ms) and all(q is state for _, q in ms)


def cc_transition(q: CC, obs: Observation, bit=None, *, yielding: bool = True) -> CC:
    """One look of the automaton.

    With ``yielding`` (the default) two guards keep consent from going
    stale: a N- or E-leaf whose neighbour is an asking leaf agrees instead
    of moving, and an agent showing an agree state never moves before it
    has shown a neutral state.  ``yielding=False`` gives the plain rules.
    """
    if q is CC.OMEGA:
        return q
    q2 = _rules(q, obs, yielding)
    if yielding and q in _AGREE and q2 in _ACTION:
        return CC.IDLE
    return q2


_AGREE = frozenset((CC.LEAF_AGREE, CC.NE_AGREE, CC.NW_AGREE))


def _rules(q: CC, obs: Observation, yielding: bool) -> CC:
    _, a_n, a_e, a_s, a_w = obs
    occ = (bool(a_n), bool(a_e), bool(a_s), bool(a_w))
    k = sum(occ)
    if k == 0:
        return CC.OMEGA

    # leaf destruction
    if k == 1:
        if yielding and (_has(a_s, CC.LEAF_ASKING) or _has(a_w, CC.LEAF_ASKING)):
            return CC.LEAF_AGREE
        if a_s:
            return CC.MOVE_S
        if a_w:
            return CC.MOVE_W
        if q is CC.LEAF_ASKING and _all(a_n or a_e, CC.LEAF_AGREE):
            return CC.MOVE_N if a_n else CC.MOVE_E
        return CC.LEAF_ASKING
    if _has(a_s, CC.LEAF_ASKING) or _has(a_w, CC.LEAF_ASKING):
        return CC.LEAF_AGREE

    # 4-cycle destruction
    if q is CC.NE_QUESTION and _has(a_s, CC.NE_AGREE):
        return CC.MOVE_S
    if q is CC.NW_QUESTION and _has(a_s, CC.NW_AGREE):
        return CC.MOVE_S
    if occ == (False, False, True, True):
        return CC.NE_QUESTION
    if occ == (False, True, True, False):
        return CC.NW_QUESTION
    if a_w and _has(a_n, CC.NE_QUESTION):
        return CC.NE_AGREE
    if a_e and _has(a_n, CC.NW_QUESTION):
        return CC.NW_AGREE
    return CC.IDLE


def _cc_final(q) -> bool:
    return q is CC.OMEGA


def _plain_transition(q, obs, bit=None):
    return cc_transition(q, obs, bit, yielding=False)


def cc_machine(yielding: bool = True) -> MachineSpec:
    return MachineSpec(
        name="contractible" if yielding else "contractible-plain",
        initial_state=CC.IDLE,
        transition=cc_transition if yielding else _plain_transition,
        action=cc_action,
        is_final=_cc_final,
        randomized=False,
        finite_state=True,
    )


CC_STATES = {q.label: q for q in CC}


# --------------------------------------------------------------------------
# auditors


class ShrinkingAuditor(Auditor):
    """Moves only target cells occupied before the round; geometry stays contractible.

    Also records swaps: two opposite moves across one edge whose
    look/commit intervals overlap.  A second swap on the same edge fails.
    """

    def __init__(self, check_geometry: bool = True):
        self.check_geometry = check_geometry

    def start(self, world):
        self.before = frozenset(world.occupancy)
        self.recent: dict = {}  # (from, to) -> list of (look_round, commit_round)
        self.swaps: dict = {}
        self.swap_count = 0
        self.states_seen = set(world.states)

    def on_commit(self, world, ev):
        self.states_seen.add(ev.state_after)
        if ev.cell_after == ev.cell_before:
            return
        if ev.cell_after not in self.before:
            raise InvariantViolation(
                f"shrinking: agent {ev.agent} moved {tuple(ev.cell_before)}->{tuple(ev.cell_after)} "
                f"into an empty cell in round {ev.round}")
        back = self.recent.get((ev.cell_after, ev.cell_before), ())
        if any(lr < ev.round and ev.look_round < cr for lr, cr in back):
            edge = frozenset((ev.cell_before, ev.cell_after))
            last = self.swaps.get(edge)
            if last is None:
                self.swaps[edge] = ev.round
                self.swap_count += 1
            elif last != ev.round:
                raise InvariantViolation(
                    f"second swap between {tuple(ev.cell_before)} and {tuple(ev.cell_after)} in round {ev.round}")
        self.recent.setdefault((ev.cell_before, ev.cell_after), []).append((ev.look_round, ev.round))

    def on_round(self, world, commits):
        after = frozenset(world.occupancy)
        if after == self.before:
            return
        if not after <= self.before:
            raise InvariantViolation(f"occupied set grew in round {world.round}")
        if self.check_geometry and not (kernels.connected(after) and kernels.hole_free(after)):
            raise InvariantViolation(f"configuration not connected and contractible after round {world.round}")
        self.before = after
        # moves whose commit precedes every pending look can no longer pair up
        horizon = min((p[2] for p in world.pending if p is not None), default=world.round)
        for key in list(self.recent):
            kept = [iv for iv in self.recent[key] if iv[1] > horizon]
            if kept:
                self.recent[key] = kept
            else:
                del self.recent[key]


def require_contractible(cfg) -> None:
    if not is_contractible(cfg):
        raise GridError("configuration not contractible")
