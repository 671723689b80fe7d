import pytest
from hypothesis import given, settings, strategies as st

from gridgather.connected import (
    CG_INITIAL, MapAuditor, build_map, cg_machine, cg_transition, is_clean, mirror,
    parse_seq, seq_text, signed_disp, split_closed, target_cell, walk_plan,
)
from gridgather.engine import Lockstep, RandomFair, run
from gridgather.grid import Cell, Configuration, enumerate_polyominoes
from gridgather.machine import EMPTY_OBSERVATION

from oracles import north_east_target

seqs = st.text("NESWnesw", max_size=12)


def test_mirror_examples():
    assert mirror("NE") == "en"
    assert seq_text(mirror("NE")) == "E',N'"
    assert mirror("") == ""


@given(seqs)
def test_mirror_is_an_involution(s):
    assert mirror(mirror(s)) == s
    assert signed_disp(s + mirror(s)) == (0, 0)


@given(seqs)
def test_sequence_text_round_trip(s):
    assert parse_seq(seq_text(s)) == s


def test_parse_seq_rejects_junk():
    with pytest.raises(ValueError):
        parse_seq("N,Q")


def test_clean_and_closed():
    assert is_clean("NE") and is_clean("") and not is_clean("Nn")
    assert split_closed("NEen") == ("", "NE")
    assert split_closed("SNEen") == ("S", "NE")
    assert split_closed("NE") is None
    assert split_closed("Nw") is None


def test_build_map_from_loops():
    assert build_map(["N"]) == {(0, 0), (0, 1)}
    assert build_map([]) == {(0, 0)}


def test_walk_plans():
    assert walk_plan({(0, 0), (1, 1)}) == "NE"
    assert walk_plan({(0, 0)}) == ""
    # L-shape seen from its (1, 0) agent
    assert walk_plan({(-1, 0), (-1, 1), (0, 0)}) == "NW"


def test_target_cell_matches_oracle():
    for cfg in enumerate_polyominoes(5):
        assert tuple(target_cell(cfg)) == north_east_target(cfg)


def test_lone_agent_reads_as_informed_then_final():
    q = cg_transition(CG_INITIAL, EMPTY_OBSERVATION)
    assert q.informed and q.n == 1 and set(q.cmap) == {(0, 0)}
    q = cg_transition(q, EMPTY_OBSERVATION)
    assert q.ready
    assert cg_transition(q, EMPTY_OBSERVATION).omega


def test_domino_first_look_boards():
    cfg = Configuration([(0, 0), (0, 1)])
    tr = run(cfg, cg_machine(), strategy=Lockstep(), max_rounds=2)
    south, north = tr.world.states
    assert north.board == {"Nn"}
    assert south.board == {"Ss"}


def test_machine_contract():
    spec = cg_machine()
    assert not spec.randomized and not spec.finite_state and spec.input_fn is None


def _gather(cfg, strategy, seed=0):
    aud = MapAuditor()
    tr = run(cfg, cg_machine(), strategy=strategy, seed=seed, auditors=[aud], record=False)
    return tr, aud


@pytest.mark.parametrize("n", range(1, 5))
def test_small_polyominoes_gather_at_target(n):
    for cfg in enumerate_polyominoes(n):
        for strat, seed in ((Lockstep(), 0), (RandomFair(), 1), (RandomFair(), 2)):
            tr, aud = _gather(cfg, strat, seed)
            assert tr.verdict.kind == "Gathered", (cfg, seed, tr.verdict)
            assert tuple(tr.verdict.cell) == north_east_target(cfg)
            assert aud.informed_maps == n


def test_block_maps_match_truth():
    block = Configuration([(0, 0), (1, 0), (0, 1), (1, 1)])
    for seed in range(20):
        tr, aud = _gather(block, RandomFair(), seed)
        assert tr.verdict == tr.verdict.gathered(tr.verdict.round, Cell(1, 1))
        assert aud.informed_maps == 4


polys6 = enumerate_polyominoes(6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, len(polys6) - 1), st.integers(0, 10**6), st.integers(1, 8))
def test_random_hexominoes(idx, seed, cap):
    cfg = polys6[idx]
    tr, _ = _gather(cfg, RandomFair(cap=cap), seed)
    assert tr.verdict.kind == "Gathered"
    assert tuple(tr.verdict.cell) == north_east_target(cfg)


def test_ring_with_hole_gathers():
    ring = Configuration([(x, y) for x in range(3) for y in range(3) if (x, y) != (1, 1)])
    tr, _ = _gather(ring, RandomFair(), 4)
    assert tr.verdict == tr.verdict.gathered(tr.verdict.round, Cell(2, 2))


@pytest.mark.xfail(strict=True, reason="a lone agent reads its empty neighbourhood as the whole map")
def test_disconnected_pair_never_detects_falsely():
    tr = run(Configuration([(0, 0), (0, 2)]), cg_machine(), max_rounds=1000)
    assert tr.verdict.kind == "BudgetExhausted"


def test_path_middle_agent_writes_single_letters():
    tr = run(Configuration([(0, 0), (0, 1), (0, 2)]), cg_machine(), strategy=Lockstep(), max_rounds=2)
    south, middle, north = tr.world.states
    assert middle.board == {"N", "S"}
    assert south.board == {"Ss"} and north.board == {"Nn"}
