"""Pinned Lockstep traces for the domino and the 3-path, one pair per machine."""

from pathlib import Path

import pytest

from gridgather.cli import main
from gridgather.engine import Lockstep, Trace, replay, run
from gridgather.harness import machine_spec
from gridgather.grid import Cell, Configuration

GOLDEN = sorted((Path(__file__).parent / "golden").glob("*.trc"))


def _scenario(tr):
    cells = Configuration([Cell(*map(int, a.split(","))) for a in tr.header["agents"].split()])
    inp = tr.header["input"]
    return cells, machine_spec(tr.header["machine"]), None if inp == "-" else inp


def test_every_machine_has_both_shapes():
    names = {p.stem for p in GOLDEN}
    assert names == {f"{m}_{s}" for m in ("contractible", "connected", "general") for s in ("domino", "path3")}


@pytest.mark.parametrize("path", GOLDEN, ids=lambda p: p.stem)
def test_golden_replays_byte_for_byte(path):
    text = path.read_text()
    tr = Trace.parse(text, str(path))
    again = replay(tr, *_scenario(tr))
    assert again.text() == text
    assert tr.verdict.kind == "Gathered"


@pytest.mark.parametrize("path", GOLDEN, ids=lambda p: p.stem)
def test_golden_via_cli(path, capsys):
    assert main(["replay", "--trace", str(path)]) == 0
    assert capsys.readouterr().out.startswith("replay ok")


@pytest.mark.parametrize("path", GOLDEN, ids=lambda p: p.stem)
def test_golden_matches_a_fresh_run(path):
    text = path.read_text()
    tr = Trace.parse(text)
    cells, spec, inp = _scenario(tr)
    fresh = run(cells, spec, inp, Lockstep(), seed=int(tr.header["seed"]),
                max_rounds=int(tr.header["max_rounds"]))
    assert fresh.text() == text


def test_golden_verdicts():
    got = {p.stem: Trace.parse(p.read_text()).verdict.text() for p in GOLDEN}
    assert got["contractible_domino"] == "Gathered 4 0,0"
    # the connected machine meets at the East-most cell of the North-most row
    assert got["connected_domino"].endswith(" 0,1")
    assert got["connected_path3"].endswith(" 0,2")
    # the general machine meets where the champion started
    assert got["general_domino"].endswith(" 0,1")
    assert got["general_path3"].endswith(" 0,2")
