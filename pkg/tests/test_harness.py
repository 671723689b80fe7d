from pathlib import Path

import pytest

from gridgather.cli import main
from gridgather.engine import Outcome
from gridgather.grid import Cell, Configuration
from gridgather.harness import (
    EXIT_BUDGET, EXIT_FAILURE, EXIT_GATHERED, EXIT_INPUT, HarnessError, Scenario,
    check_preconditions, demo_freeze, demo_lockstep, exit_code, freeze_configuration,
    parse_scenario, parse_sizes, random_configuration, run_scenario, sweep,
)

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

DOMINO = """\
machine: contractible
seed: 7
cells:
0 0
0 1
"""

RING = "machine: contractible\ncells:\n" + "\n".join(
    f"{x} {y}" for x in range(3) for y in range(3) if (x, y) != (1, 1)) + "\n"


def _write(tmp_path, text, name="s.scn"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parse_scenario_defaults():
    scn = parse_scenario(DOMINO)
    assert scn.machine == "contractible" and scn.seed == 7 and scn.n is None
    assert scn.strategy == "random-fair" and scn.max_rounds == 100_000
    assert scn.cells == Configuration([(0, 0), (0, 1)])
    assert parse_scenario(scn.text()) == scn


def test_scenario_generators():
    scn = parse_scenario("machine: connected\ngenerator: polyomino 4 3\n")
    assert len(scn.cells) == 4
    scn = parse_scenario("machine: general\nn: 2\ngenerator: random 2 5\n")
    assert len(scn.cells) == 2


@pytest.mark.parametrize("text, where, msg", [
    ("machine: contractible\nseed: x\ncells:\n0 0\n", "s:2:7:", "integer"),
    ("machine: teleport\ncells:\n0 0\n", "s:1:10:", "unknown machine"),
    ("machine: contractible\ncolour: red\ncells:\n0 0\n", "s:2:1:", "unknown key"),
    ("machine: contractible\ncells:\n0 0\n0 q\n", "s:4:3:", "non-integer"),
    ("machine: contractible\ncells:\n0 0\n0 0\n", "s:4:1:", "duplicate cell"),
    ("machine: contractible\nseed: 1\n", "s:3:1:", "missing 'cells:'"),
    ("seed: 1\ncells:\n0 0\n", "s:1:1:", "missing 'machine'"),
    ("machine: connected\ngenerator: polyomino 3 99\n", "s:2:12:", "outside"),
    ("machine: connected\nstrategy: sometimes\ncells:\n0 0\n", "s:2:11:", ""),
    ("just words\n", "s:1:1:", "key: value"),
])
def test_parse_errors_carry_positions(text, where, msg):
    with pytest.raises(HarnessError) as info:
        parse_scenario(text, "s")
    assert str(info.value).startswith(where)
    assert msg in str(info.value)


def test_preconditions():
    with pytest.raises(HarnessError, match="not contractible"):
        check_preconditions(parse_scenario(RING))
    with pytest.raises(HarnessError, match="not connected"):
        check_preconditions(parse_scenario("machine: connected\ncells:\n0 0\n0 2\n"))
    with pytest.raises(HarnessError, match="needs n"):
        check_preconditions(parse_scenario("machine: general\ncells:\n0 0\n"))
    with pytest.raises(HarnessError, match="n=3"):
        check_preconditions(parse_scenario("machine: general\nn: 3\ncells:\n0 0\n0 2\n"))


def test_exit_codes_are_a_function_of_the_verdict():
    assert exit_code(Outcome.gathered(3, Cell(0, 0))) == EXIT_GATHERED
    assert exit_code(Outcome.budget(10)) == EXIT_BUDGET
    assert exit_code(Outcome.false_detection(4, 0, 1)) == EXIT_FAILURE
    assert exit_code(Outcome.error("second swap", 9)) == EXIT_FAILURE


def test_cli_run_writes_a_replayable_trace(tmp_path, capsys):
    out = tmp_path / "out.trc"
    status = main(["run", "--scenario", str(SCENARIOS / "dominos.scn"), "--seed", "7",
                   "--max-rounds", "100000", "--trace", str(out)])
    assert status == 0
    assert capsys.readouterr().out.startswith("Gathered")
    assert main(["replay", "--trace", str(out)]) == 0
    assert main(["replay", "--trace", str(out), "--scenario", str(SCENARIOS / "dominos.scn")]) == 0


def test_cli_replay_rejects_a_tampered_trace(tmp_path, capsys):
    out = tmp_path / "out.trc"
    main(["run", "--scenario", str(SCENARIOS / "far_pair.scn"), "--trace", str(out)])
    lines = out.read_text().splitlines(keepends=True)
    i = next(i for i, ln in enumerate(lines) if " BIT " in ln)
    lines[i] = lines[i][:-2] + ("1" if lines[i][-2] == "0" else "0") + "\n"
    out.write_text("".join(lines))
    assert main(["replay", "--trace", str(out)]) == EXIT_FAILURE
    assert "replay failed" in capsys.readouterr().out


def test_cli_input_errors_exit_1(tmp_path, capsys):
    assert main(["run", "--scenario", _write(tmp_path, RING)]) == EXIT_INPUT
    assert "configuration not contractible" in capsys.readouterr().err
    wrong_n = "machine: general\nn: 3\ncells:\n0 0\n0 1\n"
    assert main(["run", "--scenario", _write(tmp_path, wrong_n)]) == EXIT_INPUT
    bad = _write(tmp_path, "machine: contractible\nseed: x\ncells:\n0 0\n", "bad.scn")
    assert main(["run", "--scenario", bad]) == EXIT_INPUT
    assert f"{bad}:2:7:" in capsys.readouterr().err
    assert main(["run", "--scenario", str(tmp_path / "missing.scn")]) == EXIT_INPUT
    with pytest.raises(SystemExit) as info:
        main(["run"])
    assert info.value.code == EXIT_INPUT


def test_cli_budget_exit_2(tmp_path):
    far = "machine: general\nn: 2\nmax_rounds: 5\ncells:\n0 0\n0 5\n"
    assert main(["run", "--scenario", _write(tmp_path, far)]) == EXIT_BUDGET


def test_cli_false_detection_exit_3(capsys):
    assert main(["demo-freeze", "--t", "3", "--seeds", "2", "--n", "2"]) == EXIT_FAILURE
    assert "false-detection 2" in capsys.readouterr().out


def test_cli_enumerate(capsys):
    assert main(["enumerate", "--sizes", "1-6"]) == 0
    assert capsys.readouterr().out == "1 1\n2 2\n3 6\n4 19\n5 63\n6 216\n"
    assert main(["enumerate", "--sizes", "3", "--list"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 7


def test_cli_verify_lemma(capsys, monkeypatch):
    assert main(["verify-lemma", "--max-size", "1"]) == 0
    assert "counterexamples 0" in capsys.readouterr().out
    monkeypatch.setenv("GRIDGATHER_ENUM_LIMIT", "5")
    assert main(["verify-lemma", "--max-size", "6"]) == EXIT_INPUT


def test_cli_sweep_and_reproducibility(capsys):
    args = ["sweep", "--machine", "contractible", "--sizes", "1-3", "--seeds", "3"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    assert capsys.readouterr().out == first
    assert first.rstrip().endswith("PASS")


def test_cli_demo_lockstep(capsys):
    assert main(["demo-lockstep", "--distance", "3", "--max-rounds", "200"]) == 0
    assert capsys.readouterr().out.count("distances seen 3\n") == 2
    assert main(["demo-lockstep", "--distance", "1"]) == EXIT_INPUT


def test_parse_sizes():
    assert parse_sizes("1-3") == [1, 2, 3]
    assert parse_sizes("2..4,7") == [2, 3, 4, 7]
    for bad in ("0", "5-2", "x"):
        with pytest.raises(HarnessError):
            parse_sizes(bad)


def test_sweep_counts():
    rep = sweep("connected", [1, 2, 3], seeds=2)
    # 1 + 2 + 6 polyominoes, each once under Lockstep and twice under RandomFair
    assert len(rep.records) == 27 and rep.gathered == 27 and rep.passed
    assert rep.stall_repro() is None


def test_sweep_reports_stalls_with_a_repro():
    rep = sweep("general", [2], strategies=["random-fair"], seeds=1, max_rounds=3, scenarios=4)
    assert rep.budget_exhausted == 4 and rep.passed
    repro = rep.stall_repro()
    assert isinstance(repro, Scenario) and repro.n == 2
    assert "minimal stall repro:" in rep.text()


def test_sweep_merge_is_order_fixed():
    a = sweep("contractible", [2], seeds=1)
    b = sweep("contractible", [3], seeds=1)
    assert a.merge(b).text() == sweep("contractible", [2, 3], seeds=1).text()


def test_random_configuration_ranges():
    import random
    rng = random.Random(1)
    for _ in range(200):
        a, b = random_configuration(2, rng).sorted_cells()
        assert 1 <= abs(a.x - b.x) + abs(a.y - b.y) <= 6
    assert len(random_configuration(3, rng)) == 3


@pytest.mark.parametrize("machine", ["contractible", "connected"])
@pytest.mark.parametrize("d", [2, 3, 5])
def test_demo_lockstep_keeps_distance(machine, d):
    rep = demo_lockstep(d, machine, rounds=300)
    assert rep.passed and rep.distances == {d}


def test_demo_lockstep_preconditions():
    with pytest.raises(HarnessError, match="larger than 1"):
        demo_lockstep(1, "contractible")
    with pytest.raises(HarnessError, match="randomized"):
        demo_lockstep(3, "general")


def test_demo_freeze_small_t():
    assert freeze_configuration(1) == Configuration([(0, 0), (0, 2), (0, 4)])
    rep = demo_freeze(1, seeds=3)
    assert rep.false_detections == 0
    assert all(o.kind == "Gathered" for o in rep.outcomes)
    with pytest.raises(HarnessError):
        demo_freeze(0)


def test_run_scenario_seed_override():
    scn = parse_scenario(DOMINO)
    a = run_scenario(scn, seed=1).text()
    assert a == run_scenario(scn, seed=1).text()
    assert "#! seed 1" in a
