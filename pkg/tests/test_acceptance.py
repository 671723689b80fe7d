"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

The lines are printed as the tests finish and gathered again in the
terminal summary.  Budgets and tolerances are the full ones; expect about ten
minutes on one core, mostly the contractible sweep and the freeze demo.
"""

import random
import time
from pathlib import Path

import pytest

from gridgather.engine import RandomFair, Trace, replay, run
from gridgather.grid import enumerate_polyominoes, lemma_sweep
from gridgather.harness import demo_freeze, demo_lockstep, machine_spec, random_configuration, sweep
from gridgather.machine import encode_count

from conftest import ACCEPTANCE_LINES
from oracles import brute_polyominoes
from test_golden import _scenario

pytestmark = pytest.mark.slow

GOLDEN = sorted((Path(__file__).parent / "golden").glob("*.trc"))


def report(number, ok, detail, started):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({time.perf_counter() - started:.1f}s) {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def _sweep_detail(rep):
    return (f"runs={len(rep.records)} gathered={rep.gathered} budget={rep.budget_exhausted} "
            f"false={rep.false_detection} violations={rep.violations}")


def test_1_leaf_or_corner_lemma():
    t0 = time.perf_counter()
    checked, bad = lemma_sweep(8)
    assert report(1, not bad, f"max-size 8: {checked} polyominoes, {len(bad)} counterexamples", t0)


def test_1_stretch_size_10():
    t0 = time.perf_counter()
    checked, bad = lemma_sweep(10)
    assert report("1 (stretch)", not bad, f"max-size 10: {checked} polyominoes, {len(bad)} counterexamples", t0)


def test_2_contractible_sweep():
    t0 = time.perf_counter()
    rep = sweep("contractible", range(1, 9), ("lockstep", "random-fair"), seeds=20, max_rounds=100_000)
    ok = rep.passed and rep.gathered == len(rep.records)
    assert report(2, ok, _sweep_detail(rep), t0), rep.text()


def test_3_connected_sweep():
    t0 = time.perf_counter()
    rep = sweep("connected", range(1, 7), ("lockstep", "random-fair"), seeds=10, max_rounds=100_000)
    ok = rep.passed and rep.gathered == len(rep.records)
    assert report(3, ok, _sweep_detail(rep), t0), rep.text()


def test_4_general_convergence():
    t0 = time.perf_counter()
    pairs = sweep("general", [2], ["random-fair"], seeds=1, max_rounds=1_000_000, scenarios=100)
    triples = sweep("general", [3], ["random-fair"], seeds=1, max_rounds=1_000_000, scenarios=50)
    rep = pairs.merge(triples)
    frac = rep.gathered / len(rep.records)
    ok = rep.passed and frac >= 0.9
    assert report(4, ok, f"gathered fraction {frac:.3f}; " + _sweep_detail(rep), t0), rep.text()


def test_5_lockstep_keeps_distance():
    t0 = time.perf_counter()
    results = [demo_lockstep(d, m, 10_000) for m in ("contractible", "connected") for d in (2, 3, 5)]
    bad = [f"{r.machine}@{r.distance}:{sorted(r.distances)}" for r in results if not r.passed]
    assert report(5, not bad, f"{len(results)} runs of 10000 rounds, broken: {bad or 'none'}", t0)


def test_6_freeze_pattern():
    t0 = time.perf_counter()
    good = demo_freeze(100, seeds=20, n=3)
    control = demo_freeze(100, seeds=20, n=2)
    ok = good.false_detections == 0 and control.false_detections >= 1
    detail = f"n=3: {good.false_detections} false detections; n=2 control: {control.false_detections}"
    assert report(6, ok, detail, t0), good.text()


def _random_scenario(rng):
    machine = rng.choice(["contractible", "connected", "general"])
    if machine == "general":
        cells = random_configuration(rng.randint(1, 3), rng)
        return machine, cells, encode_count(len(cells))
    polys = enumerate_polyominoes(rng.randint(1, 6), contractible_only=machine == "contractible")
    return machine, rng.choice(polys), None


def test_7_determinism_and_golden_replay():
    t0 = time.perf_counter()
    rng = random.Random("determinism")
    differing = 0
    for i in range(50):
        machine, cells, inp = _random_scenario(rng)
        spec = machine_spec(machine)
        texts = [run(cells, spec, inp, RandomFair(), seed=i, max_rounds=20_000).text() for _ in range(2)]
        differing += texts[0] != texts[1]
    replayed = 0
    for path in GOLDEN:
        text = path.read_text()
        tr = Trace.parse(text, str(path))
        replayed += replay(tr, *_scenario(tr)).text() == text
    ok = differing == 0 and replayed == len(GOLDEN) > 0
    assert report(7, ok, f"50 scenarios, {differing} differing; golden {replayed}/{len(GOLDEN)} replayed", t0)


def test_8_enumeration_oracle():
    t0 = time.perf_counter()
    ours = [len(enumerate_polyominoes(n)) for n in range(1, 7)]
    oracle = [len(brute_polyominoes(n)) for n in range(1, 7)]
    ok = ours == oracle and ours[3] == 19
    assert report(8, ok, f"counts {ours}, oracle {oracle}", t0)
