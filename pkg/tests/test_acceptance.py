"""Acceptance criteria, one test each, reported in the terminal summary."""

import json
import random
import shutil
import time
from fractions import Fraction

import pytest

from cellclust.agent import AgentConfig, dumps_trace, run_agent
from cellclust.cluster import (
    ClusterConstraints,
    MergeError,
    cluster_score,
    dumps_constraints,
    loads_constraints,
    merge_cluster,
    read_constraints,
    validate_constraints,
)
from cellclust.goldens import check
from cellclust.layout import parse_layout, parse_routability, serialize_layout, serialize_routability
from cellclust.netlist import parse_netlist, read_netlist, serialize_netlist
from cellclust.optimize import SAConfig, lam_target, lam_update, make_rng, metropolis, run_sa
from cellclust.runner import replay
from cellclust.tools import Session
from conftest import FIXTURES, GOLDENS
from oracles import best_score_oracle, random_netlist, random_partition, score_oracle, shared_nets


@pytest.mark.criterion("1. score matches brute-force oracle")
def test_score_oracle(criterion):
    rng = random.Random(2024)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        n = random_netlist(rng, 12, 8)
        clusters = random_partition(rng, list(n.device_names))
        got = cluster_score(n, clusters).total
        want = score_oracle(n, clusters)
        worst = max(worst, abs(float(got - want)))
    elapsed = time.perf_counter() - start
    assert worst <= 1e-12
    assert elapsed < 5.0
    criterion(f"200 cases, max error {worst:g}, {elapsed:.2f}s")


@pytest.mark.criterion("2. worked examples")
def test_worked_examples(criterion):
    n = read_netlist(FIXTURES / "nand2.sp")
    one = cluster_score(n, read_constraints(FIXTURES / "nand2_one_cluster.json")).total
    two = cluster_score(n, read_constraints(FIXTURES / "nand2_two_clusters.json")).total
    assert one == Fraction(5, 4)
    assert two == Fraction(1)
    criterion("1.25 and 1.0 exact")


@pytest.mark.criterion("3. duplicate resolution")
def test_merge_recount(criterion):
    rng = random.Random(77)
    checked = 0
    for _ in range(200):
        n = random_netlist(rng, 12, 8)
        names = list(n.device_names)
        current = random_partition(rng, names)
        new = rng.sample(names, rng.randint(1, len(names)))
        home = {d: c for c, devs in current.items() for d in devs}

        # recount every duplicate independently
        expect_moved = set()
        for d in new:
            if d in home:
                stay = shared_nets(n, d, current[home[d]])
                go = shared_nets(n, d, new)
                if go > stay:
                    expect_moved.add(d)
        expect_new = [d for d in new if d not in home or d in expect_moved]

        try:
            out = merge_cluster(n, current, new)
        except MergeError:
            assert expect_new == []
            checked += 1
            continue
        assert validate_constraints(n, out).valid
        placed = [d for devs in out.clusters.values() for d in devs]
        assert len(placed) == len(set(placed))
        where = out.cluster_of
        new_name = out.names[-1]
        assert list(out.clusters[new_name]) == expect_new
        for d in new:
            if d in home:
                target = new_name if d in expect_moved else home[d]
                assert where(d) == target
        # untouched devices keep their cluster
        for d, c in home.items():
            if d not in new:
                assert where(d) == c
        checked += 1
    assert checked == 200
    criterion("200 merges recounted")


@pytest.mark.criterion("4. SA recovers the four-inverter optimum")
def test_sa_recovery(criterion):
    n = read_netlist(FIXTURES / "four_inverters.sp")
    optimum = best_score_oracle(n)
    assert optimum == 2
    start = time.perf_counter()
    hits = 0
    for seed in range(20):
        res = run_sa(Session.start(n), SAConfig(seed=seed))
        hits += res.best_score == optimum
    elapsed = time.perf_counter() - start
    detail = f"{hits}/20 seeds reached 2.0 in {elapsed:.1f}s"
    criterion.note(detail)
    assert elapsed < 30.0
    assert hits >= 19, detail
    criterion(detail)


@pytest.mark.criterion("5. Lam schedule")
def test_lam_schedule(criterion):
    assert lam_target(0, 2000) == 1.0
    total = 50_000
    for it in range(total):
        if 0.15 <= it / total <= 0.65:
            assert lam_target(it, total) == 0.44

    rng = make_rng(0)
    temperature, rate = 0.5, 0.5
    plateau = []
    for it in range(total):
        accepted = metropolis(float(rng.normal()), temperature, rng)
        temperature, rate = lam_update(temperature, rate, accepted, it, total)
        if 0.15 <= it / total <= 0.65:
            plateau.append(accepted)
    realized = sum(plateau) / len(plateau)
    assert abs(realized - 0.44) <= 0.08, realized
    criterion(f"plateau acceptance {realized:.3f} over {total} iterations")


@pytest.mark.criterion("6. ReAct determinism and cap")
def test_react_determinism(criterion):
    n = read_netlist(FIXTURES / "nand2.sp")
    for name in ("nand2_save_final.jsonl", "ghost_then_fixed.jsonl", "explore_then_exhaust.jsonl"):
        cfg = AgentConfig(transcript=str(FIXTURES / "transcripts" / name))
        a = dumps_trace(run_agent(Session.start(n), cfg))
        b = dumps_trace(run_agent(Session.start(n), cfg))
        assert a == b
    cfg = AgentConfig(transcript=str(FIXTURES / "transcripts" / "garbage_cap.jsonl"))
    trace = run_agent(Session.start(n), cfg)
    assert trace.outcome == "iteration_cap"
    assert len(trace.steps) == 15
    criterion("identical traces; cap stops at 15")


@pytest.mark.criterion("7. golden prompts")
def test_goldens(criterion, tmp_path):
    assert check(GOLDENS) == []
    # regenerate into a scratch copy and compare bytes with the committed files
    shutil.copytree(GOLDENS, tmp_path / "goldens")
    shutil.copytree(FIXTURES, tmp_path / "fixtures")
    manifest = json.loads((GOLDENS / "manifest.json").read_text())
    for entry in manifest:
        (tmp_path / "goldens" / entry["file"]).unlink()
    check(tmp_path / "goldens", bless=True)
    for entry in manifest:
        regenerated = (tmp_path / "goldens" / entry["file"]).read_bytes()
        assert regenerated == (GOLDENS / entry["file"]).read_bytes(), entry["file"]
    criterion(f"{len(manifest)} files byte-equal")


@pytest.mark.criterion("8. replay")
def test_replay(criterion, tmp_path):
    log = FIXTURES / "nand2_session.jsonl"
    assert replay(log).ok
    lines = log.read_text().splitlines()
    # mutate the fifth record (line 0 is the header)
    rec = json.loads(lines[5])
    rec["score_after"] = rec["score_after"] + 1.0
    lines[5] = json.dumps(rec)
    bad = tmp_path / "mutated.jsonl"
    bad.write_text("\n".join(lines) + "\n")
    verdict = replay(bad)
    assert not verdict.ok and verdict.step == 5
    criterion(f"committed log PASS; mutated copy {verdict}"[:120])


@pytest.mark.criterion("9. round-trips")
def test_round_trips(criterion):
    count = 0
    for p in sorted(FIXTURES.glob("*.sp")):
        n = parse_netlist(p.read_text())
        assert parse_netlist(serialize_netlist(n)) == n
        assert serialize_netlist(parse_netlist(serialize_netlist(n))) == serialize_netlist(n)
        count += 1
    inv = read_netlist(FIXTURES / "inv.sp")
    lay = parse_layout((FIXTURES / "toy_layout.json").read_text(), inv)
    assert parse_layout(serialize_layout(lay), inv) == lay
    rep = parse_routability((FIXTURES / "seq_routability.json").read_text())
    assert parse_routability(serialize_routability(rep)) == rep
    count += 2
    for p in sorted(FIXTURES.glob("*.json")):
        if p.name in ("toy_layout.json", "seq_routability.json"):
            continue
        cc = read_constraints(p)
        assert loads_constraints(dumps_constraints(cc)) == cc
        count += 1
    criterion(f"{count} fixtures")
