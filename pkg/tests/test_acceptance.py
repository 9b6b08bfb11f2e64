"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary under "acceptance criteria".
"""

from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from dertrust.experience import ExperienceParams, ExperienceState, update_experience
from dertrust.graph import TrustGraph, build_transition_matrices, split_experience
from dertrust.ledger import FeedbackEvent, Ledger, Replayer, replay
from dertrust.reputation import ReputationParams, ReputationVector, compute_reputation, solve
from dertrust.simulator import (Scenario, attack_effect, convergence_bench, exp_curve,
                                random_experience_matrix, run, steps_to_reach)
from dertrust.trust import Basis, TrustQuery, reputation_scale, trust
from oracles import dense_reputation

SCENARIOS = Path(__file__).parents[1] / "scenarios"


def check(record, key, ok, detail):
    record(key, "PASS" if ok else "FAIL", detail)
    assert ok, detail


def test_ac1_experience_asymptote(record_criterion):
    rng = np.random.default_rng(20240101)
    worst = -np.inf
    failures = 0
    for _ in range(1000):
        theta_co = rng.uniform(0.51, 0.99)
        p = ExperienceParams(exp0=rng.uniform(0.01, 0.99), theta_co=theta_co,
                             theta_unco=rng.uniform(0.01, theta_co - 0.005),
                             alpha=rng.uniform(0.005, 0.1), beta=rng.uniform(1.01, 5.0),
                             delta=rng.uniform(0.001, 0.02), gamma=rng.uniform(0.001, 0.02))
        s = ExperienceState.bootstrap(p)
        for t in range(1, 201):
            prev = s.current
            s = update_experience(s, rng.uniform(p.theta_co, 1.0), p)
            bound = (1 - p.exp0) * (1 - p.theta_co * p.alpha) ** t
            gap = 1 - s.current
            worst = max(worst, gap - bound)
            if not (p.min_exp <= s.current <= p.max_exp and s.current >= prev and gap <= bound):
                failures += 1
                break
    check(record_criterion, "AC1", failures == 0,
          f"1000 parameter sets x 200 steps, failures={failures}, "
          f"max(gap - bound)={worst:.3g}")


def test_ac2_increase_checkpoint(record_criterion):
    # hand iteration in exact arithmetic: 1 - Exp_t = 0.5 * (1 - 0.9 * alpha)^t
    def oracle(alpha):
        t = 0
        while 1 - Fraction(1, 2) * (1 - Fraction(9, 10) * alpha) ** t < Fraction(7, 10):
            t += 1
        return t

    assert oracle(Fraction(1, 20)) == 12 and oracle(Fraction(1, 10)) == 6
    slow = steps_to_reach(exp_curve(ExperienceParams(alpha=0.05), [0.9] * 50), 0.7)
    fast = steps_to_reach(exp_curve(ExperienceParams(alpha=0.1), [0.9] * 50), 0.7)
    ok = slow == 12 and fast == 6 and fast < slow
    check(record_criterion, "AC2", ok, f"alpha=0.05 -> step {slow}, alpha=0.1 -> step {fast}")


def _matrices(n, edges):
    g = TrustGraph(users=[str(i) for i in range(n)])
    for (i, j), v in edges.items():
        g.upsert_edge(str(i), str(j), ExperienceState(v, v))
    return build_transition_matrices(g.split())


def test_ac3_solver_oracle_equivalence(record_criterion):
    rng = np.random.default_rng(3)
    params = ReputationParams(tol=1e-9)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(2, 9))
        density = rng.uniform(0.2, 1.0)
        edges = {(i, j): float(rng.random()) for i in range(n) for j in range(n)
                 if i != j and rng.random() < density}
        vec = solve(*_matrices(n, edges), params)
        pos, neg = dense_reputation(n, edges)
        worst = max(worst, np.max(np.abs(vec.rep_pos - pos)), np.max(np.abs(vec.rep_neg - neg)))
    check(record_criterion, "AC3", worst < 1e-6,
          f"500 graphs N in [2,8], max abs deviation {worst:.3g} (< 1e-6)")


def test_ac4_uniqueness(record_criterion):
    params = ReputationParams()
    worst = 0.0
    for seed in range(50):
        e = random_experience_matrix(1000, seed=seed)
        a_pos, a_neg = build_transition_matrices(split_experience(e))
        rng = np.random.default_rng(seed + 1000)
        x, y = rng.random(1000), rng.random(1000)
        v1 = solve(a_pos, a_neg, params)
        v2 = solve(a_pos, a_neg, params, init=ReputationVector(x / x.sum(), y / y.sum()))
        worst = max(worst, np.max(np.abs(v1.rep_pos - v2.rep_pos)),
                    np.max(np.abs(v1.rep_neg - v2.rep_neg)))
    check(record_criterion, "AC4", worst < 100 * params.tol,
          f"50 graphs N=1000, max deviation {worst:.3g} (< {100 * params.tol:g})")


def test_ac5_convergence_scaling(record_criterion):
    rows = convergence_bench([1000, 4000, 8000, 16000], seed=0,
                             params=ReputationParams(d=0.85, tol=1e-5))
    its = {r.n: r.iterations for r in rows}
    ok = all(r.converged and r.iterations < 100 for r in rows) and its[16000] - its[1000] <= 25
    check(record_criterion, "AC5", ok, f"iterations {its}")


def test_ac6_aggregation_contracts(record_criterion):
    ledger, _ = run(Scenario(seed=11, n_users=60, n_blocks=300, decay_epoch=100))
    graph = replay(ledger)
    vec = compute_reputation(graph)
    ok = np.array_equal(vec.rep, np.maximum(0.0, vec.rep_pos - vec.rep_neg))
    ok &= bool(np.all(vec.rep[vec.rep_neg >= vec.rep_pos] == 0.0))
    ok &= bool(np.all(vec.rep[vec.rep_neg < vec.rep_pos] > 0.0))
    scaled, _ = reputation_scale(graph, vec)
    rng = np.random.default_rng(6)
    edges = list(graph.edges)
    for k in rng.choice(len(edges), size=20, replace=False):
        i, j = edges[k]
        a, b = graph.users[i], graph.users[j]
        # w = (1, 0): perturb the experience edge
        q = TrustQuery(a, b, 1.0, 0.0)
        before = trust(graph, vec, q).value
        g2 = graph.copy()
        g2.upsert_edge(a, b, ExperienceState(float(rng.random()), 0.5))
        ok &= trust(g2, vec, q).value == before
        # w = (0, 1): perturb the reputation vector
        q = TrustQuery(a, b, 0.0, 1.0)
        other = scaled.copy()
        other[j] = rng.random()
        ok &= trust(graph, scaled, q).value == trust(graph, other, q).value
    no_edge = 0
    for a in graph.users[:10]:
        for b in graph.users:
            if a != b and not graph.has_edge(a, b):
                s = trust(graph, vec, TrustQuery(a, b))
                ok &= s.value == scaled[graph.idx(b)] and s.basis is Basis.REPUTATION_ONLY
                no_edge += 1
    check(record_criterion, "AC6", bool(ok),
          f"aggregation on {len(vec)} users, 20 weight-degeneracy checks, {no_edge} no-edge queries")


def _random_ledger(rng, n_users=6, n_events=40):
    users = [f"u{i}" for i in range(n_users)]
    block = 0
    events = []
    for k in range(n_events):
        block += int(rng.integers(0, 30))
        a, b = rng.choice(n_users, size=2, replace=False)
        score = float(rng.choice([0.05, 0.3, 0.5, 0.6, 0.65, 0.7, 0.85, 1.0]))
        events.append(FeedbackEvent(block, users[a], users[b], score, f"t{k}"))
    return Ledger(events, decay_epoch=int(rng.integers(1, 40)),
                  head_block=block + int(rng.integers(0, 100)))


def test_ac7_replay_determinism(record_criterion, data_dir):
    text = (data_dir / "golden_ledger.jsonl").read_text()
    golden = (data_dir / "golden_snapshot.jsonl").read_text()
    snaps = {replay(Ledger.loads(text)).dumps() for _ in range(5)}
    ok = snaps == {golden}
    rng = np.random.default_rng(77)
    mismatches = 0
    for _ in range(100):
        led = _random_ledger(rng)
        k = int(rng.integers(0, len(led) + 1))
        r = Replayer(ExperienceParams(), led.decay_epoch, replay(led.prefix(k)))
        r.apply_all(led.events[k:])
        r.advance_to(led.final_block)
        mismatches += r.graph.dumps() != replay(led).dumps()
    ok &= mismatches == 0
    check(record_criterion, "AC7", ok,
          f"golden snapshot stable over 5 replays; prefix mismatches {mismatches}/100")


def test_ac8_attack_mitigation(record_criterion):
    base0 = Scenario.load(SCENARIOS / "baseline.json")
    attacks = {name: Scenario.load(SCENARIOS / f"{name}.json").attack
               for name in ("sybil", "endorse", "badmouth_fresh", "badmouth_established")}
    lines, ok = [], True
    for seed in (base0.seed, 0, 1, 2, 3):
        base = replace(base0, seed=seed)
        ref = run(base)
        eff = {name: attack_effect(base, atk, baseline=ref) for name, atk in attacks.items()}
        b = eff["sybil"]["bootstrap"]
        k = attacks["sybil"].attackers
        endorse_ok = eff["endorse"]["rater_rep_pos"] >= k * b
        gain_ok = eff["sybil"]["rep_pos_gain"] < eff["endorse"]["rep_pos_gain"]
        fresh_shift = eff["badmouth_fresh"]["rank_shift"]
        est_shift = eff["badmouth_established"]["rank_shift"]
        rank_ok = abs(fresh_shift) < abs(est_shift)
        ok &= endorse_ok and gain_ok and rank_ok
        lines.append(f"seed {seed}: gain sybil {eff['sybil']['rep_pos_gain'] / b:.1f}b vs "
                     f"endorse {eff['endorse']['rep_pos_gain'] / b:.1f}b; "
                     f"rank shift fresh {fresh_shift} vs established {est_shift}")
    check(record_criterion, "AC8", bool(ok), " | ".join(lines))


def test_ac9_onchain_latency_out_of_scope(record_criterion):
    record_criterion("AC9", "N/A", "on-chain latency measurements are out of scope")
    pytest.skip("on-chain latency measurements are not reproducible off-chain")
