"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`. The sweep-based criterion
(A7) dominates the runtime (a few minutes on two cores).
"""

import json
import time

import numpy as np
import pytest

from omega_avg_rl.automata import classify_specification, containment_counterexample
from omega_avg_rl.bench import (SweepSpec, build_benchmark, build_machine_for,
                                bundled_communicating_benchmarks, run_experiment,
                                run_sweep)
from omega_avg_rl.cli import main as cli_main
from omega_avg_rl.machines import build_lexicographic_machine, build_reset_machine
from omega_avg_rl.mdp import is_communicating
from omega_avg_rl.product import build_explicit_product
from omega_avg_rl.verify import (chain_bsccs, chain_reach_probability,
                                 enumerate_positional_policies,
                                 optimal_satisfaction_probability,
                                 policy_average_reward,
                                 policy_satisfaction_probability,
                                 stationary_distribution)

from .oracles import lasso_accepted, oracle_counterexample
from .test_automata import (a_or_f_b_automaton, f_a_automaton,
                            ga_or_gfb_automaton, random_det_automaton)
from .test_verify import mod3_gfa_automaton


def announce(criterion: str, detail: str):
    print(f"\n[PASS] {criterion} — {detail}")


def test_a1_communication_preservation():
    start = time.perf_counter()
    benchmarks = bundled_communicating_benchmarks()
    assert len(benchmarks) >= 6
    for bench in benchmarks:
        assert is_communicating(bench.mdp), bench.name
        reset_prod = build_explicit_product(
            bench.mdp, build_reset_machine(bench.automaton, -1.0))
        assert is_communicating(reset_prod), f"{bench.name} reset product"
        lex_prod = build_explicit_product(
            bench.mdp, build_machine_for(bench, "lexicographic", {"c": 1.0}))
        assert is_communicating(lex_prod), f"{bench.name} lexicographic product"
    control = build_benchmark("multichain-example")
    bare = build_explicit_product(control.mdp, control.automaton)
    assert not is_communicating(bare)
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    announce("A1", f"{len(benchmarks)} benchmarks x (reset, lexicographic) products "
                   f"communicating; no-reset control fails; {elapsed:.2f}s")


def test_a2_binary_satisfaction():
    start = time.perf_counter()
    values = []
    for bench in bundled_communicating_benchmarks():
        res = optimal_satisfaction_probability(bench.mdp, bench.automaton)
        assert min(abs(res.value), abs(res.value - 1.0)) <= 1e-6, bench.name
        values.append(round(res.value))
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    announce("A2", f"optimal satisfaction in {{0,1}}: {values}; {elapsed:.2f}s")


def test_a3_differential_q_convergence():
    start = time.perf_counter()
    outcomes = {}
    for name, params, steps in [("two-state-fga", {}, 200_000),
                                ("multichain-example", {}, 200_000),
                                ("grid", {"n": 4, "m": 4, "slip": 0.1}, 300_000)]:
        bench = build_benchmark(name, params)
        sats = []
        for seed in range(5):
            row = run_experiment(bench, "diff-q",
                                 {"c": 1.0, "epsilon": 0.1, "alpha": 0.1, "eta": 0.1},
                                 seed=seed, steps=steps)
            sats.append(row["sat_prob"])
        good = sum(1 for s in sats if s >= 1.0 - 1e-9)
        outcomes[bench.name] = good
        assert good >= 4, f"{bench.name}: {sats}"
    elapsed = time.perf_counter() - start
    assert elapsed < 600.0
    announce("A3", f"paper-default diff-q reaches sat=1 on {outcomes} of 5 seeds; "
                   f"{elapsed:.1f}s")


def _optimal_policies(prod):
    entries = []
    best = -float("inf")
    for policy in enumerate_positional_policies(prod):
        gain = policy_average_reward(prod, policy).value
        entries.append((gain, policy))
        best = max(best, gain)
    return best, [p for g, p in entries if abs(g - best) <= 1e-9]


def test_a4_average_reward_vs_satisfaction():
    bench = build_benchmark("two-state-fga")
    prod = build_explicit_product(bench.mdp,
                                  build_reset_machine(bench.automaton,
                                                      -(4 + 1.0)))
    assert prod.n_states == 4
    best, optimal = _optimal_policies(prod)
    assert best == pytest.approx(1.0, abs=1e-9)
    for policy in optimal:
        assert policy_satisfaction_probability(prod, policy).value \
            == pytest.approx(1.0, abs=1e-9)

    # Hand-built counterexample: rearming the accepting edge honestly costs
    # two steps, a cheap reset costs one, so at c = -1e-3 the average-reward
    # optimum resets forever and satisfies with probability 0.
    counter = build_explicit_product(bench.mdp,
                                     build_reset_machine(mod3_gfa_automaton(), -1e-3))
    best_c, optimal_c = _optimal_policies(counter)
    assert best_c == pytest.approx((1.0 - 1e-3) / 2.0, abs=1e-9)
    sats = [policy_satisfaction_probability(counter, p).value for p in optimal_c]
    assert any(s < 1.0 - 1e-9 for s in sats)
    announce("A4", f"all {len(optimal)} optimal policies satisfy at c=-5; "
                   f"counterexample optimum at c=-1e-3 has sat "
                   f"{min(sats):.3f} < 1")


def test_a5_lexicographic_epsilon_optimality():
    start = time.perf_counter()
    bench = build_benchmark("infmem")
    good = 0
    gains = []
    for seed in range(5):
        row = run_experiment(bench, "diff-q", {}, seed=seed, steps=2_000_000,
                             machine_kind="lexicographic")
        gains.append(row["avg_reward"])
        if row["sat_prob"] >= 1.0 - 1e-9 and row["avg_reward"] >= 0.99:
            good += 1
    assert good >= 4, gains

    # Exact gain formula: the k-cycle spends k steps on the rewarding
    # self-loop and two steps touring the a-state.
    for k in (1, 2, 10):
        rows = {j: ((j + 1, 1.0, 1.0, False),) for j in range(k)}
        rows[k] = ((k + 1, 1.0, 0.0, False),)
        rows[k + 1] = ((0, 1.0, 0.0, False),)
        (members,) = chain_bsccs(sorted(rows), rows)
        pi = stationary_distribution(members, rows, 1e-12)
        gain = sum(pi[s] * p * r for s in members for _t, p, r, _ in rows[s])
        assert gain == pytest.approx(k / (k + 2), abs=1e-9)
    elapsed = time.perf_counter() - start
    announce("A5", f"beta=0.05 runs: {good}/5 with sat=1 and external gain >= 0.99 "
                   f"(gains {', '.join(f'{g:.4f}' for g in gains)}); "
                   f"k-cycle gains match k/(k+2); {elapsed:.1f}s")


def test_a6_specification_classification():
    spec = classify_specification(f_a_automaton())
    assert spec.absolute_liveness and not spec.stable
    assert not classify_specification(a_or_f_b_automaton()).absolute_liveness
    from omega_avg_rl.bench import gf_a_automaton
    assert classify_specification(gf_a_automaton()).fairness
    spec = classify_specification(ga_or_gfb_automaton())
    assert spec.stable and not spec.absolute_liveness

    rng = np.random.default_rng(202406)
    for _ in range(100):
        aut = random_det_automaton(rng, max_states=5)
        p = int(rng.integers(0, aut.n_states))
        q = int(rng.integers(0, aut.n_states))
        witness = containment_counterexample(aut, p, q)
        oracle = oracle_counterexample(aut, p, q)
        if witness is None:
            assert oracle is None, (aut, p, q, oracle)
        else:
            prefix, cycle = witness
            assert lasso_accepted(aut, p, prefix, cycle)
            assert not lasso_accepted(aut, q, prefix, cycle)
    announce("A6", "class flags for Fa / a-or-Fb / GFa / Ga-or-GFb correct; "
                   "containment matches the lasso oracle on 100 automata")


def test_a7_continuing_sweep_reproduction():
    start = time.perf_counter()
    maxima = {}
    for method in ("diff-q", "hahn-q", "bozkurt-q"):
        spec = SweepSpec(benchmark_id="multichain-example", method=method,
                         samples=50, steps=1_000_000, master_seed=2024)
        rows = run_sweep(spec)
        assert len(rows) == 50
        maxima[method] = max(r["sat_prob"] for r in rows)
    assert maxima["diff-q"] >= 1.0 - 1e-9
    assert maxima["hahn-q"] <= 1e-9
    assert maxima["bozkurt-q"] <= 1e-9
    elapsed = time.perf_counter() - start
    assert elapsed < 1800.0
    announce("A7", f"50-sample continuing sweeps: max sat {maxima}; {elapsed:.0f}s")


def test_a8_determinism(tmp_path):
    def learn(path):
        cli_main(["learn", "--benchmark", "multichain-example", "--method", "diff-q",
                  "--steps", "50000", "--seed", "3", "--out", str(path)])
        payload = json.loads(path.read_text())
        payload["wall_time_s"] = None
        return json.dumps(payload, sort_keys=True).encode()

    assert learn(tmp_path / "a.json") == learn(tmp_path / "b.json")

    def sweep(path):
        cli_main(["sweep", "--benchmark", "multichain-example", "--method", "diff-q",
                  "--samples", "3", "--steps", "20000", "--master-seed", "11",
                  "--workers", "2", "--out", str(path)])
        lines = path.read_text().strip().split("\n")
        header = lines[1].split(",")
        wall = header.index("wall_time_s")
        rows = []
        for line in lines[2:]:
            cells = line.split(",")
            cells[wall] = ""
            rows.append(",".join(cells))
        return "\n".join(rows).encode()

    assert sweep(tmp_path / "a.csv") == sweep(tmp_path / "b.csv")
    announce("A8", "result JSON and sweep CSV rows byte-identical across reruns "
                   "(wall-time field nulled; see decisions ledger)")
