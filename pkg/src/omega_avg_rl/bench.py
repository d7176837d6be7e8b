"""Bundled benchmarks, experiment runs, hyperparameter sweeps, CSV emission.

Reset penalties are supplied as magnitudes: a CLI/sample value ``c`` is
applied as reset reward ``-|c|`` (and as ``c2 = -|c|`` for the lexicographic
machine). Every emitted ``sat_prob`` comes from the exact verifier.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .automata import BuchiAutomaton
from .errors import BadRange, GenerationNotCommunicating, UnknownGenerator
from .learners import (LearnerConfig, bozkurt_reduction_env, differential_q_train,
                       discounted_q_train, hahn_reduction_env)
from .machines import build_lexicographic_machine, build_reset_machine
from .mdp import Mdp, is_communicating, is_weakly_communicating, validate_mdp
from .product import ProductEnv, build_explicit_product
from .seeding import UniformStream, make_substream_rng
from .verify import (beta_limit_external_gain, optimal_satisfaction_probability,
                     policy_average_reward, policy_satisfaction_probability)

CSV_COLUMNS = ("benchmark", "method", "alpha", "eta", "epsilon", "c", "beta",
               "c1", "c2", "zeta", "gamma_b", "gamma", "steps", "seed",
               "wall_time_s", "sat_prob", "avg_reward", "product_states")

METHODS = ("diff-q", "hahn-q", "bozkurt-q")

DEFAULT_RANGES = {
    "diff-q": {"alpha": (0.01, 0.5), "epsilon": (0.01, 1.0),
               "c": (1.0, 200.0), "eta": (0.01, 0.5)},
    "hahn-q": {"alpha": (0.01, 0.5), "epsilon": (0.01, 1.0),
               "zeta": (0.5, 0.995), "gamma": (0.99, 0.99999)},
    "bozkurt-q": {"alpha": (0.01, 0.5), "epsilon": (0.01, 1.0),
                  "gamma_b": (0.5, 0.995), "gamma": (0.99, 0.99999)},
}


@dataclass(frozen=True)
class Benchmark:
    name: str
    mdp: Mdp
    automaton: BuchiAutomaton
    rho: tuple | None = None           # external reward matrix (lexicographic)
    machine_kind: str = "reset+hard"   # default machine for diff-q runs
    defaults: dict = field(default_factory=dict)


# -- MDP builders --------------------------------------------------------------

def _two_state_mdp(a_state: int = 1) -> Mdp:
    labels = [[], []]
    labels[a_state] = ["a"]
    return validate_mdp({
        "states": 2, "initial": 0, "aps": ["a"], "labels": labels,
        "transitions": [
            {"from": s, "action": name, "to": [[t, 1.0]]}
            for s in (0, 1) for name, t in (("to0", 0), ("to1", 1))
        ],
    })


def _grid_mdp(n: int, m: int, slip: float, goals: dict) -> Mdp:
    """n x m grid, moves N/S/E/W, bumping stays put; off-direction slips."""
    aps = sorted(set(goals.values()))
    labels = [[] for _ in range(n * m)]
    for (i, j), g in goals.items():
        labels[i * m + j] = [g]
    moves = {"north": (-1, 0), "south": (1, 0), "east": (0, 1), "west": (0, -1)}
    transitions = []
    for i in range(n):
        for j in range(m):
            s = i * m + j
            for name, (di, dj) in sorted(moves.items()):
                dist = {}
                for other, (oi, oj) in sorted(moves.items()):
                    p = (1.0 - slip) if other == name else slip / 3.0
                    if p == 0.0:
                        continue
                    ti, tj = i + oi, j + oj
                    t = s if not (0 <= ti < n and 0 <= tj < m) else ti * m + tj
                    dist[t] = dist.get(t, 0.0) + p
                transitions.append({"from": s, "action": name,
                                    "to": [[t, p] for t, p in sorted(dist.items())]})
    return validate_mdp({"states": n * m, "initial": 0, "aps": aps,
                         "labels": labels, "transitions": transitions})


def _ring_mdp(k: int) -> Mdp:
    return validate_mdp({
        "states": k, "initial": 0, "aps": ["a"],
        "labels": [["a"] if s == 0 else [] for s in range(k)],
        "transitions": [
            {"from": s, "action": name, "to": [[t % k, 1.0]]}
            for s in range(k)
            for name, t in (("back", s - 1), ("fwd", s + 1))
        ],
    })


def _wc_ring_mdp(k: int) -> Mdp:
    """One transient entry state feeding a communicating k-ring."""
    rows = [{"from": 0, "action": "enter",
             "to": [[t, 1.0 / k] for t in range(1, k + 1)]}]
    for s in range(1, k + 1):
        fwd = 1 + (s % k)
        back = 1 + ((s - 2) % k)
        rows.append({"from": s, "action": "fwd", "to": [[fwd, 1.0]]})
        rows.append({"from": s, "action": "back", "to": [[back, 1.0]]})
    return validate_mdp({
        "states": k + 1, "initial": 0, "aps": ["a"],
        "labels": [["a"] if s == 1 else [] for s in range(k + 1)],
        "transitions": rows,
    })


# -- automaton builders ---------------------------------------------------------

def fg_a_automaton() -> BuchiAutomaton:
    """Limit-deterministic automaton for "eventually always a"."""
    a = frozenset({"a"})
    empty = frozenset()
    return BuchiAutomaton.build(
        ["a"], 2, 0,
        {(0, empty): [0], (0, a): [0, 1], (1, a): [1]},
        {(1, a, 1)})


def multichain_automaton() -> BuchiAutomaton:
    """Automaton for "eventually always a, or eventually always not a"."""
    a = frozenset({"a"})
    empty = frozenset()
    return BuchiAutomaton.build(
        ["a"], 3, 0,
        {(0, a): [0, 1], (0, empty): [0, 2], (1, a): [1], (2, empty): [2]},
        {(1, a, 1), (2, empty, 2)})


def gf_a_automaton(two_state: bool = True) -> BuchiAutomaton:
    """Deterministic automaton for "infinitely often a"."""
    a = frozenset({"a"})
    empty = frozenset()
    if not two_state:
        return BuchiAutomaton.build(["a"], 1, 0,
                                    {(0, a): [0], (0, empty): [0]},
                                    {(0, a, 0)})
    return BuchiAutomaton.build(
        ["a"], 2, 0,
        {(0, a): [1], (0, empty): [0], (1, a): [1], (1, empty): [0]},
        {(0, a, 1), (1, a, 1)})


def f_goal_automaton(goal: str = "goal") -> BuchiAutomaton:
    """Deterministic automaton for "eventually goal"."""
    letters_with = [frozenset({goal})]
    letters_without = [frozenset()]
    trans = {}
    acc = set()
    for letter in letters_with:
        trans[(0, letter)] = [1]
        trans[(1, letter)] = [1]
        acc.add((1, letter, 1))
    for letter in letters_without:
        trans[(0, letter)] = [0]
        trans[(1, letter)] = [1]
        acc.add((1, letter, 1))
    return BuchiAutomaton.build([goal], 2, 0, trans, acc)


def f_both_goals_automaton() -> BuchiAutomaton:
    """Deterministic automaton for "eventually g1 and eventually g2"."""
    from .automata import all_letters
    aps = ["g1", "g2"]
    trans = {}
    acc = set()
    for letter in all_letters(aps):
        g1, g2 = "g1" in letter, "g2" in letter
        nxt0 = 3 if (g1 and g2) else 1 if g1 else 2 if g2 else 0
        trans[(0, letter)] = [nxt0]
        trans[(1, letter)] = [3 if g2 else 1]
        trans[(2, letter)] = [3 if g1 else 2]
        trans[(3, letter)] = [3]
        acc.add((3, letter, 3))
    return BuchiAutomaton.build(aps, 4, 0, trans, acc)


# -- registry -------------------------------------------------------------------

def build_benchmark(gen_id: str, params: dict | None = None) -> Benchmark:
    params = dict(params or {})
    if gen_id == "two-state-fga":
        return Benchmark("two-state-fga", _two_state_mdp(), fg_a_automaton(),
                         defaults={"steps": 200_000})
    if gen_id == "multichain-example":
        return Benchmark("multichain-example", _two_state_mdp(), multichain_automaton(),
                         defaults={"steps": 200_000})
    if gen_id == "infmem":
        mdp = validate_mdp({
            "states": 2, "initial": 0, "aps": ["a"], "labels": [["a"], []],
            "transitions": [
                {"from": s, "action": name, "to": [[t, 1.0]]}
                for s in (0, 1) for name, t in (("go", 1 - s), ("stay", s))
            ],
        })
        rho = ((0.0, 0.0), (0.0, 1.0))
        return Benchmark("infmem", mdp, gf_a_automaton(), rho=rho,
                         machine_kind="lexicographic",
                         defaults={"steps": 2_000_000, "alpha": 0.01, "eta": 0.01,
                                   "beta": 0.05, "c": 100.0})
    if gen_id == "grid":
        n = int(params.get("n", 4))
        m = int(params.get("m", 4))
        slip = float(params.get("slip", 0.1))
        if params.get("two_goals"):
            goals = {(n - 1, m - 1): "g1", (0, m - 1): "g2"}
            aut = f_both_goals_automaton()
        else:
            goals = {(n - 1, m - 1): "goal"}
            aut = f_goal_automaton()
        name = f"grid({n},{m},{slip:g})" + ("+2goals" if params.get("two_goals") else "")
        return Benchmark(name, _grid_mdp(n, m, slip, goals), aut,
                         defaults={"steps": 500_000})
    if gen_id == "ring":
        k = int(params.get("k", 6))
        return Benchmark(f"ring({k})", _ring_mdp(k), gf_a_automaton(two_state=False),
                         defaults={"steps": 200_000})
    if gen_id == "wc-ring":
        k = int(params.get("k", 5))
        return Benchmark(f"wc-ring({k})", _wc_ring_mdp(k), gf_a_automaton(),
                         defaults={"steps": 200_000})
    raise UnknownGenerator(f"unknown generator id {gen_id!r}")


GENERATOR_IDS = ("two-state-fga", "multichain-example", "infmem", "grid", "ring",
                 "wc-ring")


def check_generated(benchmark: Benchmark):
    """Post-generation structural check (weak communication for wc-ring)."""
    if benchmark.name.startswith("wc-ring"):
        if not is_weakly_communicating(benchmark.mdp):
            raise GenerationNotCommunicating(f"{benchmark.name} is not weakly communicating")
    elif not is_communicating(benchmark.mdp):
        raise GenerationNotCommunicating(f"{benchmark.name} is not communicating")


def bundled_communicating_benchmarks() -> list:
    """The communicating benchmark x absolute-liveness automaton bundle."""
    return [
        build_benchmark("two-state-fga"),
        build_benchmark("multichain-example"),
        build_benchmark("infmem"),
        build_benchmark("grid", {"n": 4, "m": 4, "slip": 0.1}),
        build_benchmark("grid", {"n": 4, "m": 4, "slip": 0.0, "two_goals": True}),
        build_benchmark("ring", {"k": 6}),
    ]


# -- machines and experiments ---------------------------------------------------

def build_machine_for(benchmark: Benchmark, kind: str, params: dict):
    c = abs(float(params.get("c", benchmark.defaults.get("c", 1.0))))
    if kind in ("reset", "reset+hard"):
        return build_reset_machine(benchmark.automaton, -c, hard_resets=kind == "reset+hard")
    if kind == "lexicographic":
        rho = benchmark.rho
        if rho is None:
            rho = tuple(tuple(0.0 for _ in range(benchmark.mdp.n_states))
                        for _ in range(benchmark.mdp.n_states))
        values = [x for row in rho for x in row]
        default_c1 = min(values) - max(values) - 1.0
        beta = float(params.get("beta", benchmark.defaults.get("beta", 0.05)))
        c1 = float(params.get("c1", default_c1))
        c2 = float(params.get("c2", -c))
        return build_lexicographic_machine(benchmark.automaton, rho, beta, c1, c2)
    raise ValueError(f"unknown machine kind {kind!r}")


def sample_hyperparameters(method: str, ranges: dict, master_seed: int, index: int) -> dict:
    """Independent log-uniform draws, deterministic in (master seed, index).

    Parameters are drawn in sorted name order from the substream
    ``[master_seed, index]``.
    """
    for name, (a, b) in ranges.items():
        if not (0 < a <= b):
            raise BadRange(f"range for {name!r} must satisfy 0 < a <= b, got ({a}, {b})")
    rng = make_substream_rng(master_seed, index)
    out = {}
    for name in sorted(ranges):
        a, b = ranges[name]
        u = rng.random()
        out[name] = a if a == b else math.exp(math.log(a) + u * (math.log(b) - math.log(a)))
    return out


def run_experiment(benchmark: Benchmark, method: str, params: dict, seed: int,
                   steps: int | None = None, episodic: bool = False,
                   episode_length: int = 10**6, machine_kind: str | None = None,
                   master_seed: int | None = None, index: int | None = None,
                   collect: bool = False) -> dict:
    """Train, verify the greedy policy exactly, and emit one CSV row dict.

    With ``collect=True`` the row also carries the raw TrainResult under
    ``"_result"`` and the machine configuration under ``"_extras"``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    steps = int(steps if steps is not None else benchmark.defaults.get("steps", 10**6))
    kind = machine_kind or benchmark.machine_kind

    cfg = LearnerConfig(
        alpha=float(params.get("alpha", benchmark.defaults.get("alpha", 0.1))),
        eta=float(params.get("eta", benchmark.defaults.get("eta", 0.1))),
        epsilon_explore=float(params.get("epsilon", benchmark.defaults.get("epsilon", 0.1))),
        steps=steps, seed=seed,
        gamma=float(params.get("gamma", 0.99999)),
        zeta=float(params.get("zeta", 0.99)),
        gamma_b=float(params.get("gamma_b", 0.99)),
        episodic=episodic, episode_length=episode_length)

    if master_seed is not None and index is not None:
        stream = UniformStream(make_substream_rng(master_seed, index, 1))
    else:
        stream = UniformStream(make_substream_rng(seed, 0))

    row = {k: "" for k in CSV_COLUMNS}
    row.update(benchmark=benchmark.name, method=method, steps=steps, seed=seed,
               alpha=cfg.alpha, eta=cfg.eta, epsilon=cfg.epsilon_explore)

    if method == "diff-q":
        machine = build_machine_for(benchmark, kind, params)
        c_mag = abs(float(params.get("c", benchmark.defaults.get("c", 1.0))))
        row["c"] = c_mag
        machine_config = {"kind": kind, "params": {"c": c_mag}}
        if kind == "lexicographic":
            row["beta"] = machine.beta
            row["c1"] = machine.c1
            row["c2"] = machine.c2
            machine_config["params"].update(beta=machine.beta, c1=machine.c1,
                                            c2=machine.c2)
        env = ProductEnv(benchmark.mdp, machine, stream=stream)
        result = differential_q_train(env, cfg)
        prod = build_explicit_product(benchmark.mdp, machine)
        sat = policy_satisfaction_probability(prod, result.greedy)
        if kind == "lexicographic":
            avg = beta_limit_external_gain(prod, result.greedy)
        else:
            avg = policy_average_reward(prod, result.greedy).value
    else:
        machine_config = {"kind": "plain", "params": {}}
        env = ProductEnv(benchmark.mdp, benchmark.automaton, stream=stream)
        if method == "hahn-q":
            wrapped = hahn_reduction_env(env, cfg.zeta, cfg.gamma)
            row["zeta"] = cfg.zeta
        else:
            wrapped = bozkurt_reduction_env(env, cfg.gamma_b, cfg.gamma)
            row["gamma_b"] = cfg.gamma_b
        row["gamma"] = cfg.gamma
        result = discounted_q_train(wrapped, cfg)
        prod = build_explicit_product(benchmark.mdp, benchmark.automaton)
        sat = policy_satisfaction_probability(prod, result.greedy)
        avg = policy_average_reward(prod, result.greedy, reward="accepting").value

    row.update(wall_time_s=result.wall_time_s, sat_prob=sat.value, avg_reward=avg,
               product_states=prod.n_states)
    if collect:
        row["_result"] = result
        row["_extras"] = {"machine_config": machine_config}
    return row


@dataclass(frozen=True)
class SweepSpec:
    benchmark_id: str
    method: str
    samples: int
    steps: int
    master_seed: int
    benchmark_params: dict = field(default_factory=dict)
    ranges: dict | None = None
    episodic: bool = False
    episode_length: int = 10**6

    def resolved_ranges(self) -> dict:
        return dict(self.ranges if self.ranges is not None
                    else DEFAULT_RANGES[self.method])


def _sweep_worker(args) -> dict:
    spec, index = args
    benchmark = build_benchmark(spec.benchmark_id, spec.benchmark_params)
    params = sample_hyperparameters(spec.method, spec.resolved_ranges(),
                                    spec.master_seed, index)
    row = run_experiment(benchmark, spec.method, params, seed=index,
                         steps=spec.steps, episodic=spec.episodic,
                         episode_length=spec.episode_length,
                         master_seed=spec.master_seed, index=index)
    row["_index"] = index
    return row


def run_sweep(spec: SweepSpec, workers: int | None = None) -> list:
    """One run per sample index; rows returned sorted by index."""
    if spec.samples < 1:
        raise ValueError("samples must be >= 1")
    if workers is None:
        workers = int(os.environ.get("OMEGA_AVG_RL_THREADS") or os.cpu_count() or 1)
    tasks = [(spec, i) for i in range(spec.samples)]
    if workers <= 1 or spec.samples == 1:
        rows = [_sweep_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_worker, tasks))
    rows.sort(key=lambda r: r["_index"])
    for r in rows:
        del r["_index"]
    return rows


def format_csv_value(value) -> str:
    if value == "" or value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def rows_to_csv(rows, master_seed: int, version: str) -> str:
    lines = [f"# master_seed={master_seed} version={version}",
             ",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(format_csv_value(row[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"
