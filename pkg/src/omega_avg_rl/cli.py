"""Command-line interface: gen, check, learn, verify, sweep."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .automata import automaton_to_hoa, classify_specification, parse_automaton
from .bench import (Benchmark, CSV_COLUMNS, SweepSpec, build_benchmark,
                    build_machine_for, check_generated, run_experiment,
                    run_sweep, rows_to_csv)
from .machines import machine_table
from .mdp import mdp_to_raw, validate_mdp
from .product import build_explicit_product, explicit_product_to_raw
from .verify import (ProductPolicy, optimal_satisfaction_probability,
                     policy_average_reward, policy_satisfaction_probability)


def _json_dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _load_mdp(path):
    return validate_mdp(_load_json(path))


def _load_automaton(path):
    with open(path) as fh:
        return parse_automaton(fh.read())


def _load_rho(path):
    data = _load_json(path)
    return tuple(tuple(float(x) for x in row) for row in data["rho"])


def _benchmark_from_files(args) -> Benchmark:
    mdp = _load_mdp(args.mdp)
    automaton = _load_automaton(args.automaton)
    rho = _load_rho(args.rho) if getattr(args, "rho", None) else None
    name = Path(args.mdp).stem.replace(".mdp", "")
    kind = getattr(args, "machine", None) or ("lexicographic" if rho else "reset+hard")
    return Benchmark(name, mdp, automaton, rho=rho, machine_kind=kind)


def _resolve_benchmark(args) -> Benchmark:
    if getattr(args, "benchmark", None):
        params = {k: getattr(args, k) for k in ("n", "m", "slip", "k", "two_goals")
                  if getattr(args, k, None) is not None}
        bench = build_benchmark(args.benchmark, params)
        if getattr(args, "machine", None):
            bench = Benchmark(bench.name, bench.mdp, bench.automaton, bench.rho,
                              args.machine, bench.defaults)
        return bench
    if not getattr(args, "mdp", None) or not getattr(args, "automaton", None):
        raise SystemExit("need --benchmark or both --mdp and --automaton")
    return _benchmark_from_files(args)


def _params_from_args(args) -> dict:
    out = {}
    for key in ("alpha", "eta", "epsilon", "c", "beta", "c1", "c2", "zeta",
                "gamma_b", "gamma"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    return out


def _add_benchmark_args(p, require: bool = False):
    p.add_argument("--benchmark", help="bundled generator id")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--slip", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--two-goals", dest="two_goals", action="store_true", default=None)
    if not require:
        p.add_argument("--mdp", help="MDP JSON file")
        p.add_argument("--automaton", help="HOA automaton file")
        p.add_argument("--rho", help="external reward JSON file")


def _add_param_args(p):
    p.add_argument("--alpha", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--zeta", type=float)
    p.add_argument("--gamma-b", dest="gamma_b", type=float)
    p.add_argument("--gamma", type=float)


def cmd_gen(args) -> int:
    params = {k: getattr(args, k) for k in ("n", "m", "slip", "k", "two_goals")
              if getattr(args, k, None) is not None}
    bench = build_benchmark(args.id, params)
    check_generated(bench)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    safe = bench.name.replace("(", "-").replace(")", "").replace(",", "-")
    paths = {}
    mdp_path = out_dir / f"{safe}.mdp.json"
    mdp_path.write_text(_json_dump(mdp_to_raw(bench.mdp)))
    paths["mdp"] = str(mdp_path)
    hoa_path = out_dir / f"{safe}.hoa"
    hoa_path.write_text(automaton_to_hoa(bench.automaton, name=bench.name))
    paths["automaton"] = str(hoa_path)
    if bench.rho is not None:
        rho_path = out_dir / f"{safe}.rho.json"
        rho_path.write_text(_json_dump({"rho": [list(r) for r in bench.rho]}))
        paths["rho"] = str(rho_path)
    if args.emit_machine:
        machine = build_machine_for(bench, args.machine or bench.machine_kind,
                                    _params_from_args(args))
        table_path = out_dir / f"{safe}.machine.json"
        table_path.write_text(_json_dump(machine_table(machine, bench.mdp.n_states)))
        paths["machine"] = str(table_path)
    sys.stdout.write(_json_dump(paths))
    return 0


def cmd_check(args) -> int:
    aut = _load_automaton(args.automaton)
    if not aut.deterministic:
        out = {"deterministic": False, "absolute_liveness": "unchecked",
               "stable": "unchecked", "fairness": "unchecked"}
    else:
        spec_class = classify_specification(aut)
        out = {"deterministic": True, **spec_class.as_dict()}
    sys.stdout.write(_json_dump(out))
    return 0


def cmd_learn(args) -> int:
    bench = _resolve_benchmark(args)
    params = _params_from_args(args)
    row = run_experiment(bench, args.method, params, seed=args.seed,
                         steps=args.steps, episodic=args.episodic,
                         episode_length=args.episode_length,
                         machine_kind=getattr(args, "machine", None),
                         collect=True)
    result, extras = row.pop("_result"), row.pop("_extras")
    payload = {
        "benchmark": row["benchmark"], "method": row["method"],
        "config": {k: row[k] for k in CSV_COLUMNS
                   if row[k] != "" and k not in ("benchmark", "method", "wall_time_s")},
        "wall_time_s": result.wall_time_s,
        "r_bar_final": result.q_final.r_bar,
        "r_bar_trace": [[t, v] for t, v in result.r_bar_trace],
        "greedy": sorted([list(map(int, state)), int(a)]
                         for state, a in result.greedy.choices.items()),
        "q": sorted([list(map(int, state)), [float(v) for v in values]]
                    for state, values in result.q_final.values.items()),
        "steps_taken": result.steps_taken,
        "states_seen": result.states_seen,
        "unvisited_states": result.unvisited_states,
        "visit_ratio": result.visit_ratio if result.visit_ratio != float("inf") else None,
        "sat_prob": row["sat_prob"],
        "avg_reward": row["avg_reward"],
        "product_states": row["product_states"],
        "machine": extras["machine_config"],
        "seed": args.seed,
    }
    text = _json_dump(payload)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_verify(args) -> int:
    bench = _resolve_benchmark(args)
    tol = args.tol
    if args.policy:
        result_json = _load_json(args.policy)
        machine_cfg = result_json.get("machine") or {}
        kind = machine_cfg.get("kind", getattr(args, "machine", None) or "reset+hard")
        params = dict(machine_cfg.get("params") or {})
        params.update(_params_from_args(args))
        if kind == "plain":
            prod = build_explicit_product(bench.mdp, bench.automaton)
        else:
            machine = build_machine_for(bench, kind, params)
            prod = build_explicit_product(bench.mdp, machine)
        policy = ProductPolicy({tuple(state): int(a)
                                for state, a in result_json["greedy"]})
        sat = policy_satisfaction_probability(prod, policy, tol)
        gain = policy_average_reward(prod, policy, tol)
        out = {"policy_sat": sat.__dict__, "policy_gain": gain.__dict__,
               "product_states": prod.n_states}
    else:
        if getattr(args, "machine", None):
            machine = build_machine_for(bench, args.machine, _params_from_args(args))
            prod = build_explicit_product(bench.mdp, machine)
        else:
            prod = build_explicit_product(bench.mdp, bench.automaton)
        res = optimal_satisfaction_probability(None, prod, tol)
        out = {"optimal_sat": res.__dict__, "product_states": prod.n_states}
    if args.dump_product:
        Path(args.dump_product).write_text(_json_dump(explicit_product_to_raw(prod)))
        out["dumped"] = args.dump_product
    sys.stdout.write(_json_dump(out))
    return 0


def cmd_sweep(args) -> int:
    ranges = None
    if args.range:
        ranges = {}
        for item in args.range:
            name, _, bounds = item.partition("=")
            a, _, b = bounds.partition(",")
            ranges[name] = (float(a), float(b))
    params = {k: getattr(args, k) for k in ("n", "m", "slip", "k", "two_goals")
              if getattr(args, k, None) is not None}
    spec = SweepSpec(benchmark_id=args.benchmark, method=args.method,
                     samples=args.samples, steps=args.steps,
                     master_seed=args.master_seed, benchmark_params=params,
                     ranges=ranges, episodic=args.episodic,
                     episode_length=args.episode_length)
    rows = run_sweep(spec, workers=args.workers)
    text = rows_to_csv(rows, args.master_seed, __version__)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omega-avg-rl",
        description="Average-reward RL for omega-regular objectives, with exact verification")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a bundled benchmark as files")
    p.add_argument("--id", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--slip", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--two-goals", dest="two_goals", action="store_true", default=None)
    p.add_argument("--emit-machine", action="store_true")
    p.add_argument("--machine", choices=("reset", "reset+hard", "lexicographic"))
    _add_param_args(p)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("check", help="classify an automaton's specification")
    p.add_argument("--automaton", required=True)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("learn", help="train a learner and verify the greedy policy")
    _add_benchmark_args(p)
    p.add_argument("--method", required=True, choices=("diff-q", "hahn-q", "bozkurt-q"))
    p.add_argument("--machine", choices=("reset", "reset+hard", "lexicographic"))
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episodic", action="store_true")
    p.add_argument("--episode-length", type=int, default=10**6)
    p.add_argument("--out")
    _add_param_args(p)
    p.set_defaults(fn=cmd_learn)

    p = sub.add_parser("verify", help="exact verification of optimal or learned behavior")
    _add_benchmark_args(p)
    p.add_argument("--machine", choices=("reset", "reset+hard", "lexicographic"))
    p.add_argument("--policy", help="result.json from learn")
    p.add_argument("--dump-product")
    p.add_argument("--tol", type=float, default=1e-10)
    _add_param_args(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("sweep", help="hyperparameter sweep with CSV output")
    p.add_argument("--benchmark", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--slip", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--two-goals", dest="two_goals", action="store_true", default=None)
    p.add_argument("--method", required=True, choices=("diff-q", "hahn-q", "bozkurt-q"))
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--steps", type=int, default=10**6)
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--episodic", action="store_true")
    p.add_argument("--episode-length", type=int, default=10**6)
    p.add_argument("--range", action="append", help="name=a,b (log-uniform)")
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
