"""Explicit labeled MDPs: validation, sampling, induced chains, structural analyses.

States and actions are dense integer indices; action names live in a side
table. The JSON file format is::

    {"states": N, "initial": i, "aps": ["a", ...],
     "labels": [["a"], [], ...],
     "transitions": [{"from": s, "action": "name", "to": [[t, p], ...]}, ...]}

Unknown keys are rejected. Distributions must sum to 1 within 1e-9 and are
stored as given, never renormalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ActionNotEnabled, MalformedModel, PolicyMismatch
from .seeding import UniformStream

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Mdp:
    """Immutable explicit MDP. Build via :func:`validate_mdp`."""

    n_states: int
    initial: int
    action_names: tuple[str, ...]
    enabled: tuple[tuple[int, ...], ...]            # per state, global action ids
    transitions: dict                               # (state, action id) -> ((succ, prob), ...)
    atomic_props: tuple[str, ...]
    labels: tuple[frozenset, ...]                   # per state, subset of atomic_props

    def actions(self, state: int) -> tuple[int, ...]:
        return self.enabled[state]

    def successors(self, state: int, action: int) -> tuple[int, ...]:
        return tuple(t for t, p in self.transitions[(state, action)] if p > 0.0)

    def row(self, state: int, action: int):
        return self.transitions[(state, action)]


@dataclass(frozen=True)
class StationaryPolicy:
    """Per-state distribution over enabled actions (pure = point distribution)."""

    choice: dict  # state -> ((action id, prob), ...)

    @staticmethod
    def pure(actions_by_state) -> "StationaryPolicy":
        return StationaryPolicy({s: ((a, 1.0),) for s, a in enumerate(actions_by_state)})


@dataclass(frozen=True)
class MarkovChain:
    """Row-stochastic chain; each row entry is (successor, prob, reward)."""

    n_states: int
    initial: int
    rows: tuple  # per state, ((succ, prob, reward), ...)

    def check(self):
        for s, row in enumerate(self.rows):
            total = sum(p for _, p, _ in row)
            if abs(total - 1.0) > ROW_SUM_TOL:
                raise MalformedModel([f"chain row {s} sums to {total!r}"])


@dataclass(frozen=True)
class MecDecomposition:
    components: tuple            # per component: (frozenset of states, {state: frozenset of action keys})
    membership: dict             # state -> component index (absent if in none)

    def component_of(self, state: int):
        return self.membership.get(state)


def validate_mdp(raw) -> Mdp:
    """Validate a parsed MDP description, reporting every violation at once."""
    problems = []
    if not isinstance(raw, dict):
        raise MalformedModel(["top-level value must be an object"])
    unknown = set(raw) - {"states", "initial", "aps", "labels", "transitions"}
    if unknown:
        problems.append(f"unknown keys: {sorted(unknown)}")

    n = raw.get("states")
    if not isinstance(n, int) or n < 1:
        problems.append("'states' must be a positive integer")
        raise MalformedModel(problems)
    initial = raw.get("initial")
    if not isinstance(initial, int) or not (0 <= initial < n):
        problems.append(f"'initial' must be a state index in [0, {n})")

    aps = raw.get("aps", [])
    if not isinstance(aps, list) or any(not isinstance(a, str) for a in aps):
        problems.append("'aps' must be a list of strings")
        aps = []
    elif len(set(aps)) != len(aps):
        problems.append("'aps' contains duplicates")

    labels_raw = raw.get("labels", [])
    labels = [frozenset()] * n
    if not isinstance(labels_raw, list) or len(labels_raw) != n:
        problems.append(f"'labels' must list one label set per state ({n})")
    else:
        labels = []
        for s, lab in enumerate(labels_raw):
            lab = lab if isinstance(lab, list) else []
            bad = [x for x in lab if x not in aps]
            if bad:
                problems.append(f"state {s} labeled with undeclared props {bad}")
            labels.append(frozenset(x for x in lab if x in aps))

    rows = raw.get("transitions", [])
    if not isinstance(rows, list):
        problems.append("'transitions' must be a list")
        rows = []
    action_names = sorted({r["action"] for r in rows
                           if isinstance(r, dict) and isinstance(r.get("action"), str)})
    action_id = {name: i for i, name in enumerate(action_names)}

    transitions = {}
    for k, r in enumerate(rows):
        if not isinstance(r, dict):
            problems.append(f"transition #{k} is not an object")
            continue
        unknown = set(r) - {"from", "action", "to"}
        if unknown:
            problems.append(f"transition #{k} has unknown keys {sorted(unknown)}")
        src, act, to = r.get("from"), r.get("action"), r.get("to")
        if not isinstance(src, int) or not (0 <= src < n):
            problems.append(f"transition #{k}: bad source {src!r}")
            continue
        if not isinstance(act, str):
            problems.append(f"transition #{k}: action must be a string")
            continue
        key = (src, action_id[act])
        if key in transitions:
            problems.append(f"duplicate row for state {src}, action {act!r}")
            continue
        if not isinstance(to, list) or not to:
            problems.append(f"transition #{k}: 'to' must be a nonempty list")
            continue
        entries = []
        total = 0.0
        seen = set()
        for e in to:
            if (not isinstance(e, list) or len(e) != 2
                    or not isinstance(e[0], int) or isinstance(e[1], bool)
                    or not isinstance(e[1], (int, float))):
                problems.append(f"transition #{k}: entries must be [state, prob] pairs")
                break
            t, p = e[0], float(e[1])
            if not (0 <= t < n):
                problems.append(f"transition #{k}: dangling successor {t}")
            if p < 0.0 or p > 1.0:
                problems.append(f"transition #{k}: probability {p!r} outside [0, 1]")
            if t in seen:
                problems.append(f"transition #{k}: duplicate successor {t}")
            seen.add(t)
            entries.append((t, p))
            total += p
        else:
            if abs(total - 1.0) > ROW_SUM_TOL:
                problems.append(f"state {src} action {act!r}: row sums to {total!r}")
            entries.sort()
            transitions[key] = tuple(entries)

    enabled = [[] for _ in range(n)]
    for (s, a) in transitions:
        enabled[s].append(a)
    for s in range(n):
        enabled[s].sort()
        if not enabled[s]:
            problems.append(f"state {s} has no enabled action")

    if problems:
        raise MalformedModel(problems)
    return Mdp(n, initial, tuple(action_names), tuple(tuple(e) for e in enabled),
               transitions, tuple(aps), tuple(labels))


def mdp_to_raw(mdp: Mdp) -> dict:
    return {
        "states": mdp.n_states,
        "initial": mdp.initial,
        "aps": list(mdp.atomic_props),
        "labels": [sorted(mdp.labels[s]) for s in range(mdp.n_states)],
        "transitions": [
            {"from": s, "action": mdp.action_names[a],
             "to": [[t, p] for t, p in mdp.transitions[(s, a)]]}
            for s in range(mdp.n_states) for a in mdp.enabled[s]
        ],
    }


def sample_index(row, stream: UniformStream) -> int:
    """Inverse-CDF draw over ((value, prob), ...) in stored order."""
    u = stream.next()
    acc = 0.0
    for value, p in row:
        acc += p
        if u < acc:
            return value
    return row[-1][0]


def sample_transition(mdp: Mdp, state: int, action: int, stream: UniformStream) -> int:
    row = mdp.transitions.get((state, action))
    if row is None:
        raise ActionNotEnabled(f"action {action} not enabled at state {state}")
    return sample_index(row, stream)


def validate_policy(mdp: Mdp, policy: StationaryPolicy):
    for s in range(mdp.n_states):
        dist = policy.choice.get(s)
        if dist is None:
            raise PolicyMismatch(f"policy undefined at state {s}")
        total = 0.0
        for a, p in dist:
            if a not in mdp.enabled[s]:
                raise PolicyMismatch(f"policy uses disabled action {a} at state {s}")
            total += p
        if abs(total - 1.0) > ROW_SUM_TOL:
            raise PolicyMismatch(f"policy distribution at state {s} sums to {total!r}")


def induce_chain(mdp: Mdp, policy: StationaryPolicy) -> MarkovChain:
    """Markov chain with t(s)(s') = sum_a policy(s)(a) * T(s,a)(s')."""
    validate_policy(mdp, policy)
    rows = []
    for s in range(mdp.n_states):
        acc = {}
        for a, pa in policy.choice[s]:
            if pa == 0.0:
                continue
            for t, p in mdp.transitions[(s, a)]:
                acc[t] = acc.get(t, 0.0) + pa * p
        rows.append(tuple((t, acc[t], 0.0) for t in sorted(acc)))
    return MarkovChain(mdp.n_states, mdp.initial, tuple(rows))


# --- graph machinery -------------------------------------------------------

def strongly_connected_components(n: int, adjacency) -> list:
    """Iterative Tarjan. Returns components (lists of nodes), sinks first."""
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack = []
    sccs = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            neighbors = adjacency[v]
            while pi < len(neighbors):
                w = neighbors[pi]
                pi += 1
                if index[w] == -1:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(comp)
            if work:
                u, _ = work[-1]
                low[u] = min(low[u], low[v])
    return sccs


def _full_adjacency(mdp_like):
    adj = []
    for s in range(mdp_like.n_states):
        targets = set()
        for a in mdp_like.actions(s):
            targets.update(mdp_like.successors(s, a))
        adj.append(sorted(targets))
    return adj


def is_communicating(mdp_like) -> bool:
    """True iff the positive-probability transition graph is strongly connected."""
    if mdp_like.n_states == 1:
        return True
    return len(strongly_connected_components(mdp_like.n_states, _full_adjacency(mdp_like))) == 1


def mec_decomposition(mdp_like) -> MecDecomposition:
    """Maximal end components via iterated SCC refinement and action pruning."""
    n = mdp_like.n_states
    act_keys = [list(mdp_like.actions(s)) for s in range(n)]
    succs = {(s, a): tuple(mdp_like.successors(s, a)) for s in range(n) for a in act_keys[s]}
    retained = [set(act_keys[s]) for s in range(n)]
    alive = [bool(retained[s]) for s in range(n)]

    while True:
        adj = [[] for _ in range(n)]
        for s in range(n):
            if not alive[s]:
                continue
            targets = set()
            for a in retained[s]:
                targets.update(succs[(s, a)])
            adj[s] = sorted(targets)
        comp_id = [-1] * n
        for i, comp in enumerate(strongly_connected_components(n, adj)):
            for v in comp:
                comp_id[v] = i
        changed = False
        for s in range(n):
            if not alive[s]:
                continue
            for a in list(retained[s]):
                if any(not alive[t] or comp_id[t] != comp_id[s] for t in succs[(s, a)]):
                    retained[s].discard(a)
                    changed = True
            if not retained[s]:
                alive[s] = False
                changed = True
        if not changed:
            break

    # Final grouping: SCCs of the converged retained graph.
    adj = [[] for _ in range(n)]
    for s in range(n):
        if alive[s]:
            targets = set()
            for a in retained[s]:
                targets.update(succs[(s, a)])
            adj[s] = sorted(targets)
    components = []
    membership = {}
    for comp in strongly_connected_components(n, adj):
        comp = [v for v in comp if alive[v]]
        if not comp:
            continue
        states = frozenset(comp)
        actions = {s: frozenset(retained[s]) for s in comp}
        idx = len(components)
        components.append((states, actions))
        for s in comp:
            membership[s] = idx
    return MecDecomposition(tuple(components), membership)


def is_weakly_communicating(mdp_like) -> bool:
    """All end-component states pairwise mutually reachable in the full graph."""
    dec = mec_decomposition(mdp_like)
    ec_states = sorted(dec.membership)
    if not ec_states:
        return False
    comp_id = {}
    for i, comp in enumerate(strongly_connected_components(
            mdp_like.n_states, _full_adjacency(mdp_like))):
        for v in comp:
            comp_id[v] = i
    first = comp_id[ec_states[0]]
    return all(comp_id[s] == first for s in ec_states)
