"""On-the-fly product of an MDP with a reward machine (or bare automaton).

Product states ``(mdp state, machine state, bit)`` are discovered lazily and
interned to dense ids. Explicit materialization runs a BFS over the same
outcome rows, so on-the-fly sampling and the explicit product encode exactly
the same numbers: for a fixed seed and action sequence the trajectories agree
bitwise.

Actions are indices into a canonical per-state list: all legal
``("m", mdp_action, automaton_successor)`` pairs ordered by that tuple,
followed by the legal epsilon resets in kind order. Sampling a step draws one
uniform (inverse CDF over the outcome row in stored order); rows with a
single outcome draw nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

from .automata import BuchiAutomaton
from .errors import IllegalAction, ProductTooLarge
from .machines import schedule_beta
from .mdp import Mdp
from .seeding import UniformStream, make_rng


@dataclass(frozen=True)
class StepOutcome:
    next: tuple
    reward: float
    accepting_edge: bool


class _PlainAutomatonMachine:
    """Adapter: a bare automaton as a zero-reward machine without resets."""

    def __init__(self, aut: BuchiAutomaton):
        self.base = aut

    @property
    def initial(self):
        return (self.base.initial, 0)

    def epsilon_kinds(self, q, b):
        return ()

    def epsilon_outcome(self, kind, q, b):
        raise IllegalAction("bare automaton product has no epsilon transitions")

    def letter_outcomes(self, q, b, letter, succ, s, s2, beta):
        accepting = self.base.is_accepting_edge(q, letter, succ)
        return ((succ, 0, 1.0, 0.0, accepting),)


def as_machine(machine_or_automaton):
    if isinstance(machine_or_automaton, BuchiAutomaton):
        return _PlainAutomatonMachine(machine_or_automaton)
    return machine_or_automaton


class ProductEnv:
    """Sampling environment over the product of ``mdp`` and a reward machine."""

    def __init__(self, mdp: Mdp, machine, seed: int = 0, stream: UniformStream | None = None):
        self.mdp = mdp
        self.machine = as_machine(machine)
        self.stream = stream if stream is not None else UniformStream(make_rng(seed))
        self.t = 0
        self._states = []
        self._index = {}
        self._actions = []
        self._rows = []
        self._scheduled = getattr(self.machine, "beta_schedule", None) is not None
        # The automaton reads MDP labels projected onto its own AP set.
        aut_aps = set(self.machine.base.atomic_props)
        self.letters = tuple(frozenset(lab) & aut_aps for lab in mdp.labels)
        q0, b0 = self.machine.initial
        self.initial_id = self._intern((mdp.initial, q0, b0))

    # -- state interning ----------------------------------------------------

    def _intern(self, state) -> int:
        sid = self._index.get(state)
        if sid is None:
            sid = len(self._states)
            self._index[state] = sid
            self._states.append(state)
            self._actions.append(None)
            self._rows.append(None)
        return sid

    def state_tuple(self, sid: int) -> tuple:
        return self._states[sid]

    @property
    def n_interned(self) -> int:
        return len(self._states)

    # -- actions and outcome rows -------------------------------------------

    def actions(self, sid: int) -> tuple:
        acts = self._actions[sid]
        if acts is None:
            s, q, b = self._states[sid]
            letter = self.letters[s]
            moves = []
            for a in self.mdp.enabled[s]:
                for q2 in self.machine.base.delta(q, letter):
                    moves.append(("m", a, q2))
            moves.sort()
            eps = []
            for kind in self.machine.epsilon_kinds(q, b):
                # A reset that would not change the product state is a pure
                # self-loop; offering it would make transient MDP states
                # recurrent. It is kept only at dead ends, for totality.
                q2, b2, _p, _r, _acc = self.machine.epsilon_outcome(kind, q, b)
                if (q2, b2) == (q, b) and moves:
                    continue
                eps.append(("e", kind))
            acts = tuple(moves + eps)
            self._actions[sid] = acts
        return acts

    def _build_row(self, sid: int, action, beta: float) -> tuple:
        s, q, b = self._states[sid]
        if action[0] == "e":
            q2, b2, p, reward, acc = self.machine.epsilon_outcome(action[1], q, b)
            return ((self._intern((s, q2, b2)), p, reward, acc),)
        _, a, q_succ = action
        letter = self.letters[s]
        row = []
        for t, p_mdp in self.mdp.row(s, a):
            for q2, b2, p_bit, reward, acc in self.machine.letter_outcomes(
                    q, b, letter, q_succ, s, t, beta):
                row.append((self._intern((t, q2, b2)), p_mdp * p_bit, reward, acc))
        return tuple(row)

    def row(self, sid: int, action_index: int) -> tuple:
        """Outcome row ((next id, prob, reward, accepting), ...); cached."""
        rows = self._rows[sid]
        if rows is None:
            acts = self.actions(sid)
            beta = getattr(self.machine, "beta", 0.0)
            rows = tuple(self._build_row(sid, act, beta) for act in acts)
            self._rows[sid] = rows
        return rows[action_index]

    # -- sampling -------------------------------------------------------------

    def step(self, sid: int, action_index: int):
        """Sample one step; returns (next id, reward, accepting). Advances t."""
        acts = self.actions(sid)
        if not 0 <= action_index < len(acts):
            raise IllegalAction(f"action index {action_index} out of range at state {sid}")
        if self._scheduled and acts[action_index][0] == "m":
            beta = schedule_beta(self.machine, self.t)
            row = self._build_row(sid, acts[action_index], beta)
        else:
            row = self.row(sid, action_index)
        self.t += 1
        if len(row) == 1:
            nxt, _p, reward, acc = row[0]
            return nxt, reward, acc
        u = self.stream.next()
        cum = 0.0
        for nxt, p, reward, acc in row:
            cum += p
            if u < cum:
                return nxt, reward, acc
        nxt, _p, reward, acc = row[-1]
        return nxt, reward, acc


def product_actions(env: ProductEnv, state) -> list:
    """All legal product actions at a product state tuple ``(s, q, b)``."""
    return list(env.actions(env._intern(tuple(state))))


def product_step(env: ProductEnv, state, action) -> StepOutcome:
    """Spec-level step on state/action tuples (learners use indexed `step`)."""
    sid = env._intern(tuple(state))
    acts = env.actions(sid)
    if tuple(action) not in acts:
        raise IllegalAction(f"{action!r} is not legal at {state!r}")
    nxt, reward, acc = env.step(sid, acts.index(tuple(action)))
    return StepOutcome(env.state_tuple(nxt), reward, acc)


@dataclass(frozen=True)
class ExplicitProduct:
    """Explicit rewardful product over the reachable states."""

    states: tuple            # sid -> (mdp state, machine state, bit)
    action_lists: tuple      # sid -> (action, ...) in canonical order
    rows: tuple              # sid -> (outcome row per action)
    initial: int
    mdp: Mdp
    machine: object
    letters: tuple = ()      # per mdp state, label projected onto automaton APs

    @property
    def n_states(self) -> int:
        return len(self.states)

    def actions(self, sid: int) -> range:
        return range(len(self.action_lists[sid]))

    def successors(self, sid: int, action_index: int) -> tuple:
        return tuple(nxt for nxt, p, _r, _a in self.rows[sid][action_index] if p > 0.0)

    def row(self, sid: int, action_index: int) -> tuple:
        return self.rows[sid][action_index]

    def is_eps(self, sid: int, action_index: int) -> bool:
        return self.action_lists[sid][action_index][0] == "e"

    def external_reward(self, sid: int, next_sid: int) -> float:
        rho = getattr(self.machine, "external_reward", None)
        if rho is None:
            return 0.0
        return rho[self.states[sid][0]][self.states[next_sid][0]]

    def simulate_step(self, sid: int, action_index: int, stream: UniformStream):
        row = self.rows[sid][action_index]
        if len(row) == 1:
            nxt, _p, reward, acc = row[0]
            return nxt, reward, acc
        u = stream.next()
        cum = 0.0
        for nxt, p, reward, acc in row:
            cum += p
            if u < cum:
                return nxt, reward, acc
        nxt, _p, reward, acc = row[-1]
        return nxt, reward, acc


def build_explicit_product(mdp: Mdp, machine_or_automaton, cap: int = 10**6) -> ExplicitProduct:
    """BFS materialization of the reachable product (constant flip probability)."""
    env = ProductEnv(mdp, machine_or_automaton, seed=0)
    frontier = [env.initial_id]
    while frontier:
        next_frontier = []
        for sid in frontier:
            for aidx in range(len(env.actions(sid))):
                before = env.n_interned
                env.row(sid, aidx)
                if env.n_interned > cap:
                    raise ProductTooLarge(f"reachable product exceeds cap {cap}")
                next_frontier.extend(range(before, env.n_interned))
        frontier = next_frontier
    return ExplicitProduct(tuple(env._states),
                           tuple(env._actions[s] for s in range(env.n_interned)),
                           tuple(env._rows[s] if env._rows[s] is not None else ()
                                 for s in range(env.n_interned)),
                           env.initial_id, mdp, env.machine, env.letters)


def explicit_product_to_raw(prod: ExplicitProduct) -> dict:
    """MDP-JSON-style dict extended with per-outcome reward and accepting marks."""
    def action_name(act):
        if act[0] == "e":
            return act[1]
        return f"{prod.mdp.action_names[act[1]]}>q{act[2]}"

    transitions = []
    for sid in range(prod.n_states):
        for aidx, act in enumerate(prod.action_lists[sid]):
            row = prod.rows[sid][aidx]
            transitions.append({
                "from": sid,
                "action": action_name(act),
                "to": [[nxt, p] for nxt, p, _r, _a in row],
                "reward": [r for _n, _p, r, _a in row],
                "accepting": [bool(a) for _n, _p, _r, a in row],
            })
    return {
        "states": prod.n_states,
        "initial": prod.initial,
        "aps": list(prod.mdp.atomic_props),
        "labels": [sorted(prod.mdp.labels[prod.states[sid][0]]) for sid in range(prod.n_states)],
        "product_states": [list(prod.states[sid]) for sid in range(prod.n_states)],
        "transitions": transitions,
    }
