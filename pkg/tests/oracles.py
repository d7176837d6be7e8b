"""Independent brute-force oracles used by the test suite.

These deliberately avoid the package's algorithms: end components are found
by enumerating state subsets, and language containment by enumerating lasso
words and simulating them directly on the automaton.
"""

from __future__ import annotations

import itertools


# -- end components by subset enumeration --------------------------------------

def brute_force_mecs(mdp_like) -> list:
    """Maximal end components of an MDP-like object with <= ~12 states.

    For each state subset, saturate with every action whose support stays
    inside, keep subsets that are closed, nonempty per state, and strongly
    connected, then take the maximal ones under state-set inclusion.
    """
    n = mdp_like.n_states
    candidates = []
    for r in range(1, n + 1):
        for subset in itertools.combinations(range(n), r):
            inside = set(subset)
            actions = {}
            ok = True
            for s in subset:
                acts = [a for a in mdp_like.actions(s)
                        if set(mdp_like.successors(s, a)) <= inside]
                if not acts:
                    ok = False
                    break
                actions[s] = acts
            if not ok:
                continue
            if _strongly_connected(subset, actions, mdp_like):
                candidates.append((frozenset(subset), actions))
    maximal = []
    for states, actions in candidates:
        if not any(states < other for other, _ in candidates):
            maximal.append((states, {s: frozenset(a) for s, a in actions.items()}))
    return maximal


def _strongly_connected(subset, actions, mdp_like) -> bool:
    inside = set(subset)
    for src in subset:
        seen = {src}
        frontier = [src]
        while frontier:
            u = frontier.pop()
            for a in actions[u]:
                for v in mdp_like.successors(u, a):
                    if v in inside and v not in seen:
                        seen.add(v)
                        frontier.append(v)
        if seen != inside:
            return False
    return True


# -- lasso-word semantics for deterministic automata ----------------------------

def run_word(aut, state, word):
    """(end state or None, saw accepting edge) after reading ``word``."""
    saw_accepting = False
    for letter in word:
        succs = aut.delta(state, letter)
        if not succs:
            return None, saw_accepting
        nxt = succs[0]
        if aut.is_accepting_edge(state, letter, nxt):
            saw_accepting = True
        state = nxt
    return state, saw_accepting


def lasso_accepted(aut, start, prefix, cycle) -> bool:
    """Whether the deterministic automaton accepts prefix . cycle^omega from start."""
    state, _ = run_word(aut, start, prefix)
    if state is None:
        return False
    seen = {}
    acc_flags = []
    while state not in seen:
        seen[state] = len(acc_flags)
        state, acc = run_word(aut, state, cycle)
        acc_flags.append(acc)
        if state is None:
            return False
    return any(acc_flags[seen[state]:])


def oracle_counterexample(aut, p, q, max_cycle: int = 8):
    """Bounded lasso search for a word accepted from p but not from q.

    Prefixes are enumerated over distinct joint states (exhaustive); cycle
    words are enumerated up to ``max_cycle`` letters, so a miss is possible
    only for counterexamples whose shortest cycle exceeds that bound.
    """
    letters = aut.letters
    # All (leader, follower-or-None) pairs reachable by some finite word.
    start = (p, q)
    pairs = {start: ()}
    frontier = [start]
    while frontier:
        x, y = pair = frontier.pop()
        word = pairs[pair]
        for letter in letters:
            lead = aut.delta(x, letter)
            if not lead:
                continue
            y2 = None
            if y is not None:
                follow = aut.delta(y, letter)
                y2 = follow[0] if follow else None
            nxt = (lead[0], y2)
            if nxt not in pairs:
                pairs[nxt] = word + (letter,)
                frontier.append(nxt)

    for length in range(1, max_cycle + 1):
        for cycle in itertools.product(letters, repeat=length):
            accept_from = {}
            for (x, y), word in pairs.items():
                if x not in accept_from:
                    accept_from[x] = lasso_accepted(aut, x, (), cycle)
                if not accept_from[x]:
                    continue
                if y is None or not accept_from.setdefault(
                        y, lasso_accepted(aut, y, (), cycle)):
                    return word, cycle
    return None
