"""Exact desk-scale verification on explicit products.

Satisfaction semantics: a bottom strongly connected component of an induced
chain is accepting iff it contains an accepting edge and no reset edge (a run
that resets infinitely often is not accepting). Optimal satisfaction maximizes
reachability of maximal end components that are accepting once reset actions
are removed; reachability itself may use resets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import PolicyMismatch
from .mdp import mec_decomposition, strongly_connected_components
from .product import ExplicitProduct, build_explicit_product

DEFAULT_TOL = 1e-10
MAX_ITERATIONS = 10**7
DENSE_LIMIT = 1000


@dataclass(frozen=True)
class VerificationResult:
    value: float
    residual: float
    kind: str


@dataclass(frozen=True)
class ProductPolicy:
    """Positional policy on product state tuples; unknown states take action 0."""

    choices: dict  # (mdp state, machine state, bit) -> action index

    def action(self, prod: ExplicitProduct, sid: int) -> int:
        n_actions = len(prod.action_lists[sid])
        if n_actions == 0:
            return -1
        a = self.choices.get(prod.states[sid], 0)
        if not 0 <= a < n_actions:
            raise PolicyMismatch(
                f"action {a} out of range at product state {prod.states[sid]}")
        return a


# -- induced chains ----------------------------------------------------------

def induced_chain(prod: ExplicitProduct, policy: ProductPolicy):
    """(reachable sids, chain rows, eps flags) under the policy from initial.

    Action-less dead ends become absorbing self-loops with reward 0.
    """
    rows = {}
    eps_flag = {}
    frontier = [prod.initial]
    seen = {prod.initial}
    while frontier:
        sid = frontier.pop()
        a = policy.action(prod, sid)
        if a < 0:
            rows[sid] = ((sid, 1.0, 0.0, False),)
            eps_flag[sid] = False
            continue
        row = tuple((t, p, r, acc) for t, p, r, acc in prod.rows[sid][a] if p > 0.0)
        rows[sid] = row
        eps_flag[sid] = prod.is_eps(sid, a)
        for t, _p, _r, _acc in row:
            if t not in seen:
                seen.add(t)
                frontier.append(t)
    return sorted(seen), rows, eps_flag


def chain_bsccs(states, rows):
    """Bottom SCCs of the chain restricted to ``states``."""
    index = {s: i for i, s in enumerate(states)}
    adjacency = [[index[t] for t, _p, _r, _acc in rows[s]] for s in states]
    sccs = strongly_connected_components(len(states), adjacency)
    bsccs = []
    for comp in sccs:
        members = {states[i] for i in comp}
        bottom = all(t in members for i in comp for t, _p, _r, _acc in rows[states[i]])
        if bottom:
            bsccs.append(sorted(members))
    return bsccs


def chain_reach_probability(states, rows, target: set, tol: float) -> tuple:
    """Probability of reaching ``target`` from each state (dict), plus residual."""
    can_reach = set(target)
    reverse = {}
    for s in states:
        for t, p, _r, _acc in rows[s]:
            reverse.setdefault(t, []).append(s)
    frontier = list(target)
    while frontier:
        t = frontier.pop()
        for s in reverse.get(t, ()):
            if s not in can_reach:
                can_reach.add(s)
                frontier.append(s)
    values = {s: 0.0 for s in states}
    for s in target:
        values[s] = 1.0
    interior = [s for s in states if s in can_reach and s not in target]
    if not interior:
        return values, 0.0
    if len(interior) <= DENSE_LIMIT:
        idx = {s: i for i, s in enumerate(interior)}
        a = np.eye(len(interior))
        b = np.zeros(len(interior))
        for s in interior:
            for t, p, _r, _acc in rows[s]:
                if t in idx:
                    a[idx[s], idx[t]] -= p
                elif t in target:
                    b[idx[s]] += p
        x = np.linalg.solve(a, b)
        for s in interior:
            values[s] = float(x[idx[s]])
        return values, 0.0
    residual = np.inf
    for _ in range(MAX_ITERATIONS):
        residual = 0.0
        for s in interior:
            new = sum(p * values[t] for t, p, _r, _acc in rows[s])
            residual = max(residual, abs(new - values[s]))
            values[s] = new
        if residual < tol:
            break
    return values, residual


def stationary_distribution(members, rows, tol: float) -> dict:
    """Stationary distribution of a BSCC (solve pi P = pi, sum pi = 1)."""
    idx = {s: i for i, s in enumerate(members)}
    n = len(members)
    if n == 1:
        return {members[0]: 1.0}
    p = np.zeros((n, n))
    for s in members:
        for t, q, _r, _acc in rows[s]:
            p[idx[s], idx[t]] += q
    if n <= DENSE_LIMIT:
        a = p.T - np.eye(n)
        a[-1, :] = 1.0
        b = np.zeros(n)
        b[-1] = 1.0
        pi = np.linalg.solve(a, b)
        return {s: float(pi[idx[s]]) for s in members}
    pi = np.full(n, 1.0 / n)
    for _ in range(MAX_ITERATIONS):
        nxt = 0.5 * pi + 0.5 * (pi @ p)
        done = float(np.max(np.abs(nxt - pi))) < tol
        pi = nxt
        if done:
            break
    pi = pi / pi.sum()
    return {s: float(pi[idx[s]]) for s in members}


# -- verifier operations ------------------------------------------------------

def max_reach_probability(prod: ExplicitProduct, target,
                          tol: float = DEFAULT_TOL) -> VerificationResult:
    """Optimal probability of reaching ``target`` (set of sids), value iteration."""
    target = set(target)
    n = prod.n_states
    values = [0.0] * n
    for s in target:
        values[s] = 1.0
    residual = np.inf
    for _ in range(MAX_ITERATIONS):
        residual = 0.0
        for s in range(n):
            if s in target:
                continue
            best = 0.0
            for row in prod.rows[s]:
                total = 0.0
                for t, p, _r, _acc in row:
                    total += p * values[t]
                if total > best:
                    best = total
            if best - values[s] > residual:
                residual = best - values[s]
            values[s] = best
        if residual < tol:
            break
    return VerificationResult(values[prod.initial], residual, "reach")


class _NonEpsView:
    """Graph view of an explicit product with reset actions removed."""

    def __init__(self, prod: ExplicitProduct):
        self.prod = prod
        self.n_states = prod.n_states

    def actions(self, sid):
        return [a for a in self.prod.actions(sid) if not self.prod.is_eps(sid, a)]

    def successors(self, sid, a):
        return self.prod.successors(sid, a)


def accepting_mec_states(prod: ExplicitProduct) -> set:
    """Union of states of MECs (reset actions removed) containing an accepting edge."""
    dec = mec_decomposition(_NonEpsView(prod))
    good = set()
    for states, actions in dec.components:
        accepting = any(acc
                        for s in states
                        for a in actions[s]
                        for _t, p, _r, acc in prod.rows[s][a]
                        if p > 0.0 and acc)
        if accepting:
            good.update(states)
    return good


def optimal_satisfaction_probability(mdp, automaton, tol: float = DEFAULT_TOL,
                                     cap: int = 10**6) -> VerificationResult:
    """Optimal probability of producing an accepting run of the product."""
    prod = automaton if isinstance(automaton, ExplicitProduct) \
        else build_explicit_product(mdp, automaton, cap=cap)
    result = max_reach_probability(prod, accepting_mec_states(prod), tol)
    return VerificationResult(result.value, result.residual, "optimal_sat")


def policy_satisfaction_probability(prod: ExplicitProduct, policy: ProductPolicy,
                                    tol: float = DEFAULT_TOL) -> VerificationResult:
    """Probability that the policy's run is accepting (and resets finitely often)."""
    states, rows, eps_flag = induced_chain(prod, policy)
    target = set()
    for members in chain_bsccs(states, rows):
        has_acc = any(acc for s in members for _t, _p, _r, acc in rows[s])
        has_eps = any(eps_flag[s] for s in members)
        if has_acc and not has_eps:
            target.update(members)
    values, residual = chain_reach_probability(states, rows, target, tol)
    return VerificationResult(values[prod.initial], residual, "policy_sat")


def policy_average_reward(prod: ExplicitProduct, policy: ProductPolicy,
                          tol: float = DEFAULT_TOL,
                          reward: str = "machine") -> VerificationResult:
    """Long-run average reward of the policy from the initial state.

    ``reward="machine"`` evaluates the machine reward; ``reward="external"``
    evaluates the external reward matrix on MDP edges (0 on resets);
    ``reward="accepting"`` counts accepting edges (long-run visit rate).
    """
    states, rows, eps_flag = induced_chain(prod, policy)

    def edge_reward(s, t, r, acc):
        if reward == "machine":
            return r
        if reward == "accepting":
            return 1.0 if acc else 0.0
        if eps_flag[s]:
            return 0.0
        return prod.external_reward(s, t)

    total = 0.0
    residual = 0.0
    for members in chain_bsccs(states, rows):
        pi = stationary_distribution(members, rows, tol)
        gain = sum(pi[s] * p * edge_reward(s, t, r, acc)
                   for s in members for t, p, r, acc in rows[s])
        if gain == 0.0:
            continue
        values, res = chain_reach_probability(states, rows, set(members), tol)
        residual = max(residual, res)
        total += values[prod.initial] * gain
    return VerificationResult(total, residual, "policy_gain")


def beta_limit_external_gain(prod: ExplicitProduct, policy: ProductPolicy,
                             tol: float = DEFAULT_TOL) -> float:
    """External average reward of the policy in the vanishing-flip limit.

    Models the decaying-flip transformation of a learned positional policy:
    the chain first settles in a recurrent class of the actual product chain
    (flips still positive), and within that class the bit is then pinned to
    the quiet layer. Quiet-layer recurrent classes are weighted by the
    pre-limit occupancy of their entry states; resets pay no external reward.
    """
    machine = prod.machine
    if getattr(machine, "external_reward", None) is None:
        raise ValueError("beta-limit gain requires a lexicographic product")
    sid_of = {state: i for i, state in enumerate(prod.states)}
    states, rows, _eps = induced_chain(prod, policy)

    def quiet_row(sid):
        """Policy step from a quiet-layer state with the flip suppressed."""
        s, q, b = prod.states[sid]
        a = policy.action(prod, sid)
        acts = prod.action_lists[sid]
        if a < 0:
            return ((sid, 1.0, 0.0, False),)
        act = acts[a]
        if act[0] == "e":
            q2, b2, _p, _r, _acc = machine.epsilon_outcome(act[1], q, b)
            return ((sid_of[(s, q2, b2)], 1.0, 0.0, False),)
        _, mdp_a, q_succ = act
        letter = prod.letters[s]
        out = []
        for t, p in prod.mdp.row(s, mdp_a):
            if p == 0.0:
                continue
            q2, b2, _pb, _r, _acc = machine.letter_outcomes(
                q, b, letter, q_succ, s, t, 0.0)[0]
            out.append((sid_of[(t, q2, b2)], p, machine.external_reward[s][t], False))
        return tuple(out)

    def external_row(sid):
        s = prod.states[sid][0]
        a = policy.action(prod, sid)
        is_eps = a >= 0 and prod.is_eps(sid, a)
        return tuple((t, p, 0.0 if is_eps else machine.external_reward[s][prod.states[t][0]],
                      False) for t, p, _r, _acc in rows[sid])

    total = 0.0
    for members in chain_bsccs(states, rows):
        pi = stationary_distribution(members, rows, tol)
        quiet = [sid for sid in members if prod.states[sid][2] == 0]
        if not quiet:
            ext = {sid: external_row(sid) for sid in members}
            gain = sum(pi[s] * p * r for s in members for _t, p, r, _ in ext[s])
        else:
            sub_rows = {}
            frontier = list(quiet)
            while frontier:
                sid = frontier.pop()
                if sid in sub_rows:
                    continue
                sub_rows[sid] = quiet_row(sid)
                for t, p, _r, _acc in sub_rows[sid]:
                    if t not in sub_rows:
                        frontier.append(t)
            sub_states = sorted(sub_rows)
            weight = sum(pi[s] for s in quiet)
            gain = 0.0
            for sub in chain_bsccs(sub_states, sub_rows):
                sub_pi = stationary_distribution(sub, sub_rows, tol)
                sub_gain = sum(sub_pi[s] * p * r
                               for s in sub for _t, p, r, _ in sub_rows[s])
                reach, _ = chain_reach_probability(sub_states, sub_rows, set(sub), tol)
                entry = sum(pi[s] * reach[s] for s in quiet) / weight
                gain += entry * sub_gain
        values, _res = chain_reach_probability(states, rows, set(members), tol)
        total += values[prod.initial] * gain
    return total


# -- brute-force policy enumeration -------------------------------------------

def enumerate_positional_policies(prod: ExplicitProduct, max_policies: int = 10**6):
    """All pure positional policies as ProductPolicy, gated to tiny products."""
    if prod.n_states > 12:
        raise ValueError("policy enumeration is gated to products with <= 12 states")
    counts = [max(1, len(prod.action_lists[s])) for s in range(prod.n_states)]
    total = 1
    for c in counts:
        total *= c
    if total > max_policies:
        raise ValueError(f"{total} policies exceed enumeration cap {max_policies}")
    for combo in itertools.product(*[range(c) for c in counts]):
        yield ProductPolicy({prod.states[s]: combo[s] for s in range(prod.n_states)})


def optimal_gain_rvi(prod: ExplicitProduct, tol: float = DEFAULT_TOL,
                     max_iter: int = 10**6) -> float:
    """Optimal average reward via relative value iteration.

    Valid for products whose optimal gain is state-independent (communicating
    or weakly communicating). Uses the aperiodicity transformation with mixing
    factor 1/2, which halves the gain of the transformed model; the returned
    value is rescaled back.
    """
    n = prod.n_states
    tau = 0.5
    h = [0.0] * n
    gain = 0.0
    for _ in range(max_iter):
        upd = []
        for s in range(n):
            best = None
            for row in prod.rows[s]:
                total = (1.0 - tau) * h[s]
                for t, p, r, _acc in row:
                    total += tau * p * (r + h[t])
                if best is None or total > best:
                    best = total
            upd.append(h[s] if best is None else best)
        diff = [u - x for u, x in zip(upd, h)]
        span = max(diff) - min(diff)
        gain = (max(diff) + min(diff)) / (2.0 * tau)
        if span < tol * tau:
            return gain
        ref = upd[prod.initial]
        h = [u - ref for u in upd]
    return gain
