"""Reward machines over a Büchi automaton.

Two constructions are provided:

* :class:`ResetRewardMachine` adds an agent-selectable reset from every
  automaton state to the initial state with penalty ``c``; accepting
  transitions pay 1, all other letter transitions pay 0. Optional hard resets
  redirect transitions entering non-coaccessible states to the initial state
  with reward ``c``.
* :class:`LexicographicRewardMachine` runs two copies ("layers") of the
  automaton indexed by a bit. In the quiet layer (bit 0) the agent collects an
  external reward and the bit flips with probability ``beta`` per step; in the
  penalized layer (bit 1) every step pays ``c1`` on top of the external reward
  until an accepting transition returns the bit to 0. Resets ``eps1`` (machine
  state to initial, bit kept) and ``eps2`` (bit to 0, state kept; only from
  bit 1) pay ``c2``.

Machine states are ``(automaton state, bit)`` pairs; the bit is always 0 for
the reset machine. Outcome lists are ordered by (automaton successor is fixed
by the chosen action; bit outcome ascending), which is the canonical order
used by inverse-CDF sampling everywhere in this package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .automata import BuchiAutomaton, coaccessible_states
from .errors import (BadBeta, BadC1, BadC2, BadSchedule, IllegalEpsilon,
                     IllegalSuccessor, NonNegativeC)

EPS = "eps"
EPS1 = "eps1"
EPS2 = "eps2"

_SCHEDULE_PROBES = (0, 1, 2, 5, 10, 100, 10**3, 10**4, 10**6, 10**8, 10**10,
                    10**12, 10**15, 10**18)


@dataclass(frozen=True)
class ResetRewardMachine:
    base: BuchiAutomaton
    reset_reward: float
    hard_resets: bool = False
    non_coaccessible: frozenset = field(default_factory=frozenset)

    @property
    def initial(self):
        return (self.base.initial, 0)

    def epsilon_kinds(self, q: int, b: int) -> tuple:
        return (EPS,)

    def epsilon_outcome(self, kind: str, q: int, b: int):
        if kind != EPS:
            raise IllegalEpsilon(f"reset machine has no {kind!r} transition")
        return (self.base.initial, 0, 1.0, self.reset_reward, False)

    def letter_outcomes(self, q: int, b: int, letter, succ: int, s: int,
                        s2: int, beta: float) -> tuple:
        """Outcomes ((q', b', prob, reward, accepting), ...) of a letter step."""
        if succ not in self.base.delta(q, letter):
            raise IllegalSuccessor(f"{succ} not in delta({q}, {sorted(letter)})")
        if self.hard_resets and succ in self.non_coaccessible:
            return ((self.base.initial, 0, 1.0, self.reset_reward, False),)
        accepting = self.base.is_accepting_edge(q, letter, succ)
        return ((succ, 0, 1.0, 1.0 if accepting else 0.0, accepting),)


@dataclass(frozen=True)
class LexicographicRewardMachine:
    base: BuchiAutomaton
    beta: float
    c1: float
    c2: float
    external_reward: tuple          # dense (s, s') -> float matrix
    beta_schedule: Optional[Callable[[int], float]] = None

    @property
    def initial(self):
        return (self.base.initial, 0)

    def epsilon_kinds(self, q: int, b: int) -> tuple:
        kinds = []
        if q != self.base.initial:
            kinds.append(EPS1)
        if b == 1:
            kinds.append(EPS2)
        return tuple(kinds)

    def epsilon_outcome(self, kind: str, q: int, b: int):
        if kind == EPS1:
            if q == self.base.initial:
                raise IllegalEpsilon("eps1 is undefined from the initial state")
            return (self.base.initial, b, 1.0, self.c2, False)
        if kind == EPS2:
            if b != 1:
                raise IllegalEpsilon("eps2 is undefined when the bit is 0")
            return (q, 0, 1.0, self.c2, False)
        raise IllegalEpsilon(f"unknown epsilon kind {kind!r}")

    def letter_outcomes(self, q: int, b: int, letter, succ: int, s: int,
                        s2: int, beta: float) -> tuple:
        if succ not in self.base.delta(q, letter):
            raise IllegalSuccessor(f"{succ} not in delta({q}, {sorted(letter)})")
        accepting = self.base.is_accepting_edge(q, letter, succ)
        rho = self.external_reward[s][s2]
        if b == 0:
            return ((succ, 0, 1.0 - beta, rho, accepting),
                    (succ, 1, beta, rho, accepting))
        return ((succ, 0 if accepting else 1, 1.0, self.c1 + rho, accepting),)


def build_reset_machine(aut: BuchiAutomaton, c: float,
                        hard_resets: bool = False) -> ResetRewardMachine:
    if not c < 0:
        raise NonNegativeC(f"reset reward must be negative, got {c!r}")
    dead = frozenset(range(aut.n_states)) - coaccessible_states(aut)
    return ResetRewardMachine(aut, float(c), hard_resets, dead)


def build_lexicographic_machine(aut: BuchiAutomaton, rho, beta: float, c1: float,
                                c2: float, schedule=None) -> LexicographicRewardMachine:
    """``rho`` is a dense (mdp state, mdp successor) -> float reward matrix."""
    if not 0.0 < beta < 1.0:
        raise BadBeta(f"beta must lie in (0, 1), got {beta!r}")
    if not c2 < 0:
        raise BadC2(f"c2 must be negative, got {c2!r}")
    matrix = tuple(tuple(float(x) for x in row) for row in rho)
    values = [x for row in matrix for x in row]
    if not values:
        raise BadC1("external reward matrix is empty")
    if not c1 + max(values) < min(values):
        raise BadC1(f"need c1 + max(rho) < min(rho); got c1={c1!r}, "
                    f"max={max(values)!r}, min={min(values)!r}")
    if schedule is not None:
        _validate_schedule(schedule)
    return LexicographicRewardMachine(aut, float(beta), float(c1), float(c2),
                                      matrix, schedule)


def _validate_schedule(schedule):
    """Probe-based check: nonincreasing and vanishing by index 1e18."""
    values = []
    for i in _SCHEDULE_PROBES:
        v = float(schedule(i))
        if not 0.0 < v < 1.0:
            raise BadSchedule(f"schedule({i}) = {v!r} outside (0, 1)")
        values.append(v)
    for a, b in zip(values, values[1:]):
        if b > a:
            raise BadSchedule("schedule must be nonincreasing")
    if values[-1] > max(1e-9, 1e-6 * values[0]):
        raise BadSchedule("schedule must decay toward 0 "
                          f"(still {values[-1]!r} at index {_SCHEDULE_PROBES[-1]})")


def schedule_beta(machine, step_index: int) -> float:
    """Flip probability used at a training step (constant without a schedule)."""
    schedule = getattr(machine, "beta_schedule", None)
    if schedule is None:
        return machine.beta
    return float(schedule(step_index))


def machine_step(machine, state, input_, chosen_successor=None, mdp_edge=(0, 0),
                 stream=None, beta=None):
    """One machine transition; returns ((q', b'), reward).

    ``input_`` is a letter (set of APs) or an epsilon kind. The bit flip of
    the lexicographic machine consumes one uniform from ``stream``.
    """
    q, b = state
    if isinstance(input_, str):
        q2, b2, _p, reward, _acc = machine.epsilon_outcome(input_, q, b)
        return (q2, b2), reward
    letter = frozenset(input_)
    s, s2 = mdp_edge
    if beta is None:
        beta = getattr(machine, "beta", 0.0)
    outcomes = machine.letter_outcomes(q, b, letter, chosen_successor, s, s2, beta)
    if len(outcomes) == 1:
        q2, b2, _p, reward, _acc = outcomes[0]
        return (q2, b2), reward
    u = stream.next()
    acc = 0.0
    for q2, b2, p, reward, _acc in outcomes:
        acc += p
        if u < acc:
            return (q2, b2), reward
    q2, b2, _p, reward, _acc = outcomes[-1]
    return (q2, b2), reward


def machine_table(machine, n_mdp_states: int = 1) -> list:
    """Full transition/reward table (JSON-friendly) for golden tests."""
    aut = machine.base
    bits = (0,) if isinstance(machine, ResetRewardMachine) else (0, 1)
    beta = getattr(machine, "beta", 0.0)
    rows = []
    for q in range(aut.n_states):
        for b in bits:
            for letter in aut.letters:
                for succ in aut.delta(q, letter):
                    for s in range(n_mdp_states):
                        for s2 in range(n_mdp_states):
                            for q2, b2, p, r, acc in machine.letter_outcomes(
                                    q, b, letter, succ, s, s2, beta):
                                rows.append({"from": [q, b], "letter": sorted(letter),
                                             "edge": [s, s2], "to": [q2, b2],
                                             "prob": p, "reward": r, "accepting": acc})
            for kind in machine.epsilon_kinds(q, b):
                q2, b2, p, r, acc = machine.epsilon_outcome(kind, q, b)
                rows.append({"from": [q, b], "letter": kind, "edge": None,
                             "to": [q2, b2], "prob": p, "reward": r,
                             "accepting": acc})
    return rows
