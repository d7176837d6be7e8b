import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omega_avg_rl.automata import (BuchiAutomaton, automaton_to_hoa,
                                   classify_specification, coaccessible_states,
                                   containment_counterexample,
                                   det_language_containment, parse_automaton)
from omega_avg_rl.bench import (fg_a_automaton, gf_a_automaton,
                                multichain_automaton)
from omega_avg_rl.errors import NotDeterministic, ParseError, UnsupportedFeature

from .oracles import lasso_accepted, oracle_counterexample

A = frozenset({"a"})
EMPTY = frozenset()

FG_A_HOA = """\
HOA: v1
name: "FGa"
States: 2
Start: 0
AP: 1 "a"
acc-name: Buchi
Acceptance: 1 Inf(0)
--BODY--
State: 0
[t] 0
[0] 1
State: 1
[0] 1 {0}
--END--
"""


def f_a_automaton():
    """Deterministic automaton for "eventually a"."""
    return BuchiAutomaton.build(
        ["a"], 2, 0,
        {(0, EMPTY): [0], (0, A): [1], (1, A): [1], (1, EMPTY): [1]},
        {(1, A, 1), (1, EMPTY, 1)})


def a_or_f_b_automaton():
    """Deterministic automaton for "a or eventually b"."""
    from omega_avg_rl.automata import all_letters
    aps = ["a", "b"]
    trans, acc = {}, set()
    for letter in all_letters(aps):
        trans[(0, letter)] = [1] if ("a" in letter or "b" in letter) else [2]
        trans[(1, letter)] = [1]
        trans[(2, letter)] = [1] if "b" in letter else [2]
        acc.add((1, letter, 1))
    return BuchiAutomaton.build(aps, 3, 0, trans, acc)


def ga_or_gfb_automaton():
    """Deterministic automaton for "always a, or infinitely often b"."""
    from omega_avg_rl.automata import all_letters
    aps = ["a", "b"]
    trans, acc = {}, set()
    for letter in all_letters(aps):
        has_a, has_b = "a" in letter, "b" in letter
        trans[(0, letter)] = [0] if has_a else ([2] if has_b else [1])
        trans[(1, letter)] = [2] if has_b else [1]
        trans[(2, letter)] = [2] if has_b else [1]
        if has_a:
            acc.add((0, letter, 0))
        if has_b:
            if not has_a:
                acc.add((0, letter, 2))
            acc.add((1, letter, 2))
            acc.add((2, letter, 2))
    return BuchiAutomaton.build(aps, 3, 0, trans, acc)


def random_det_automaton(rng: np.random.Generator, max_states: int = 5):
    n = int(rng.integers(1, max_states + 1))
    trans, acc = {}, set()
    for q in range(n):
        for letter in (EMPTY, A):
            if rng.random() < 0.9:
                succ = int(rng.integers(0, n))
                trans[(q, letter)] = [succ]
                if rng.random() < 0.3:
                    acc.add((q, letter, succ))
    return BuchiAutomaton.build(["a"], n, 0, trans, acc)


class TestParser:
    def test_fg_a_document(self):
        aut = parse_automaton(FG_A_HOA)
        assert aut.n_states == 2
        assert aut.delta(0, A) == (0, 1)
        assert aut.delta(0, EMPTY) == (0,)
        assert aut.delta(1, EMPTY) == ()
        assert aut.is_accepting_edge(1, A, 1)
        assert not aut.deterministic

    def test_one_state_all_accepting(self):
        text = FG_A_HOA.replace("States: 2", "States: 1").replace(
            "State: 0\n[t] 0\n[0] 1\nState: 1\n[0] 1 {0}", "State: 0\n[t] 0 {0}")
        aut = parse_automaton(text)
        assert aut.n_states == 1
        assert aut.is_accepting_edge(0, A, 0)
        assert aut.is_accepting_edge(0, EMPTY, 0)

    def test_parity_rejected(self):
        text = FG_A_HOA.replace("acc-name: Buchi", "acc-name: parity min odd 3")
        with pytest.raises(UnsupportedFeature, match="parity"):
            parse_automaton(text)

    def test_generalized_buchi_rejected(self):
        text = FG_A_HOA.replace("Acceptance: 1 Inf(0)", "Acceptance: 2 Inf(0)&Inf(1)")
        with pytest.raises(UnsupportedFeature):
            parse_automaton(text)

    def test_state_based_marks_rejected(self):
        text = FG_A_HOA.replace("State: 1", "State: 1 {0}")
        with pytest.raises(UnsupportedFeature, match="state-based"):
            parse_automaton(text)

    def test_bad_label_reports_line(self):
        text = FG_A_HOA.replace("[0] 1\n", "[7] 1\n")
        with pytest.raises(ParseError, match="undeclared AP"):
            parse_automaton(text)

    def test_unknown_header_rejected(self):
        with pytest.raises(ParseError, match="unsupported header"):
            parse_automaton(FG_A_HOA.replace('name: "FGa"', "Alias: @x 0"))

    def test_round_trip(self):
        for aut in (fg_a_automaton(), multichain_automaton(), gf_a_automaton()):
            back = parse_automaton(automaton_to_hoa(aut))
            assert back.transitions == aut.transitions
            assert back.accepting == aut.accepting
            assert back.initial == aut.initial


class TestCoaccessible:
    def test_rejecting_sink_excluded(self):
        aut = BuchiAutomaton.build(
            ["a"], 2, 0,
            {(0, A): [0], (0, EMPTY): [1], (1, EMPTY): [1], (1, A): [1]},
            {(0, A, 0)})
        assert coaccessible_states(aut) == frozenset({0})

    def test_multichain_all_coaccessible(self):
        aut = multichain_automaton()
        assert coaccessible_states(aut) == frozenset({0, 1, 2})

    def test_no_accepting_transitions_empty(self):
        aut = BuchiAutomaton.build(["a"], 1, 0, {(0, A): [0], (0, EMPTY): [0]}, set())
        assert coaccessible_states(aut) == frozenset()


class TestContainment:
    def test_reflexive(self):
        aut = f_a_automaton()
        for q in range(aut.n_states):
            assert det_language_containment(aut, q, q)

    def test_f_a_waiting_contained_in_sink(self):
        aut = f_a_automaton()
        # Confirmed against the lasso oracle: L(0) = "eventually a" is inside
        # L(1) = "everything"; the converse fails (witness: empty-letter loop).
        assert oracle_counterexample(aut, 0, 1) is None
        assert det_language_containment(aut, 0, 1)
        witness = oracle_counterexample(aut, 1, 0, max_cycle=4)
        assert witness is not None
        assert not det_language_containment(aut, 1, 0)

    def test_counterexample_is_a_real_witness(self):
        aut = f_a_automaton()
        prefix, cycle = containment_counterexample(aut, 1, 0)
        assert lasso_accepted(aut, 1, prefix, cycle)
        assert not lasso_accepted(aut, 0, prefix, cycle)

    def test_nondeterministic_rejected(self):
        with pytest.raises(NotDeterministic):
            det_language_containment(fg_a_automaton(), 0, 1)

    @given(st.integers(0, 10**6))
    @settings(max_examples=80, deadline=None)
    def test_matches_lasso_oracle(self, seed):
        rng = np.random.default_rng(seed)
        aut = random_det_automaton(rng)
        p = int(rng.integers(0, aut.n_states))
        q = int(rng.integers(0, aut.n_states))
        witness = containment_counterexample(aut, p, q)
        oracle = oracle_counterexample(aut, p, q)
        if witness is None:
            assert oracle is None
        else:
            prefix, cycle = witness
            assert lasso_accepted(aut, p, prefix, cycle)
            assert not lasso_accepted(aut, q, prefix, cycle)

    @given(st.integers(0, 10**6))
    @settings(max_examples=40, deadline=None)
    def test_exhaustive_agreement_on_tiny_automata(self, seed):
        # Full structural bound 2|Q|^2 = 8 is enumerable at |Q| <= 2.
        rng = np.random.default_rng(seed)
        aut = random_det_automaton(rng, max_states=2)
        bound = 2 * aut.n_states * aut.n_states
        for p in range(aut.n_states):
            for q in range(aut.n_states):
                got = det_language_containment(aut, p, q)
                assert got == (oracle_counterexample(aut, p, q, max_cycle=bound) is None)

    @given(st.integers(0, 10**6))
    @settings(max_examples=40, deadline=None)
    def test_preorder_transitive(self, seed):
        rng = np.random.default_rng(seed)
        aut = random_det_automaton(rng, max_states=6)
        n = aut.n_states
        contained = {(p, q): det_language_containment(aut, p, q)
                     for p in range(n) for q in range(n)}
        for p in range(n):
            assert contained[(p, p)]
            for q in range(n):
                for r in range(n):
                    if contained[(p, q)] and contained[(q, r)]:
                        assert contained[(p, r)]


class TestClassification:
    def test_f_a_is_absolute_liveness_not_stable(self):
        spec = classify_specification(f_a_automaton())
        assert spec.absolute_liveness and not spec.stable and not spec.fairness

    def test_a_or_f_b_not_absolute_liveness(self):
        spec = classify_specification(a_or_f_b_automaton())
        assert not spec.absolute_liveness

    def test_gf_a_is_fairness(self):
        for aut in (gf_a_automaton(two_state=False), gf_a_automaton(two_state=True)):
            spec = classify_specification(aut)
            assert spec.absolute_liveness and spec.stable and spec.fairness

    def test_ga_or_gfb_is_stable_only(self):
        spec = classify_specification(ga_or_gfb_automaton())
        assert spec.stable and not spec.absolute_liveness and not spec.fairness

    def test_fairness_means_language_equivalent_states(self):
        for aut in (gf_a_automaton(two_state=True),):
            assert classify_specification(aut).fairness
            reachable = sorted(aut.reachable_states())
            for p in reachable:
                for q in reachable:
                    assert det_language_containment(aut, p, q)

    def test_requires_deterministic(self):
        with pytest.raises(NotDeterministic):
            classify_specification(multichain_automaton())
