"""Nondeterministic Büchi automata with transition-based acceptance.

Letters are canonicalized to subsets of the declared atomic propositions
(``frozenset`` of names). The HOA parser accepts a strict subset of the
format: Büchi acceptance (``acc-name: Buchi`` / ``Acceptance: 1 Inf(0)``),
transition-based marks, explicit Boolean labels over declared APs, a single
initial state. Everything else is rejected loudly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

from .errors import NotDeterministic, ParseError, UnsupportedFeature
from .mdp import strongly_connected_components


def all_letters(aps) -> list:
    return [frozenset(c) for r in range(len(aps) + 1) for c in itertools.combinations(aps, r)]


@dataclass(frozen=True)
class BuchiAutomaton:
    atomic_props: tuple[str, ...]
    n_states: int
    initial: int
    transitions: dict        # (state, letter) -> (succ, ...)
    accepting: frozenset     # (state, letter, succ) triples

    @staticmethod
    def build(aps, n_states, initial, transitions, accepting) -> "BuchiAutomaton":
        aps = tuple(aps)
        trans = {}
        for (q, letter), succs in transitions.items():
            letter = frozenset(letter)
            if not (0 <= q < n_states) or not letter <= set(aps):
                raise ValueError(f"bad transition source ({q}, {sorted(letter)})")
            succs = tuple(sorted(set(succs)))
            if any(not (0 <= t < n_states) for t in succs):
                raise ValueError(f"bad successors {succs}")
            if succs:
                trans[(q, letter)] = succs
        acc = frozenset((q, frozenset(letter), t) for q, letter, t in accepting)
        for q, letter, t in acc:
            if t not in trans.get((q, letter), ()):
                raise ValueError(f"accepting triple ({q}, {sorted(letter)}, {t}) is not a transition")
        if not (0 <= initial < n_states):
            raise ValueError("bad initial state")
        return BuchiAutomaton(aps, n_states, initial, trans, acc)

    def delta(self, state: int, letter) -> tuple:
        return self.transitions.get((state, letter), ())

    def is_accepting_edge(self, state: int, letter, succ: int) -> bool:
        return (state, letter, succ) in self.accepting

    @cached_property
    def deterministic(self) -> bool:
        return all(len(s) <= 1 for s in self.transitions.values())

    @cached_property
    def letters(self) -> tuple:
        return tuple(all_letters(self.atomic_props))

    def reachable_states(self) -> frozenset:
        seen = {self.initial}
        frontier = [self.initial]
        while frontier:
            q = frontier.pop()
            for letter in self.letters:
                for t in self.delta(q, letter):
                    if t not in seen:
                        seen.add(t)
                        frontier.append(t)
        return frozenset(seen)


@dataclass(frozen=True)
class SpecClass:
    absolute_liveness: bool
    stable: bool

    @property
    def fairness(self) -> bool:
        return self.absolute_liveness and self.stable

    def as_dict(self) -> dict:
        return {"absolute_liveness": self.absolute_liveness,
                "stable": self.stable, "fairness": self.fairness}


# --- HOA subset parsing ----------------------------------------------------

_IGNORED_HEADERS = {"name", "tool", "properties"}


def _parse_label_tokens(text, lineno):
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "!&|()tf":
            tokens.append(ch)
            i += 1
        elif ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(int(text[i:j]))
            i = j
        else:
            raise ParseError(lineno, f"bad character {ch!r} in label")
    return tokens


def _parse_label_expr(tokens, lineno):
    """Recursive-descent over ! & | ( ) t f AP-index, loosest binding first."""
    pos = [0]

    def peek():
        return tokens[pos[0]] if pos[0] < len(tokens) else None

    def take():
        tok = peek()
        pos[0] += 1
        return tok

    def parse_or():
        node = parse_and()
        while peek() == "|":
            take()
            node = ("or", node, parse_and())
        return node

    def parse_and():
        node = parse_unary()
        while peek() == "&":
            take()
            node = ("and", node, parse_unary())
        return node

    def parse_unary():
        tok = take()
        if tok == "!":
            return ("not", parse_unary())
        if tok == "(":
            node = parse_or()
            if take() != ")":
                raise ParseError(lineno, "unbalanced parentheses in label")
            return node
        if tok == "t":
            return ("true",)
        if tok == "f":
            return ("false",)
        if isinstance(tok, int):
            return ("ap", tok)
        raise ParseError(lineno, "malformed label expression")

    node = parse_or()
    if pos[0] != len(tokens):
        raise ParseError(lineno, "trailing tokens in label expression")
    return node


def _eval_label(node, letter_bits):
    kind = node[0]
    if kind == "true":
        return True
    if kind == "false":
        return False
    if kind == "ap":
        return node[1] in letter_bits
    if kind == "not":
        return not _eval_label(node[1], letter_bits)
    if kind == "and":
        return _eval_label(node[1], letter_bits) and _eval_label(node[2], letter_bits)
    return _eval_label(node[1], letter_bits) or _eval_label(node[2], letter_bits)


def _expand_label(expr_text, aps, lineno):
    node = _parse_label_expr(_parse_label_tokens(expr_text, lineno), lineno)
    for tok in _parse_label_tokens(expr_text, lineno):
        if isinstance(tok, int) and tok >= len(aps):
            raise ParseError(lineno, f"label references undeclared AP {tok}")
    out = []
    for bits in itertools.product((False, True), repeat=len(aps)):
        on = {i for i, b in enumerate(bits) if b}
        if _eval_label(node, on):
            out.append(frozenset(aps[i] for i in on))
    return out


def _parse_quoted_list(rest, lineno):
    names = []
    i = 0
    while i < len(rest):
        if rest[i].isspace():
            i += 1
            continue
        if rest[i] != '"':
            raise ParseError(lineno, "expected quoted AP name")
        j = rest.find('"', i + 1)
        if j == -1:
            raise ParseError(lineno, "unterminated AP name")
        names.append(rest[i + 1:j])
        i = j + 1
    return names


def parse_automaton(text: str) -> BuchiAutomaton:
    """Parse an HOA-subset document into a validated automaton."""
    lines = text.splitlines()
    headers = {}
    body_start = None
    for k, line in enumerate(lines):
        stripped = line.strip()
        if stripped == "--BODY--":
            body_start = k + 1
            break
        if not stripped or stripped.startswith("/*"):
            continue
        if ":" not in stripped:
            raise ParseError(k + 1, f"expected 'key: value' header, got {stripped!r}")
        key, _, value = stripped.partition(":")
        key, value = key.strip(), value.strip()
        if key in _IGNORED_HEADERS:
            continue
        if key in headers:
            raise ParseError(k + 1, f"duplicate header {key!r}")
        headers[key] = (value, k + 1)
    if body_start is None:
        raise ParseError(len(lines), "missing --BODY--")

    for required in ("HOA", "States", "Start", "AP", "acc-name", "Acceptance"):
        if required not in headers:
            raise ParseError(1, f"missing required header {required!r}")
    for key in headers:
        if key not in {"HOA", "States", "Start", "AP", "acc-name", "Acceptance"}:
            raise ParseError(headers[key][1], f"unsupported header {key!r}")

    if headers["HOA"][0] != "v1":
        raise ParseError(headers["HOA"][1], "only HOA v1 is supported")
    acc_name = headers["acc-name"][0]
    if acc_name != "Buchi":
        raise UnsupportedFeature(f"acceptance {acc_name!r} (only Buchi is supported)")
    if headers["Acceptance"][0].split() != ["1", "Inf(0)"]:
        raise UnsupportedFeature(f"acceptance condition {headers['Acceptance'][0]!r}")

    try:
        n_states = int(headers["States"][0])
    except ValueError:
        raise ParseError(headers["States"][1], "States must be an integer") from None
    start_text, start_line = headers["Start"]
    if "&" in start_text or len(start_text.split()) != 1:
        raise UnsupportedFeature("multiple or conjunctive start states")
    try:
        initial = int(start_text)
    except ValueError:
        raise ParseError(start_line, "Start must be a state index") from None

    ap_text, ap_line = headers["AP"]
    parts = ap_text.split(None, 1)
    try:
        ap_count = int(parts[0])
    except (ValueError, IndexError):
        raise ParseError(ap_line, "AP header must start with a count") from None
    aps = _parse_quoted_list(parts[1] if len(parts) > 1 else "", ap_line)
    if len(aps) != ap_count:
        raise ParseError(ap_line, f"AP count {ap_count} does not match {len(aps)} names")

    transitions = {}
    accepting = set()
    current = None
    ended = False
    for k in range(body_start, len(lines)):
        lineno = k + 1
        stripped = lines[k].strip()
        if not stripped:
            continue
        if ended:
            raise ParseError(lineno, "content after --END--")
        if stripped == "--END--":
            ended = True
            continue
        if stripped.startswith("State:"):
            rest = stripped[len("State:"):].strip()
            if rest.startswith("["):
                raise UnsupportedFeature("state labels (implicit transition labels)")
            if "{" in rest:
                raise UnsupportedFeature("state-based acceptance marks")
            fields = rest.split(None, 1)
            try:
                current = int(fields[0])
            except (ValueError, IndexError):
                raise ParseError(lineno, "bad state index") from None
            if not (0 <= current < n_states):
                raise ParseError(lineno, f"state {current} out of range")
            if len(fields) > 1 and not fields[1].startswith('"'):
                raise ParseError(lineno, "unexpected tokens after state index")
            continue
        if not stripped.startswith("["):
            raise ParseError(lineno, f"expected labeled transition, got {stripped!r}")
        if current is None:
            raise ParseError(lineno, "transition before any State: section")
        close = stripped.find("]")
        if close == -1:
            raise ParseError(lineno, "unterminated label")
        label = stripped[1:close]
        rest = stripped[close + 1:].strip()
        marks = set()
        if "{" in rest:
            rest, _, mark_text = rest.partition("{")
            mark_text = mark_text.strip()
            if not mark_text.endswith("}"):
                raise ParseError(lineno, "unterminated acceptance signature")
            for tok in mark_text[:-1].split():
                try:
                    marks.add(int(tok))
                except ValueError:
                    raise ParseError(lineno, "bad acceptance set") from None
            if marks - {0}:
                raise UnsupportedFeature(f"acceptance sets {sorted(marks)} beyond Inf(0)")
            rest = rest.strip()
        if "&" in rest or len(rest.split()) != 1:
            raise UnsupportedFeature("conjunctive successors (alternation)")
        try:
            succ = int(rest)
        except ValueError:
            raise ParseError(lineno, f"bad successor {rest!r}") from None
        if not (0 <= succ < n_states):
            raise ParseError(lineno, f"successor {succ} out of range")
        for letter in _expand_label(label, aps, lineno):
            transitions.setdefault((current, letter), set()).add(succ)
            if 0 in marks:
                accepting.add((current, letter, succ))
    if not ended:
        raise ParseError(len(lines), "missing --END--")

    return BuchiAutomaton.build(aps, n_states, initial, transitions, accepting)


def automaton_to_hoa(aut: BuchiAutomaton, name: str | None = None) -> str:
    """Emit the automaton back as an HOA-subset document (minterm labels)."""
    def letter_label(letter):
        if not aut.atomic_props:
            return "t"
        return "&".join(f"{i}" if ap in letter else f"!{i}"
                        for i, ap in enumerate(aut.atomic_props))

    out = ["HOA: v1"]
    if name:
        out.append(f'name: "{name}"')
    out.append(f"States: {aut.n_states}")
    out.append(f"Start: {aut.initial}")
    if aut.atomic_props:
        out.append(f"AP: {len(aut.atomic_props)} "
                   + " ".join(f'"{a}"' for a in aut.atomic_props))
    else:
        out.append("AP: 0")
    out.append("acc-name: Buchi")
    out.append("Acceptance: 1 Inf(0)")
    out.append("--BODY--")
    for q in range(aut.n_states):
        out.append(f"State: {q}")
        for letter in aut.letters:
            for t in aut.delta(q, letter):
                mark = " {0}" if aut.is_accepting_edge(q, letter, t) else ""
                out.append(f"[{letter_label(letter)}] {t}{mark}")
    out.append("--END--")
    return "\n".join(out) + "\n"


# --- coaccessibility and specification classes -----------------------------

def coaccessible_states(aut: BuchiAutomaton) -> frozenset:
    """States from which some accepting transition is reachable."""
    sources = {q for q, _, _ in aut.accepting}
    reverse = {}
    for (q, _letter), succs in aut.transitions.items():
        for t in succs:
            reverse.setdefault(t, set()).add(q)
    seen = set(sources)
    frontier = list(sources)
    while frontier:
        q = frontier.pop()
        for prev in reverse.get(q, ()):
            if prev not in seen:
                seen.add(prev)
                frontier.append(prev)
    return frozenset(seen)


_DEAD = -1


def _pair_graph(aut: BuchiAutomaton, p: int, q: int):
    """Reachable joint-run graph; the follower side may be dead (-1)."""
    start = (p, q)
    nodes = {start: 0}
    order = [start]
    edges = []  # (u_id, letter, v_id, lead_acc, follow_acc)
    frontier = [start]
    while frontier:
        x, y = node = frontier.pop()
        u_id = nodes[node]
        for letter in aut.letters:
            lead = aut.delta(x, letter)
            if not lead:
                continue
            x2 = lead[0]
            lead_acc = aut.is_accepting_edge(x, letter, x2)
            if y == _DEAD:
                y2, follow_acc = _DEAD, False
            else:
                follow = aut.delta(y, letter)
                if follow:
                    y2 = follow[0]
                    follow_acc = aut.is_accepting_edge(y, letter, y2)
                else:
                    y2, follow_acc = _DEAD, False
            nxt = (x2, y2)
            if nxt not in nodes:
                nodes[nxt] = len(order)
                order.append(nxt)
                frontier.append(nxt)
            edges.append((u_id, letter, nodes[nxt], lead_acc, follow_acc))
    return nodes, order, edges


def containment_counterexample(aut: BuchiAutomaton, p: int, q: int):
    """A lasso word accepted from ``p`` but not from ``q``, or None.

    Works on deterministic automata only: non-acceptance from ``q`` means the
    follower run dies or sees accepting edges finitely often, so a
    counterexample exists iff the joint-run graph has a reachable cycle using
    an accepting leader edge and no accepting follower edge.
    """
    if not aut.deterministic:
        raise NotDeterministic("containment requires a deterministic automaton")
    if not (0 <= p < aut.n_states and 0 <= q < aut.n_states):
        raise ValueError("state index out of range")
    nodes, order, edges = _pair_graph(aut, p, q)
    n = len(order)

    quiet = [[] for _ in range(n)]  # adjacency without accepting follower edges
    for u, _letter, v, _la, fa in edges:
        if not fa:
            quiet[u].append(v)
    comp = [-1] * n
    for i, scc in enumerate(strongly_connected_components(n, quiet)):
        for v in scc:
            comp[v] = i

    for u, letter, v, lead_acc, follow_acc in edges:
        if follow_acc or not lead_acc or comp[u] != comp[v]:
            continue
        prefix = _shortest_edge_path(n, edges, 0, u, restrict=None)
        closing = _shortest_edge_path(n, [e for e in edges if not e[4]], v, u,
                                      restrict={w for w in range(n) if comp[w] == comp[u]})
        return tuple(prefix), (letter, *closing)
    return None


def _shortest_edge_path(n, edges, src, dst, restrict):
    adj = [[] for _ in range(n)]
    for u, letter, v, _la, _fa in edges:
        if restrict is None or (u in restrict and v in restrict):
            adj[u].append((v, letter))
    parent = {src: None}
    queue = [src]
    head = 0
    while head < len(queue):
        u = queue[head]
        head += 1
        if u == dst:
            break
        for v, letter in adj[u]:
            if v not in parent:
                parent[v] = (u, letter)
                queue.append(v)
    if dst not in parent:
        raise AssertionError("path expected by construction")
    path = []
    node = dst
    while parent[node] is not None:
        node, letter = parent[node]
        path.append(letter)
    path.reverse()
    return path


def det_language_containment(aut: BuchiAutomaton, p: int, q: int) -> bool:
    """True iff the language accepted from ``p`` is contained in that from ``q``."""
    return containment_counterexample(aut, p, q) is None


def classify_specification(aut: BuchiAutomaton) -> SpecClass:
    """Absolute-liveness / stable / fairness flags for a deterministic automaton.

    Absolute liveness holds iff every reachable state accepts at least the
    initial state's language; stability holds iff every reachable state's
    language is contained in the initial one's.
    """
    if not aut.deterministic:
        raise NotDeterministic("classification requires a deterministic automaton")
    reachable = sorted(aut.reachable_states())
    al = all(det_language_containment(aut, aut.initial, s) for s in reachable)
    st = all(det_language_containment(aut, s, aut.initial) for s in reachable)
    return SpecClass(absolute_liveness=al, stable=st)
