"""Tabular learners on product environments.

`differential_q_train` is average-reward Q-learning in the continuing
setting: one uninterrupted trajectory, a scalar reward-rate estimate, and
per-step updates of the visited pair only. The two discounted baselines
consume wrapped environments: an absorbing-target reachability wrapper
(parameter ``zeta``) and a state-dependent-discount wrapper (``gamma_b``),
both trained by standard Q-learning with an optional episodic harness.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .errors import BadGamma, BadZeta
from .product import ProductEnv
from .verify import ProductPolicy

TARGET = -1  # absorbing target of the reachability wrapper


@dataclass
class LearnerConfig:
    alpha: float = 0.1
    eta: float = 0.1
    epsilon_explore: float = 0.1
    steps: int = 10**6
    seed: int = 0
    gamma: float = 0.99999          # baselines only
    zeta: float = 0.99              # reachability wrapper
    gamma_b: float = 0.99           # state-dependent discount wrapper
    episodic: bool = False          # baselines only
    episode_length: int = 10**6
    alpha_decay: float = 0.0        # alpha_t = alpha / (1 + t * alpha_decay)
    trace_points: int = 1000

    def validate(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha {self.alpha!r} outside (0, 1]")
        if self.eta <= 0.0:
            raise ValueError(f"eta {self.eta!r} must be positive")
        if not 0.0 <= self.epsilon_explore <= 1.0:
            raise ValueError(f"epsilon {self.epsilon_explore!r} outside [0, 1]")
        if not 0.0 < self.gamma < 1.0:
            raise BadGamma(f"gamma {self.gamma!r} outside (0, 1)")


@dataclass
class QTable:
    values: dict                    # product state tuple -> list of action values
    r_bar: float


@dataclass
class TrainResult:
    greedy: ProductPolicy
    r_bar_trace: list               # (step, r_bar) samples
    q_final: QTable
    wall_time_s: float
    steps_taken: int
    states_seen: int
    unvisited_states: int
    visit_ratio: float              # max/min visit count over seen state-actions
    accepting_steps: int = 0


def greedy_policy(q: QTable) -> ProductPolicy:
    """Argmax per state with ties broken toward the lowest action index."""
    choices = {}
    for state, row in q.values.items():
        best, best_value = 0, row[0] if row else 0.0
        for i in range(1, len(row)):
            if row[i] > best_value:
                best, best_value = i, row[i]
        choices[state] = best
    return ProductPolicy(choices)


def _argmax(row) -> int:
    best, best_value = 0, row[0]
    for i in range(1, len(row)):
        if row[i] > best_value:
            best, best_value = i, row[i]
    return best


def differential_q_train(env: ProductEnv, cfg: LearnerConfig) -> TrainResult:
    """Differential Q-learning over one continuing trajectory on ``env``."""
    cfg.validate()
    if cfg.episodic:
        raise ValueError("differential Q-learning runs in the continuing setting only")
    stream = env.stream
    q_rows = []
    visits = []

    def grow():
        while len(q_rows) < env.n_interned:
            sid = len(q_rows)
            n = len(env.actions(sid))
            q_rows.append([0.0] * n)
            visits.append([0] * n)

    grow()
    cur = env.initial_id
    r_bar = 0.0
    alpha0, eta, eps = cfg.alpha, cfg.eta, cfg.epsilon_explore
    decay = cfg.alpha_decay
    trace_every = max(1, cfg.steps // max(1, cfg.trace_points))
    trace = []
    accepting_steps = 0
    start = time.perf_counter()
    for t in range(cfg.steps):
        row = q_rows[cur]
        n = len(row)
        if n == 0:
            raise RuntimeError(f"no actions at product state {env.state_tuple(cur)}")
        if stream.next() < eps:
            a = int(stream.next() * n)
        else:
            a = _argmax(row)
        nxt, reward, acc = env.step(cur, a)
        if acc:
            accepting_steps += 1
        grow()
        nxt_row = q_rows[nxt]
        best_next = max(nxt_row) if nxt_row else 0.0
        alpha = alpha0 / (1.0 + t * decay) if decay else alpha0
        delta = reward - r_bar + best_next - row[a]
        row[a] += alpha * delta
        r_bar += eta * alpha * delta
        visits[cur][a] += 1
        if t % trace_every == 0:
            trace.append((t, r_bar))
        cur = nxt
    wall = time.perf_counter() - start

    q = QTable({env.state_tuple(sid): list(q_rows[sid]) for sid in range(len(q_rows))},
               r_bar)
    seen = [sid for sid in range(len(visits)) if any(visits[sid])]
    counts = [c for sid in seen for c in visits[sid] if c > 0]
    all_counts = [c for sid in seen for c in visits[sid]]
    ratio = (max(counts) / min(counts)) if counts and min(all_counts) > 0 else float("inf")
    return TrainResult(greedy=greedy_policy(q), r_bar_trace=trace, q_final=q,
                       wall_time_s=wall, steps_taken=cfg.steps,
                       states_seen=len(q_rows),
                       unvisited_states=len(q_rows) - len(seen),
                       visit_ratio=ratio if counts else float("inf"),
                       accepting_steps=accepting_steps)


# -- baseline wrappers ---------------------------------------------------------

class HahnReductionEnv:
    """Reachability wrapper: accepting edges absorb with probability 1 - zeta.

    Absorption pays reward 1 and ends the episode; every other reward is 0.
    Action-less base states (and the target) expose one no-op self-loop so the
    environment stays total in continuing mode.
    """

    def __init__(self, env: ProductEnv, zeta: float, gamma: float):
        if not 0.0 < zeta < 1.0:
            raise BadZeta(f"zeta must lie in (0, 1), got {zeta!r}")
        if not 0.0 < gamma < 1.0:
            raise BadGamma(f"gamma must lie in (0, 1), got {gamma!r}")
        self.env = env
        self.zeta = float(zeta)
        self.gamma = float(gamma)

    @property
    def initial_id(self):
        return self.env.initial_id

    def state_tuple(self, sid):
        return None if sid == TARGET else self.env.state_tuple(sid)

    def n_actions(self, sid) -> int:
        if sid == TARGET:
            return 1
        return max(1, len(self.env.actions(sid)))

    def base_n_actions(self, sid) -> int:
        return 0 if sid == TARGET else len(self.env.actions(sid))

    def step(self, sid, a):
        """Returns (next id, reward, discount, terminal)."""
        if sid == TARGET or not self.env.actions(sid):
            return sid, 0.0, self.gamma, False
        nxt, _r, acc = self.env.step(sid, a)
        if acc and self.env.stream.next() < 1.0 - self.zeta:
            return TARGET, 1.0, self.gamma, True
        return nxt, 0.0, self.gamma, False


class BozkurtReductionEnv:
    """State-dependent discount wrapper: accepting edges pay 1 - gamma_b and
    discount by gamma_b; all other edges pay 0 and discount by gamma."""

    def __init__(self, env: ProductEnv, gamma_b: float, gamma: float):
        if not 0.0 < gamma_b < 1.0 or not 0.0 < gamma < 1.0:
            raise BadGamma(f"discounts must lie in (0, 1), got {gamma_b!r}, {gamma!r}")
        self.env = env
        self.gamma_b = float(gamma_b)
        self.gamma = float(gamma)

    @property
    def initial_id(self):
        return self.env.initial_id

    def state_tuple(self, sid):
        return self.env.state_tuple(sid)

    def n_actions(self, sid) -> int:
        return max(1, len(self.env.actions(sid)))

    def base_n_actions(self, sid) -> int:
        return len(self.env.actions(sid))

    def step(self, sid, a):
        if not self.env.actions(sid):
            return sid, 0.0, self.gamma, False
        nxt, _r, acc = self.env.step(sid, a)
        if acc:
            return nxt, 1.0 - self.gamma_b, self.gamma_b, False
        return nxt, 0.0, self.gamma, False


def hahn_reduction_env(env: ProductEnv, zeta: float, gamma: float = 0.99999) -> HahnReductionEnv:
    return HahnReductionEnv(env, zeta, gamma)


def bozkurt_reduction_env(env: ProductEnv, gamma_b: float, gamma: float) -> BozkurtReductionEnv:
    return BozkurtReductionEnv(env, gamma_b, gamma)


def discounted_q_train(wrapped, cfg: LearnerConfig) -> TrainResult:
    """Standard Q-learning with the wrapper's per-step discount."""
    cfg.validate()
    stream = wrapped.env.stream
    q_rows = {}
    visits = {}

    def rows_for(sid):
        row = q_rows.get(sid)
        if row is None:
            row = [0.0] * wrapped.n_actions(sid)
            q_rows[sid] = row
            visits[sid] = [0] * len(row)
        return row

    cur = wrapped.initial_id
    episode_step = 0
    alpha0, eps = cfg.alpha, cfg.epsilon_explore
    decay = cfg.alpha_decay
    accepting_steps = 0
    start = time.perf_counter()
    for t in range(cfg.steps):
        row = rows_for(cur)
        n = len(row)
        if stream.next() < eps:
            a = int(stream.next() * n)
        else:
            a = _argmax(row)
        nxt, reward, discount, terminal = wrapped.step(cur, a)
        if reward > 0.0:
            accepting_steps += 1
        target = reward if terminal else reward + discount * max(rows_for(nxt))
        alpha = alpha0 / (1.0 + t * decay) if decay else alpha0
        row[a] += alpha * (target - row[a])
        visits[cur][a] += 1
        episode_step += 1
        if cfg.episodic and (terminal or episode_step >= cfg.episode_length):
            cur = wrapped.initial_id
            episode_step = 0
        else:
            cur = nxt
    wall = time.perf_counter() - start

    values = {}
    for sid, row in q_rows.items():
        state = wrapped.state_tuple(sid)
        if state is None:
            continue
        base_n = wrapped.base_n_actions(sid)
        values[state] = list(row[:base_n]) if base_n else []
    q = QTable(values, 0.0)
    greedy = ProductPolicy({state: (_argmax(row) if row else 0)
                            for state, row in values.items()})
    counts = [c for v in visits.values() for c in v if c > 0]
    seen = sum(1 for v in visits.values() if any(v))
    return TrainResult(greedy=greedy, r_bar_trace=[], q_final=q,
                       wall_time_s=wall, steps_taken=cfg.steps,
                       states_seen=len(q_rows), unvisited_states=len(q_rows) - seen,
                       visit_ratio=(max(counts) / min(counts)) if counts else float("inf"),
                       accepting_steps=accepting_steps)
