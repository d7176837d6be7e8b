import numpy as np
import pytest

from omega_avg_rl.mdp import validate_mdp


def random_mdp_raw(rng: np.random.Generator, max_states: int = 6,
                   max_actions: int = 3, n_aps: int = 1) -> dict:
    n = int(rng.integers(1, max_states + 1))
    aps = [f"p{i}" for i in range(n_aps)]
    labels = [[ap for ap in aps if rng.random() < 0.5] for _ in range(n)]
    transitions = []
    for s in range(n):
        for a in range(int(rng.integers(1, max_actions + 1))):
            k = int(rng.integers(1, min(n, 3) + 1))
            succs = sorted(rng.choice(n, size=k, replace=False).tolist())
            weights = rng.integers(1, 10, size=k).astype(float)
            probs = weights / weights.sum()
            transitions.append({"from": s, "action": f"a{a}",
                                "to": [[int(t), float(p)] for t, p in zip(succs, probs)]})
    return {"states": n, "initial": 0, "aps": aps, "labels": labels,
            "transitions": transitions}


def random_mdp(rng, **kw):
    return validate_mdp(random_mdp_raw(rng, **kw))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
