import numpy as np
import pytest

from repnet.model import AgentKnowledge, EpistemicState, SubjectiveTransitions, System

# Accept / refuse curves of the trading example, as (reputation, probability)
ACCEPT = [(0.1, 1 / 9), (0.3, 1 / 8), (0.5, 1 / 7), (0.7, 1 / 6), (0.9, 1 / 5)]
REFUSE = [(0.1, 1 / 5), (0.3, 1 / 6), (0.5, 1 / 7), (0.7, 1 / 8), (0.9, 1 / 9)]


def trading_system(impacts=None):
    """Two-agent trading model: s0 -(A trade_with_B)-> s1 -(B accept|refuse)-> s_a|s_r."""
    agents = ("A", "B")
    states = ("s0", "s1", "s_a", "s_r")
    actions = ("trade_with_A", "trade_with_B", "accept", "refuse", "wait", "wait_s")
    kinds = ("objective",) * 5 + ("subjective",)
    G, S, X = 2, 4, 6
    ot = np.zeros((G, S, X, S))
    defined = np.zeros((G, S, X), dtype=bool)

    def row(h, s, a, dest):
        ot[h, s, a] = 0.0
        for d, p in dest.items():
            ot[h, s, a, d] = p
        defined[h, s, a] = True

    A, B = 0, 1
    row(A, 0, 1, {1: 1.0})  # trade_with_B
    row(A, 0, 4, {0: 1.0})
    row(A, 1, 4, {1: 1.0})
    for s in (2, 3):
        row(A, s, 4, {0: 1.0})
    row(B, 0, 0, {1: 1.0})  # trade_with_A
    row(B, 0, 4, {0: 1.0})
    row(B, 1, 2, {2: 1.0})
    row(B, 1, 3, {3: 1.0})
    row(B, 1, 4, {1: 1.0})
    for s in (2, 3):
        row(B, s, 4, {s: 1.0})
    impact = np.zeros((G, G, S, X))
    for (g, h, s, a), v in (impacts or {}).items():
        impact[g, h, s, a] = v
    return System(agents, states, actions, kinds, impact, ot, defined, {4: 5})


def trading_knowledge(system, owner=0):
    st = SubjectiveTransitions({(0, 1, 5): {2: ACCEPT, 3: REFUSE}})
    return AgentKnowledge.initial(system, owner, st)


@pytest.fixture
def trading():
    sysm = trading_system()
    return sysm, trading_knowledge(sysm)


def random_model(rng, max_agents=3, max_states=4, max_actions=3, subjective=True):
    """Small random model plus one planning agent's knowledge and root epistemic state."""
    G = int(rng.integers(1, max_agents + 1))
    S = int(rng.integers(1, max_states + 1))
    n_obj = int(rng.integers(1, max_actions + 1))
    use_subj = subjective and n_obj < max_actions and rng.random() < 0.7
    kinds = ["objective"] * n_obj + (["subjective"] if use_subj else [])
    X = len(kinds)
    names = tuple(f"a{i}" for i in range(X))
    impact = rng.uniform(-1, 1, size=(G, G, S, X))
    impact[rng.random(impact.shape) < 0.3] = 0.0
    ot = np.zeros((G, S, X, S))
    defined = np.zeros((G, S, X), dtype=bool)
    for h in range(G):
        for s in range(S):
            for a in range(n_obj):
                if rng.random() < 0.85 or a == 0:
                    p = rng.dirichlet(np.ones(S))
                    p[rng.random(S) < 0.3] = 0.0
                    if p.sum() == 0:
                        p[rng.integers(S)] = 1.0
                    ot[h, s, a] = p / p.sum()
                    defined[h, s, a] = True
    counterparts = {}
    g = int(rng.integers(G))
    curves = {}
    if use_subj:
        sub = X - 1
        counterparts[int(rng.integers(n_obj))] = sub
        for h in range(G):
            for s in range(S):
                if rng.random() < 0.6:
                    dests = {}
                    for d in range(S):
                        if rng.random() < 0.7 or not dests:
                            k = int(rng.integers(1, 4))
                            xs = np.sort(rng.choice(np.linspace(-1, 1, 21), size=k, replace=False))
                            ps = rng.uniform(0.05, 1.0, size=k)
                            dests[d] = list(zip(xs.tolist(), ps.tolist()))
                    curves[(h, s, sub)] = dests
    system = System(tuple(f"g{i}" for i in range(G)), tuple(f"s{i}" for i in range(S)), names,
                    tuple(kinds), impact, ot, defined, counterparts)
    ad = rng.dirichlet(np.ones(X), size=(G, S))
    img = rng.uniform(-1, 1, size=(G, G))
    np.fill_diagonal(img, 1.0)
    knowledge = AgentKnowledge(g, SubjectiveTransitions(curves), ad, img)
    theta = EpistemicState(int(rng.integers(S)), knowledge.ad, knowledge.img)
    return system, knowledge, theta
