"""Depth-limited look-ahead over epistemic states.

Each OR node holds an epistemic state; each AND node an action. Successor
epistemic states do not depend on which action was hypothesised (only the
planner's own row of the action distribution is revised, against the same
pre-transition state), so :func:`plan` builds one child per reachable
successor state and shares it across actions. :func:`expectimax_oracle`
makes no such shortcut and serves as the reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .estimation import image_estimate, reputation, update_row
from .model import (AgentKnowledge, EpistemicState, Hyperparameters, System, likelihoods,
                    planning_row)


@dataclass(frozen=True)
class PlanResult:
    action: int
    value: float
    q_values: dict = field(default_factory=dict)


def perceived_impacts(system: System, g: int, s: int, ad: np.ndarray) -> np.ndarray:
    """Perceived immediate impact of every action for ``g`` in ``s``."""
    I = system.impact
    others = [h for h in range(system.n_agents) if h != g]
    network = float(sum(ad[h, s] @ I[g, h, s] for h in others))
    return (I[g, g, s] + network) / system.n_agents


def perceived_impact(system: System, g: int, s: int, ad: np.ndarray, a: int) -> float:
    return float(perceived_impacts(system, g, s, ad)[a])


def candidate_actions(system: System, g: int, s: int) -> list[int]:
    # Fall back to every objective action so a node always has a value.
    return system.applicable_actions(g, s) or system.objective_actions()


def leaf_heuristic(system: System, g: int, theta: EpistemicState) -> float:
    pi = perceived_impacts(system, g, theta.state, theta.ad)
    return float(max(pi[a] for a in candidate_actions(system, g, theta.state)))


def successor_epistemic(system: System, knowledge: AgentKnowledge, theta: EpistemicState,
                        s_next: int, hyper: Hyperparameters) -> EpistemicState:
    """Child node for landing in ``s_next``; only the planner's own AD row is revised."""
    g, s = knowledge.owner, theta.state
    r = reputation(g, g, theta.img)
    lik = likelihoods(system, knowledge.st, g, s, s_next, r)
    ad = theta.ad
    row = update_row(ad[g, s], lik, hyper.eta)
    if row is not None:
        ad = np.array(ad, copy=True)
        ad[g, s] = row
    img = image_estimate(system, g, theta.img, s, theta.ad, hyper.delta)
    return EpistemicState(s_next, ad, img)


def _transition(system, knowledge, theta, a):
    g = knowledge.owner
    return planning_row(system, knowledge.st, g, theta.state, a, reputation(g, g, theta.img))


def q_value(system: System, knowledge: AgentKnowledge, theta: EpistemicState, a: int, d: int,
            hyper: Hyperparameters) -> float:
    if d < 1:
        raise ValueError("q_value needs depth >= 1")
    return _Search(system, knowledge, hyper).q(theta, a, d)


class _Search:
    """One planning call. Children are built once per (node, successor state)."""

    def __init__(self, system, knowledge, hyper):
        self.system = system
        self.knowledge = knowledge
        self.hyper = hyper
        self.g = knowledge.owner

    def children(self, theta, rows):
        reach = np.flatnonzero(np.any(np.stack(rows) > 0.0, axis=0))
        return {int(sp): successor_epistemic(self.system, self.knowledge, theta, int(sp), self.hyper)
                for sp in reach}

    def qs(self, theta, d):
        """q-values for every candidate action at ``theta`` with ``d`` levels below."""
        sysm, g, gamma = self.system, self.g, self.hyper.gamma
        acts = candidate_actions(sysm, g, theta.state)
        pi = perceived_impacts(sysm, g, theta.state, theta.ad)
        rows = [_transition(sysm, self.knowledge, theta, a) for a in acts]
        kids = self.children(theta, rows)
        vals = {sp: self.value(child, d - 1) for sp, child in kids.items()}
        out = {}
        for a, row in zip(acts, rows):
            future = sum(row[sp] * v for sp, v in vals.items())
            out[a] = float(pi[a] + gamma * future)
        return out

    def q(self, theta, a, d):
        sysm, g = self.system, self.g
        pi = perceived_impacts(sysm, g, theta.state, theta.ad)
        row = _transition(sysm, self.knowledge, theta, a)
        kids = self.children(theta, [row])
        future = sum(row[sp] * self.value(child, d - 1) for sp, child in kids.items())
        return float(pi[a] + self.hyper.gamma * future)

    def value(self, theta, d):
        if d == 0:
            return leaf_heuristic(self.system, self.g, theta)
        return max(self.qs(theta, d).values())


def plan(system: System, knowledge: AgentKnowledge, theta: EpistemicState,
         hyper: Hyperparameters) -> PlanResult:
    """Expand the look-ahead tree to ``hyper.depth`` and pick the best objective action.

    Ties go to the lowest action index. Depth 0 ranks actions by perceived
    immediate impact alone.
    """
    search = _Search(system, knowledge, hyper)
    if hyper.depth == 0:
        pi = perceived_impacts(system, knowledge.owner, theta.state, theta.ad)
        qs = {a: float(pi[a]) for a in candidate_actions(system, knowledge.owner, theta.state)}
    else:
        qs = search.qs(theta, hyper.depth)
    best = max(qs, key=lambda a: (qs[a], -a))
    return PlanResult(best, qs[best], qs)


def expectimax_oracle(system: System, knowledge: AgentKnowledge, theta: EpistemicState, d: int,
                      hyper: Hyperparameters) -> float:
    """Horizon-``d`` value by plain recursion over every action and every successor state."""
    if d < 1:
        raise ValueError("horizon must be >= 1")
    g = knowledge.owner
    s = theta.state
    acts = candidate_actions(system, g, s)
    pi = perceived_impacts(system, g, s, theta.ad)
    if d == 1:
        return float(max(pi[a] for a in acts))
    best = -np.inf
    for a in acts:
        row = _transition(system, knowledge, theta, a)
        total = 0.0
        for sp in range(system.n_states):
            child = successor_epistemic(system, knowledge, theta, sp, hyper)
            total += row[sp] * expectimax_oracle(system, knowledge, child, d - 1, hyper)
        best = max(best, pi[a] + hyper.gamma * total)
    return float(best)
