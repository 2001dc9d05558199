"""Image, reputation and action-distribution updates."""

from __future__ import annotations

import logging

import numpy as np

from .model import SCOPES, AgentKnowledge, System, likelihoods

log = logging.getLogger(__name__)


def expected_total_impact(system: System, g: int, h: int, i: int, s: int, ad: np.ndarray,
                          delta: float = 0.5) -> float:
    """Weighted two-way expected impact between ``h`` and ``i`` in ``s``, as seen by ``g``.

    ``delta`` weighs the impact ``i``'s actions have on ``h``; ``1 - delta``
    weighs the impact ``h``'s actions have on ``i``.
    """
    I = system.impact
    return float(delta * ad[i, s] @ I[h, i, s] + (1.0 - delta) * ad[h, s] @ I[i, h, s])


def eti_matrix(system: System, s: int, ad: np.ndarray, delta: float) -> np.ndarray:
    """All pairwise expected total impacts; entry ``[h, i]`` matches :func:`expected_total_impact`."""
    # m[h, i] = sum_a ad[i, s, a] * I[h, i, s, a]
    m = np.einsum("ia,hia->hi", ad[:, s, :], system.impact[:, :, s, :])
    return delta * m + (1.0 - delta) * m.T


def image_update(v, i):
    """Move image ``v`` towards +1 (``i >= 0``) or -1 (``i < 0``) by a fraction ``|i|``."""
    v = np.asarray(v, dtype=float)
    i = np.asarray(i, dtype=float)
    out = np.where(i >= 0.0, v + (1.0 - v) * i, v + (1.0 + v) * i)
    return float(out) if out.ndim == 0 else out


UPDATE_RULES = {"bounded": image_update}


def image_estimate(system: System, g: int, img: np.ndarray, s: int, ad: np.ndarray,
                   delta: float = 0.5) -> np.ndarray:
    update = UPDATE_RULES[system.update_rule]
    out = update(img, eti_matrix(system, s, ad, delta))
    np.fill_diagonal(out, 1.0)
    return out


def reputation(g: int, h: int, img: np.ndarray) -> float:
    """Average of every agent's image of ``h``, each weighted by ``g``'s image of that agent.

    ``g`` is left out of the average when it asks about itself. A lone agent
    asking about itself gets 0.
    """
    G = img.shape[0]
    idx = [i for i in range(G) if i != g] if h == g else list(range(G))
    if not idx:
        return 0.0
    return float(np.dot(img[h, idx], img[idx, g]) / len(idx))


def update_row(prior: np.ndarray, lik: np.ndarray, eta: float) -> np.ndarray | None:
    """Laplace-smoothed Bayes update of one action row. ``None`` on a zero denominator."""
    num = lik * prior + eta
    total = num.sum()
    if not total > 0.0:
        return None
    return num / total


def action_distribution_estimate(system: System, knowledge: AgentKnowledge, s: int, s_next: int,
                                 eta: float = 0.1, scope: str = "restricted",
                                 acting: int | None = None) -> np.ndarray:
    """Update the owner's action distribution after observing ``s -> s_next``.

    ``scope="restricted"`` touches only the row of the agent that acted in
    ``s``; ``scope="literal"`` updates every ``(agent, state)`` row against
    the observed successor.
    """
    if scope not in SCOPES:
        raise ValueError(f"scope must be one of {SCOPES}")
    if scope == "restricted" and acting is None:
        raise ValueError("restricted scope needs the acting agent")
    g, ad, img = knowledge.owner, knowledge.ad, knowledge.img
    out = np.array(ad, copy=True)
    if scope == "restricted":
        rows = [(acting, s)]
    else:
        rows = [(h, t) for h in range(system.n_agents) for t in range(system.n_states)]
    reps = {}
    for h, t in rows:
        if h not in reps:
            reps[h] = reputation(g, h, img)
        lik = likelihoods(system, knowledge.st, h, t, s_next, reps[h])
        new = update_row(ad[h, t], lik, eta)
        if new is None:
            log.warning("zero denominator updating AD row (h=%d, s=%d) towards %d; row left unchanged",
                        h, t, s_next)
            continue
        out[h, t] = new
    return out
