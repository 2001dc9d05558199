"""Domain objects for reputation-driven MDPs and the global transition lookup.

Agents, states and actions are small integer indices into the name tuples
held by :class:`System`. Objective and subjective actions share one index
space; ``System.action_kinds`` tells them apart, which keeps the two sets
disjoint by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

OBJECTIVE = "objective"
SUBJECTIVE = "subjective"

ROW_TOL = 1e-9


class ModelError(ValueError):
    """Raised when a lookup hits an undefined or ill-posed part of a model."""


def _frozen(arr, dtype=float) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class System:
    """The shared world model: agents, states, actions, impacts, objective transitions.

    ``impact[g, h, s, a]`` is the impact on ``g`` of ``h`` performing ``a`` in
    ``s``. ``ot[h, s, a]`` is the successor distribution when ``h`` performs
    objective action ``a`` in ``s``; ``ot_defined`` marks which rows exist.
    """

    agents: tuple[str, ...]
    states: tuple[str, ...]
    actions: tuple[str, ...]
    action_kinds: tuple[str, ...]
    impact: np.ndarray
    ot: np.ndarray
    ot_defined: np.ndarray
    counterparts: Mapping[int, int] = field(default_factory=dict)
    update_rule: str = "bounded"

    def __post_init__(self):
        G, S, A = len(self.agents), len(self.states), len(self.actions)
        if len(self.action_kinds) != A:
            raise ValueError("action_kinds must have one entry per action")
        bad = set(self.action_kinds) - {OBJECTIVE, SUBJECTIVE}
        if bad:
            raise ValueError(f"unknown action kinds: {sorted(bad)}")
        impact = _frozen(self.impact)
        ot = _frozen(self.ot)
        ot_defined = _frozen(self.ot_defined, dtype=bool)
        if impact.shape != (G, G, S, A):
            raise ValueError(f"impact must have shape {(G, G, S, A)}, got {impact.shape}")
        if ot.shape != (G, S, A, S):
            raise ValueError(f"ot must have shape {(G, S, A, S)}, got {ot.shape}")
        if ot_defined.shape != (G, S, A):
            raise ValueError(f"ot_defined must have shape {(G, S, A)}")
        object.__setattr__(self, "impact", impact)
        object.__setattr__(self, "ot", ot)
        object.__setattr__(self, "ot_defined", ot_defined)
        object.__setattr__(self, "counterparts", MappingProxyType(dict(self.counterparts)))
        object.__setattr__(self, "_agent_ix", {n: i for i, n in enumerate(self.agents)})
        object.__setattr__(self, "_state_ix", {n: i for i, n in enumerate(self.states)})
        object.__setattr__(self, "_action_ix", {n: i for i, n in enumerate(self.actions)})
        subj = np.array([k == SUBJECTIVE for k in self.action_kinds], dtype=bool)
        subj.flags.writeable = False
        object.__setattr__(self, "subjective_mask", subj)

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def agent(self, name: str) -> int:
        return self._agent_ix[name]

    def state(self, name: str) -> int:
        return self._state_ix[name]

    def action(self, name: str) -> int:
        return self._action_ix[name]

    def is_subjective(self, a: int) -> bool:
        return bool(self.subjective_mask[a])

    def objective_actions(self) -> list[int]:
        return [a for a in range(self.n_actions) if not self.subjective_mask[a]]

    def applicable_actions(self, h: int, s: int) -> list[int]:
        """Objective actions with a defined transition row for ``h`` in ``s``."""
        return [int(a) for a in np.flatnonzero(self.ot_defined[h, s])]


class SubjectiveTransitions:
    """One agent's reputation-conditioned transition curves.

    ``curves[(h, s, a)][s_next]`` is a sorted tuple of ``(reputation, prob)``
    breakpoints. Queries interpolate each destination linearly, clamp outside
    the breakpoint range, and renormalise across destinations.
    """

    def __init__(self, curves: Mapping[tuple[int, int, int], Mapping[int, Sequence[tuple[float, float]]]] | None = None):
        frozen = {}
        for key, dests in (curves or {}).items():
            frozen[tuple(int(k) for k in key)] = MappingProxyType(
                {int(d): tuple((float(r), float(p)) for r, p in pts) for d, pts in dests.items()}
            )
        self._curves = MappingProxyType(frozen)
        self._compiled = {}
        for key, dests in self._curves.items():
            order = sorted(dests)
            xs = [np.array([r for r, _ in dests[d]]) for d in order]
            ps = [np.array([p for _, p in dests[d]]) for d in order]
            self._compiled[key] = (np.array(order, dtype=int), xs, ps)

    @property
    def curves(self) -> Mapping[tuple[int, int, int], Mapping[int, tuple[tuple[float, float], ...]]]:
        return self._curves

    def __contains__(self, key) -> bool:
        return tuple(key) in self._curves

    def __eq__(self, other) -> bool:
        if not isinstance(other, SubjectiveTransitions):
            return NotImplemented
        return {k: dict(v) for k, v in self._curves.items()} == {k: dict(v) for k, v in other._curves.items()}

    def __repr__(self) -> str:
        return f"SubjectiveTransitions({len(self._curves)} rows)"

    def raw(self, h: int, s: int, a: int, s_next: int, r: float) -> float:
        """Interpolated curve value before row renormalisation (0 for undefined destinations)."""
        try:
            dests = self._curves[(h, s, a)]
        except KeyError:
            raise ModelError(f"no subjective transition defined for (h={h}, s={s}, a={a})") from None
        pts = dests.get(s_next)
        if pts is None:
            return 0.0
        xs, ps = zip(*pts)
        return float(np.interp(r, xs, ps))

    def row(self, h: int, s: int, a: int, r: float, n_states: int) -> np.ndarray:
        """Full renormalised successor distribution for ``(h, s, a)`` at reputation ``r``."""
        try:
            dests, xs, ps = self._compiled[(h, s, a)]
        except KeyError:
            raise ModelError(f"no subjective transition defined for (h={h}, s={s}, a={a})") from None
        vals = np.array([np.interp(r, x, p) for x, p in zip(xs, ps)])
        total = vals.sum()
        if not total > 0.0:
            raise ModelError(f"subjective row (h={h}, s={s}, a={a}) has zero mass at r={r}")
        out = np.zeros(n_states)
        out[dests] = vals / total
        return out


@dataclass(frozen=True)
class AgentKnowledge:
    """An agent's private view: subjective curves, action distribution, image.

    ``ad[h, s]`` is a distribution over all actions; ``img[h, i]`` is what the
    owner believes ``i`` thinks of ``h``.
    """

    owner: int
    st: SubjectiveTransitions
    ad: np.ndarray
    img: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "ad", _frozen(self.ad))
        object.__setattr__(self, "img", _frozen(self.img))

    @classmethod
    def initial(cls, system: System, owner: int, st: SubjectiveTransitions | None = None) -> "AgentKnowledge":
        """Uniform action distributions and neutral images with a unit diagonal."""
        G, S, A = system.n_agents, system.n_states, system.n_actions
        ad = np.full((G, S, A), 1.0 / A)
        img = np.eye(G)
        return cls(owner, st or SubjectiveTransitions(), ad, img)

    def replace(self, **changes) -> "AgentKnowledge":
        kw = dict(owner=self.owner, st=self.st, ad=self.ad, img=self.img)
        kw.update(changes)
        return AgentKnowledge(**kw)

    def epistemic(self, state: int) -> "EpistemicState":
        return EpistemicState(state, self.ad, self.img)


@dataclass(frozen=True)
class EpistemicState:
    """Search-node payload: physical state plus the owner's AD and image."""

    state: int
    ad: np.ndarray
    img: np.ndarray

    def __post_init__(self):
        if self.ad.flags.writeable:
            object.__setattr__(self, "ad", _frozen(self.ad))
        if self.img.flags.writeable:
            object.__setattr__(self, "img", _frozen(self.img))


SCOPES = ("restricted", "literal")


@dataclass(frozen=True)
class Hyperparameters:
    depth: int = 3
    gamma: float = 0.7
    eta: float = 0.1
    delta: float = 0.5
    horizon: int = 100
    seed: int = 0
    scope: str = "restricted"

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.eta < 0.0:
            raise ValueError("eta must be non-negative")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")
        if self.scope not in SCOPES:
            raise ValueError(f"scope must be one of {SCOPES}")


@dataclass(frozen=True)
class Violation:
    kind: str
    location: tuple
    message: str

    def __str__(self) -> str:
        return f"{self.kind} at {self.location}: {self.message}"


def validate_system(system: System, knowledge: Sequence[AgentKnowledge] = ()) -> list[Violation]:
    """Collect every broken invariant. An empty list means the model is well-formed."""
    report: list[Violation] = []
    G, S, A = system.n_agents, system.n_states, system.n_actions

    bad = np.argwhere((system.impact < -1.0) | (system.impact > 1.0) | ~np.isfinite(system.impact))
    for g, h, s, a in bad:
        report.append(Violation("impact_range", (int(g), int(h), int(s), int(a)),
                                f"impact {system.impact[g, h, s, a]} outside [-1, 1]"))

    for h, s, a in np.argwhere(system.ot_defined):
        loc = (int(h), int(s), int(a))
        row = system.ot[h, s, a]
        if system.is_subjective(a):
            report.append(Violation("ot_subjective", loc, "objective row defined for a subjective action"))
            continue
        if np.any(row < 0.0) or np.any(row > 1.0):
            report.append(Violation("ot_range", loc, "probabilities outside [0, 1]"))
        if abs(row.sum() - 1.0) > ROW_TOL:
            report.append(Violation("ot_row_sum", loc, f"row sums to {row.sum():.12g}"))
    for h, s, a in np.argwhere(~system.ot_defined):
        if np.any(system.ot[h, s, a] != 0.0):
            report.append(Violation("ot_undefined_mass", (int(h), int(s), int(a)),
                                    "probability mass on an undefined row"))

    seen = {}
    for o, sj in system.counterparts.items():
        loc = (o,)
        if not (0 <= o < A and 0 <= sj < A):
            report.append(Violation("counterpart_range", loc, f"{o} -> {sj} out of range"))
            continue
        if system.is_subjective(o):
            report.append(Violation("counterpart_domain", loc, "domain entry is not objective"))
        if not system.is_subjective(sj):
            report.append(Violation("counterpart_image", loc, "image entry is not subjective"))
        if sj in seen:
            report.append(Violation("counterpart_injective", loc, f"shares image with {seen[sj]}"))
        seen[sj] = o

    for k in knowledge:
        report.extend(_validate_knowledge(system, k))
    return report


def _validate_knowledge(system: System, k: AgentKnowledge) -> list[Violation]:
    report = []
    G, S, A = system.n_agents, system.n_states, system.n_actions
    g = k.owner
    if not 0 <= g < G:
        return [Violation("owner_range", (g,), "owner is not an agent")]
    if k.ad.shape != (G, S, A):
        report.append(Violation("ad_shape", (g,), f"expected {(G, S, A)}, got {k.ad.shape}"))
    else:
        for h, s in np.ndindex(G, S):
            row = k.ad[h, s]
            if np.any(row < 0.0) or np.any(row > 1.0) or abs(row.sum() - 1.0) > ROW_TOL:
                report.append(Violation("ad_row", (g, h, s), f"not a distribution (sum {row.sum():.12g})"))
    if k.img.shape != (G, G):
        report.append(Violation("img_shape", (g,), f"expected {(G, G)}, got {k.img.shape}"))
    else:
        for h, i in np.argwhere((k.img < -1.0) | (k.img > 1.0)):
            report.append(Violation("img_range", (g, int(h), int(i)), f"value {k.img[h, i]} outside [-1, 1]"))
        for i in range(G):
            if k.img[i, i] != 1.0:
                report.append(Violation("img_diagonal", (g, i, i), f"diagonal value {k.img[i, i]} != 1"))
    for (h, s, a), dests in k.st.curves.items():
        loc = (g, h, s, a)
        if not (0 <= h < G and 0 <= s < S and 0 <= a < A):
            report.append(Violation("st_range", loc, "index out of range"))
            continue
        if not system.is_subjective(a):
            report.append(Violation("st_objective", loc, "curve defined for an objective action"))
        if not dests:
            report.append(Violation("st_empty", loc, "no destinations"))
            continue
        for d, pts in dests.items():
            dl = loc + (d,)
            if not 0 <= d < S:
                report.append(Violation("st_range", dl, "destination out of range"))
            if not pts:
                report.append(Violation("st_curve", dl, "empty curve"))
                continue
            xs = [r for r, _ in pts]
            ps = [p for _, p in pts]
            if any(b <= a_ for a_, b in zip(xs, xs[1:])):
                report.append(Violation("st_curve", dl, "breakpoints not strictly increasing"))
            if any(x < -1.0 or x > 1.0 for x in xs):
                report.append(Violation("st_curve", dl, "breakpoint outside [-1, 1]"))
            if any(p < 0.0 or p > 1.0 for p in ps):
                report.append(Violation("st_curve", dl, "probability outside [0, 1]"))
        # Row mass is piecewise linear in r, so checking at every breakpoint
        # and both ends covers the whole interval.
        probe = sorted({-1.0, 1.0} | {r for pts in dests.values() for r, _ in pts if -1.0 <= r <= 1.0})
        for r in probe:
            mass = sum(float(np.interp(r, [x for x, _ in pts], [p for _, p in pts]))
                       for pts in dests.values() if pts)
            if not mass > 0.0:
                report.append(Violation("st_zero_mass", loc, f"row has zero mass at r={r}"))
                break
    return report


def subjective_probability(spec: SubjectiveTransitions, h: int, s: int, a: int, s_next: int,
                           r: float, n_states: int | None = None) -> float:
    """Renormalised subjective transition probability ``ST(h, s, a, s_next, r)``."""
    if n_states is None:
        n_states = 1 + max([s_next] + [d for d in spec.curves.get((h, s, a), {})])
    return float(spec.row(h, s, a, r, n_states)[s_next])


def counterpart(mapping: Mapping[int, int], a: int) -> int | None:
    return mapping.get(a)


def global_transition(system: System, knowledge: AgentKnowledge, h: int, s: int, a: int,
                      s_next: int, r: float) -> float:
    """``T_g``: subjective curves for subjective actions, objective model otherwise.

    Rows that are not defined for ``(h, s, a)`` mean the action is not
    available to ``h`` there, and contribute probability 0.
    """
    if not 0 <= a < system.n_actions:
        raise ModelError(f"unknown action {a}")
    return float(transition_row(system, knowledge.st, h, s, a, r)[s_next])


def transition_row(system: System, st: SubjectiveTransitions, h: int, s: int, a: int, r: float) -> np.ndarray:
    if system.subjective_mask[a]:
        if (h, s, a) in st:
            return st.row(h, s, a, r, system.n_states)
        return np.zeros(system.n_states)
    return system.ot[h, s, a]


def likelihoods(system: System, st: SubjectiveTransitions, h: int, s: int, s_next: int, r: float) -> np.ndarray:
    """``T_g(h, s, a, s_next, r)`` for every action ``a`` at once."""
    out = np.array(system.ot[h, s, :, s_next], dtype=float)
    for a in np.flatnonzero(system.subjective_mask):
        if (h, s, int(a)) in st:
            out[a] = st.row(h, s, int(a), r, system.n_states)[s_next]
        else:
            out[a] = 0.0
    return out


def planning_row(system: System, st: SubjectiveTransitions, g: int, s: int, a: int, r: float) -> np.ndarray:
    """Successor distribution the planner uses for objective action ``a``.

    The subjective counterpart replaces ``a`` only where the owner has curves
    for it in ``s``; elsewhere the objective row applies.
    """
    sub = system.counterparts.get(a)
    if sub is not None and (g, s, sub) in st:
        return st.row(g, s, sub, r, system.n_states)
    return system.ot[g, s, a]
