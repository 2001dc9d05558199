"""Round-robin episodes mixing planning agents with scripted ones."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .estimation import action_distribution_estimate, image_estimate, reputation
from .model import AgentKnowledge, Hyperparameters, ModelError, System
from .planner import plan

log = logging.getLogger(__name__)

WINDOW = 5


class RunError(RuntimeError):
    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"t={t}: {message}")
        self.t = t


@dataclass(frozen=True)
class ScheduleEntry:
    start: int
    end: int
    state: int | None  # None matches any state
    action: int

    def matches(self, s: int, t: int) -> bool:
        return self.start <= t < self.end and (self.state is None or self.state == s)


@dataclass(frozen=True)
class Schedule:
    default: int | None
    entries: tuple[ScheduleEntry, ...] = ()


def scripted_policy(schedule: Schedule, s: int, t: int) -> int | None:
    """First matching entry wins, else the default (``None`` if there is none)."""
    for e in schedule.entries:
        if e.matches(s, t):
            return e.action
    return schedule.default


def step_environment(system: System, acting: int, s: int, a: int, rng: np.random.Generator) -> int:
    if system.is_subjective(a):
        raise RunError(f"subjective action {system.actions[a]!r} cannot be executed")
    if not system.ot_defined[acting, s, a]:
        raise RunError(f"no objective transition for ({system.agents[acting]}, "
                       f"{system.states[s]}, {system.actions[a]})")
    cdf = np.cumsum(system.ot[acting, s, a])
    u = rng.random() * cdf[-1]
    return int(min(np.searchsorted(cdf, u, side="right"), system.n_states - 1))


def observe_and_learn(knowledge: AgentKnowledge, system: System, acting: int, s: int, s_next: int,
                      hyper: Hyperparameters) -> AgentKnowledge:
    """AD and image updates for one observed transition, both from pre-update inputs."""
    ad = action_distribution_estimate(system, knowledge, s, s_next, hyper.eta, hyper.scope, acting)
    img = image_estimate(system, knowledge.owner, knowledge.img, s, knowledge.ad, hyper.delta)
    return knowledge.replace(ad=ad, img=img)


@dataclass(frozen=True)
class MetricSpec:
    """Which quantities a run tracks.

    ``ad`` entries are ``(observer, agent, state, action)``; ``rep`` entries
    are ``(observer, agent)``. ``offer_actions`` feed the per-window offer
    frequency; ``action_index`` maps actions to the value averaged per window.
    """

    ad: tuple[tuple[int, int, int, int], ...] = ()
    rep: tuple[tuple[int, int], ...] = ()
    offer_actions: tuple[int, ...] = ()
    action_index: Mapping[int, float] = field(default_factory=dict)
    index_agent: int | None = None


@dataclass(frozen=True)
class TraceRecord:
    t: int
    agent: int
    action: int
    preferred: int
    state_before: int
    state_after: int
    root_value: float
    values: Mapping[str, float]
    knowledge: Mapping[int, AgentKnowledge]


@dataclass
class Trace:
    system: System
    metrics: MetricSpec
    initial: Mapping[str, float]
    records: list[TraceRecord] = field(default_factory=list)
    horizon: int = 0

    def metric_names(self) -> list[str]:
        return metric_names(self.system, self.metrics)


def metric_names(system: System, spec: MetricSpec) -> list[str]:
    A, S, X = system.agents, system.states, system.actions
    names = [f"rep.{A[g]}.{A[h]}" for g, h in spec.rep]
    names += [f"ad.{A[g]}.{A[h]}.{S[s]}.{X[a]}" for g, h, s, a in spec.ad]
    return names


def snapshot(system: System, spec: MetricSpec, knowledge: Mapping[int, AgentKnowledge]) -> dict[str, float]:
    vals = {}
    names = iter(metric_names(system, spec))
    for g, h in spec.rep:
        vals[next(names)] = reputation(g, h, knowledge[g].img)
    for g, h, s, a in spec.ad:
        vals[next(names)] = float(knowledge[g].ad[h, s, a])
    return vals


def run_episode(scenario, hyper: Hyperparameters | None = None) -> Trace:
    """Play ``hyper.horizon`` steps; each step every agent acts once in index order.

    Planning agents act on their plan unless an override entry forces an
    action (the plan is still recorded as ``preferred``). Every planning
    agent learns from every transition, its own or not.
    """
    hyper = hyper or scenario.hyper
    system = scenario.system
    rng = np.random.default_rng(hyper.seed)
    knowledge = dict(scenario.knowledge)
    spec = scenario.metrics
    trace = Trace(system, spec, snapshot(system, spec, knowledge), horizon=hyper.horizon)
    s = scenario.initial_state
    for t in range(hyper.horizon):
        for g in range(system.n_agents):
            try:
                controller = scenario.controllers[g]
                root = float("nan")
                if controller is None:
                    theta = knowledge[g].epistemic(s)
                    result = plan(system, knowledge[g], theta, hyper)
                    preferred, root = result.action, result.value
                    forced = None
                    if g in scenario.overrides:
                        forced = scripted_policy(scenario.overrides[g], s, t)
                    action = preferred if forced is None else forced
                else:
                    action = scripted_policy(controller, s, t)
                    if action is None:
                        raise RunError(f"schedule of {system.agents[g]} has no action for "
                                       f"{system.states[s]}")
                    preferred = action
                s_next = step_environment(system, g, s, action, rng)
                for o in sorted(knowledge):
                    knowledge[o] = observe_and_learn(knowledge[o], system, g, s, s_next, hyper)
            except RunError as exc:
                if exc.t is None:
                    raise RunError(str(exc), t) from exc
                raise
            except ModelError as exc:
                raise RunError(str(exc), t) from exc
            trace.records.append(TraceRecord(t, g, action, preferred, s, s_next, root,
                                             snapshot(system, spec, knowledge), dict(knowledge)))
            s = s_next
    return trace


@dataclass(frozen=True)
class MetricSeries:
    """Per-step series (value at the start of each step, length ``T + 1``) and per-window series."""

    steps: Mapping[str, np.ndarray]
    window_starts: np.ndarray
    offer_frequency: np.ndarray
    average_action: np.ndarray
    width: int = WINDOW


def derive_metrics(trace: Trace, width: int = WINDOW) -> MetricSeries:
    names = trace.metric_names()
    T = trace.horizon
    if trace.records:
        T = max(T, trace.records[-1].t + 1)
    steps = {n: np.full(T + 1, np.nan) for n in names}
    for n in names:
        steps[n][0] = trace.initial[n]
    for rec in trace.records:
        for n in names:
            steps[n][rec.t + 1] = rec.values[n]
    for n in names:
        # steps in which nothing was recorded carry the last value forward
        arr = steps[n]
        for k in range(1, T + 1):
            if np.isnan(arr[k]):
                arr[k] = arr[k - 1]

    n_win = -(-T // width)
    starts = np.arange(n_win) * width
    offers = np.zeros(n_win)
    idx_sum = np.zeros(n_win)
    idx_cnt = np.zeros(n_win)
    spec = trace.metrics
    offer_set = set(spec.offer_actions)
    for rec in trace.records:
        w = rec.t // width
        if rec.action in offer_set:
            offers[w] += 1
        if spec.action_index and (spec.index_agent is None or rec.agent == spec.index_agent):
            if rec.preferred in spec.action_index:
                idx_sum[w] += spec.action_index[rec.preferred]
                idx_cnt[w] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        avg = np.where(idx_cnt > 0, idx_sum / np.maximum(idx_cnt, 1), np.nan)
    return MetricSeries(steps, starts, offers / width, avg, width)
