"""Line-oriented scenario files.

A scenario starts with ``repnet-scenario 1`` and is split into ``[section]``
blocks. ``#`` starts a comment. Numbers may be written as fractions
(``1/6``). In ``[impacts]`` and ``[transitions]`` a ``*`` state expands
over every state, and ``=`` as a destination means "the same state".
See ``scenarios/exp1.scn`` for a full example.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .model import (OBJECTIVE, SUBJECTIVE, AgentKnowledge, Hyperparameters, SubjectiveTransitions,
                    System, Violation, validate_system)
from .simulator import MetricSpec, Schedule, ScheduleEntry

HEADER = "repnet-scenario"
VERSION = 1

HYPER_KEYS = {"depth": int, "gamma": float, "eta": float, "delta": float,
              "horizon": int, "seed": int, "scope": str}


class ScenarioError(ValueError):
    """Syntax error (with line/column) or semantic error (with violations)."""

    def __init__(self, message, line=None, col=None, violations=()):
        loc = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(loc + message)
        self.line = line
        self.col = col
        self.violations = list(violations)


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    system: System
    knowledge: Mapping[int, AgentKnowledge]
    controllers: tuple  # per agent: None for planning agents, else a Schedule
    hyper: Hyperparameters = field(default_factory=Hyperparameters)
    overrides: Mapping[int, Schedule] = field(default_factory=dict)
    metrics: MetricSpec = field(default_factory=MetricSpec)
    initial_state: int = 0

    def planning_agents(self) -> list[int]:
        return [g for g, c in enumerate(self.controllers) if c is None]

    def validate(self) -> list[Violation]:
        return validate_system(self.system, [self.knowledge[g] for g in sorted(self.knowledge)])


@dataclass
class _Tok:
    text: str
    line: int
    col: int


def _tokenize(line: str, lineno: int) -> list[_Tok]:
    line = line.split("#", 1)[0]
    return [_Tok(m.group(), lineno, m.start() + 1) for m in re.finditer(r"\S+", line)]


def _num(tok: _Tok) -> float:
    try:
        return float(Fraction(tok.text))
    except (ValueError, ZeroDivisionError):
        raise ScenarioError(f"expected a number, got {tok.text!r}", tok.line, tok.col) from None


def _int(tok: _Tok) -> int:
    try:
        return int(tok.text)
    except ValueError:
        raise ScenarioError(f"expected an integer, got {tok.text!r}", tok.line, tok.col) from None


class _Parser:
    def __init__(self, text: str):
        self.sections: list[tuple[str, str | None, _Tok, list[list[_Tok]]]] = []
        self.meta: dict[str, str] = {}
        lines = text.splitlines()
        first = next(((i, l) for i, l in enumerate(lines, 1) if _tokenize(l, i)), None)
        if first is None:
            raise ScenarioError("empty scenario", 1, 1)
        toks = _tokenize(first[1], first[0])
        if toks[0].text != HEADER or len(toks) != 2:
            raise ScenarioError(f"first line must be '{HEADER} {VERSION}'", toks[0].line, toks[0].col)
        if toks[1].text != str(VERSION):
            raise ScenarioError(f"unsupported version {toks[1].text}", toks[1].line, toks[1].col)
        current = None
        for lineno, raw in enumerate(lines[first[0]:], first[0] + 1):
            stripped = raw.split("#", 1)[0].strip()
            if not stripped:
                continue
            if stripped.startswith("["):
                m = re.fullmatch(r"\[\s*([A-Za-z_]+)(?:\s+(\S+))?\s*\]", stripped)
                col = raw.index("[") + 1
                if not m:
                    raise ScenarioError("malformed section header", lineno, col)
                current = []
                self.sections.append((m.group(1), m.group(2), _Tok(stripped, lineno, col), current))
                continue
            if current is None:
                m = re.match(r"\s*(name|description)\s*:\s*(.*)$", stripped)
                if not m:
                    col = len(raw) - len(raw.lstrip()) + 1
                    raise ScenarioError("expected 'name:', 'description:' or a section header", lineno, col)
                self.meta[m.group(1)] = m.group(2).strip()
                continue
            current.append(_tokenize(raw, lineno))


SECTIONS = {"agents", "states", "actions", "counterparts", "impacts", "transitions", "subjective",
            "schedule", "override", "initial", "hyper", "metrics"}
ARG_SECTIONS = {"subjective", "schedule", "override", "initial"}


def parse_scenario(text: str) -> Scenario:
    p = _Parser(text)
    by_name: dict[str, list] = {}
    for name, arg, tok, body in p.sections:
        if name not in SECTIONS:
            raise ScenarioError(f"unknown section [{name}]", tok.line, tok.col)
        if (name in ARG_SECTIONS) != (arg is not None):
            need = "needs an agent argument" if name in ARG_SECTIONS else "takes no argument"
            raise ScenarioError(f"section [{name}] {need}", tok.line, tok.col)
        if name not in ARG_SECTIONS and name in by_name:
            raise ScenarioError(f"duplicate section [{name}]", tok.line, tok.col)
        by_name.setdefault(name, []).append((arg, tok, body))
    for req in ("agents", "states", "actions"):
        if req not in by_name:
            raise ScenarioError(f"missing section [{req}]", 1, 1)

    # agents
    agents, kinds = [], []
    for toks in by_name["agents"][0][2]:
        if len(toks) != 2 or toks[1].text not in ("repnet", "scripted"):
            t = toks[1] if len(toks) > 1 else toks[0]
            raise ScenarioError("expected '<agent> repnet|scripted'", t.line, t.col)
        if toks[0].text in agents:
            raise ScenarioError(f"duplicate agent {toks[0].text!r}", toks[0].line, toks[0].col)
        agents.append(toks[0].text)
        kinds.append(toks[1].text)

    # states
    states, initial_state = [], None
    for toks in by_name["states"][0][2]:
        if toks[0].text == "initial":
            if len(toks) != 2:
                raise ScenarioError("expected 'initial <state>'", toks[0].line, toks[0].col)
            initial_state = toks[1]
            continue
        for t in toks:
            if t.text in states or t.text in ("*", "="):
                raise ScenarioError(f"bad or duplicate state {t.text!r}", t.line, t.col)
            states.append(t.text)

    actions, akinds = [], []
    for toks in by_name["actions"][0][2]:
        if len(toks) != 2 or toks[1].text not in (OBJECTIVE, SUBJECTIVE):
            t = toks[-1]
            raise ScenarioError("expected '<action> objective|subjective'", t.line, t.col)
        if toks[0].text in actions:
            raise ScenarioError(f"duplicate action {toks[0].text!r}", toks[0].line, toks[0].col)
        actions.append(toks[0].text)
        akinds.append(toks[1].text)

    ag = {n: i for i, n in enumerate(agents)}
    st = {n: i for i, n in enumerate(states)}
    ac = {n: i for i, n in enumerate(actions)}

    def look(table, tok, what):
        try:
            return table[tok.text]
        except KeyError:
            raise ScenarioError(f"unknown {what} {tok.text!r}", tok.line, tok.col) from None

    def states_of(tok):
        return list(range(len(states))) if tok.text == "*" else [look(st, tok, "state")]

    def need(toks, n, form):
        if len(toks) < n:
            t = toks[-1]
            raise ScenarioError(f"expected '{form}'", t.line, t.col + len(t.text))

    G, S, A = len(agents), len(states), len(actions)

    counterparts = {}
    for _, _, body in by_name.get("counterparts", []):
        for toks in body:
            need(toks, 2, "<objective action> <subjective action>")
            counterparts[look(ac, toks[0], "action")] = look(ac, toks[1], "action")

    impact = np.zeros((G, G, S, A))
    for _, _, body in by_name.get("impacts", []):
        for toks in body:
            need(toks, 5, "<affected> <actor> <state|*> <action> <value>")
            g, h = look(ag, toks[0], "agent"), look(ag, toks[1], "agent")
            a = look(ac, toks[3], "action")
            v = _num(toks[4])
            for s in states_of(toks[2]):
                impact[g, h, s, a] = v

    ot = np.zeros((G, S, A, S))
    ot_defined = np.zeros((G, S, A), dtype=bool)
    for _, _, body in by_name.get("transitions", []):
        for toks in body:
            need(toks, 6, "<agent> <state|*> <action> -> <dest> <prob> ...")
            if toks[3].text != "->":
                raise ScenarioError("expected '->'", toks[3].line, toks[3].col)
            h, a = look(ag, toks[0], "agent"), look(ac, toks[2], "action")
            pairs = toks[4:]
            if len(pairs) % 2:
                raise ScenarioError("destinations must come in '<dest> <prob>' pairs",
                                    pairs[-1].line, pairs[-1].col)
            for s in states_of(toks[1]):
                row = np.zeros(S)
                for dt, pt in zip(pairs[::2], pairs[1::2]):
                    d = s if dt.text == "=" else look(st, dt, "state")
                    row[d] += _num(pt)
                ot[h, s, a] = row
                ot_defined[h, s, a] = True

    system = System(tuple(agents), tuple(states), tuple(actions), tuple(akinds), impact, ot,
                    ot_defined, counterparts)

    curves: dict[int, dict] = {g: {} for g in range(G)}
    for arg, tok, body in by_name.get("subjective", []):
        owner = look(ag, _Tok(arg, tok.line, tok.col), "agent")
        for toks in body:
            need(toks, 5, "<agent> <state> <action> <dest> <r>:<p> ...")
            h, s = look(ag, toks[0], "agent"), look(st, toks[1], "state")
            a, d = look(ac, toks[2], "action"), look(st, toks[3], "state")
            pts = []
            for t in toks[4:]:
                if t.text.count(":") != 1:
                    raise ScenarioError("breakpoints are written '<reputation>:<prob>'", t.line, t.col)
                r, pr = t.text.split(":")
                pts.append((_num(_Tok(r, t.line, t.col)),
                            _num(_Tok(pr, t.line, t.col + len(r) + 1))))
            curves[owner].setdefault((h, s, a), {})[d] = pts

    def schedule(body, header, need_default):
        default, entries = None, []
        for toks in body:
            if toks[0].text == "default":
                need(toks, 2, "default <action>")
                default = look(ac, toks[1], "action")
                continue
            need(toks, 4, "<start> <end> <state|*> <action>")
            s = None if toks[2].text == "*" else look(st, toks[2], "state")
            entries.append(ScheduleEntry(_int(toks[0]), _int(toks[1]), s, look(ac, toks[3], "action")))
        if need_default and default is None:
            raise ScenarioError("schedule needs a 'default <action>' line", header.line, header.col)
        return Schedule(default, tuple(entries))

    schedules = {}
    for arg, tok, body in by_name.get("schedule", []):
        g = look(ag, _Tok(arg, tok.line, tok.col), "agent")
        if kinds[g] != "scripted":
            raise ScenarioError(f"schedule given for planning agent {arg!r}", tok.line, tok.col)
        schedules[g] = schedule(body, tok, True)
    overrides = {}
    for arg, tok, body in by_name.get("override", []):
        g = look(ag, _Tok(arg, tok.line, tok.col), "agent")
        if kinds[g] != "repnet":
            raise ScenarioError(f"override given for scripted agent {arg!r}", tok.line, tok.col)
        overrides[g] = schedule(body, tok, False)
    controllers = []
    for g, kind in enumerate(kinds):
        if kind == "scripted":
            if g not in schedules:
                raise ScenarioError(f"scripted agent {agents[g]!r} has no [schedule {agents[g]}]", 1, 1)
            controllers.append(schedules[g])
        else:
            controllers.append(None)

    knowledge = {}
    inits, init_tok = {}, {}
    for arg, tok, body in by_name.get("initial", []):
        g = look(ag, _Tok(arg, tok.line, tok.col), "agent")
        inits[g], init_tok[g] = body, tok
    for g, kind in enumerate(kinds):
        if kind != "repnet":
            continue
        k = AgentKnowledge.initial(system, g, SubjectiveTransitions(curves[g]))
        ad, img = np.array(k.ad), np.array(k.img)
        for toks in inits.get(g, []):
            if toks[0].text == "img":
                need(toks, 4, "img <about> <holder> <value>")
                img[look(ag, toks[1], "agent"), look(ag, toks[2], "agent")] = _num(toks[3])
            elif toks[0].text == "ad":
                need(toks, 4, "ad <agent> <state> <action>=<prob> ...")
                h, s = look(ag, toks[1], "agent"), look(st, toks[2], "state")
                row = np.zeros(A)
                for t in toks[3:]:
                    if t.text.count("=") != 1:
                        raise ScenarioError("row entries are written '<action>=<prob>'", t.line, t.col)
                    an, pv = t.text.split("=")
                    row[look(ac, _Tok(an, t.line, t.col), "action")] = _num(
                        _Tok(pv, t.line, t.col + len(an) + 1))
                ad[h, s] = row
            else:
                raise ScenarioError(f"unknown initial entry {toks[0].text!r}", toks[0].line, toks[0].col)
        knowledge[g] = k.replace(ad=ad, img=img)
    for g in inits:
        if kinds[g] != "repnet":
            tok = init_tok[g]
            raise ScenarioError(f"[initial {agents[g]}] given for a scripted agent", tok.line, tok.col)

    hyper_kw = {}
    for _, _, body in by_name.get("hyper", []):
        for toks in body:
            key = toks[0].text
            if key not in HYPER_KEYS:
                raise ScenarioError(f"unknown hyperparameter {key!r}", toks[0].line, toks[0].col)
            need(toks, 2, f"{key} <value>")
            conv = HYPER_KEYS[key]
            hyper_kw[key] = (_int(toks[1]) if conv is int else _num(toks[1]) if conv is float
                             else toks[1].text)
    try:
        hyper = Hyperparameters(**hyper_kw)
    except ValueError as exc:
        raise ScenarioError(f"bad hyperparameters: {exc}") from None

    rep, ads, offers, index, index_agent = [], [], [], {}, None
    for _, _, body in by_name.get("metrics", []):
        for toks in body:
            kind = toks[0].text
            if kind == "rep":
                need(toks, 3, "rep <observer> <agent>")
                rep.append((look(ag, toks[1], "agent"), look(ag, toks[2], "agent")))
            elif kind == "ad":
                need(toks, 5, "ad <observer> <agent> <state> <action>")
                ads.append((look(ag, toks[1], "agent"), look(ag, toks[2], "agent"),
                            look(st, toks[3], "state"), look(ac, toks[4], "action")))
            elif kind == "offer":
                need(toks, 2, "offer <action> ...")
                offers.extend(look(ac, t, "action") for t in toks[1:])
            elif kind == "index":
                need(toks, 4, "index <agent> <action> <value> ...")
                index_agent = look(ag, toks[1], "agent")
                if len(toks[2:]) % 2:
                    raise ScenarioError("index entries come in '<action> <value>' pairs",
                                        toks[-1].line, toks[-1].col)
                for at, vt in zip(toks[2::2], toks[3::2]):
                    index[look(ac, at, "action")] = _num(vt)
            else:
                raise ScenarioError(f"unknown metric {kind!r}", toks[0].line, toks[0].col)
    metrics = MetricSpec(tuple(ads), tuple(rep), tuple(offers), index, index_agent)

    s0 = 0 if initial_state is None else look(st, initial_state, "state")
    scenario = Scenario(p.meta.get("name", ""), p.meta.get("description", ""), system, knowledge,
                        tuple(controllers), hyper, overrides, metrics, s0)
    report = scenario.validate()
    if report:
        raise ScenarioError("scenario failed validation: " + "; ".join(str(v) for v in report),
                            violations=report)
    return scenario


def _fmt(x: float) -> str:
    return repr(float(x))


def dump_scenario(sc: Scenario) -> str:
    """Serialise with every entry explicit; ``parse_scenario`` reads it back to an equal model."""
    sysm = sc.system
    A, S, X = sysm.agents, sysm.states, sysm.actions
    out = [f"{HEADER} {VERSION}"]
    if sc.name:
        out.append(f"name: {sc.name}")
    if sc.description:
        out.append(f"description: {sc.description}")
    out += ["", "[agents]"]
    out += [f"{n} {'repnet' if c is None else 'scripted'}" for n, c in zip(A, sc.controllers)]
    out += ["", "[states]", " ".join(S), f"initial {S[sc.initial_state]}", "", "[actions]"]
    out += [f"{n} {k}" for n, k in zip(X, sysm.action_kinds)]
    if sysm.counterparts:
        out += ["", "[counterparts]"]
        out += [f"{X[o]} {X[s]}" for o, s in sorted(sysm.counterparts.items())]
    out += ["", "[impacts]"]
    for g, h, s, a in np.argwhere(sysm.impact != 0.0):
        out.append(f"{A[g]} {A[h]} {S[s]} {X[a]} {_fmt(sysm.impact[g, h, s, a])}")
    out += ["", "[transitions]"]
    for h, s, a in np.argwhere(sysm.ot_defined):
        row = sysm.ot[h, s, a]
        dests = " ".join(f"{S[d]} {_fmt(row[d])}" for d in np.flatnonzero(row))
        out.append(f"{A[h]} {S[s]} {X[a]} -> {dests}".rstrip())
    for g in sorted(sc.knowledge):
        k = sc.knowledge[g]
        if k.st.curves:
            out += ["", f"[subjective {A[g]}]"]
            for (h, s, a), dests in sorted(k.st.curves.items()):
                for d, pts in sorted(dests.items()):
                    bps = " ".join(f"{_fmt(r)}:{_fmt(p)}" for r, p in pts)
                    out.append(f"{A[h]} {S[s]} {X[a]} {S[d]} {bps}")
        base = AgentKnowledge.initial(sysm, g)
        lines = []
        for h, i in np.argwhere(k.img != base.img):
            lines.append(f"img {A[h]} {A[i]} {_fmt(k.img[h, i])}")
        for h, s in np.ndindex(sysm.n_agents, sysm.n_states):
            if not np.array_equal(k.ad[h, s], base.ad[h, s]):
                ent = " ".join(f"{X[a]}={_fmt(k.ad[h, s, a])}" for a in np.flatnonzero(k.ad[h, s]))
                lines.append(f"ad {A[h]} {S[s]} {ent}")
        if lines:
            out += ["", f"[initial {A[g]}]"] + lines

    def sched(title, sch):
        lines = ["", title]
        if sch.default is not None:
            lines.append(f"default {X[sch.default]}")
        for e in sch.entries:
            lines.append(f"{e.start} {e.end} {'*' if e.state is None else S[e.state]} {X[e.action]}")
        return lines

    for g, c in enumerate(sc.controllers):
        if c is not None:
            out += sched(f"[schedule {A[g]}]", c)
    for g, c in sorted(sc.overrides.items()):
        out += sched(f"[override {A[g]}]", c)
    h = sc.hyper
    out += ["", "[hyper]", f"depth {h.depth}", f"gamma {_fmt(h.gamma)}", f"eta {_fmt(h.eta)}",
            f"delta {_fmt(h.delta)}", f"horizon {h.horizon}", f"seed {h.seed}", f"scope {h.scope}"]
    m = sc.metrics
    mlines = [f"rep {A[g]} {A[x]}" for g, x in m.rep]
    mlines += [f"ad {A[g]} {A[x]} {S[s]} {X[a]}" for g, x, s, a in m.ad]
    if m.offer_actions:
        mlines.append("offer " + " ".join(X[a] for a in m.offer_actions))
    if m.action_index:
        pairs = " ".join(f"{X[a]} {_fmt(v)}" for a, v in m.action_index.items())
        mlines.append(f"index {A[m.index_agent]} {pairs}")
    if mlines:
        out += ["", "[metrics]"] + mlines
    return "\n".join(out) + "\n"


def bundled_names() -> list[str]:
    root = resources.files(__package__).joinpath("scenarios")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".scn"))


def bundled_text(name: str) -> str:
    return resources.files(__package__).joinpath("scenarios", f"{name}.scn").read_text()


def load_scenario(ref: str | Path) -> Scenario:
    """Read a scenario file, or a bundled one by name (``exp1`` or ``experiments/exp1``)."""
    path = Path(ref)
    if path.is_file():
        return parse_scenario(path.read_text())
    name = path.name[:-4] if path.name.endswith(".scn") else path.name
    if name in bundled_names():
        return parse_scenario(bundled_text(name))
    raise FileNotFoundError(f"no scenario file or bundled scenario named {str(ref)!r}")
