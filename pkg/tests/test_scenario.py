import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from repnet.model import Hyperparameters
from repnet.scenario import (Scenario, ScenarioError, bundled_names, bundled_text, dump_scenario, load_scenario,
                             parse_scenario)
from repnet.simulator import MetricSpec, Schedule, ScheduleEntry, derive_metrics, run_episode

from conftest import random_model
from repnet.traceio import TRACE_COLUMNS, emit_metrics_csv, emit_trace_csv

MINIMAL = """repnet-scenario 1
[agents]
A repnet
[states]
s0 s1
[actions]
go objective
stay objective
[impacts]
A A s1 stay 0.5
[transitions]
A * go -> s1 1
A * stay -> = 1
"""


def test_bundled_scenarios_parse_and_validate():
    assert set(bundled_names()) >= {"exp1", "exp1_objective", "exp2"}
    for name in bundled_names():
        sc = load_scenario(name)
        assert sc.validate() == []
        assert sc.name == name


def test_exp1_encodes_the_three_phases():
    sc = load_scenario("experiments/exp1")
    sysm = sc.system
    B = sysm.agent("B")
    sched = sc.controllers[B]
    s1 = sysm.state("s1")
    phases = [(t, sysm.actions[e.action]) for t in (0, 19, 20, 79, 80, 99)
              for e in sched.entries if e.matches(s1, t)]
    assert phases == [(0, "refuse"), (19, "refuse"), (20, "accept"), (79, "accept"),
                      (80, "refuse"), (99, "refuse")]
    assert sc.planning_agents() == [sysm.agent("A")]
    h = sc.hyper
    assert (h.depth, h.gamma, h.eta, h.horizon) == (3, 0.7, 0.1, 100)
    # uniform prior over the six actions
    assert sc.knowledge[0].ad[B, s1, sysm.action("accept")] == pytest.approx(1 / 6)


def test_exp2_phase_boundaries():
    sc = load_scenario("exp2")
    sysm = sc.system
    A = sysm.agent("A")
    forced = sc.overrides[A]
    assert [e.start for e in forced.entries] == [66]
    assert [e.end for e in forced.entries] == [100]
    B = sc.controllers[sysm.agent("B")]
    o_B = sysm.state("o_B")
    assert [sysm.actions[a] for a in (
        next(e.action for e in B.entries if e.matches(o_B, t)) for t in (32, 33, 65))] == \
        ["refuse", "accept", "accept"]


def test_defaults_applied_when_hyper_omitted():
    sc = parse_scenario(MINIMAL)
    assert sc.hyper == Hyperparameters()
    h = sc.hyper
    assert (h.depth, h.gamma, h.eta, h.delta) == (3, 0.7, 0.1, 0.5)
    assert sc.initial_state == 0
    assert sc.name == ""


def test_fractions_and_same_state_destination():
    sc = parse_scenario(MINIMAL.replace("A * go -> s1 1", "A * go -> s1 1/3 = 2/3"))
    sysm = sc.system
    assert sysm.ot[0, 0, 0].tolist() == pytest.approx([2 / 3, 1 / 3])
    assert sysm.ot[0, 1, 0].tolist() == pytest.approx([0.0, 1.0])


def test_ot_row_not_summing_to_one_names_the_row():
    text = MINIMAL.replace("A * go -> s1 1", "A * go -> s1 0.8")
    with pytest.raises(ScenarioError) as err:
        parse_scenario(text)
    kinds = {v.kind for v in err.value.violations}
    assert kinds == {"ot_row_sum"}
    assert {v.location for v in err.value.violations} == {(0, 0, 0), (0, 1, 0)}


@pytest.mark.parametrize("text, line, col", [
    ("repnet-scenario 2\n", 1, 17),
    (MINIMAL.replace("A repnet", "A robot"), 3, 3),
    ("repnet-scenario 1\n[agents]\nA repnet\n", 1, 1),
    ("repnet-scenario 1\n[agents]\nA repnet\n[wat]\n", 4, 1),
    (MINIMAL + "[hyper]\ngama 0.5\n", 15, 1),
    (MINIMAL.replace("A A s1 stay 0.5", "A A s1 stay abc"), 10, 13),
    (MINIMAL.replace("A A s1 stay 0.5", "A Z s1 stay 0.5"), 10, 3),
])
def test_syntax_errors_carry_position(text, line, col):
    with pytest.raises(ScenarioError) as err:
        parse_scenario(text)
    assert (err.value.line, err.value.col) == (line, col)
    assert f"line {line}, column {col}" in str(err.value)


def test_schedule_without_default_rejected():
    text = bundled_text("exp1").replace("default wait\n", "")
    with pytest.raises(ScenarioError) as err:
        parse_scenario(text)
    assert "default" in str(err.value)
    assert err.value.line == text.splitlines().index("[schedule B]") + 1


def test_unknown_metric_rejected():
    with pytest.raises(ScenarioError):
        parse_scenario(MINIMAL + "[metrics]\nvolume A\n")


def test_empty_text_rejected():
    with pytest.raises(ScenarioError):
        parse_scenario("# nothing here\n")


def _equivalent(a, b):
    sa, sb = a.system, b.system
    assert (sa.agents, sa.states, sa.actions, sa.action_kinds) == (sb.agents, sb.states, sb.actions,
                                                                   sb.action_kinds)
    np.testing.assert_array_equal(sa.impact, sb.impact)
    np.testing.assert_array_equal(sa.ot, sb.ot)
    np.testing.assert_array_equal(sa.ot_defined, sb.ot_defined)
    assert dict(sa.counterparts) == dict(sb.counterparts)
    for g in a.knowledge:
        ka, kb = a.knowledge[g], b.knowledge[g]
        assert ka.st == kb.st
        np.testing.assert_array_equal(ka.ad, kb.ad)
        np.testing.assert_array_equal(ka.img, kb.img)
    assert a.controllers == b.controllers
    assert dict(a.overrides) == dict(b.overrides)
    assert a.hyper == b.hyper
    assert a.metrics == b.metrics
    assert (a.name, a.description, a.initial_state) == (b.name, b.description, b.initial_state)


@pytest.mark.parametrize("name", ["exp1", "exp1_objective", "exp2"])
def test_dump_parse_round_trip(name):
    sc = load_scenario(name)
    text = dump_scenario(sc)
    again = parse_scenario(text)
    _equivalent(sc, again)
    assert dump_scenario(again) == text


@settings(max_examples=1000, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_round_trip_on_random_models(seed):
    rng = np.random.default_rng(seed)
    sysm, k, theta = random_model(rng)
    obj = sysm.objective_actions()
    controllers = tuple(None if g == k.owner else
                        Schedule(obj[0], (ScheduleEntry(0, 5, None, obj[-1]),))
                        for g in range(sysm.n_agents))
    hyper = Hyperparameters(depth=int(rng.integers(0, 4)), gamma=float(rng.uniform(0, 1)),
                            eta=float(rng.uniform(0, 1)), delta=float(rng.uniform(0, 1)),
                            horizon=int(rng.integers(0, 50)), seed=int(rng.integers(0, 99)),
                            scope=("restricted", "literal")[seed % 2])
    metrics = MetricSpec(ad=((k.owner, 0, theta.state, obj[0]),), rep=((k.owner, 0),),
                         offer_actions=(obj[0],), action_index={obj[0]: 0.25}, index_agent=k.owner)
    sc = Scenario("random", "generated", sysm, {k.owner: k}, controllers, hyper, {}, metrics,
                  theta.state)
    again = parse_scenario(dump_scenario(sc))
    _equivalent(sc, again)


def test_load_from_file(tmp_path):
    p = tmp_path / "mine.scn"
    p.write_text(bundled_text("exp1"))
    _equivalent(load_scenario(p), load_scenario("exp1"))
    with pytest.raises(FileNotFoundError):
        load_scenario(tmp_path / "missing.scn")


# --- CSV traces ------------------------------------------------------------

def _run(name, steps):
    sc = load_scenario(name)
    hyper = Hyperparameters(**{**sc.hyper.__dict__, "horizon": steps})
    trace = run_episode(sc, hyper)
    return trace, derive_metrics(trace)


def test_empty_trace_is_header_only():
    trace, metrics = _run("exp1", 0)
    buf = io.BytesIO()
    n = emit_trace_csv(trace, metrics, buf)
    data = buf.getvalue().decode()
    assert n == len(buf.getvalue())
    assert data.count("\n") == 1
    assert data.startswith(",".join(TRACE_COLUMNS))


def test_exp1_run_gives_200_rows_that_round_trip(tmp_path):
    trace, metrics = _run("exp1", 100)
    n = emit_trace_csv(trace, metrics, tmp_path)
    raw = (tmp_path / "trace.csv").read_bytes()
    assert n == len(raw)
    assert raw.endswith(b"\n")
    rows = list(csv.reader(io.StringIO(raw.decode())))
    header, body = rows[0], rows[1:]
    assert header[:6] == TRACE_COLUMNS
    assert header[7:] == trace.metric_names()
    assert len(body) == 200
    assert {len(r) for r in body} == {len(header)}
    for rec, row in zip(trace.records, body):
        assert int(row[0]) == rec.t
        assert row[1] == trace.system.agents[rec.agent]
        assert row[2] == trace.system.actions[rec.action]
        if row[5] != "nan":
            assert float(row[5]) == pytest.approx(rec.root_value, rel=1e-8)
        for name, cell in zip(header[7:], row[7:]):
            assert float(cell) == pytest.approx(rec.values[name], rel=1e-8, abs=1e-12)
    mrows = list(csv.reader(io.StringIO((tmp_path / "metrics.csv").read_text())))
    assert mrows[0] == ["window_start", "offer_frequency", "average_action"]
    assert len(mrows) == 1 + 20


def test_same_trace_twice_is_byte_identical(tmp_path):
    trace, metrics = _run("exp1", 30)
    emit_trace_csv(trace, None, tmp_path / "a.csv")
    emit_trace_csv(trace, None, tmp_path / "b.csv")
    emit_metrics_csv(metrics, tmp_path / "a.m.csv")
    emit_metrics_csv(metrics, tmp_path / "b.m.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.m.csv").read_bytes() == (tmp_path / "b.m.csv").read_bytes()


def test_numbers_use_nine_significant_digits(tmp_path):
    trace, _ = _run("exp1", 5)
    emit_trace_csv(trace, None, tmp_path / "t.csv")
    rows = list(csv.reader(io.StringIO((tmp_path / "t.csv").read_text())))
    for row in rows[1:]:
        for cell in row[7:]:
            digits = cell.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
            assert len(digits) <= 9
