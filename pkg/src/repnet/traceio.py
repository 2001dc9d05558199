"""CSV output for traces and windowed metrics."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from .simulator import MetricSeries, Trace

TRACE_COLUMNS = ["t", "agent", "action", "state_before", "state_after", "root_value"]


def fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.9g}"


def trace_rows(trace: Trace):
    sysm = trace.system
    names = trace.metric_names()
    # the planner's choice is always tracked, ahead of the declared metrics
    yield TRACE_COLUMNS + ["preferred"] + names
    for r in trace.records:
        yield ([str(r.t), sysm.agents[r.agent], sysm.actions[r.action], sysm.states[r.state_before],
                sysm.states[r.state_after], fmt(r.root_value), sysm.actions[r.preferred]]
               + [fmt(r.values[n]) for n in names])


def metric_rows(metrics: MetricSeries):
    yield ["window_start", "offer_frequency", "average_action"]
    for w, f, a in zip(metrics.window_starts, metrics.offer_frequency, metrics.average_action):
        yield [str(int(w)), fmt(float(f)), fmt(float(a))]


def _write(rows, destination) -> int:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    data = buf.getvalue().encode()
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        Path(destination).write_bytes(data)
    return len(data)


def emit_trace_csv(trace: Trace, metrics: MetricSeries | None, destination) -> int:
    """Write the per-turn trace; if ``destination`` is a directory, also ``metrics.csv`` there.

    Returns the number of bytes written for the trace file.
    """
    dest = Path(destination) if not hasattr(destination, "write") else None
    if dest is not None and dest.is_dir():
        n = _write(trace_rows(trace), dest / "trace.csv")
        if metrics is not None:
            _write(metric_rows(metrics), dest / "metrics.csv")
        return n
    return _write(trace_rows(trace), destination)


def emit_metrics_csv(metrics: MetricSeries, destination) -> int:
    return _write(metric_rows(metrics), destination)
