"""Trace serialization (CSV and JSON).

CSV files carry the header ``t,step,constraint_violation,kkt_total,dist_to_opt``
with floats at 17 significant digits, followed by one trailing comment line
holding the run counters. A missing ``dist_to_opt`` is written as an empty
field.
"""

from __future__ import annotations

import json
from pathlib import Path

from .core import Trace, TraceSample

CSV_COLUMNS = ("t", "step", "constraint_violation", "kkt_total", "dist_to_opt")


def _g(v):
    return "" if v is None else format(v, ".17g")


def write_trace_csv(trace, path):
    path = Path(path)
    with path.open("w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for s in trace.samples:
            fh.write(f"{_g(s.t)},{s.step},{_g(s.constraint_violation)},"
                     f"{_g(s.kkt_total)},{_g(s.dist_to_opt)}\n")
        fh.write(f"# accepted_steps={trace.accepted_steps} "
                 f"rejected_steps={trace.rejected_steps} "
                 f"wall_time={_g(trace.wall_time)}\n")
    return path


def read_trace_csv(path):
    trace = Trace()
    with Path(path).open() as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                meta = dict(kv.split("=") for kv in line[1:].split())
                trace.accepted_steps = int(meta["accepted_steps"])
                trace.rejected_steps = int(meta["rejected_steps"])
                trace.wall_time = float(meta["wall_time"])
                continue
            t, step, viol, kkt, dist = line.split(",")
            trace.samples.append(TraceSample(
                float(t), int(step), float(viol), float(kkt),
                None if dist == "" else float(dist)))
    return trace


def trace_to_dict(trace):
    return {
        "accepted_steps": trace.accepted_steps,
        "rejected_steps": trace.rejected_steps,
        "wall_time": trace.wall_time,
        "samples": [
            {"t": s.t, "step": s.step, "constraint_violation": s.constraint_violation,
             "kkt_total": s.kkt_total, "dist_to_opt": s.dist_to_opt}
            for s in trace.samples
        ],
    }


def trace_from_dict(data):
    trace = Trace(accepted_steps=int(data["accepted_steps"]),
                  rejected_steps=int(data["rejected_steps"]),
                  wall_time=float(data["wall_time"]))
    for s in data["samples"]:
        trace.samples.append(TraceSample(
            float(s["t"]), int(s["step"]), float(s["constraint_violation"]),
            float(s["kkt_total"]),
            None if s["dist_to_opt"] is None else float(s["dist_to_opt"])))
    return trace


def write_trace_json(trace, path):
    path = Path(path)
    path.write_text(json.dumps(trace_to_dict(trace)))
    return path


def read_trace_json(path):
    return trace_from_dict(json.loads(Path(path).read_text()))


def write_trace(trace, path, fmt="csv"):
    if fmt == "csv":
        return write_trace_csv(trace, path)
    if fmt == "json":
        return write_trace_json(trace, path)
    raise ValueError(f"unknown format {fmt!r}")


def read_trace(path, fmt=None):
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".")
    if fmt == "csv":
        return read_trace_csv(path)
    if fmt == "json":
        return read_trace_json(path)
    raise ValueError(f"unknown format {fmt!r}")


def samples_equal(a, b, check_wall_time=True):
    """Field-wise equality of the serialized part of two traces.

    Pass ``check_wall_time=False`` to compare two separate runs.
    """
    if (a.accepted_steps, a.rejected_steps) != (b.accepted_steps, b.rejected_steps):
        return False
    if check_wall_time and a.wall_time != b.wall_time:
        return False
    if len(a.samples) != len(b.samples):
        return False
    for sa, sb in zip(a.samples, b.samples):
        if (sa.t, sa.step, sa.constraint_violation, sa.kkt_total, sa.dist_to_opt) != \
                (sb.t, sb.step, sb.constraint_violation, sb.kkt_total, sb.dist_to_opt):
            return False
    return True
