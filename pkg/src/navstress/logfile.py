"""Trajectory log persistence (newline-delimited JSON, ``.ndjson``).

One JSON object per line: a header record first, then one record per
sample, then one record per event::

    {"type":"header","schema":1,"test_name":"corridor","subject_id":"refnav_b","dt":0.05,"samples":412,"events":1}
    {"type":"sample","t":0.0,"x":0.0,"y":0.0,"yaw":1.5707963267948966,"vx":0.5,"vy":0.0,"wyaw":0.0,"d":0.725}
    {"type":"event","t":20.6,"kind":"GoalReached","detail":""}

The header carries record counts so truncated files are detected. An
infinite clearance (no obstacles) is written as ``null``. Floats use
Python's shortest round-trip representation, which keeps
``read_log(write_log(log)) == log`` exact.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

from .errors import LogFormatError
from .geometry import Pose2D
from .simulator import Event, EventKind, Sample, TrajectoryLog
from .subjects import VelocityCommand

LOG_SCHEMA = 1
LOG_SUFFIX = ".ndjson"


def _dumps(record: Dict[str, Any]) -> str:
    return json.dumps(record, separators=(",", ":"), allow_nan=False)


def _finite_or_none(v: float) -> Optional[float]:
    return v if math.isfinite(v) else None


def log_to_lines(log: TrajectoryLog) -> List[str]:
    """Encode *log* as NDJSON lines (without newlines)."""
    lines = [
        _dumps(
            {
                "type": "header",
                "schema": LOG_SCHEMA,
                "test_name": log.test_name,
                "subject_id": log.subject_id,
                "dt": log.dt,
                "samples": len(log.samples),
                "events": len(log.events),
            }
        )
    ]
    for s in log.samples:
        lines.append(
            _dumps(
                {
                    "type": "sample",
                    "t": s.t,
                    "x": s.pose.x,
                    "y": s.pose.y,
                    "yaw": s.pose.yaw,
                    "vx": s.command.vx,
                    "vy": s.command.vy,
                    "wyaw": s.command.wyaw,
                    "d": _finite_or_none(s.min_obstacle_distance),
                }
            )
        )
    for e in log.events:
        lines.append(_dumps({"type": "event", "t": e.t, "kind": e.kind.value, "detail": e.detail}))
    return lines


def write_log(log: TrajectoryLog, path: Path) -> Path:
    """Write *log* to *path*, creating parent directories."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(log_to_lines(log)) + "\n", encoding="utf-8")
    return path


def _record(line: str, lineno: int) -> Dict[str, Any]:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as e:
        raise LogFormatError(f"line {lineno}: not JSON ({e.msg})") from e
    if not isinstance(rec, dict) or "type" not in rec:
        raise LogFormatError(f"line {lineno}: expected a record object with a 'type'")
    return rec


def log_from_lines(lines: List[str], source: str = "<log>") -> TrajectoryLog:
    """Decode NDJSON lines produced by :func:`log_to_lines`.

    Raises:
        LogFormatError: Corrupt record, schema mismatch or truncation.
    """
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise LogFormatError(f"{source}: empty log")
    header = _record(lines[0], 1)
    if header.get("type") != "header":
        raise LogFormatError(f"{source}: first record must be the header")
    if header.get("schema") != LOG_SCHEMA:
        raise LogFormatError(f"{source}: log schema {header.get('schema')!r} is not supported (expected {LOG_SCHEMA})")

    try:
        log = TrajectoryLog(str(header["test_name"]), str(header["subject_id"]), float(header["dt"]))
        n_samples, n_events = int(header["samples"]), int(header["events"])
    except (KeyError, TypeError, ValueError) as e:
        raise LogFormatError(f"{source}: bad header: {e}") from e

    for lineno, line in enumerate(lines[1:], start=2):
        rec = _record(line, lineno)
        try:
            if rec["type"] == "sample":
                if log.events:
                    raise LogFormatError(f"{source}: line {lineno}: sample after events")
                d = rec["d"]
                log.samples.append(
                    Sample(
                        t=float(rec["t"]),
                        pose=Pose2D(float(rec["x"]), float(rec["y"]), float(rec["yaw"])),
                        command=VelocityCommand(float(rec["vx"]), float(rec["vy"]), float(rec["wyaw"])),
                        min_obstacle_distance=math.inf if d is None else float(d),
                    )
                )
            elif rec["type"] == "event":
                log.events.append(Event(float(rec["t"]), EventKind(rec["kind"]), str(rec.get("detail", ""))))
            else:
                raise LogFormatError(f"{source}: line {lineno}: unknown record type {rec['type']!r}")
        except (KeyError, TypeError, ValueError) as e:
            raise LogFormatError(f"{source}: line {lineno}: {e}") from e

    if len(log.samples) != n_samples or len(log.events) != n_events:
        raise LogFormatError(
            f"{source}: truncated log: header announces {n_samples} samples/{n_events} events, "
            f"found {len(log.samples)}/{len(log.events)}"
        )
    return log


def read_log(path: Path) -> TrajectoryLog:
    """Read a log written by :func:`write_log`."""
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise LogFormatError(f"{path}: not UTF-8 text") from e
    return log_from_lines(text.splitlines(), str(path))
