"""Subprocess-backed subject speaking line-delimited JSON.

Protocol (one JSON object per line, every request answered by exactly one
reply line)::

    -> {"type": "reset", "seed": 7, "robot": {"footprint_length": 1.05, ...}}
    <- {"ok": true}
    -> {"type": "step", "t": 0.05, "robot_pose": {"x": 0, "y": 0, "yaw": 1.57},
        "current_waypoint": {...}, "final_waypoint": true,
        "visible_obstacles": [{"box": {...}}, {"cylinder": {...}}]}
    <- {"vx": 0.5, "vy": 0.0, "wyaw": 0.0}
    -> {"type": "close"}

Angles are radians. The reset is sent lazily before the first step of each
test because the robot configuration only arrives with the first snapshot.
"""

from __future__ import annotations

import dataclasses
import logging
import shlex
from dataclasses import dataclass
from typing import Any, Dict, Optional

from ..errors import SubjectError, ValidationError
from . import SensorSnapshot, Subject, VelocityCommand, parse_params
from ._subprocess import JsonLineProcess

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExternalParams:
    cmd: str = ""
    timeout: float = 5.0


def _pose(p) -> Dict[str, float]:
    return {"x": p.x, "y": p.y, "yaw": p.yaw}


def snapshot_message(snapshot: SensorSnapshot) -> Dict[str, Any]:
    from ..scenario import shape_to_dict

    return {
        "type": "step",
        "t": snapshot.t,
        "robot_pose": _pose(snapshot.robot_pose),
        "current_waypoint": _pose(snapshot.current_waypoint),
        "final_waypoint": snapshot.final_waypoint,
        "visible_obstacles": [shape_to_dict(s) for s in snapshot.visible_obstacles],
    }


class ExternalSubject(Subject):
    """Drives an external planner process through :class:`JsonLineProcess`."""

    kind = "external"

    def __init__(self, params=None) -> None:
        super().__init__(params)
        self.p = parse_params(ExternalParams, self.params)
        if not self.p.cmd.strip():
            raise ValidationError("external subject needs a command (--cmd)")
        self.argv = shlex.split(self.p.cmd)
        self._proc: Optional[JsonLineProcess] = None
        self._pending_seed: Optional[int] = 0

    def _process(self) -> JsonLineProcess:
        if self._proc is not None and self._proc.proc.poll() is not None:
            self._proc.close()
            self._proc = None
        if self._proc is None:
            log.debug("starting external subject %s", self.argv)
            self._proc = JsonLineProcess(self.argv, timeout=self.p.timeout)
        return self._proc

    def reset(self, seed: int = 0) -> None:
        self._pending_seed = seed

    def plan(self, snapshot: SensorSnapshot, config) -> VelocityCommand:
        proc = self._process()
        if self._pending_seed is not None:
            reply = proc.request({"type": "reset", "seed": self._pending_seed, "robot": dataclasses.asdict(config)})
            if reply.get("ok") is not True:
                raise SubjectError(f"reset rejected: {reply}")
            self._pending_seed = None
        reply = proc.request(snapshot_message(snapshot))
        try:
            return VelocityCommand(float(reply["vx"]), float(reply["vy"]), float(reply["wyaw"]))
        except (KeyError, TypeError, ValueError) as e:
            raise SubjectError(f"bad step reply {reply}: {e}") from e

    def close(self) -> None:
        if self._proc is not None:
            self._proc.close({"type": "close"})
            self._proc = None
