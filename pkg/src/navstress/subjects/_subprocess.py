"""Line-delimited JSON conversation with a child process.

Centralises process start-up, request/response framing and error handling
(missing binary, early exit, slow or garbled replies) for the external
subject, so every failure surfaces as a :class:`SubjectError`.
"""

from __future__ import annotations

import json
import logging
import selectors
import subprocess
import tempfile
from typing import Any, Dict, List, Optional

from ..errors import SubjectError

log = logging.getLogger(__name__)


class JsonLineProcess:
    """A child process answering one JSON line per JSON line it is sent."""

    def __init__(self, cmd: List[str], *, timeout: float = 5.0) -> None:
        self.cmd = cmd
        self.timeout = timeout
        # A file, not a pipe: nothing drains stderr while the planner runs.
        self._stderr = tempfile.TemporaryFile(mode="w+", encoding="utf-8", errors="replace")
        try:
            self.proc = subprocess.Popen(
                cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=self._stderr,
                text=True,
                bufsize=1,
            )
        except FileNotFoundError:
            self._stderr.close()
            raise SubjectError(f"Command not found: {cmd[0]}")
        except PermissionError:
            self._stderr.close()
            raise SubjectError(f"Command not executable: {cmd[0]}")
        self._sel = selectors.DefaultSelector()
        self._sel.register(self.proc.stdout, selectors.EVENT_READ)

    def _stderr_tail(self) -> str:
        self._stderr.seek(0)
        return self._stderr.read().strip()[-500:]

    def request(self, message: Dict[str, Any]) -> Dict[str, Any]:
        """Send *message* and return the decoded reply.

        Raises:
            SubjectError: The process died, timed out or replied with
                something that is not a JSON object.
        """
        line = json.dumps(message, separators=(",", ":"))
        try:
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            raise SubjectError(f"Command exited ({self.proc.poll()}): {' '.join(self.cmd)}\n{self._stderr_tail()}")

        if not self._sel.select(self.timeout):
            raise SubjectError(f"no reply within {self.timeout}s to {message.get('type')!r}")
        reply = self.proc.stdout.readline()
        if not reply:
            self.proc.wait(timeout=1.0)
            raise SubjectError(f"Command failed ({self.proc.returncode}): {' '.join(self.cmd)}\n{self._stderr_tail()}")
        try:
            data = json.loads(reply)
        except json.JSONDecodeError as e:
            raise SubjectError(f"unparseable reply {reply.strip()[:200]!r}: {e}") from e
        if not isinstance(data, dict):
            raise SubjectError(f"reply must be a JSON object, got {reply.strip()[:200]!r}")
        return data

    def close(self, goodbye: Optional[Dict[str, Any]] = None) -> None:
        """Send *goodbye* if given, then make sure the process is gone."""
        if self.proc.poll() is None and goodbye is not None:
            try:
                self.proc.stdin.write(json.dumps(goodbye) + "\n")
                self.proc.stdin.flush()
            except (BrokenPipeError, OSError):
                pass
        try:
            self.proc.stdin.close()
        except (BrokenPipeError, OSError):
            pass
        try:
            self.proc.wait(timeout=self.timeout)
        except subprocess.TimeoutExpired:
            log.warning("external subject %s ignored close; killing it", self.cmd[0])
            self.proc.kill()
            self.proc.wait()
        self._sel.close()
        if self.proc.stdout is not None:
            self.proc.stdout.close()
        self._stderr.close()
