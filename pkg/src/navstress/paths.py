"""Output locations and environment-driven defaults."""

from __future__ import annotations

import os
from pathlib import Path

APP_NAME = "navstress"
ENV_OUT = "NAVSTRESS_OUT"
ENV_WORKERS = "NAVSTRESS_WORKERS"


def default_out_root() -> Path:
    """Root under which commands without ``--out`` write their artefacts.

    ``$NAVSTRESS_OUT`` wins; otherwise the XDG state directory is used
    (``$XDG_STATE_HOME/navstress/runs``, falling back to
    ``~/.local/state/navstress/runs``).
    """
    override = os.environ.get(ENV_OUT)
    if override:
        return Path(override)
    state_home = os.environ.get("XDG_STATE_HOME") or str(Path.home() / ".local" / "state")
    return Path(state_home) / APP_NAME / "runs"


def default_workers() -> int:
    """Worker count from ``$NAVSTRESS_WORKERS``, else 1.

    Raises:
        ValueError: The variable is set but not a positive integer.
    """
    raw = os.environ.get(ENV_WORKERS, "").strip()
    if not raw:
        return 1
    n = int(raw)
    if n < 1:
        raise ValueError(f"{ENV_WORKERS} must be a positive integer, got {raw!r}")
    return n
