"""Exception hierarchy shared by every navstress module.

Library code raises these; only ``cli.main`` turns them into exit codes.
"""

from __future__ import annotations


class NavstressError(Exception):
    """Base class for all errors raised by navstress."""


class SchemaError(NavstressError):
    """A document has an unknown, missing or mistyped field.

    Attributes:
        path: Dotted path of the offending field (e.g. ``mission.waypoints[0].x``).
    """

    def __init__(self, path: str, message: str) -> None:
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ValidationError(NavstressError):
    """A structurally valid document breaks a semantic invariant."""


class SubjectError(NavstressError):
    """The navigation subject raised, diverged or broke its protocol."""


class UnknownSubject(NavstressError):
    """``make_subject`` was asked for a kind it does not know."""


class LogFormatError(NavstressError):
    """A trajectory log file is corrupt, truncated or from another version."""


class MalformedLog(NavstressError):
    """A trajectory log is not complete enough to classify or measure."""


class EmptySuite(NavstressError):
    """A suite with no members was handed to the runner."""


class EmptyResults(NavstressError):
    """Aggregation was asked to summarise zero results."""


class SuiteMismatch(NavstressError):
    """Two reports do not cover the same member tests."""


class SuiteFormatError(NavstressError):
    """A suite directory or manifest cannot be read."""


class OutputExists(NavstressError):
    """The output directory already exists and ``--force`` was not given."""
