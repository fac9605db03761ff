"""Exception hierarchy shared by every module.

The CLI maps these onto its documented exit codes: validation -> 2,
authorization -> 3, log corruption -> 4.
"""

from __future__ import annotations


class MeshatError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(MeshatError):
    """Malformed or rule-violating input. Names the offending field."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class AuthorizationError(MeshatError):
    """Denied by the permission matrix. Carries the violated rule id."""

    def __init__(self, message: str, rule_id: str = "default-deny"):
        super().__init__(message)
        self.rule_id = rule_id


class StateError(MeshatError):
    """Operation not legal in the current course state."""


class NotFoundError(MeshatError):
    """Referenced course, group, actor or record does not exist."""


class CorruptLogError(MeshatError):
    """Event log failed validation on open. Carries the last intact seq."""

    def __init__(self, message: str, last_good_seq: int):
        super().__init__(message)
        self.last_good_seq = last_good_seq
