"""Input checks shared by the estimators and the command line."""

from __future__ import annotations

from collections.abc import Iterable, Mapping

from .event_log import EventLog
from .exceptions import PreconditionError
from .petri_net import NetSystem, is_free_choice, is_workflow_net


def check_event_log(log) -> EventLog:
    """Coerce a mapping of traces to counts or an iterable of traces into an EventLog."""
    if isinstance(log, EventLog):
        return log
    if isinstance(log, (str, bytes)):
        raise TypeError("expected traces, not a string; parse text with parse_traces_text first")
    if isinstance(log, Mapping) or isinstance(log, Iterable):
        return EventLog(log)
    raise TypeError(f"cannot interpret {type(log).__name__} as an event log")


def check_net_system(sys, *, require_free_choice: bool = False, require_workflow: bool = False) -> NetSystem:
    if not isinstance(sys, NetSystem):
        raise TypeError(f"expected a NetSystem, got {type(sys).__name__}")
    if require_workflow:
        wf = is_workflow_net(sys.net)
        if not wf.ok:
            raise PreconditionError("not a workflow net: " + "; ".join(wf.diagnostics))
    if require_free_choice:
        fc = is_free_choice(sys.net)
        if not fc.ok:
            raise PreconditionError(f"not free-choice: {fc.violations[0]}")
    return sys


def check_positive(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return value
