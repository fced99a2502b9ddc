"""Event logs: a multiset of traces over a finite alphabet of event labels.

Two on-disk formats are supported.

Plain trace text (read/write), UTF-8, one trace per line::

    line    := [count "x "] events
    events  := "ε" | label ("," label)*
    count   := decimal integer >= 1

Labels are stripped of surrounding whitespace and must be non-empty; a label
cannot contain a comma or a newline, and cannot be the reserved silent label
``τ`` or the empty-trace marker ``ε``.  Blank lines are ignored, so the empty
trace must be written as ``ε``.  A line whose first label looks like
``<digits>x <rest>`` is always read as a multiplicity prefix; the writer then
emits an explicit ``1x`` so such traces survive a round trip.

XES (read only): the ``concept:name`` string attribute of every ``event``
inside every ``trace``; everything else is ignored.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping

from .exceptions import ParseError

TAU_TEXT = "τ"
EMPTY_TRACE_TEXT = "ε"

Trace = tuple[str, ...]

_COUNT_PREFIX = re.compile(r"^(\d+)x (.*)$")


class EventLog(Mapping):
    """Immutable multiset of traces.

    Behaves as a read-only mapping ``trace -> count``.  ``support`` is the set
    view used by every downstream semantic operation.
    """

    __slots__ = ("_counts", "_alphabet")

    def __init__(self, traces: Mapping[Trace, int] | Iterable[Iterable[str]] = ()):
        counts: Counter = Counter()
        if isinstance(traces, Mapping):
            for trace, n in traces.items():
                if n < 1:
                    raise ValueError(f"trace count must be positive, got {n}")
                counts[_as_trace(trace)] += int(n)
        else:
            for trace in traces:
                counts[_as_trace(trace)] += 1
        self._counts = dict(counts)
        self._alphabet = frozenset(e for t in self._counts for e in t)

    def __getitem__(self, trace):
        return self._counts[tuple(trace)]

    def __iter__(self) -> Iterator[Trace]:
        return iter(self._counts)

    def __len__(self):
        return len(self._counts)

    def __eq__(self, other):
        if isinstance(other, EventLog):
            return self._counts == other._counts
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._counts.items()))

    def __repr__(self):
        return f"EventLog({len(self)} distinct traces, alphabet={len(self._alphabet)})"

    @property
    def alphabet(self) -> frozenset[str]:
        return self._alphabet

    @property
    def support(self) -> frozenset[Trace]:
        return frozenset(self._counts)

    def sorted_traces(self) -> list[Trace]:
        return sorted(self._counts)


def _as_trace(trace) -> Trace:
    trace = tuple(trace)
    for label in trace:
        _check_label(label)
    return trace


def _check_label(label, line=None):
    if not isinstance(label, str) or not label:
        raise ParseError(f"event label must be a non-empty string, got {label!r}", line)
    if label == TAU_TEXT:
        raise ParseError("the silent label τ cannot occur in an event log", line)
    if label == EMPTY_TRACE_TEXT:
        raise ParseError("ε is reserved for the empty trace", line)


def parse_traces_text(data: bytes | str) -> EventLog:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not valid UTF-8: {exc}") from None
    counts: Counter = Counter()
    for lineno, raw in enumerate(data.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        count = 1
        m = _COUNT_PREFIX.match(line)
        if m:
            count = int(m.group(1))
            if count < 1:
                raise ParseError("multiplicity must be at least 1", lineno)
            line = m.group(2).strip()
        if line == EMPTY_TRACE_TEXT:
            trace: Trace = ()
        else:
            trace = tuple(part.strip() for part in line.split(","))
            for label in trace:
                if not label:
                    raise ParseError("empty event label", lineno)
                _check_label(label, lineno)
        counts[trace] += count
    return EventLog(counts)


def _check_writable(label):
    if "," in label or len(label.splitlines()) != 1 or label != label.strip():
        raise ValueError(f"label {label!r} cannot be written in the trace text format")


def serialize_traces_text(log: EventLog) -> bytes:
    """Sorted traces, one per line; a count prefix is written when needed."""
    lines = []
    for trace in log.sorted_traces():
        for label in trace:
            _check_writable(label)
        body = ",".join(trace) if trace else EMPTY_TRACE_TEXT
        n = log[trace]
        ambiguous = _COUNT_PREFIX.match(body) is not None
        lines.append(f"{n}x {body}" if n > 1 or ambiguous else body)
    return ("\n".join(lines) + "\n" if lines else "").encode("utf-8")


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def parse_xes(data: bytes | str) -> EventLog:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise ParseError(f"malformed XML: {exc}") from None
    counts: Counter = Counter()
    traces = [el for el in root.iter() if _local(el.tag) == "trace"]
    for ti, trace_el in enumerate(traces, start=1):
        labels = []
        for ei, event_el in enumerate(
            (c for c in trace_el if _local(c.tag) == "event"), start=1
        ):
            name = None
            for attr in event_el:
                if _local(attr.tag) == "string" and attr.get("key") == "concept:name":
                    name = attr.get("value")
                    break
            if name is None:
                raise ParseError(f"trace {ti}, event {ei}: missing concept:name")
            _check_label(name)
            labels.append(name)
        counts[tuple(labels)] += 1
    return EventLog(counts)


def filter_top_k(log: EventLog, k: int) -> EventLog:
    """Keep the ``k`` most frequent distinct traces.

    Ties are broken by lexicographic trace order so the result is
    deterministic.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    if k >= len(log):
        return log
    ranked = sorted(log, key=lambda t: (-log[t], t))
    return EventLog({t: log[t] for t in ranked[:k]})


def log_stats(log: EventLog) -> dict[str, int]:
    return {
        "event_occurrences": sum(n * len(t) for t, n in log.items()),
        "trace_occurrences": sum(log.values()),
        "unique_events": len(log.alphabet),
    }


def read_log(path) -> EventLog:
    """Read a log file, choosing the parser from the file extension."""
    with open(path, "rb") as fh:
        data = fh.read()
    if str(path).lower().endswith(".xes"):
        return parse_xes(data)
    return parse_traces_text(data)
