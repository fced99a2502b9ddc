"""Labelled Petri nets, net systems and workflow-net analysis.

Arcs are unweighted.  Silent transitions carry the label ``TAU`` (``None``);
every other label occurs on at most one transition.
"""

from __future__ import annotations

import random
from collections import deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property

from .exceptions import (
    PreconditionError,
    SimulationError,
    StateExplosionError,
    TransitionNotEnabled,
    UnboundedNetError,
)
from .transition_system import TAU, TransitionSystem

DEFAULT_MAX_STATES = 1_000_000
DEFAULT_MAX_STEPS = 10_000


class Marking(Mapping):
    """Immutable multiset of places.  Zero entries are never stored."""

    __slots__ = ("_items", "_hash")

    def __init__(self, tokens: Mapping[str, int] | Iterable[str] = ()):
        counts: dict[str, int] = {}
        if isinstance(tokens, Mapping):
            for p, n in tokens.items():
                if n < 0:
                    raise ValueError(f"negative token count for {p!r}")
                if n:
                    counts[p] = counts.get(p, 0) + int(n)
        else:
            for p in tokens:
                counts[p] = counts.get(p, 0) + 1
        self._items = tuple(sorted(counts.items()))
        self._hash = hash(self._items)

    def __getitem__(self, p):
        for q, n in self._items:
            if q == p:
                return n
        raise KeyError(p)

    def get(self, p, default=0):
        for q, n in self._items:
            if q == p:
                return n
        return default

    def __iter__(self):
        return (p for p, _ in self._items)

    def items(self):
        return self._items

    def values(self):
        return tuple(n for _, n in self._items)

    def __len__(self):
        return len(self._items)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Marking):
            return self._items == other._items
        if isinstance(other, Mapping):
            return self == Marking(other)
        return NotImplemented

    def __add__(self, other):
        counts = dict(self._items)
        for p, n in other.items():
            counts[p] = counts.get(p, 0) + n
        return Marking(counts)

    def __sub__(self, other):
        counts = dict(self._items)
        for p, n in other.items():
            left = counts.get(p, 0) - n
            if left < 0:
                raise ValueError(f"marking difference undefined at place {p!r}")
            counts[p] = left
        return Marking(counts)

    def __le__(self, other):
        return all(other.get(p, 0) >= n for p, n in self._items)

    def __lt__(self, other):
        return self <= other and self != other

    def total(self) -> int:
        return sum(n for _, n in self._items)

    def sort_key(self):
        return self._items

    def __repr__(self):
        parts = [p if n == 1 else f"{p}:{n}" for p, n in self._items]
        return "[" + ", ".join(parts) + "]"


@dataclass(frozen=True)
class PetriNet:
    places: frozenset
    transitions: frozenset
    arcs: frozenset
    labels: Mapping = field(compare=True)

    def __post_init__(self):
        object.__setattr__(self, "places", frozenset(self.places))
        object.__setattr__(self, "transitions", frozenset(self.transitions))
        object.__setattr__(self, "arcs", frozenset(self.arcs))
        object.__setattr__(self, "labels", dict(self.labels))
        if self.places & self.transitions:
            raise ValueError(f"ids used as both place and transition: {sorted(self.places & self.transitions)}")
        for src, tgt in self.arcs:
            ok = (src in self.places and tgt in self.transitions) or (
                src in self.transitions and tgt in self.places
            )
            if not ok:
                raise ValueError(f"arc {src!r} -> {tgt!r} does not connect a place and a transition")
        if set(self.labels) != set(self.transitions):
            raise ValueError("every transition needs exactly one label entry")
        seen = {}
        for t in sorted(self.transitions):
            label = self.labels[t]
            if label is TAU:
                continue
            if label in seen:
                raise ValueError(f"label {label!r} used by transitions {seen[label]!r} and {t!r}")
            seen[label] = t

    __hash__ = None

    @cached_property
    def pre(self) -> dict:
        pre = {t: set() for t in self.transitions}
        for src, tgt in self.arcs:
            if tgt in self.transitions:
                pre[tgt].add(src)
        return {t: frozenset(ps) for t, ps in pre.items()}

    @cached_property
    def post(self) -> dict:
        post = {t: set() for t in self.transitions}
        for src, tgt in self.arcs:
            if src in self.transitions:
                post[src].add(tgt)
        return {t: frozenset(ps) for t, ps in post.items()}

    @cached_property
    def place_inputs(self) -> dict:
        """Place -> transitions producing into it."""
        res = {p: set() for p in self.places}
        for t, ps in self.post.items():
            for p in ps:
                res[p].add(t)
        return {p: frozenset(ts) for p, ts in res.items()}

    @cached_property
    def place_outputs(self) -> dict:
        res = {p: set() for p in self.places}
        for t, ps in self.pre.items():
            for p in ps:
                res[p].add(t)
        return {p: frozenset(ts) for p, ts in res.items()}

    @cached_property
    def by_label(self) -> dict:
        return {lab: t for t, lab in self.labels.items() if lab is not TAU}

    @cached_property
    def sorted_transitions(self) -> list:
        return sorted(self.transitions)

    @property
    def visible_labels(self) -> frozenset:
        return frozenset(self.by_label)

    @property
    def size(self) -> int:
        return len(self.places) + len(self.transitions)

    def __repr__(self):
        return f"PetriNet({len(self.places)} places, {len(self.transitions)} transitions, {len(self.arcs)} arcs)"


@dataclass(frozen=True)
class NetSystem:
    net: PetriNet
    initial: Marking
    finals: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "initial", Marking(self.initial))
        object.__setattr__(self, "finals", frozenset(Marking(m) for m in self.finals))
        for m in (self.initial, *self.finals):
            unknown = set(m) - self.net.places
            if unknown:
                raise ValueError(f"marking refers to unknown places {sorted(unknown)}")

    __hash__ = None

    def sorted_finals(self) -> list:
        return sorted(self.finals, key=Marking.sort_key)


def preset(net: PetriNet, t) -> Marking:
    if t not in net.transitions:
        raise KeyError(f"unknown transition {t!r}")
    return Marking(net.pre[t])


def postset(net: PetriNet, t) -> Marking:
    if t not in net.transitions:
        raise KeyError(f"unknown transition {t!r}")
    return Marking(net.post[t])


def is_enabled(net: PetriNet, m: Marking, t) -> bool:
    return all(m.get(p, 0) >= 1 for p in net.pre[t])


def enabled_transitions(net: PetriNet, m: Marking) -> list:
    return [t for t in net.sorted_transitions if is_enabled(net, m, t)]


def fire(net: PetriNet, m: Marking, t) -> Marking:
    if t not in net.transitions:
        raise KeyError(f"unknown transition {t!r}")
    if not is_enabled(net, m, t):
        raise TransitionNotEnabled(f"transition {t!r} is not enabled in {m!r}")
    counts = dict(m.items())
    for p in net.pre[t]:
        counts[p] -= 1
    for p in net.post[t]:
        counts[p] = counts.get(p, 0) + 1
    return Marking(counts)


@dataclass(frozen=True)
class ReachabilityGraph(TransitionSystem):
    """Reachability graph; states are :class:`Marking` objects."""

    safe: bool = True
    unsafe_markings: tuple = ()
    firings: frozenset = frozenset()  # (marking, transition id, marking)


def _covered_ancestor(m, parent):
    if all(n <= 1 for n in m.values()):
        return None
    anc = parent.get(m)
    while anc is not None:
        if anc <= m:
            return anc
        anc = parent.get(anc)
    return None


def reachability_graph(sys: NetSystem, max_states: int = DEFAULT_MAX_STATES) -> ReachabilityGraph:
    """Explore all reachable markings breadth-first.

    Raises :class:`UnboundedNetError` as soon as a reachable marking strictly
    covers one of its ancestors, and :class:`StateExplosionError` when more
    than ``max_states`` markings are found.
    """
    if max_states < 1:
        raise ValueError("max_states must be positive")
    net = sys.net
    m0 = sys.initial
    seen = {m0}
    parent = {m0: None}
    queue = deque([m0])
    arcs = set()
    firings = set()
    unsafe = []
    if any(n > 1 for n in m0.values()):
        unsafe.append(m0)
    while queue:
        m = queue.popleft()
        for t in enabled_transitions(net, m):
            m2 = fire(net, m, t)
            arcs.add((m, net.labels[t], m2))
            firings.add((m, t, m2))
            if m2 in seen:
                continue
            parent[m2] = m
            anc = _covered_ancestor(m2, parent)
            if anc is not None:
                raise UnboundedNetError(
                    f"net is unbounded: {m2!r} strictly covers reachable ancestor {anc!r}", witness=m2
                )
            seen.add(m2)
            if len(seen) > max_states:
                raise StateExplosionError("reachability graph exceeded its state bound", max_states)
            if any(n > 1 for n in m2.values()):
                unsafe.append(m2)
            queue.append(m2)
    return ReachabilityGraph(
        frozenset(seen),
        frozenset(arcs),
        m0,
        frozenset(m for m in sys.finals if m in seen),
        net.visible_labels,
        safe=not unsafe,
        unsafe_markings=tuple(unsafe),
        firings=frozenset(firings),
    )


def _silent_closure(net, markings, max_states):
    closure = set(markings)
    stack = list(closure)
    silent = [t for t in net.sorted_transitions if net.labels[t] is TAU]
    while stack:
        m = stack.pop()
        for t in silent:
            if is_enabled(net, m, t):
                m2 = fire(net, m, t)
                if m2 not in closure:
                    closure.add(m2)
                    if len(closure) > max_states:
                        raise StateExplosionError("silent closure exceeded its state bound", max_states)
                    stack.append(m2)
    return frozenset(closure)


def _visible_step(net, current, label, max_states):
    t = net.by_label.get(label)
    if t is None:
        return frozenset()
    nxt = {fire(net, m, t) for m in current if is_enabled(net, m, t)}
    return _silent_closure(net, nxt, max_states) if nxt else frozenset()


def accepts(sys: NetSystem, trace, max_states: int = DEFAULT_MAX_STATES) -> bool:
    """Is ``trace`` feasible in the reachability graph of ``sys``?

    Explores markings on the fly, so it also answers for unbounded nets as
    long as the silent closures stay finite.
    """
    current = _silent_closure(sys.net, [sys.initial], max_states)
    for label in trace:
        current = _visible_step(sys.net, current, label, max_states)
        if not current:
            return False
    return any(m in sys.finals for m in current)


def language_bounded(sys: NetSystem, max_len: int, max_states: int = DEFAULT_MAX_STATES) -> set:
    """All accepted traces of length at most ``max_len``."""
    if max_len < 0:
        raise ValueError("max_len must be non-negative")
    net = sys.net
    result = set()
    frontier = {(): _silent_closure(net, [sys.initial], max_states)}
    for depth in range(max_len + 1):
        nxt = {}
        for word, cur in frontier.items():
            if any(m in sys.finals for m in cur):
                result.add(word)
            if depth == max_len:
                continue
            labels = {net.labels[t] for m in cur for t in enabled_transitions(net, m)}
            for label in labels - {TAU}:
                nxt[word + (label,)] = _visible_step(net, cur, label, max_states)
        frontier = nxt
    return result


@dataclass(frozen=True)
class FreeChoiceResult:
    ok: bool
    violations: tuple = ()

    def __bool__(self):
        return self.ok


def is_free_choice(net: PetriNet) -> FreeChoiceResult:
    ts = net.sorted_transitions
    violations = []
    for i, t1 in enumerate(ts):
        for t2 in ts[i + 1:]:
            p1, p2 = net.pre[t1], net.pre[t2]
            if p1 & p2 and p1 != p2:
                violations.append((t1, t2))
    return FreeChoiceResult(not violations, tuple(violations))


def clusters(net: PetriNet) -> list[frozenset]:
    """Groups of at least two non-silent transitions with identical non-empty presets."""
    groups: dict = {}
    for t in net.sorted_transitions:
        if net.labels[t] is TAU or not net.pre[t]:
            continue
        groups.setdefault(net.pre[t], []).append(t)
    found = [frozenset(g) for g in groups.values() if len(g) >= 2]
    return sorted(found, key=sorted)


@dataclass(frozen=True)
class WorkflowCheck:
    ok: bool
    source: str | None = None
    sink: str | None = None
    diagnostics: tuple = ()

    def __bool__(self):
        return self.ok


def is_workflow_net(net: PetriNet) -> WorkflowCheck:
    diags = []
    sources = sorted(p for p in net.places if not net.place_inputs[p])
    sinks = sorted(p for p in net.places if not net.place_outputs[p])
    if len(sources) != 1:
        diags.append(f"expected exactly one source place, found {len(sources)}: {sources}")
    if len(sinks) != 1:
        diags.append(f"expected exactly one sink place, found {len(sinks)}: {sinks}")
    source = sources[0] if len(sources) == 1 else None
    sink = sinks[0] if len(sinks) == 1 else None
    if source is not None and sink is not None:
        succ: dict = {}
        pred: dict = {}
        for a, b in net.arcs:
            succ.setdefault(a, []).append(b)
            pred.setdefault(b, []).append(a)
        fwd = _reach(source, succ)
        bwd = _reach(sink, pred)
        off_path = sorted((net.places | net.transitions) - (fwd & bwd))
        if off_path:
            diags.append(f"nodes not on a path from {source} to {sink}: {off_path}")
    return WorkflowCheck(not diags, source, sink, tuple(diags))


def _reach(start, edges):
    seen = {start}
    stack = [start]
    while stack:
        n = stack.pop()
        for m in edges.get(n, ()):
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return seen


@dataclass(frozen=True)
class SoundnessReport:
    is_sound: bool
    unreachable_final_from: tuple = ()
    improper_completions: tuple = ()
    dead_transitions: tuple = ()
    # Relaxed property for multi-final nets: every reachable marking can
    # reach at least one of the system's own final markings.
    can_reach_some_final: bool = True
    safe: bool = True


def check_soundness(sys: NetSystem, max_states: int = DEFAULT_MAX_STATES) -> SoundnessReport:
    """Classic soundness against the single-token sink marking ``[o]``."""
    wf = is_workflow_net(sys.net)
    if not wf.ok:
        raise PreconditionError("soundness is defined for workflow nets: " + "; ".join(wf.diagnostics))
    final = Marking([wf.sink])
    rg = reachability_graph(sys, max_states)
    back: dict = {}
    for m, _, m2 in rg.arcs:
        back.setdefault(m2, set()).add(m)

    def coreach(targets):
        seen = set(targets)
        stack = list(seen)
        while stack:
            m = stack.pop()
            for p in back.get(m, ()):
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen

    can_finish = coreach([final] if final in rg.states else [])
    order = sorted(rg.states, key=Marking.sort_key)
    stuck = tuple(m for m in order if m not in can_finish)
    improper = tuple(m for m in order if m.get(wf.sink, 0) >= 1 and m != final)
    fired = {t for _, t, _ in rg.firings}
    dead = tuple(t for t in sys.net.sorted_transitions if t not in fired)
    relaxed = coreach(rg.finals) >= rg.states
    return SoundnessReport(
        is_sound=not (stuck or improper or dead),
        unreachable_final_from=stuck,
        improper_completions=improper,
        dead_transitions=dead,
        can_reach_some_final=relaxed,
        safe=rg.safe,
    )


def fresh_place_id(net: PetriNet, prefix: str = "r") -> str:
    taken = net.places | net.transitions
    i = 1
    while f"{prefix}{i}" in taken:
        i += 1
    return f"{prefix}{i}"


def add_place(
    sys: NetSystem,
    entering: Iterable,
    exiting: Iterable,
    *,
    mark_initial: bool = False,
    extend_finals: bool = False,
    place_id: str | None = None,
) -> NetSystem:
    """Add a place fed by ``entering`` and consumed by ``exiting`` transitions.

    A transition in both sets gets a self-loop.  With ``extend_finals`` every
    existing final marking ``m`` is kept and ``m + [p]`` is added next to it.
    """
    net = sys.net
    entering, exiting = frozenset(entering), frozenset(exiting)
    unknown = (entering | exiting) - net.transitions
    if unknown:
        raise KeyError(f"unknown transitions {sorted(unknown)}")
    p = place_id or fresh_place_id(net)
    if p in net.places or p in net.transitions:
        raise ValueError(f"id {p!r} already used")
    arcs = set(net.arcs)
    arcs.update((t, p) for t in entering)
    arcs.update((p, t) for t in exiting)
    new_net = PetriNet(net.places | {p}, net.transitions, frozenset(arcs), net.labels)
    initial = sys.initial + Marking([p]) if mark_initial else sys.initial
    finals = set(sys.finals)
    if extend_finals:
        finals.update(m + Marking([p]) for m in sys.finals)
    return NetSystem(new_net, initial, frozenset(finals))


def simulate(
    sys: NetSystem,
    n_traces: int,
    seed: int = 0,
    max_steps: int = DEFAULT_MAX_STEPS,
    max_attempts: int | None = None,
) -> list[tuple]:
    """Random complete runs from the initial marking to a final marking.

    At each step one option is drawn uniformly among the enabled transitions,
    plus "stop" when the current marking is final.  Runs that deadlock or
    exceed ``max_steps`` are discarded and retried.
    """
    rng = random.Random(seed)
    net = sys.net
    max_attempts = max_attempts if max_attempts is not None else 100 * max(n_traces, 1)
    traces = []
    attempts = 0
    while len(traces) < n_traces:
        attempts += 1
        if attempts > max_attempts:
            raise SimulationError(
                f"could not reach a final marking in {max_attempts} attempts of at most {max_steps} steps"
            )
        m = sys.initial
        trace = []
        for _ in range(max_steps + 1):
            options = enabled_transitions(net, m)
            final = m in sys.finals
            if final:
                options = options + [None]
            if not options:
                break
            choice = options[rng.randrange(len(options))]
            if choice is None:
                traces.append(tuple(trace))
                break
            m = fire(net, m, choice)
            if net.labels[choice] is not TAU:
                trace.append(net.labels[choice])
    return traces


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(sys: NetSystem, name: str = "PN") -> str:
    net = sys.net
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for p in sorted(net.places):
        tokens = sys.initial.get(p, 0)
        dots = "&#9679;" * tokens if tokens <= 3 else str(tokens)
        lines.append(f'  "{_dot_escape(p)}" [shape=circle, xlabel="{_dot_escape(p)}", label="{dots}"];')
    for t in net.sorted_transitions:
        label = net.labels[t]
        if label is TAU:
            lines.append(f'  "{_dot_escape(t)}" [shape=box, style=filled, fillcolor=black, label=""];')
        else:
            lines.append(f'  "{_dot_escape(t)}" [shape=box, label="{_dot_escape(label)}"];')
    for a, b in sorted(net.arcs):
        lines.append(f'  "{_dot_escape(a)}" -> "{_dot_escape(b)}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
