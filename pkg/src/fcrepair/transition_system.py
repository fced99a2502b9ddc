"""Labelled transition systems and the automata operations the repair needs.

Silent arcs carry the label ``TAU`` (``None``).  Operations that build new
systems number their states densely in BFS order from the initial state,
visiting labels in sorted order, so two language-equal minimal systems come
out identical field by field.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Hashable, Iterable
from dataclasses import dataclass, field
from functools import cached_property

from .exceptions import PreconditionError, StateExplosionError

TAU = None
TAU_TEXT = "τ"

DEFAULT_MAX_SUBSET_STATES = 100_000


def state_key(s):
    """Sort key that orders integer states numerically and anything else by repr."""
    if isinstance(s, int):
        return (0, s, "")
    return (1, 0, repr(s))


def _label_key(label):
    return "" if label is TAU else "\x01" + label


@dataclass(frozen=True)
class TransitionSystem:
    states: frozenset
    arcs: frozenset
    initial: Hashable
    finals: frozenset
    events: frozenset = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "arcs", frozenset(self.arcs))
        object.__setattr__(self, "finals", frozenset(self.finals))
        labels = frozenset(a for _, a, _ in self.arcs if a is not TAU)
        if self.events is None:
            object.__setattr__(self, "events", labels)
        else:
            object.__setattr__(self, "events", frozenset(self.events))
            if TAU in self.events:
                raise ValueError("τ is not part of the event alphabet")
            if not labels <= self.events:
                raise ValueError(f"arc labels outside alphabet: {sorted(labels - self.events)}")
        if self.initial not in self.states:
            raise ValueError("initial state is not a state")
        if not self.finals <= self.states:
            raise ValueError("final states must be states")
        for s, _, t in self.arcs:
            if s not in self.states or t not in self.states:
                raise ValueError(f"arc endpoint not a state: {(s, t)}")

    @classmethod
    def from_arcs(cls, arcs: Iterable, initial, finals, extra_states=()):
        arcs = frozenset(arcs)
        states = {initial, *finals, *extra_states}
        for s, _, t in arcs:
            states.update((s, t))
        return cls(frozenset(states), arcs, initial, frozenset(finals))

    @cached_property
    def out_arcs(self) -> dict:
        out = {s: [] for s in self.states}
        for s, a, t in self.arcs:
            out[s].append((a, t))
        for lst in out.values():
            lst.sort(key=lambda at: (_label_key(at[0]), state_key(at[1])))
        return out

    @cached_property
    def tau_free(self) -> bool:
        return all(a is not TAU for _, a, _ in self.arcs)

    @cached_property
    def deterministic(self) -> bool:
        if not self.tau_free:
            return False
        seen = set()
        for s, a, _ in self.arcs:
            if (s, a) in seen:
                return False
            seen.add((s, a))
        return True

    @cached_property
    def delta(self) -> dict:
        """(state, label) -> target; only meaningful for deterministic systems."""
        return {(s, a): t for s, a, t in self.arcs}

    def sorted_states(self) -> list:
        return sorted(self.states, key=state_key)

    def run(self, word) -> Hashable | None:
        """Follow ``word`` from the initial state in a deterministic system."""
        s = self.initial
        for a in word:
            s = self.delta.get((s, a))
            if s is None:
                return None
        return s

    def __repr__(self):
        return (
            f"TransitionSystem({len(self.states)} states, {len(self.arcs)} arcs, "
            f"{len(self.finals)} finals)"
        )


def _renumber(states, arcs, initial, finals, events=None) -> TransitionSystem:
    out = {}
    for s, a, t in arcs:
        out.setdefault(s, []).append((a, t))
    index = {initial: 0}
    order = [initial]
    queue = deque([initial])
    while queue:
        s = queue.popleft()
        for a, t in sorted(out.get(s, ()), key=lambda at: (_label_key(at[0]), state_key(at[1]))):
            if t not in index:
                index[t] = len(order)
                order.append(t)
                queue.append(t)
    new_arcs = frozenset((index[s], a, index[t]) for s, a, t in arcs if s in index)
    new_finals = frozenset(index[s] for s in finals if s in index)
    return TransitionSystem(frozenset(range(len(order))), new_arcs, 0, new_finals, events)


def canonical(ts: TransitionSystem) -> TransitionSystem:
    """Renumber reachable states in BFS order; unreachable states are dropped."""
    return _renumber(ts.states, ts.arcs, ts.initial, ts.finals, ts.events)


def build_prefix_tree(log) -> TransitionSystem:
    root = ()
    arcs = set()
    finals = set()
    for trace in log:
        prefix = root
        for label in trace:
            nxt = prefix + (label,)
            arcs.add((prefix, label, nxt))
            prefix = nxt
        finals.add(prefix)
    states = {root} | {t for _, _, t in arcs}
    return _renumber(states, arcs, root, finals, frozenset(log.alphabet))


def trim(ts: TransitionSystem) -> TransitionSystem:
    """Drop states that are unreachable or cannot reach a final state."""
    reach = {ts.initial}
    stack = [ts.initial]
    while stack:
        s = stack.pop()
        for _, t in ts.out_arcs[s]:
            if t not in reach:
                reach.add(t)
                stack.append(t)
    back: dict = {}
    for s, _, t in ts.arcs:
        back.setdefault(t, []).append(s)
    coreach = set(ts.finals & reach)
    stack = list(coreach)
    while stack:
        t = stack.pop()
        for s in back.get(t, ()):
            if s in reach and s not in coreach:
                coreach.add(s)
                stack.append(s)
    keep = reach & coreach
    if ts.initial not in keep:
        return TransitionSystem(frozenset([ts.initial]), frozenset(), ts.initial, frozenset(), ts.events)
    arcs = frozenset(arc for arc in ts.arcs if arc[0] in keep and arc[2] in keep)
    return TransitionSystem(frozenset(keep), arcs, ts.initial, ts.finals & keep, ts.events)


def _hopcroft(states, alphabet, delta, finals):
    """Partition ``states`` into Myhill-Nerode classes.

    ``delta`` must be total over ``states`` x ``alphabet``.
    """
    inverse = {}
    for (s, a), t in delta.items():
        inverse.setdefault((a, t), []).append(s)
    F = frozenset(finals)
    NF = frozenset(states) - F
    partition = {b for b in (F, NF) if b}
    if len(partition) <= 1:
        return partition
    block_of = {s: b for b in partition for s in b}
    work = {F if len(F) <= len(NF) else NF}
    while work:
        splitter = work.pop()
        for a in alphabet:
            hit: dict = {}
            for t in splitter:
                for s in inverse.get((a, t), ()):
                    hit.setdefault(block_of[s], set()).add(s)
            for block, inside in hit.items():
                if len(inside) == len(block):
                    continue
                part1 = frozenset(inside)
                part2 = block - part1
                partition.remove(block)
                partition.update((part1, part2))
                for s in part1:
                    block_of[s] = part1
                for s in part2:
                    block_of[s] = part2
                if block in work:
                    work.remove(block)
                    work.update((part1, part2))
                else:
                    work.add(part1 if len(part1) <= len(part2) else part2)
    return partition


_SINK = object()


def minimize(ts: TransitionSystem) -> TransitionSystem:
    if not ts.deterministic:
        raise PreconditionError("minimize needs a deterministic τ-free transition system")
    ts = trim(ts)
    alphabet = sorted({a for _, a, _ in ts.arcs})
    states = list(ts.states) + [_SINK]
    delta = {}
    for s in states:
        for a in alphabet:
            delta[(s, a)] = ts.delta.get((s, a), _SINK) if s is not _SINK else _SINK
    blocks = _hopcroft(states, alphabet, delta, ts.finals)
    block_of = {s: b for b in blocks for s in b}
    sink_block = block_of[_SINK]
    arcs = set()
    for (s, a), t in delta.items():
        if s is _SINK or block_of[t] is sink_block:
            continue
        arcs.add((block_of[s], a, block_of[t]))
    if block_of[ts.initial] is sink_block:
        # empty language: trim already reduced the system to a lone initial state
        return _renumber({ts.initial}, (), ts.initial, (), ts.events)
    quotient_states = {b for b in blocks if b is not sink_block}
    finals = {block_of[s] for s in ts.finals}
    return _renumber(quotient_states, arcs, block_of[ts.initial], finals, ts.events)


def tau_star(ts: TransitionSystem, states: Iterable) -> frozenset:
    closure = set(states)
    stack = list(closure)
    while stack:
        s = stack.pop()
        for a, t in ts.out_arcs[s]:
            if a is TAU and t not in closure:
                closure.add(t)
                stack.append(t)
    return frozenset(closure)


def _step(ts: TransitionSystem, current: frozenset, label) -> frozenset:
    nxt = set()
    for s in current:
        for a, t in ts.out_arcs[s]:
            if a == label and a is not TAU:
                nxt.add(t)
    return tau_star(ts, nxt) if nxt else frozenset()


def accepts(ts: TransitionSystem, trace) -> bool:
    current = tau_star(ts, [ts.initial])
    for label in trace:
        current = _step(ts, current, label)
        if not current:
            return False
    return bool(current & ts.finals)


def enabled_events(ts: TransitionSystem, s) -> frozenset:
    if s not in ts.states:
        raise KeyError(f"unknown state {s!r}")
    return frozenset(a for a, _ in ts.out_arcs[s] if a is not TAU)


def tau_closure(ts: TransitionSystem, max_states: int = DEFAULT_MAX_SUBSET_STATES) -> TransitionSystem:
    """Deterministic, τ-free, minimal system with the same language."""
    start = tau_star(ts, [ts.initial])
    seen = {start}
    queue = deque([start])
    arcs = set()
    while queue:
        cur = queue.popleft()
        labels = sorted({a for s in cur for a, _ in ts.out_arcs[s] if a is not TAU})
        for a in labels:
            nxt = _step(ts, cur, a)
            arcs.add((cur, a, nxt))
            if nxt not in seen:
                seen.add(nxt)
                if len(seen) > max_states:
                    raise StateExplosionError("subset construction exceeded its state bound", max_states)
                queue.append(nxt)
    finals = {c for c in seen if c & ts.finals}
    dfa = TransitionSystem(frozenset(seen), frozenset(arcs), start, frozenset(finals), ts.events)
    return minimize(dfa)


def language_bounded(ts: TransitionSystem, max_len: int) -> set:
    if max_len < 0:
        raise ValueError("max_len must be non-negative")
    result = set()
    frontier = {(): tau_star(ts, [ts.initial])}
    for depth in range(max_len + 1):
        nxt = {}
        for word, cur in frontier.items():
            if cur & ts.finals:
                result.add(word)
            if depth == max_len:
                continue
            for a in {a for s in cur for a, _ in ts.out_arcs[s] if a is not TAU}:
                nxt[word + (a,)] = _step(ts, cur, a)
        frontier = nxt
    return result


def intersect(a: TransitionSystem, b: TransitionSystem) -> TransitionSystem:
    """Product automaton of two deterministic systems (language intersection)."""
    if not (a.deterministic and b.deterministic):
        raise PreconditionError("intersection needs deterministic τ-free inputs")
    start = (a.initial, b.initial)
    seen = {start}
    queue = deque([start])
    arcs = set()
    while queue:
        p, q = queue.popleft()
        for label, p2 in a.out_arcs[p]:
            q2 = b.delta.get((q, label))
            if q2 is None:
                continue
            arcs.add(((p, q), label, (p2, q2)))
            if (p2, q2) not in seen:
                seen.add((p2, q2))
                queue.append((p2, q2))
    finals = {(p, q) for p, q in seen if p in a.finals and q in b.finals}
    return _renumber(seen, arcs, start, finals, a.events | b.events)


def languages_equal(a: TransitionSystem, b: TransitionSystem) -> bool:
    """Exact language equality of two deterministic systems via canonical minimal forms."""
    ma, mb = minimize(a), minimize(b)
    return (ma.states, ma.arcs, ma.finals) == (mb.states, mb.arcs, mb.finals)


def _label_text(label) -> str:
    return TAU_TEXT if label is TAU else label


def to_dot(ts: TransitionSystem, name: str = "TS") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  __start [shape=point, label=""];']
    ids = {s: f"s{i}" for i, s in enumerate(ts.sorted_states())}
    for s in ts.sorted_states():
        shape = "doublecircle" if s in ts.finals else "circle"
        lines.append(f'  {ids[s]} [shape={shape}, label="{_dot_escape(str(s))}"];')
    lines.append(f"  __start -> {ids[ts.initial]};")
    for s, a, t in sorted(ts.arcs, key=lambda x: (state_key(x[0]), _label_key(x[1]), state_key(x[2]))):
        lines.append(f'  {ids[s]} -> {ids[t]} [label="{_dot_escape(_label_text(a))}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def to_tsv(ts: TransitionSystem) -> str:
    rows = sorted(ts.arcs, key=lambda x: (state_key(x[0]), _label_key(x[1]), state_key(x[2])))
    return "".join(f"{s}\t{_label_text(a)}\t{t}\n" for s, a, t in rows)
