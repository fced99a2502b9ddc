"""State-based regions: region checks, minimal regions, goal-oriented ESSP
search and net synthesis from a transition system.

Candidate state sets are Python ints used as bitsets over the states of the
system in :func:`~fcrepair.transition_system.state_key` order.

The expansion search grows a candidate set monotonically.  When an event's
arcs do not all have the same type (enter, exit, no-cross) with respect to
the candidate, at most two growth steps can repair it:

* no-cross: absorb the sources of entering arcs and the targets of exiting
  arcs (always possible);
* enter (no exiting or internal arcs): absorb the targets of the arcs lying
  outside;
* exit (no entering or internal arcs): absorb the sources of the arcs lying
  outside.

For every region containing the candidate, one of these steps stays inside
it, so depth-first search over the steps reaches every minimal region that
contains the seed.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

from .exceptions import BudgetExhausted, PreconditionError
from .petri_net import Marking, NetSystem, PetriNet
from .transition_system import TransitionSystem, state_key

logger = logging.getLogger(__name__)

ENTER, EXIT, NOCROSS = "enter", "exit", "nocross"
ALL_TYPES = frozenset((ENTER, EXIT, NOCROSS))

DEFAULT_ESSP_BUDGET = 50_000
DEFAULT_BRUTE_FORCE_BOUND = 16
DEFAULT_SYNTHESIS_BUDGET = 1_000_000


@dataclass(frozen=True)
class Region:
    states: frozenset
    entering: frozenset
    exiting: frozenset

    def classify(self, event) -> str:
        if event in self.entering:
            return ENTER
        if event in self.exiting:
            return EXIT
        return NOCROSS

    @property
    def signature(self) -> tuple:
        return (tuple(sorted(self.entering)), tuple(sorted(self.exiting)))

    def __repr__(self):
        states = sorted(self.states, key=state_key)
        return f"Region({states}, enter={sorted(self.entering)}, exit={sorted(self.exiting)})"


@dataclass(frozen=True)
class RegionViolation:
    """``event`` has arcs ``first`` and ``second`` of incompatible types."""

    event: str
    first: tuple
    second: tuple


@dataclass(frozen=True)
class EsspProblem:
    """Find a region holding ``state`` that ``witness`` exits and ``forbidden`` does not."""

    state: object
    forbidden: str
    witness: str
    cluster: frozenset = frozenset()

    def __post_init__(self):
        if self.forbidden == self.witness:
            raise ValueError("forbidden and witness events must differ")


class RegionSpace:
    """Bitset view of a τ-free transition system used by all region searches."""

    def __init__(self, ts: TransitionSystem):
        if not ts.tau_free:
            raise PreconditionError("regions are defined on τ-free transition systems")
        self.ts = ts
        self.order = ts.sorted_states()
        self.index = {s: i for i, s in enumerate(self.order)}
        self.n = len(self.order)
        self.full = (1 << self.n) - 1
        self.events = sorted(ts.events)
        arcs = {e: [] for e in self.events}
        for s, a, t in ts.arcs:
            arcs[a].append((1 << self.index[s], 1 << self.index[t]))
        self.arcs = {e: sorted(v) for e, v in arcs.items()}

    def mask(self, states) -> int:
        m = 0
        for s in states:
            m |= 1 << self.index[s]
        return m

    def states_of(self, mask: int) -> frozenset:
        return frozenset(s for i, s in enumerate(self.order) if mask >> i & 1)

    def sources(self, event) -> int:
        m = 0
        for s, _ in self.arcs[event]:
            m |= s
        return m

    def targets(self, event) -> int:
        m = 0
        for _, t in self.arcs[event]:
            m |= t
        return m

    def split(self, r: int, event):
        """Return (enter, exit, inside, outside) arc lists of ``event`` w.r.t. ``r``."""
        enter, exit_, inside, outside = [], [], [], []
        for s, t in self.arcs[event]:
            sin, tin = bool(r & s), bool(r & t)
            if sin and tin:
                inside.append((s, t))
            elif sin:
                exit_.append((s, t))
            elif tin:
                enter.append((s, t))
            else:
                outside.append((s, t))
        return enter, exit_, inside, outside

    def event_type(self, r: int, event) -> str | None:
        enter, exit_, inside, outside = self.split(r, event)
        if not enter and not exit_:
            return NOCROSS
        if enter and not (exit_ or inside or outside):
            return ENTER
        if exit_ and not (enter or inside or outside):
            return EXIT
        return None

    def is_region(self, r: int) -> bool:
        return all(self.event_type(r, e) is not None for e in self.events)

    def region(self, r: int) -> Region:
        entering, exiting = set(), set()
        for e in self.events:
            kind = self.event_type(r, e)
            if kind == ENTER:
                entering.add(e)
            elif kind == EXIT:
                exiting.add(e)
        return Region(self.states_of(r), frozenset(entering), frozenset(exiting))

    def expansions(self, r: int, event, allowed=ALL_TYPES) -> list[int] | None:
        """Growth steps for ``event``; ``None`` when it already has an allowed type."""
        enter, exit_, inside, outside = self.split(r, event)
        if not enter and not exit_:
            current = NOCROSS
        elif enter and not (exit_ or inside or outside):
            current = ENTER
        elif exit_ and not (enter or inside or outside):
            current = EXIT
        else:
            current = None
        if current in allowed:
            return None
        steps = []
        if NOCROSS in allowed and (enter or exit_):
            add = 0
            for s, _ in enter:
                add |= s
            for _, t in exit_:
                add |= t
            steps.append(add)
        if ENTER in allowed and not exit_ and not inside and outside:
            add = 0
            for _, t in outside:
                add |= t
            steps.append(add)
        if EXIT in allowed and not enter and not inside and outside:
            add = 0
            for s, _ in outside:
                add |= s
            steps.append(add)
        return steps


def check_region(ts: TransitionSystem, subset) -> Region | RegionViolation:
    space = RegionSpace(ts)
    subset = frozenset(subset)
    unknown = subset - ts.states
    if unknown:
        raise KeyError(f"unknown states {sorted(unknown, key=state_key)}")
    r = space.mask(subset)
    for e in space.events:
        if space.event_type(r, e) is not None:
            continue
        enter, exit_, inside, outside = space.split(r, e)
        # two arcs that no single type admits together
        if enter and exit_:
            pair = (enter[0], exit_[0])
        elif inside:
            pair = (inside[0], (enter or exit_)[0])
        else:
            pair = ((enter or exit_)[0], outside[0])

        def to_arc(st):
            return (space.order[st[0].bit_length() - 1], e, space.order[st[1].bit_length() - 1])

        return RegionViolation(e, to_arc(pair[0]), to_arc(pair[1]))
    return space.region(r)


def is_region(ts: TransitionSystem, subset) -> bool:
    return isinstance(check_region(ts, subset), Region)


def _popcount(m: int) -> int:
    return bin(m).count("1")


def _minimal_masks(masks) -> list[int]:
    """Masks with no other mask of the collection strictly inside them."""
    out = []
    for m in sorted(set(masks), key=lambda x: (_popcount(x), _bits_key(x))):
        if not any(k & m == k for k in out):
            out.append(m)
    return out


def _bits_key(m: int) -> tuple:
    return tuple(i for i in range(m.bit_length()) if m >> i & 1)


def enumerate_minimal_regions_bruteforce(
    ts: TransitionSystem, bound: int = DEFAULT_BRUTE_FORCE_BOUND
) -> set[Region]:
    """All minimal non-trivial regions by exhaustive subset enumeration."""
    space = RegionSpace(ts)
    if space.n > bound:
        raise PreconditionError(f"{space.n} states exceed the brute-force bound {bound}")
    regions = [m for m in range(1, space.full) if space.is_region(m)]
    return {space.region(m) for m in _minimal_masks(regions)}


@dataclass
class _SearchResult:
    masks: list
    nodes: int
    exhausted: bool  # budget ran out before the frontier emptied


def _expand_search(space: RegionSpace, seed: int, forbidden: int, allowed: dict, budget: int) -> _SearchResult:
    debug = logger.isEnabledFor(logging.DEBUG)
    if seed & forbidden or seed == space.full:
        return _SearchResult([], 0, False)
    stack = [seed]
    visited = {seed}
    found = []
    nodes = 0
    while stack:
        if nodes >= budget:
            return _SearchResult(found, nodes, True)
        r = stack.pop()
        nodes += 1
        violating = None
        steps = None
        for e in space.events:
            steps = space.expansions(r, e, allowed.get(e, ALL_TYPES))
            if steps is not None:
                violating = e
                break
        if debug:
            logger.debug(json.dumps({
                "node": nodes,
                "candidate": [str(s) for s in sorted(space.states_of(r), key=state_key)],
                "violating": violating,
                "branches": [[str(s) for s in sorted(space.states_of(add), key=state_key)] for add in steps or ()],
            }, ensure_ascii=False))
        if violating is None:
            found.append(r)
            continue
        for add in reversed(steps):
            r2 = r | add
            if r2 & forbidden or r2 == space.full or r2 in visited:
                continue
            visited.add(r2)
            stack.append(r2)
    return _SearchResult(found, nodes, False)


SOLVED, UNSOLVABLE, BUDGET_EXHAUSTED = "solved", "unsolvable", "budget_exhausted"


def solve_essp_with_status(
    ts: TransitionSystem, problem: EsspProblem, budget: int = DEFAULT_ESSP_BUDGET
) -> tuple[list[Region], str]:
    """Like :func:`solve_essp` but returns ``(regions, status)`` instead of raising."""
    space = RegionSpace(ts)
    s, ej, ei = problem.state, problem.forbidden, problem.witness
    if s not in ts.states:
        raise KeyError(f"unknown state {s!r}")
    enabled = {a for a, _ in ts.out_arcs[s]}
    if ei not in enabled:
        raise PreconditionError(f"witness event {ei!r} is not enabled at {s!r}")
    if ej in enabled:
        raise PreconditionError(f"forbidden event {ej!r} is enabled at {s!r}")
    seed = space.mask([s]) | space.sources(ei)
    forbidden = space.targets(ei)
    allowed = {ei: frozenset([EXIT])}
    if ej in space.arcs:
        allowed[ej] = frozenset([ENTER, NOCROSS])
    result = _expand_search(space, seed, forbidden, allowed, budget)
    masks = _minimal_masks(result.masks)
    regions = [space.region(m) for m in masks]
    if regions:
        return regions, SOLVED
    return [], BUDGET_EXHAUSTED if result.exhausted else UNSOLVABLE


def solve_essp(ts: TransitionSystem, problem: EsspProblem, budget: int = DEFAULT_ESSP_BUDGET) -> list[Region]:
    """Minimal regions r with state in r, the witness exiting r and the
    forbidden event not exiting r.

    An empty list means the search space was exhausted: no such region
    exists.  :class:`BudgetExhausted` is raised when the budget ran out before
    any region was found.
    """
    regions, status = solve_essp_with_status(ts, problem, budget)
    if status == BUDGET_EXHAUSTED:
        raise BudgetExhausted(f"ESSP search for {problem} used its budget of {budget} nodes", budget)
    return regions


def minimal_regions(ts: TransitionSystem, budget: int = DEFAULT_SYNTHESIS_BUDGET) -> list[Region]:
    """All minimal non-trivial regions, found by expansion from every single state."""
    space = RegionSpace(ts)
    found = []
    spent = 0
    for i in range(space.n):
        res = _expand_search(space, 1 << i, 0, {}, budget - spent)
        spent += res.nodes
        if res.exhausted:
            raise BudgetExhausted(f"minimal-region search used its budget of {budget} nodes", budget)
        found.extend(res.masks)
    return [space.region(m) for m in _minimal_masks(found)]


def synthesize(ts: TransitionSystem, budget: int = DEFAULT_SYNTHESIS_BUDGET) -> NetSystem:
    """Petri net with one transition per event and one place per minimal region.

    A place is initially marked when its region holds the initial state.  Each
    final state contributes the final marking made of the places whose
    regions contain it.
    """
    if not ts.deterministic:
        raise PreconditionError("synthesis needs a deterministic τ-free transition system")
    regions = minimal_regions(ts, budget)
    events = sorted(ts.events)
    tid = {e: f"t{i}" for i, e in enumerate(events, start=1)}
    pid = {}
    arcs = set()
    for i, reg in enumerate(sorted(regions, key=lambda r: sorted(state_key(s) for s in r.states)), start=1):
        p = f"p{i}"
        pid[reg] = p
        arcs.update((tid[e], p) for e in reg.entering)
        arcs.update((p, tid[e]) for e in reg.exiting)
    net = PetriNet(frozenset(pid.values()), frozenset(tid.values()), frozenset(arcs), {t: e for e, t in tid.items()})
    initial = Marking([pid[r] for r in regions if ts.initial in r.states])
    finals = frozenset(Marking([pid[r] for r in regions if sf in r.states]) for sf in ts.finals)
    return NetSystem(net, initial, finals)


def region_with_signature(ts: TransitionSystem, entering, exiting, excluded=()) -> frozenset | None:
    """Some region whose entering and exiting events are exactly the given sets
    and which avoids ``excluded`` states, or ``None``.

    Every arc fixes or links the membership of its endpoints, so this is a
    two-colouring problem solved by propagation.
    """
    entering, exiting = frozenset(entering), frozenset(exiting)
    if entering & exiting:
        return None
    parent = {s: s for s in ts.states}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    fixed = {}
    for s, a, t in ts.arcs:
        if a in entering:
            fixed.setdefault(s, set()).add(False)
            fixed.setdefault(t, set()).add(True)
        elif a in exiting:
            fixed.setdefault(s, set()).add(True)
            fixed.setdefault(t, set()).add(False)
        else:
            parent[find(s)] = find(t)
    for s in excluded:
        fixed.setdefault(s, set()).add(False)
    value = {}
    for s, vals in fixed.items():
        root = find(s)
        value.setdefault(root, set()).update(vals)
    if any(len(v) > 1 for v in value.values()):
        return None
    members = frozenset(s for s in ts.states if value.get(find(s)) == {True})
    if not members or members == ts.states:
        return None
    space = RegionSpace(ts)
    reg = space.region(space.mask(members))
    if (reg.entering, reg.exiting) != (entering, exiting):
        return None
    return members


__all__ = [
    "ENTER",
    "EXIT",
    "NOCROSS",
    "Region",
    "RegionViolation",
    "EsspProblem",
    "RegionSpace",
    "check_region",
    "is_region",
    "enumerate_minimal_regions_bruteforce",
    "solve_essp",
    "solve_essp_with_status",
    "minimal_regions",
    "synthesize",
    "region_with_signature",
    "SOLVED",
    "UNSOLVABLE",
    "BUDGET_EXHAUSTED",
]
