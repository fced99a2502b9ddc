import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcrepair.datasets import ACCEPT, CHECK, COMPLETE, CREATE, NOTIFY, SEND, net_from_transitions
from fcrepair.event_log import EventLog
from fcrepair.exceptions import PreconditionError, StateExplosionError
from fcrepair.petri_net import reachability_graph
from fcrepair.transition_system import (
    TAU,
    TransitionSystem,
    accepts,
    build_prefix_tree,
    canonical,
    enabled_events,
    intersect,
    language_bounded,
    languages_equal,
    minimize,
    tau_closure,
    to_dot,
    to_tsv,
    trim,
)
from oracles import nfa_words, random_ts, residual_count

traces = st.lists(st.lists(st.sampled_from("abc"), max_size=5).map(tuple), max_size=6)


def test_prefix_tree_of_loan_log(log):
    pt = build_prefix_tree(log)
    assert len(pt.states) == 9
    assert len(pt.finals) == 2
    assert pt.deterministic


def test_prefix_tree_empty_log_and_empty_trace():
    empty = build_prefix_tree(EventLog())
    assert len(empty.states) == 1 and not empty.arcs and not empty.finals
    eps = build_prefix_tree(EventLog([()]))
    assert len(eps.states) == 1 and eps.initial in eps.finals


def test_minimize_loan_log(log, loan_ts, named):
    assert len(loan_ts.states) == 7
    assert set(named.values()) == loan_ts.states
    assert loan_ts.finals == {named["s7"]}
    assert enabled_events(loan_ts, named["s4"]) == {NOTIFY}
    assert enabled_events(loan_ts, named["s5"]) == {COMPLETE}
    assert enabled_events(loan_ts, named["s1"]) == {SEND, CREATE}
    assert enabled_events(loan_ts, named["s7"]) == frozenset()
    # both branches meet in s6 before the common last step
    assert loan_ts.run((CREATE, CHECK, COMPLETE)) == named["s6"]


def test_minimize_merges_equivalent_branches():
    pt = build_prefix_tree(EventLog([("a", "c"), ("b", "c")]))
    assert len(pt.states) == 5
    m = minimize(pt)
    # post-a and post-b merge, and so do the two leaves: 3 residual languages
    assert residual_count([("a", "c"), ("b", "c")]) == 3
    assert len(m.states) == 3
    assert m.run(("a",)) == m.run(("b",))


def test_minimize_is_idempotent(loan_ts):
    assert minimize(loan_ts) == loan_ts


def test_minimize_rejects_nondeterminism():
    ts = TransitionSystem.from_arcs([(0, "a", 1), (0, "a", 2)], 0, [1, 2])
    with pytest.raises(PreconditionError):
        minimize(ts)
    with pytest.raises(PreconditionError):
        minimize(TransitionSystem.from_arcs([(0, TAU, 1)], 0, [1]))


def test_minimize_empty_language():
    ts = TransitionSystem.from_arcs([(0, "a", 1)], 0, [])
    m = minimize(ts)
    assert len(m.states) == 1 and not m.finals and not m.arcs


def test_accepts_loan_ts(loan_ts):
    assert accepts(loan_ts, (SEND, CHECK, NOTIFY, ACCEPT))
    assert not accepts(loan_ts, (SEND, CHECK, COMPLETE, ACCEPT))
    assert not accepts(loan_ts, ())


def test_accepts_empty_trace_through_silent_arcs():
    ts = TransitionSystem.from_arcs([(0, TAU, 1), (1, "a", 2)], 0, [1])
    assert accepts(ts, ())
    assert accepts(ts, ("a",)) is False
    ts2 = TransitionSystem.from_arcs([(0, "a", 1)], 0, [1])
    assert not accepts(ts2, ())


def test_enabled_events_unknown_state(loan_ts):
    with pytest.raises(KeyError):
        enabled_events(loan_ts, 99)


def test_language_bounded_loan(loan_ts, log):
    assert language_bounded(loan_ts, 4) == set(log.support)
    assert language_bounded(loan_ts, 0) == set()
    assert language_bounded(TransitionSystem.from_arcs([], 0, [0]), 0) == {()}


def test_tau_closure_single_silent_arc():
    ts = TransitionSystem.from_arcs([(0, TAU, 1)], 0, [1])
    closed = tau_closure(ts)
    assert len(closed.states) == 1 and closed.initial in closed.finals
    assert closed.deterministic


def test_tau_closure_of_bridged_net():
    sys = net_from_transitions(
        {
            "ta": ("a", ["i"], ["p"]),
            "tb": ("b", ["i"], ["p"]),
            "ts": (TAU, ["p"], ["q"]),
            "tc": ("c", ["q"], ["o"]),
            "tl": ("d", ["q"], ["p"]),
        }
    )
    rg = reachability_graph(sys)
    closed = tau_closure(rg)
    assert closed.deterministic and closed.tau_free
    for k in range(9):
        assert language_bounded(closed, k) == nfa_words(rg, k)


def test_tau_closure_bound():
    arcs = []
    # (a|b)* a (a|b)^n needs 2^(n+1) subsets
    arcs += [(0, "a", 0), (0, "b", 0), (0, "a", 1)]
    for i in range(1, 12):
        arcs += [(i, "a", i + 1), (i, "b", i + 1)]
    ts = TransitionSystem.from_arcs(arcs, 0, [12])
    with pytest.raises(StateExplosionError):
        tau_closure(ts, max_states=100)


@settings(max_examples=120, deadline=None)
@given(traces)
def test_prefix_tree_encodes_exactly_the_log(ts_traces):
    log = EventLog(ts_traces)
    pt = build_prefix_tree(log)
    for w in itertools.chain(log.support, language_bounded(pt, 6)):
        assert accepts(pt, w) == (w in log.support)
    assert language_bounded(pt, 5) == set(log.support)


@settings(max_examples=120, deadline=None)
@given(traces)
def test_minimized_prefix_tree_matches_myhill_nerode(ts_traces):
    log = EventLog(ts_traces)
    m = minimize(build_prefix_tree(log))
    assert language_bounded(m, 5) == set(log.support)
    expected = residual_count(log.support) if log.support else 1
    assert len(m.states) == expected


def _pairwise_distinguishable(ts, depth):
    sig = {}
    for s in ts.states:
        sub = TransitionSystem(ts.states, ts.arcs, s, ts.finals)
        sig[s] = frozenset(language_bounded(sub, depth))
    return len(set(sig.values())) == len(sig)


@pytest.mark.parametrize("seed", range(40))
def test_minimize_random_systems(seed):
    rng = random.Random(seed)
    ts = random_ts(rng, rng.randint(2, 8), rng.randint(1, 3))
    m = minimize(ts)
    for k in range(7):
        assert language_bounded(m, k) == language_bounded(ts, k)
    # every pair of output states differs on some word of length < n
    assert _pairwise_distinguishable(m, len(m.states) + 1)
    assert minimize(m) == m


@pytest.mark.parametrize("seed", range(30))
def test_tau_closure_random_nfa(seed):
    rng = random.Random(1000 + seed)
    n = rng.randint(2, 7)
    arcs = set()
    for _ in range(rng.randint(n, 3 * n)):
        arcs.add((rng.randrange(n), rng.choice(["a", "b", TAU]), rng.randrange(n)))
    ts = TransitionSystem(frozenset(range(n)), frozenset(arcs), 0, frozenset({rng.randrange(n)}))
    closed = tau_closure(ts)
    assert closed.deterministic
    for k in range(6):
        assert language_bounded(closed, k) == nfa_words(ts, k)


def test_trim_drops_dead_and_unreachable():
    ts = TransitionSystem.from_arcs([(0, "a", 1), (0, "b", 2), (3, "a", 1)], 0, [1])
    t = trim(ts)
    assert t.states == {0, 1}


def test_intersect_and_equality():
    a = minimize(build_prefix_tree(EventLog([("a",), ("b",), ("a", "b")])))
    b = minimize(build_prefix_tree(EventLog([("a",), ("a", "b"), ("c",)])))
    inter = intersect(a, b)
    assert language_bounded(inter, 4) == {("a",), ("a", "b")}
    assert languages_equal(inter, minimize(build_prefix_tree(EventLog([("a",), ("a", "b")]))))
    assert not languages_equal(a, b)


def test_canonical_numbering_is_deterministic(log):
    ts = build_prefix_tree(log)
    assert canonical(ts) == ts
    assert sorted(ts.states) == list(range(9))


def test_exports(loan_ts):
    dot = to_dot(loan_ts)
    assert dot.startswith("digraph") and "doublecircle" in dot and "__start ->" in dot
    tsv = to_tsv(loan_ts)
    assert len(tsv.splitlines()) == len(loan_ts.arcs)
    assert to_tsv(TransitionSystem.from_arcs([(0, TAU, 1)], 0, [1])) == "0\tτ\t1\n"


def test_validation():
    with pytest.raises(ValueError):
        TransitionSystem(frozenset({0}), frozenset(), 1, frozenset())
    with pytest.raises(ValueError):
        TransitionSystem(frozenset({0}), frozenset({(0, "a", 5)}), 0, frozenset())
    with pytest.raises(ValueError):
        TransitionSystem(frozenset({0, 1}), frozenset({(0, "a", 1)}), 0, frozenset(), events=frozenset({"b"}))
