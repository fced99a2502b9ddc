import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcrepair.datasets import (
    ACCEPT,
    CHECK,
    COMPLETE,
    CREATE,
    NOTIFY,
    SEND,
    net_from_transitions,
    random_free_choice_net,
    unsound_repair_case,
)
from fcrepair.exceptions import (
    PreconditionError,
    SimulationError,
    StateExplosionError,
    TransitionNotEnabled,
    UnboundedNetError,
)
from fcrepair.petri_net import (
    Marking,
    NetSystem,
    PetriNet,
    accepts,
    add_place,
    check_soundness,
    clusters,
    enabled_transitions,
    fire,
    fresh_place_id,
    is_free_choice,
    is_workflow_net,
    language_bounded,
    postset,
    preset,
    reachability_graph,
    simulate,
    to_dot,
)
from fcrepair.transition_system import TAU
from fcrepair.transition_system import language_bounded as ts_language

FOUR = {
    (SEND, CHECK, NOTIFY, ACCEPT),
    (SEND, CHECK, COMPLETE, ACCEPT),
    (CREATE, CHECK, NOTIFY, ACCEPT),
    (CREATE, CHECK, COMPLETE, ACCEPT),
}
TWO = {(SEND, CHECK, NOTIFY, ACCEPT), (CREATE, CHECK, COMPLETE, ACCEPT)}


def naive_fire(net, m, t):
    counts = dict(m.items())
    for p, x in net.arcs:
        if x == t:
            counts[p] -= 1
    for x, p in net.arcs:
        if x == t:
            counts[p] = counts.get(p, 0) + 1
    return {p: n for p, n in counts.items() if n}


def interleavings(sys, max_len, max_silent=6):
    """Accepted words by brute-force firing-sequence enumeration."""
    out = set()
    net = sys.net

    def walk(m, word, silent):
        if m in sys.finals:
            out.add(word)
        for t in net.sorted_transitions:
            if not all(m.get(p, 0) >= 1 for p, x in net.arcs if x == t):
                continue
            m2 = Marking(naive_fire(net, m, t))
            if net.labels[t] is TAU:
                if silent < max_silent:
                    walk(m2, word, silent + 1)
            elif len(word) < max_len:
                walk(m2, word + (net.labels[t],), 0)

    walk(sys.initial, (), 0)
    return out


def test_marking_algebra():
    a = Marking(["p", "q", "q"])
    assert a["q"] == 2 and a.get("r") == 0 and a.total() == 3
    assert a - Marking(["q"]) == Marking(["p", "q"])
    assert Marking(["p"]) <= a and Marking(["p"]) < a and not a < a
    assert a == {"p": 1, "q": 2}
    assert repr(Marking({"p": 1, "q": 2})) == "[p, q:2]"
    with pytest.raises(ValueError):
        Marking(["p"]) - Marking(["q"])
    assert hash(Marking({"p": 1, "z": 0})) == hash(Marking(["p"]))


def test_preset_postset(loan_sys):
    assert preset(loan_sys.net, "t_check") == Marking(["p1"])
    assert postset(loan_sys.net, "t_check") == Marking(["p2"])
    net = PetriNet(frozenset({"p"}), frozenset({"t"}), frozenset(), {"t": "a"})
    assert preset(net, "t") == Marking() and postset(net, "t") == Marking()
    with pytest.raises(KeyError):
        preset(net, "nope")


def test_fire_moves_token(loan_sys):
    m = fire(loan_sys.net, loan_sys.initial, "t_send")
    assert m == Marking(["p1"])
    with pytest.raises(TransitionNotEnabled):
        fire(loan_sys.net, loan_sys.initial, "t_check")


def test_self_loop_keeps_token():
    sys = net_from_transitions({"t": ("a", ["i", "s"], ["o", "s"])}, initial=("i", "s"), finals=(("o", "s"),))
    m = fire(sys.net, sys.initial, "t")
    assert m["s"] == 1 and m == Marking(["o", "s"])


@pytest.mark.parametrize("seed", range(20))
def test_fire_matches_naive_rule(seed):
    sys = random_free_choice_net(seed)
    rng = random.Random(seed)
    m = sys.initial
    for _ in range(30):
        options = enabled_transitions(sys.net, m)
        if not options:
            break
        t = rng.choice(options)
        expected = naive_fire(sys.net, m, t)
        m = fire(sys.net, m, t)
        assert m == Marking(expected)


def test_reachability_language_of_loan_nets(loan_sys, constrained_sys):
    assert ts_language(reachability_graph(loan_sys), 4) == FOUR
    assert ts_language(reachability_graph(constrained_sys), 4) == TWO
    assert language_bounded(loan_sys, 4) == FOUR
    assert language_bounded(constrained_sys, 6) == TWO


def test_dead_transition_net():
    sys = net_from_transitions({"t": ("a", ["x"], ["o"])}, initial=("i",))
    rg = reachability_graph(sys)
    assert len(rg.states) == 1 and not rg.arcs


def test_accepts_on_nets(constrained_sys):
    assert accepts(constrained_sys, (SEND, CHECK, NOTIFY, ACCEPT))
    assert accepts(constrained_sys, (CREATE, CHECK, COMPLETE, ACCEPT))
    assert not accepts(constrained_sys, (CREATE, CHECK, NOTIFY, ACCEPT))
    assert not accepts(constrained_sys, ())
    skip = net_from_transitions({"t": (TAU, ["i"], ["o"])})
    assert accepts(skip, ())


SMALL_SEEDS = [s for s in range(40) if len(random_free_choice_net(s, depth=3, max_leaves=6).net.transitions) <= 10][:25]


@pytest.mark.parametrize("seed", SMALL_SEEDS)
def test_reachability_language_matches_interleavings(seed):
    sys = random_free_choice_net(seed, depth=3, max_leaves=6)
    rg = reachability_graph(sys)
    for k in range(6):
        assert ts_language(rg, k) == interleavings(sys, k) == language_bounded(sys, k)


def test_unbounded_net_detected():
    sys = net_from_transitions({"t": ("a", ["i"], ["i", "p"])}, finals=(("i",),))
    with pytest.raises(UnboundedNetError) as err:
        reachability_graph(sys)
    assert err.value.witness is not None
    # on-the-fly acceptance still works
    assert accepts(sys, ("a", "a")) is False
    assert not accepts(sys, ("b",))


def test_state_bound():
    sys = random_free_choice_net(3)
    with pytest.raises(StateExplosionError):
        reachability_graph(sys, max_states=1)
    with pytest.raises(ValueError):
        reachability_graph(sys, max_states=0)


def test_unsafe_markings_flagged():
    sys = net_from_transitions(
        {"t": ("a", ["i"], ["p", "q"]), "u": ("b", ["p"], ["r"]), "v": ("c", ["q"], ["r"]), "w": ("d", ["r", "r"], ["o"])}
    )
    rg = reachability_graph(sys)
    assert not rg.safe and Marking({"r": 2}) in rg.unsafe_markings
    assert reachability_graph(random_free_choice_net(0)).safe


def test_free_choice(loan_sys, constrained_sys):
    assert is_free_choice(loan_sys.net).ok
    assert not is_free_choice(constrained_sys.net).ok
    # t1 and t2 share p1,p2 but t2 also needs p3
    net = net_from_transitions(
        {"t1": ("a", ["p1", "p2"], ["o"]), "t2": ("b", ["p1", "p2", "p3"], ["o"])}, initial=("p1", "p2", "p3")
    ).net
    res = is_free_choice(net)
    assert not res.ok and res.violations == (("t1", "t2"),)
    single = net_from_transitions({"t": ("a", ["i"], ["o"])}).net
    assert is_free_choice(single).ok


@pytest.mark.parametrize("seed", range(20))
def test_free_choice_matches_pairwise_definition(seed):
    rng = random.Random(seed)
    places = [f"p{i}" for i in range(4)]
    tr = {}
    for k in range(5):
        pre = rng.sample(places, rng.randint(1, 2))
        tr[f"t{k}"] = (f"a{k}", pre, [rng.choice(places)])
    net = net_from_transitions(tr, initial=("p0",), finals=(("p3",),)).net
    pres = {t: {p for p, x in net.arcs if x == t} for t in net.transitions}
    expected = all(not (pres[a] & pres[b]) or pres[a] == pres[b] for a, b in itertools.combinations(sorted(pres), 2))
    assert is_free_choice(net).ok == expected


def test_clusters(loan_sys):
    groups = clusters(loan_sys.net)
    assert frozenset({"t_send", "t_create"}) in groups
    assert frozenset({"t_notify", "t_complete"}) in groups


def test_workflow(loan_sys):
    assert is_workflow_net(loan_sys.net).ok
    two_sources = net_from_transitions({"t": ("a", ["i", "j"], ["o"])}, initial=("i", "j")).net
    wf = is_workflow_net(two_sources)
    assert not wf.ok and "i" in wf.diagnostics[0] and "j" in wf.diagnostics[0]
    isolated = PetriNet(
        frozenset({"i", "o", "x"}), frozenset({"t"}), frozenset({("i", "t"), ("t", "o")}), {"t": "a"}
    )
    assert not is_workflow_net(isolated).ok


def test_soundness(loan_sys, constrained_sys):
    assert check_soundness(loan_sys).is_sound
    assert check_soundness(constrained_sys).is_sound
    sys, _ = unsound_repair_case()
    assert check_soundness(sys).is_sound


def test_soundness_detects_dead_and_stuck():
    stuck = net_from_transitions(
        {"a": ("a", ["i"], ["p"]), "b": ("b", ["i"], ["q"]), "c": ("c", ["p", "q"], ["o"])}
    )
    rep = check_soundness(stuck)
    assert not rep.is_sound and rep.dead_transitions == ("c",)
    assert Marking(["p"]) in rep.unreachable_final_from
    with pytest.raises(PreconditionError):
        check_soundness(net_from_transitions({"t": ("a", ["i", "j"], ["o"])}, initial=("i", "j")))


def test_add_place_structure(loan_sys, constrained_sys):
    step = add_place(loan_sys, ["t_send"], ["t_notify"], place_id="r2")
    step = add_place(step, ["t_create"], ["t_complete"], place_id="r3")
    assert step.net.arcs == constrained_sys.net.arcs
    assert step.net.places == constrained_sys.net.places
    assert step.finals == constrained_sys.finals and step.initial == constrained_sys.initial
    assert fresh_place_id(step.net) == "r1"
    with pytest.raises(KeyError):
        add_place(loan_sys, ["nope"], [])
    with pytest.raises(ValueError):
        add_place(loan_sys, [], [], place_id="p1")


def test_add_place_extends_finals(loan_sys):
    out = add_place(loan_sys, ["t_send"], ["t_accept"], extend_finals=True, place_id="r")
    assert out.finals == {Marking(["o"]), Marking(["o", "r"])}
    marked = add_place(loan_sys, [], ["t_send"], mark_initial=True, place_id="r")
    assert marked.initial == Marking(["i", "r"])


@pytest.mark.parametrize("t", ["t_send", "t_check", "t_notify", "t_accept"])
def test_self_loop_place_keeps_language(loan_sys, t):
    out = add_place(loan_sys, [t], [t], mark_initial=True, extend_finals=False, place_id="s")
    # the token stays in s, so the final marking must include it
    out = NetSystem(out.net, out.initial, frozenset({Marking(["o", "s"])}))
    for k in range(9):
        assert language_bounded(out, k) == language_bounded(loan_sys, k)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.data())
def test_add_place_only_restricts(seed, data):
    sys = random_free_choice_net(seed, depth=3, max_leaves=6)
    ts = sys.net.sorted_transitions
    enter = data.draw(st.sets(st.sampled_from(ts), max_size=2))
    leave = data.draw(st.sets(st.sampled_from(ts), max_size=2))
    out = add_place(sys, enter, leave, mark_initial=data.draw(st.booleans()), extend_finals=True, place_id="z")
    assert sys.net.arcs <= out.net.arcs and sys.net.transitions == out.net.transitions
    for k in range(6):
        assert language_bounded(out, k, max_states=20_000) <= language_bounded(sys, k)


def test_simulate_reproducible_and_accepted(constrained_sys):
    a = simulate(constrained_sys, 100, seed=7)
    assert a == simulate(constrained_sys, 100, seed=7)
    assert set(a) == TWO
    assert all(accepts(constrained_sys, t) for t in a)


@pytest.mark.parametrize("seed", range(10))
def test_simulated_traces_are_accepted(seed):
    sys = random_free_choice_net(seed)
    for t in simulate(sys, 20, seed=seed):
        assert accepts(sys, t)


def test_simulate_gives_up_without_final():
    sys = net_from_transitions({"a": ("a", ["i"], ["p"])})
    with pytest.raises(SimulationError):
        simulate(sys, 3, max_attempts=10)


def test_net_validation():
    with pytest.raises(ValueError):
        PetriNet(frozenset({"p"}), frozenset({"t", "u"}), frozenset(), {"t": "a", "u": "a"})
    with pytest.raises(ValueError):
        PetriNet(frozenset({"p"}), frozenset({"t"}), frozenset({("p", "p")}), {"t": "a"})
    with pytest.raises(ValueError):
        NetSystem(net_from_transitions({"t": ("a", ["i"], ["o"])}).net, Marking(["zz"]), frozenset())


def test_dot(constrained_sys):
    sys, _ = unsound_repair_case()
    dot = to_dot(sys)
    assert "fillcolor=black" in dot and "&#9679;" in dot
    assert to_dot(constrained_sys).count("->") == len(constrained_sys.net.arcs)
