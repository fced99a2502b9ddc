"""Small built-in nets and logs: the loan-application example, an unsound
repair case, synthetic generator/surrogate pairs and random block-structured
free-choice nets."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .event_log import EventLog
from .petri_net import Marking, NetSystem, PetriNet
from .transition_system import TAU

SEND, CREATE, CHECK = "send application", "create application", "check application"
NOTIFY, COMPLETE, ACCEPT = "notify client", "complete application", "accept application"


def net_from_transitions(transitions: dict, initial=("i",), finals=(("o",),)) -> NetSystem:
    """Build a net system from ``{tid: (label, pre_places, post_places)}``.

    Use ``None`` as the label of a silent transition.
    """
    places, arcs, labels = set(initial), set(), {}
    for final in finals:
        places.update(final)
    for t, (label, pre, post) in transitions.items():
        labels[t] = label
        for p in pre:
            places.add(p)
            arcs.add((p, t))
        for p in post:
            places.add(p)
            arcs.add((t, p))
    net = PetriNet(frozenset(places), frozenset(transitions), frozenset(arcs), labels)
    return NetSystem(net, Marking(initial), frozenset(Marking(f) for f in finals))


def loan_log() -> EventLog:
    return EventLog([(SEND, CHECK, NOTIFY, ACCEPT), (CREATE, CHECK, COMPLETE, ACCEPT)])


def _loan_transitions():
    return {
        "t_send": (SEND, ["i"], ["p1"]),
        "t_create": (CREATE, ["i"], ["p1"]),
        "t_check": (CHECK, ["p1"], ["p2"]),
        "t_notify": (NOTIFY, ["p2"], ["p3"]),
        "t_complete": (COMPLETE, ["p2"], ["p3"]),
        "t_accept": (ACCEPT, ["p3"], ["o"]),
    }


def loan_net() -> NetSystem:
    """Free-choice net that lets either applicant path end with either follow-up."""
    return net_from_transitions(_loan_transitions())


def loan_net_constrained() -> NetSystem:
    """The loan net plus the two places linking how an application started to how it ends."""
    tr = _loan_transitions()
    tr["t_send"] = (SEND, ["i"], ["p1", "r2"])
    tr["t_create"] = (CREATE, ["i"], ["p1", "r3"])
    tr["t_notify"] = (NOTIFY, ["p2", "r2"], ["p3"])
    tr["t_complete"] = (COMPLETE, ["p2", "r3"], ["p3"])
    return net_from_transitions(tr)


def unsound_repair_case() -> tuple[NetSystem, EventLog]:
    """Net and log whose repair adds one place that also widens the final markings.

    After the silent exit the repaired net can end holding the sink and the
    new place together, so it is not sound.
    """
    sys = net_from_transitions(
        {
            "t_x": ("x", ["i"], ["p"]),
            "t_y": ("y", ["i"], ["p"]),
            "t_b": ("b", ["p"], ["o"]),
            "t_c": ("c", ["p"], ["q"]),
            "t_e": ("e", ["q"], ["o"]),
            "t_skip": (TAU, ["q"], ["o"]),
        }
    )
    log = EventLog([("x", "b"), ("y", "b"), ("y", "c"), ("y", "c", "e")])
    return sys, log


@dataclass(frozen=True)
class SyntheticCase:
    """A generator net with long-distance constraints and its free-choice surrogate."""

    name: str
    generator: NetSystem
    surrogate: NetSystem
    exact: bool  # repair is expected to recover the generator's language


def _three_way():
    base, constrained = {}, {}
    for k in (1, 2, 3):
        base[f"t_x{k}"] = (f"x{k}", ["i"], ["p1"])
        base[f"t_y{k}"] = (f"y{k}", ["p2"], ["o"])
        constrained[f"t_x{k}"] = (f"x{k}", ["i"], ["p1", f"c{k}"])
        constrained[f"t_y{k}"] = (f"y{k}", ["p2", f"c{k}"], ["o"])
    base["t_check"] = constrained["t_check"] = ("check", ["p1"], ["p2"])
    return net_from_transitions(constrained), net_from_transitions(base)


def _parallel_middle():
    base = {
        "t_a": ("a", ["i"], ["p1"]),
        "t_b": ("b", ["i"], ["p1"]),
        "t_split": (TAU, ["p1"], ["pc", "pd"]),
        "t_c": ("c", ["pc"], ["qc"]),
        "t_d": ("d", ["pd"], ["qd"]),
        "t_join": (TAU, ["qc", "qd"], ["p2"]),
        "t_e": ("e", ["p2"], ["o"]),
        "t_f": ("f", ["p2"], ["o"]),
    }
    con = dict(base)
    con["t_a"] = ("a", ["i"], ["p1", "ca"])
    con["t_b"] = ("b", ["i"], ["p1", "cb"])
    con["t_e"] = ("e", ["p2", "ca"], ["o"])
    con["t_f"] = ("f", ["p2", "cb"], ["o"])
    return net_from_transitions(con), net_from_transitions(base)


def _optional_middle():
    base = {
        "t_a": ("a", ["i"], ["p1"]),
        "t_b": ("b", ["i"], ["p1"]),
        "t_c": ("c", ["p1"], ["p2"]),
        "t_skip": (TAU, ["p1"], ["p2"]),
        "t_d": ("d", ["p2"], ["o"]),
        "t_e": ("e", ["p2"], ["o"]),
    }
    con = dict(base)
    con["t_a"] = ("a", ["i"], ["p1", "ca"])
    con["t_b"] = ("b", ["i"], ["p1", "cb"])
    con["t_d"] = ("d", ["p2", "ca"], ["o"])
    con["t_e"] = ("e", ["p2", "cb"], ["o"])
    return net_from_transitions(con), net_from_transitions(base)


def _looping_middle():
    base = {
        "t_a": ("a", ["i"], ["p1"]),
        "t_b": ("b", ["i"], ["p1"]),
        "t_c": ("c", ["p1"], ["p2"]),
        "t_g": ("g", ["p2"], ["p1"]),
        "t_d": ("d", ["p2"], ["o"]),
        "t_e": ("e", ["p2"], ["o"]),
    }
    con = dict(base)
    con["t_a"] = ("a", ["i"], ["p1", "ca"])
    con["t_b"] = ("b", ["i"], ["p1", "cb"])
    con["t_d"] = ("d", ["p2", "ca"], ["o"])
    con["t_e"] = ("e", ["p2", "cb"], ["o"])
    return net_from_transitions(con), net_from_transitions(base)


def synthetic_cases() -> list[SyntheticCase]:
    cases = [SyntheticCase("loan", loan_net_constrained(), loan_net(), True)]
    for name, build, exact in (
        ("three_way", _three_way, True),
        ("parallel_middle", _parallel_middle, True),
        ("optional_middle", _optional_middle, True),
        ("looping_middle", _looping_middle, False),
    ):
        gen, sur = build()
        cases.append(SyntheticCase(name, gen, sur, exact))
    return cases


class _TreeNet:
    def __init__(self):
        self.transitions = {}
        self.n_places = 0
        self.n_labels = 0

    def place(self):
        self.n_places += 1
        return f"q{self.n_places}"

    def transition(self, label, pre, post):
        t = f"t{len(self.transitions) + 1}"
        self.transitions[t] = (label, pre, post)

    def label(self):
        self.n_labels += 1
        return f"a{self.n_labels}"


def random_process_tree(rng: random.Random, depth: int = 3, max_leaves: int = 8):
    """Random tree of ("leaf", label|None), ("seq"|"xor"|"and", a, b) and ("loop", do, redo)."""
    budget = [max_leaves]

    def grow(d):
        if d == 0 or budget[0] <= 1 or rng.random() < 0.3:
            budget[0] -= 1
            return ("leaf", TAU if rng.random() < 0.1 else "")
        op = rng.choice(["seq", "seq", "xor", "xor", "and", "loop"])
        return (op, grow(d - 1), grow(d - 1))

    return grow(depth)


def net_from_process_tree(tree) -> NetSystem:
    """Block-structured, hence sound and free-choice, workflow net of a process tree.

    Each visible leaf gets a fresh label ``a1``, ``a2``, ... in build order.
    """
    b = _TreeNet()

    def build(node, src, dst):
        kind = node[0]
        if kind == "leaf":
            b.transition(TAU if node[1] is TAU else b.label(), [src], [dst])
        elif kind == "seq":
            mid = b.place()
            build(node[1], src, mid)
            build(node[2], mid, dst)
        elif kind == "xor":
            build(node[1], src, dst)
            build(node[2], src, dst)
        elif kind == "and":
            pa, pb, qa, qb = b.place(), b.place(), b.place(), b.place()
            b.transition(TAU, [src], [pa, pb])
            build(node[1], pa, qa)
            build(node[2], pb, qb)
            b.transition(TAU, [qa, qb], [dst])
        elif kind == "loop":
            enter, back = b.place(), b.place()
            b.transition(TAU, [src], [enter])
            build(node[1], enter, back)
            build(node[2], back, enter)
            b.transition(TAU, [back], [dst])
        else:
            raise ValueError(f"unknown node kind {kind!r}")

    build(tree, "i", "o")
    return net_from_transitions(b.transitions)


def random_free_choice_net(seed: int, depth: int = 3, max_leaves: int = 8) -> NetSystem:
    return net_from_process_tree(random_process_tree(random.Random(seed), depth, max_leaves))
