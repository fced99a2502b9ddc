"""Repair of free-choice workflow nets with region-derived constraint places.

Pipeline: minimal TS of the log, detection of choices the net leaves free
but the log does not, one ESSP search per detected problem, then insertion
of one place per distinct region signature.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from .conformance import ConformanceSummary, precision
from .exceptions import PreconditionError, ResourceError
from .petri_net import (
    DEFAULT_MAX_STATES,
    NetSystem,
    PetriNet,
    accepts,
    add_place,
    check_soundness,
    clusters,
    fresh_place_id,
    is_free_choice,
    is_workflow_net,
    reachability_graph,
)
from .regions import (
    BUDGET_EXHAUSTED,
    DEFAULT_ESSP_BUDGET,
    SOLVED,
    UNSOLVABLE,
    EsspProblem,
    Region,
    region_with_signature,
    solve_essp_with_status,
)
from .transition_system import TAU, TransitionSystem, build_prefix_tree, minimize, state_key, tau_closure

UNSOLVED = "unsolved"


def find_false_free_choice(net: PetriNet, ts: TransitionSystem) -> list[EsspProblem]:
    """ESSP problems for every state where a cluster is only partly enabled."""
    fc = is_free_choice(net)
    if not fc.ok:
        raise PreconditionError(f"net is not free-choice: {fc.violations[0]}")
    if not ts.deterministic:
        raise PreconditionError("transition system must be deterministic and τ-free")
    if len(minimize(ts).states) != len(ts.states):
        raise PreconditionError("transition system is not minimal")
    problems = []
    for cluster in visible_clusters(net):
        labels = sorted(net.labels[t] for t in cluster)
        cl = frozenset(labels)
        for s in ts.sorted_states():
            enabled = {a for a, _ in ts.out_arcs[s]}
            on = [e for e in labels if e in enabled]
            off = [e for e in labels if e not in enabled]
            if not on:
                continue
            for ei in on:
                for ej in off:
                    problems.append(EsspProblem(s, ej, ei, cl))
    return problems


def visible_clusters(net: PetriNet) -> list[frozenset]:
    """Groups of at least two non-silent transitions sharing a non-empty preset."""
    out = []
    for group in clusters(net):
        visible = frozenset(t for t in group if net.labels[t] is not TAU)
        if len(visible) >= 2:
            out.append(visible)
    return out


@dataclass
class ProblemOutcome:
    problem: EsspProblem
    status: str
    regions: list = field(default_factory=list)


@dataclass(frozen=True)
class AddedPlace:
    place: str
    entering: tuple
    exiting: tuple
    initial: bool
    finals_extended: bool
    problems: tuple
    states: tuple


@dataclass
class RepairReport:
    problems: list = field(default_factory=list)
    added_places: list = field(default_factory=list)
    skipped_existing: list = field(default_factory=list)
    labels_missing_in_log: tuple = ()
    labels_missing_in_net: tuple = ()
    metrics_before: ConformanceSummary | None = None
    metrics_after: ConformanceSummary | None = None
    notes: list = field(default_factory=list)
    soundness_prediction: dict | None = None
    net_size_before: tuple = ()
    net_size_after: tuple = ()
    wall_time: float = 0.0

    @property
    def n_solved(self) -> int:
        return sum(1 for p in self.problems if p.status == SOLVED)

    def records(self) -> list[dict]:
        """Machine-readable records; wall time is left out so output is reproducible."""
        recs = []
        for i, out in enumerate(self.problems):
            pr = out.problem
            recs.append(
                {
                    "record": "problem",
                    "index": i,
                    "state": pr.state,
                    "forbidden": pr.forbidden,
                    "witness": pr.witness,
                    "cluster": sorted(pr.cluster),
                    "status": out.status,
                    "regions": [sorted(r.states, key=state_key) for r in out.regions],
                }
            )
        for ap in self.added_places:
            recs.append(
                {
                    "record": "added_place",
                    "place": ap.place,
                    "entering": list(ap.entering),
                    "exiting": list(ap.exiting),
                    "initial": ap.initial,
                    "finals_extended": ap.finals_extended,
                    "problems": list(ap.problems),
                    "states": list(ap.states),
                }
            )
        for sk in self.skipped_existing:
            recs.append({"record": "skipped_existing", **sk})
        summary = {
            "record": "summary",
            "problems": len(self.problems),
            "solved": self.n_solved,
            "unsolved": sum(1 for p in self.problems if p.status == UNSOLVED),
            "budget_exhausted": sum(1 for p in self.problems if p.status == BUDGET_EXHAUSTED),
            "new_places": len(self.added_places),
            "size_before": list(self.net_size_before),
            "size_after": list(self.net_size_after),
            "labels_missing_in_log": list(self.labels_missing_in_log),
            "labels_missing_in_net": list(self.labels_missing_in_net),
            "metrics_before": self.metrics_before.as_dict() if self.metrics_before else None,
            "metrics_after": self.metrics_after.as_dict() if self.metrics_after else None,
            "soundness_prediction": self.soundness_prediction,
            "notes": list(self.notes),
        }
        recs.append(summary)
        return recs

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in self.records())

    def summary(self, include_time: bool = False) -> str:
        def fmt(v):
            return "undefined" if v is None else f"{v:.3f}"

        before = self.metrics_before.precision if self.metrics_before else None
        after = self.metrics_after.precision if self.metrics_after else None
        lines = [
            f"problems: {len(self.problems)} ({self.n_solved} solved)",
            f"new places: {len(self.added_places)}",
        ]
        for ap in self.added_places:
            flags = []
            if ap.initial:
                flags.append("initially marked")
            if ap.finals_extended:
                flags.append("finals extended")
            extra = f" [{', '.join(flags)}]" if flags else ""
            lines.append(f"  {ap.place}: {{{', '.join(ap.entering)}}} -> {{{', '.join(ap.exiting)}}}{extra}")
        if self.metrics_before or self.metrics_after:
            lines.append(f"precision (N,L): {fmt(before)}")
            lines.append(f"precision (N',L): {fmt(after)}")
        if include_time:
            lines.append(f"time (ms): {self.wall_time * 1000:.1f}")
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines) + "\n"


def _labels_to_transitions(net: PetriNet, labels) -> frozenset:
    return frozenset(net.by_label[a] for a in labels if a in net.by_label)


def repair(
    net_sys: NetSystem,
    log,
    budget: int = DEFAULT_ESSP_BUDGET,
    max_states: int = DEFAULT_MAX_STATES,
    *,
    metrics: bool = True,
    theorem4_check: bool = False,
) -> tuple[NetSystem, RepairReport]:
    """Add region-derived places that restrict choices the log never takes."""
    start = time.perf_counter()
    net = net_sys.net
    fc = is_free_choice(net)
    if not fc.ok:
        raise PreconditionError(f"net is not free-choice: {fc.violations[0]}")
    wf = is_workflow_net(net)
    if not wf.ok:
        raise PreconditionError("net is not a workflow net: " + "; ".join(wf.diagnostics))

    report = RepairReport()
    report.net_size_before = (len(net.places), len(net.transitions))
    report.labels_missing_in_log = tuple(sorted(net.visible_labels - log.alphabet))
    report.labels_missing_in_net = tuple(sorted(log.alphabet - net.visible_labels))
    if report.labels_missing_in_net:
        report.notes.append("log labels without a transition are ignored: " + ", ".join(report.labels_missing_in_net))

    ts = minimize(build_prefix_tree(log))
    for pr in find_false_free_choice(net, ts):
        regions, status = solve_essp_with_status(ts, pr, budget)
        report.problems.append(ProblemOutcome(pr, UNSOLVED if status == UNSOLVABLE else status, regions))

    # distinct signatures in problem order, each traced to the problems that produced it
    order: list = []
    sources: dict = {}
    witness_region: dict = {}
    for i, out in enumerate(report.problems):
        for reg in out.regions:
            key = _signature(net, ts, reg)
            if key not in sources:
                order.append(key)
                sources[key] = []
                witness_region[key] = reg
            if i not in sources[key]:
                sources[key].append(i)

    repaired = net_sys
    for key in order:
        enter_t, exit_t, init, fin = key
        labels_in = tuple(sorted(net.labels[t] for t in enter_t))
        labels_out = tuple(sorted(net.labels[t] for t in exit_t))
        existing = _matching_place(net, enter_t, exit_t)
        if existing is not None:
            report.skipped_existing.append(
                {"place": existing, "entering": list(labels_in), "exiting": list(labels_out), "problems": sources[key]}
            )
            continue
        if not enter_t and not exit_t:
            report.notes.append("a region touches no transition of the net and was not added")
            continue
        pid = fresh_place_id(repaired.net)
        repaired = add_place(repaired, enter_t, exit_t, mark_initial=init, extend_finals=fin, place_id=pid)
        report.added_places.append(
            AddedPlace(
                place=pid,
                entering=labels_in,
                exiting=labels_out,
                initial=init,
                finals_extended=fin,
                problems=tuple(sources[key]),
                states=tuple(sorted(witness_region[key].states, key=state_key)),
            )
        )
    report.net_size_after = (len(repaired.net.places), len(repaired.net.transitions))

    lost = [t for t in log.sorted_traces() if accepts(net_sys, t, max_states) and not accepts(repaired, t, max_states)]
    if lost:
        raise AssertionError(f"repair rejected previously accepted traces: {lost[:3]}")

    if metrics:
        for attr, system in (("metrics_before", net_sys), ("metrics_after", repaired)):
            try:
                setattr(report, attr, precision(system, log, max_states))
            except ResourceError as exc:
                report.notes.append(f"{attr} not computed: {exc}")
    if theorem4_check:
        try:
            report.soundness_prediction = predict_soundness(net_sys, report, max_states)
        except ResourceError as exc:
            report.soundness_prediction = {"predicted_sound": None, "reason": f"resource bound: {exc}"}
    report.wall_time = time.perf_counter() - start
    return repaired, report


def _signature(net: PetriNet, ts: TransitionSystem, reg: Region) -> tuple:
    return (
        _labels_to_transitions(net, reg.entering),
        _labels_to_transitions(net, reg.exiting),
        ts.initial in reg.states,
        bool(ts.finals & reg.states),
    )


def _matching_place(net: PetriNet, enter_t, exit_t):
    for p in sorted(net.places):
        if net.place_inputs[p] == enter_t and net.place_outputs[p] == exit_t:
            return p
    return None


def predict_soundness(net_sys: NetSystem, report: RepairReport, max_states: int = DEFAULT_MAX_STATES) -> dict:
    """Check the sufficient condition under which the repaired net is sound.

    Only a repair whose added places all stem from one cluster is covered:
    their exit sets must be pairwise disjoint and cover the cluster's labels,
    and the τ-closed behaviour of the original net must have a region with
    the union of their enter and exit sets that avoids the initial and final
    states.  Otherwise no prediction is made.
    """

    def no(reason):
        return {"hypothesis_holds": False, "predicted_sound": None, "reason": reason}

    if not report.added_places:
        return no("no places were added")
    if not check_soundness(net_sys, max_states).is_sound:
        return no("input net is not sound")
    cluster_sets = {report.problems[i].problem.cluster for ap in report.added_places for i in ap.problems}
    if len(cluster_sets) != 1:
        return no("added places stem from more than one cluster")
    (cluster,) = cluster_sets
    exits = [set(ap.exiting) for ap in report.added_places]
    union_exit = set().union(*exits)
    if sum(len(e) for e in exits) != len(union_exit):
        return no("exit sets of the added places overlap")
    if union_exit != set(cluster):
        return no("exit sets do not cover exactly the cluster labels")
    union_enter = set().union(*(ap.entering for ap in report.added_places))
    closed = tau_closure(reachability_graph(net_sys, max_states))
    excluded = {closed.initial} | set(closed.finals)
    if region_with_signature(closed, union_enter, union_exit, excluded) is None:
        return no("no region with the combined signature in the net's behaviour")
    return {"hypothesis_holds": True, "predicted_sound": True, "reason": "single-cluster condition satisfied"}


__all__ = [
    "find_false_free_choice",
    "visible_clusters",
    "repair",
    "predict_soundness",
    "RepairReport",
    "AddedPlace",
    "ProblemOutcome",
    "UNSOLVED",
]
