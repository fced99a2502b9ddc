"""PNML subset reader and writer for place/transition nets.

Elements understood (namespaces are ignored)::

    pnml/net/[page/]place        id, optional name/text, optional initialMarking/text
    pnml/net/[page/]transition   id, name/text is the label
    pnml/net/[page/]arc          source, target, optional inscription/text (must be 1)
    pnml/net/finalmarkings/marking/place   idref, text = token count

A transition is silent when its ``toolspecific`` child carries
``activity="$invisible$"`` or when its name is missing or empty.  At least
one place must carry an ``initialMarking`` element.  Without a
``finalmarkings`` block a workflow net gets the single final marking
``[sink]``; other nets are rejected.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from .exceptions import ParseError
from .petri_net import Marking, NetSystem, PetriNet, is_workflow_net
from .transition_system import TAU

PNML_GRAMMAR = "http://www.pnml.org/version-2009/grammar/ptnet"


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _child(el, name):
    for c in el:
        if _local(c.tag) == name:
            return c
    return None


def _text(el, path):
    cur = el
    for name in path:
        cur = _child(cur, name)
        if cur is None:
            return None
    return (cur.text or "").strip()


def _int(text, what):
    try:
        value = int(text)
    except (TypeError, ValueError):
        raise ParseError(f"{what}: expected an integer, got {text!r}") from None
    if value < 0:
        raise ParseError(f"{what}: negative value {value}")
    return value


def parse_pnml(data: bytes | str) -> NetSystem:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise ParseError(f"malformed XML: {exc}") from None
    nets = [el for el in root.iter() if _local(el.tag) == "net"]
    if len(nets) != 1:
        raise ParseError(f"expected exactly one <net> element, found {len(nets)}")
    net_el = nets[0]

    places, transitions, arcs, labels = set(), set(), set(), {}
    initial = {}
    saw_marking = False
    for el in net_el.iter():
        kind = _local(el.tag)
        if kind not in ("place", "transition", "arc"):
            continue
        if el.get("idref") is not None:
            continue  # place reference inside finalmarkings
        ident = el.get("id")
        if kind == "arc":
            src, tgt = el.get("source"), el.get("target")
            if not src or not tgt:
                raise ParseError(f"arc {ident!r} lacks source or target")
            weight = _text(el, ["inscription", "text"])
            if weight is not None and _int(weight, f"arc {ident!r} inscription") != 1:
                raise ParseError(f"arc {ident!r} is weighted ({weight}); only unweighted arcs are supported")
            arcs.add((src, tgt))
            continue
        if not ident:
            raise ParseError(f"<{kind}> without id")
        if ident in places or ident in transitions:
            raise ParseError(f"duplicate id {ident!r}")
        if kind == "place":
            places.add(ident)
            tokens = _text(el, ["initialMarking", "text"])
            if _child(el, "initialMarking") is not None:
                saw_marking = True
            if tokens:
                n = _int(tokens, f"initialMarking of place {ident!r}")
                if n:
                    initial[ident] = n
        else:
            transitions.add(ident)
            name = _text(el, ["name", "text"])
            silent = not name
            for c in el:
                if _local(c.tag) == "toolspecific" and c.get("activity") == "$invisible$":
                    silent = True
            labels[ident] = TAU if silent else name

    if not saw_marking:
        raise ParseError("no <initialMarking> element found on any place")
    for src, tgt in arcs:
        for node in (src, tgt):
            if node not in places and node not in transitions:
                raise ParseError(f"arc refers to unknown node {node!r}")
    try:
        net = PetriNet(frozenset(places), frozenset(transitions), frozenset(arcs), labels)
    except ValueError as exc:
        raise ParseError(str(exc)) from None

    finals = []
    fm_block = _child(net_el, "finalmarkings")
    if fm_block is not None:
        for mk in fm_block:
            if _local(mk.tag) != "marking":
                continue
            tokens = {}
            for pl in mk:
                if _local(pl.tag) != "place":
                    continue
                ref = pl.get("idref")
                if ref not in places:
                    raise ParseError(f"final marking refers to unknown place {ref!r}")
                n = _int((pl.text or "").strip() or _text(pl, ["text"]) or "0", f"final marking of {ref!r}")
                if n:
                    tokens[ref] = n
            finals.append(Marking(tokens))
    else:
        wf = is_workflow_net(net)
        if wf.sink is None:
            raise ParseError("no <finalmarkings> block and the net has no unique sink place")
        finals.append(Marking([wf.sink]))
    return NetSystem(net, Marking(initial), frozenset(finals))


def serialize_pnml(sys: NetSystem, net_id: str = "net1") -> bytes:
    net = sys.net
    root = ET.Element("pnml")
    net_el = ET.SubElement(root, "net", id=net_id, type=PNML_GRAMMAR)
    page = ET.SubElement(net_el, "page", id="page1")
    for p in sorted(net.places):
        pl = ET.SubElement(page, "place", id=p)
        ET.SubElement(ET.SubElement(pl, "name"), "text").text = p
        ET.SubElement(ET.SubElement(pl, "initialMarking"), "text").text = str(sys.initial.get(p, 0))
    for t in net.sorted_transitions:
        tr = ET.SubElement(page, "transition", id=t)
        label = net.labels[t]
        ET.SubElement(ET.SubElement(tr, "name"), "text").text = t if label is TAU else label
        if label is TAU:
            ET.SubElement(tr, "toolspecific", tool="ProM", version="6.4", activity="$invisible$")
    for i, (src, tgt) in enumerate(sorted(net.arcs), start=1):
        ET.SubElement(page, "arc", id=f"a{i}", source=src, target=tgt)
    fm = ET.SubElement(net_el, "finalmarkings")
    for m in sys.sorted_finals():
        mk = ET.SubElement(fm, "marking")
        for p, n in m.items():
            ET.SubElement(ET.SubElement(mk, "place", idref=p), "text").text = str(n)
    ET.indent(root, space="  ")
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


def read_pnml(path) -> NetSystem:
    with open(path, "rb") as fh:
        return parse_pnml(fh.read())


def write_pnml(sys: NetSystem, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_pnml(sys))
