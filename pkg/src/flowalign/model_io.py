"""Model and log ingestion (PNML, XES, CSV) plus seeded noise injection.

Supported subsets: plain place/transition PNML (single page, no
hierarchy; unsupported elements are ignored with a warning) and XES
control flow (the ``concept:name`` string attribute of traces and
events; everything else is skipped).  ``.gz`` inputs are decompressed
transparently.
"""

from __future__ import annotations

import csv
import gzip
import io
import logging
import random
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import IO

from .errors import InvalidSpecError, ModelParseError, SemanticError
from .petri import TAU, PetriNet, Trace

log = logging.getLogger(__name__)

PNML_NS = "http://www.pnml.org/version-2009/grammar/pnml"


@dataclass(frozen=True)
class EventLog:
    """An ordered collection of traces; case ids need not be unique."""

    traces: tuple[Trace, ...]
    source_name: str = ""
    skipped_events: int = 0

    def __len__(self) -> int:
        return len(self.traces)


@dataclass(frozen=True)
class NoiseSpec:
    """Parameters for :func:`inject_noise`.

    Probabilities apply per decision point: ``delete_prob`` per event,
    ``swap_prob`` per adjacent surviving pair, ``insert_prob`` per gap.
    """

    insert_prob: float = 0.0
    delete_prob: float = 0.0
    swap_prob: float = 0.0
    alphabet: tuple[str, ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("insert_prob", "delete_prob", "swap_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidSpecError(f"{name} must be in [0, 1], got {v}")


def _read_bytes(source: bytes | str | Path | IO[bytes]) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, (str, Path)):
        try:
            data = Path(source).read_bytes()
        except OSError as exc:
            raise ModelParseError(f"cannot read {source}: {exc}") from exc
    else:
        data = source.read()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data


def _parse_xml(data: bytes, what: str) -> ET.Element:
    try:
        return ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ModelParseError(f"malformed {what} XML at line {line}, column {col}: {exc.msg}") from exc


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _find_local(elem: ET.Element, name: str) -> ET.Element | None:
    for child in elem:
        if _local(child.tag) == name:
            return child
    return None


def _text_of(elem: ET.Element | None) -> str | None:
    if elem is None:
        return None
    t = _find_local(elem, "text")
    if t is not None:
        return (t.text or "").strip()
    return (elem.text or "").strip()


_PNML_KNOWN = {
    "pnml", "net", "page", "place", "transition", "arc", "name", "text",
    "initialMarking", "finalmarkings", "marking", "inscription",
    "toolspecific", "graphics", "position", "dimension", "offset", "fill", "line",
}


def _is_invisible(trans: ET.Element) -> bool:
    if trans.get("invisible", "").lower() == "true":
        return True
    for child in trans.iter():
        if _local(child.tag) == "toolspecific" and child.get("activity") == "$invisible$":
            return True
    return False


def parse_pnml(source: bytes | str | Path | IO[bytes]) -> PetriNet:
    """Read a place/transition net from PNML.

    Transitions whose name is absent, empty, or marked invisible are
    labeled :data:`~flowalign.petri.TAU`.  The final marking comes from a
    ``finalmarkings`` section when present and is otherwise inferred as
    one token in each sink place.
    """
    root = _parse_xml(_read_bytes(source), "PNML")
    net_elem = None
    for elem in root.iter():
        if _local(elem.tag) == "net":
            net_elem = elem
            break
    if net_elem is None:
        raise SemanticError("PNML file contains no <net> element")

    places: list[str] = []
    initial: dict[str, int] = {}
    labels: dict[str, str | None] = {}
    transitions: list[str] = []
    arcs: list[tuple[str, str, int]] = []
    final: dict[str, int] = {}
    saw_finalmarkings = False
    unknown_tags: set[str] = set()

    # Walk without descending into finalmarkings: its <place idref=...>
    # children are references, not place declarations.
    stack = [net_elem]
    elements: list[ET.Element] = []
    while stack:
        node = stack.pop()
        elements.append(node)
        if _local(node.tag) not in ("finalmarkings", "place", "transition", "arc"):
            stack.extend(reversed(list(node)))

    for elem in elements:
        tag = _local(elem.tag)
        if tag not in _PNML_KNOWN:
            unknown_tags.add(tag)
            continue
        if tag == "place":
            pid = elem.get("id")
            if pid is None:
                raise SemanticError("place without id")
            places.append(pid)
            tokens = _text_of(_find_local(elem, "initialMarking"))
            if tokens:
                initial[pid] = int(tokens)
        elif tag == "transition":
            tid = elem.get("id")
            if tid is None:
                raise SemanticError("transition without id")
            transitions.append(tid)
            name = _text_of(_find_local(elem, "name"))
            if not name or _is_invisible(elem):
                labels[tid] = TAU
            else:
                labels[tid] = name
        elif tag == "arc":
            src, tgt = elem.get("source"), elem.get("target")
            if src is None or tgt is None:
                raise SemanticError(f"arc {elem.get('id')!r} lacks source/target")
            w = _text_of(_find_local(elem, "inscription"))
            arcs.append((src, tgt, int(w) if w else 1))
        elif tag == "finalmarkings":
            saw_finalmarkings = True
            first = _find_local(elem, "marking")
            if first is not None:
                for pl in first:
                    if _local(pl.tag) != "place":
                        continue
                    ref = pl.get("idref")
                    count = _text_of(pl)
                    final[ref] = int(count) if count else 1

    if unknown_tags:
        log.warning("ignoring unsupported PNML elements: %s", ", ".join(sorted(unknown_tags)))

    known = set(places) | set(transitions)
    for src, tgt, _ in arcs:
        if src not in known:
            raise SemanticError(f"arc references unknown node id {src!r}")
        if tgt not in known:
            raise SemanticError(f"arc references unknown node id {tgt!r}")

    if not saw_finalmarkings:
        outgoing = {src for src, _, _ in arcs}
        final = {p: 1 for p in places if p not in outgoing}
    if not initial:
        raise SemanticError("no place carries an initial token")
    if not final:
        raise SemanticError("no final marking given and none derivable from sink places")

    return PetriNet.build(places, transitions, arcs, labels, initial, final)


def serialize_pnml(net: PetriNet, net_id: str = "net1") -> bytes:
    """Write the supported PNML subset; inverse of :func:`parse_pnml`."""
    root = ET.Element("pnml")
    net_el = ET.SubElement(root, "net", id=net_id, type="http://www.pnml.org/version-2009/grammar/ptnet")
    page = ET.SubElement(net_el, "page", id="page1")
    for p, tokens in zip(net.places, net.initial_marking):
        pl = ET.SubElement(page, "place", id=p)
        if tokens:
            ET.SubElement(ET.SubElement(pl, "initialMarking"), "text").text = str(tokens)
    for t, lbl in zip(net.transitions, net.labels):
        tr = ET.SubElement(page, "transition", id=t)
        if lbl is not TAU:
            ET.SubElement(ET.SubElement(tr, "name"), "text").text = lbl
    for i, (src, tgt, w) in enumerate(net.arcs):
        arc = ET.SubElement(page, "arc", id=f"a{i}", source=src, target=tgt)
        if w != 1:
            ET.SubElement(ET.SubElement(arc, "inscription"), "text").text = str(w)
    fm = ET.SubElement(net_el, "finalmarkings")
    marking = ET.SubElement(fm, "marking")
    for p, tokens in zip(net.places, net.final_marking):
        if tokens:
            pl = ET.SubElement(marking, "place", idref=p)
            ET.SubElement(pl, "text").text = str(tokens)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


def parse_xes(source: bytes | str | Path | IO[bytes], source_name: str = "") -> EventLog:
    """Read an event log from XES.

    One :class:`Trace` per ``<trace>``, in file order; the activity is the
    event's ``concept:name`` string attribute.  Events lacking it are
    skipped and counted in ``EventLog.skipped_events``.
    """
    if not source_name and isinstance(source, (str, Path)):
        source_name = str(source)
    root = _parse_xml(_read_bytes(source), "XES")
    traces: list[Trace] = []
    skipped = 0
    index = 0
    for trace_el in root.iter():
        if _local(trace_el.tag) != "trace":
            continue
        case_id = None
        activities: list[str] = []
        for child in trace_el:
            tag = _local(child.tag)
            if tag == "string" and child.get("key") == "concept:name":
                case_id = child.get("value")
            elif tag == "event":
                name = None
                for attr in child:
                    if _local(attr.tag) == "string" and attr.get("key") == "concept:name":
                        name = attr.get("value")
                        break
                if name is None:
                    skipped += 1
                else:
                    activities.append(name)
        traces.append(Trace(case_id if case_id is not None else f"case-{index}", tuple(activities)))
        index += 1
    if skipped:
        log.warning("skipped %d events without concept:name", skipped)
    return EventLog(tuple(traces), source_name=source_name, skipped_events=skipped)


def serialize_xes(event_log: EventLog) -> bytes:
    """Write the supported XES subset; inverse of :func:`parse_xes`."""
    root = ET.Element("log", attrib={"xes.version": "1.0"})
    for trace in event_log.traces:
        tr = ET.SubElement(root, "trace")
        ET.SubElement(tr, "string", key="concept:name", value=trace.case_id)
        for act in trace.activities:
            ev = ET.SubElement(tr, "event")
            ET.SubElement(ev, "string", key="concept:name", value=act)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


def read_csv_log(source: bytes | str | Path | IO[bytes], source_name: str = "") -> EventLog:
    """Read a flat log with columns ``case_id,activity,order``.

    Traces appear in order of first appearance of their case id; events
    within a case are sorted by the numeric ``order`` column.
    """
    if not source_name and isinstance(source, (str, Path)):
        source_name = str(source)
    text = _read_bytes(source).decode("utf-8")
    reader = csv.DictReader(io.StringIO(text))
    required = {"case_id", "activity", "order"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise ModelParseError(f"CSV log must have columns {sorted(required)}, got {reader.fieldnames}")
    by_case: dict[str, list[tuple[int, str]]] = {}
    order_of_cases: list[str] = []
    for row in reader:
        cid = row["case_id"]
        if cid not in by_case:
            by_case[cid] = []
            order_of_cases.append(cid)
        try:
            pos = int(row["order"])
        except ValueError as exc:
            raise ModelParseError(f"non-integer order value {row['order']!r}") from exc
        by_case[cid].append((pos, row["activity"]))
    traces = tuple(
        Trace(cid, tuple(act for _, act in sorted(by_case[cid], key=lambda x: x[0])))
        for cid in order_of_cases
    )
    return EventLog(traces, source_name=source_name)


def inject_noise(trace: Trace, spec: NoiseSpec) -> Trace:
    """Apply seeded deletions, adjacent swaps, then insertions.

    The random stream is a Mersenne Twister (``random.Random(spec.seed)``)
    consumed in a fixed order, one draw per decision point:

    1. one uniform draw per event, left to right (delete when below
       ``delete_prob``);
    2. one draw per adjacent survivor pair, left to right, skipping past
       a swapped pair (swap when below ``swap_prob``);
    3. one draw per gap (before each survivor and after the last), left
       to right; on insertion one further draw picks the label index in
       ``spec.alphabet``.

    The result's case id gets a ``-noisy`` suffix.
    """
    if spec.insert_prob > 0 and not spec.alphabet:
        raise InvalidSpecError("insert_prob > 0 requires a non-empty alphabet")
    rng = random.Random(spec.seed)

    survivors = [a for a in trace.activities if rng.random() >= spec.delete_prob]

    i = 0
    while i + 1 < len(survivors):
        if rng.random() < spec.swap_prob:
            survivors[i], survivors[i + 1] = survivors[i + 1], survivors[i]
            i += 2
        else:
            i += 1

    out: list[str] = []
    for gap in range(len(survivors) + 1):
        if rng.random() < spec.insert_prob:
            out.append(spec.alphabet[rng.randrange(len(spec.alphabet))])
        if gap < len(survivors):
            out.append(survivors[gap])

    return Trace(trace.case_id + "-noisy", tuple(out))
