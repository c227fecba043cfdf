"""Petri-net core: markings, firing semantics, incidence matrices, trace models.

A marking is a plain tuple of token counts, one entry per place in the
net's canonical place order.  Nets are immutable after construction and
safe to share between threads; every operation here is a pure function.
"""

from __future__ import annotations

import functools
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import InvalidInputError, NotEnabledError

#: Label of a silent transition.  Parsers map absent/invisible activity
#: names to this value; it is never a user-supplied string.
TAU = None

Marking = tuple[int, ...]

Arc = tuple[str, str, int]  # (source id, target id, weight)


@dataclass(frozen=True)
class PetriNet:
    """A labeled marked Petri net.

    ``places`` and ``transitions`` fix the canonical orders used by every
    marking vector and incidence matrix derived from this net.  ``labels``
    is aligned with ``transitions``; an entry of :data:`TAU` marks a silent
    transition.  Arcs carry positive integer weights (weight 0 is tolerated
    so :func:`validate_workflow_net` can diagnose it).
    """

    places: tuple[str, ...]
    transitions: tuple[str, ...]
    arcs: tuple[Arc, ...]
    labels: tuple[str | None, ...]
    initial_marking: Marking
    final_marking: Marking

    def __post_init__(self) -> None:
        pset, tset = set(self.places), set(self.transitions)
        if len(pset) != len(self.places) or len(tset) != len(self.transitions):
            raise InvalidInputError("duplicate place or transition ids")
        if pset & tset:
            raise InvalidInputError(
                f"places and transitions share ids: {sorted(pset & tset)}"
            )
        if len(self.labels) != len(self.transitions):
            raise InvalidInputError("labels must align with transitions")
        for src, tgt, w in self.arcs:
            p2t = src in pset and tgt in tset
            t2p = src in tset and tgt in pset
            if not (p2t or t2p):
                raise InvalidInputError(f"arc ({src!r}, {tgt!r}) does not join a place and a transition")
            if not isinstance(w, int) or w < 0:
                raise InvalidInputError(f"arc ({src!r}, {tgt!r}) has non-integer or negative weight {w!r}")
        for name, m in (("initial", self.initial_marking), ("final", self.final_marking)):
            if len(m) != len(self.places):
                raise InvalidInputError(f"{name} marking has {len(m)} entries for {len(self.places)} places")
            if any(v < 0 for v in m):
                raise InvalidInputError(f"{name} marking has negative entries")

    @classmethod
    def build(
        cls,
        places: Iterable[str],
        transitions: Iterable[str],
        arcs: Iterable[tuple[str, str] | Arc],
        labels: Mapping[str, str | None],
        initial: Mapping[str, int],
        final: Mapping[str, int],
    ) -> "PetriNet":
        """Construct a net with the canonical (lexicographic) node order.

        Arc entries may be ``(source, target)`` pairs (weight 1) or
        ``(source, target, weight)`` triples.  ``initial`` and ``final``
        map place ids to token counts; unmentioned places get 0.
        """
        ps = tuple(sorted(places))
        ts = tuple(sorted(transitions))
        norm: list[Arc] = []
        for a in arcs:
            if len(a) == 2:
                norm.append((a[0], a[1], 1))
            else:
                norm.append((a[0], a[1], int(a[2])))
        unknown = set(labels) - set(ts)
        if unknown:
            raise InvalidInputError(f"labels reference unknown transitions: {sorted(unknown)}")
        return cls(
            places=ps,
            transitions=ts,
            arcs=tuple(sorted(norm)),
            labels=tuple(labels.get(t, TAU) for t in ts),
            initial_marking=tuple(int(initial.get(p, 0)) for p in ps),
            final_marking=tuple(int(final.get(p, 0)) for p in ps),
        )

    @functools.cached_property
    def place_index(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.places)}

    @functools.cached_property
    def transition_index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.transitions)}

    @property
    def labeling(self) -> dict[str, str | None]:
        return dict(zip(self.transitions, self.labels))

    def label(self, transition: str) -> str | None:
        return self.labels[self.transition_index[transition]]


@dataclass(frozen=True, eq=False)
class IncidenceTriple:
    """Backward, forward, and net incidence matrices of a net.

    All three are ``|P| x |T|`` integer matrices in the net's canonical
    orders; ``incidence == w_plus - w_minus`` entrywise.
    """

    w_minus: np.ndarray
    w_plus: np.ndarray
    incidence: np.ndarray


@dataclass(frozen=True)
class Trace:
    """One observed activity sequence.  Empty traces are legal."""

    case_id: str
    activities: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.activities)


@functools.lru_cache(maxsize=None)
def _incidence(net: PetriNet) -> IncidenceTriple:
    w_minus = np.zeros((len(net.places), len(net.transitions)), dtype=np.int64)
    w_plus = np.zeros_like(w_minus)
    pidx, tidx = net.place_index, net.transition_index
    for src, tgt, w in net.arcs:
        if src in pidx:  # place -> transition consumes
            w_minus[pidx[src], tidx[tgt]] += w
        else:  # transition -> place produces
            w_plus[pidx[tgt], tidx[src]] += w
    inc = w_plus - w_minus
    for m in (w_minus, w_plus, inc):
        m.setflags(write=False)
    return IncidenceTriple(w_minus=w_minus, w_plus=w_plus, incidence=inc)


def incidence_matrices(net: PetriNet) -> IncidenceTriple:
    """Backward/forward/net incidence matrices, deterministic per net."""
    return _incidence(net)


@functools.lru_cache(maxsize=None)
def firing_data(
    net: PetriNet,
) -> tuple[tuple[tuple[tuple[int, int], ...], ...], tuple[tuple[tuple[int, int], ...], ...]]:
    """Per-transition sparse (place index, weight) pre/post sets.

    This is the hot-path representation used by reachability exploration
    and search; it is derived once per net and cached.
    """
    tri = _incidence(net)
    pre = []
    post = []
    for j in range(len(net.transitions)):
        pre.append(tuple((int(i), int(w)) for i, w in enumerate(tri.w_minus[:, j]) if w))
        post.append(tuple((int(i), int(w)) for i, w in enumerate(tri.w_plus[:, j]) if w))
    return tuple(pre), tuple(post)


def _check_marking(net: PetriNet, m: Marking) -> None:
    if len(m) != len(net.places):
        raise InvalidInputError(
            f"marking has {len(m)} entries but the net has {len(net.places)} places"
        )


def enabled_transitions(net: PetriNet, m: Marking) -> set[str]:
    """All transitions enabled at ``m``: those with ``m >= w_minus(., t)``."""
    _check_marking(net, m)
    pre, _ = firing_data(net)
    out = set()
    for j, t in enumerate(net.transitions):
        if all(m[i] >= w for i, w in pre[j]):
            out.add(t)
    return out


def fire(net: PetriNet, m: Marking, t: str) -> Marking:
    """Fire ``t`` at ``m`` and return the successor marking.

    Raises :class:`NotEnabledError` (naming the deficient places) if ``t``
    is not enabled.
    """
    _check_marking(net, m)
    if t not in net.transition_index:
        raise InvalidInputError(f"unknown transition {t!r}")
    j = net.transition_index[t]
    pre, post = firing_data(net)
    deficient = [net.places[i] for i, w in pre[j] if m[i] < w]
    if deficient:
        raise NotEnabledError(t, deficient)
    out = list(m)
    for i, w in pre[j]:
        out[i] -= w
    for i, w in post[j]:
        out[i] += w
    return tuple(out)


def _positional_id(prefix: str, index: int, count: int) -> str:
    # Zero-pad so lexicographic id order equals positional order.
    width = len(str(count)) if count > 9 else 1
    return f"{prefix}{index:0{width}d}"


def build_trace_model(trace: Trace) -> PetriNet:
    """Linear Petri net encoding one trace.

    For an ``n``-event trace: places ``p0..pn``, transitions ``t1..tn``
    (zero-padded for n >= 10 so the canonical order is positional),
    transition ``ti`` consumes ``p(i-1)`` and produces ``pi`` and is
    labeled with the i-th activity.  Initial marking ``[p0]``, final
    marking ``[pn]``.
    """
    n = len(trace.activities)
    places = [_positional_id("p", i, n) for i in range(n + 1)]
    transitions = [_positional_id("t", i, n) for i in range(1, n + 1)]
    arcs: list[tuple[str, str]] = []
    labels: dict[str, str | None] = {}
    for i in range(1, n + 1):
        arcs.append((places[i - 1], transitions[i - 1]))
        arcs.append((transitions[i - 1], places[i]))
        labels[transitions[i - 1]] = trace.activities[i - 1]
    return PetriNet.build(
        places=places,
        transitions=transitions,
        arcs=arcs,
        labels=labels,
        initial={places[0]: 1},
        final={places[n]: 1},
    )


def is_path_net(net: PetriNet) -> bool:
    """True iff the net is a trace model: a simple place-transition chain."""
    n = len(net.transitions)
    if len(net.places) != n + 1:
        return False
    if sum(net.initial_marking) != 1 or sum(net.final_marking) != 1:
        return False
    pre, post = firing_data(net)
    outs: dict[int, list[int]] = {i: [] for i in range(len(net.places))}
    for j in range(n):
        if len(pre[j]) != 1 or len(post[j]) != 1:
            return False
        (pi, wi), (_, wo) = pre[j][0], post[j][0]
        if wi != 1 or wo != 1:
            return False
        outs[pi].append(j)
    # Walk the chain from the initially marked place.
    cur = net.initial_marking.index(1)
    seen_places = {cur}
    for _ in range(n):
        if len(outs[cur]) != 1:
            return False
        j = outs[cur][0]
        cur = post[j][0][0]
        if cur in seen_places:
            return False
        seen_places.add(cur)
    return net.final_marking[cur] == 1 and len(seen_places) == n + 1


def trace_model_order(net: PetriNet) -> tuple[str, ...]:
    """Transitions of a path net in chain order (position 1..n)."""
    pre, post = firing_data(net)
    outs: dict[int, int] = {}
    for j in range(len(net.transitions)):
        outs[pre[j][0][0]] = j
    cur = net.initial_marking.index(1)
    order = []
    for _ in range(len(net.transitions)):
        j = outs[cur]
        order.append(net.transitions[j])
        cur = post[j][0][0]
    return tuple(order)


def validate_workflow_net(net: PetriNet) -> list[str]:
    """Non-fatal structural diagnostics.

    Reports unconnected nodes, nodes unreachable from the initial marking
    by static connectivity, multiple source/sink places, and zero-weight
    or duplicate arcs.  An empty list means no findings.
    """
    diags: list[str] = []
    touched: set[str] = set()
    seen_arcs: set[tuple[str, str]] = set()
    succ: dict[str, set[str]] = {}
    for src, tgt, w in net.arcs:
        touched.add(src)
        touched.add(tgt)
        succ.setdefault(src, set()).add(tgt)
        if w == 0:
            diags.append(f"zero-weight arc ({src}, {tgt})")
        if (src, tgt) in seen_arcs:
            diags.append(f"duplicate arc ({src}, {tgt})")
        seen_arcs.add((src, tgt))

    for p in net.places:
        if p not in touched:
            diags.append(f"unconnected place {p}")
    for t in net.transitions:
        if t not in touched:
            diags.append(f"unconnected transition {t}")

    incoming = {tgt for _, tgt, _ in net.arcs}
    outgoing = {src for src, _, _ in net.arcs}
    sources = [p for p in net.places if p not in incoming]
    sinks = [p for p in net.places if p not in outgoing]
    if len(sources) > 1:
        diags.append(f"multiple source places: {', '.join(sources)}")
    if len(sinks) > 1:
        diags.append(f"multiple sink places: {', '.join(sinks)}")

    # Static forward reachability from the initially marked places.
    frontier = deque(p for p, v in zip(net.places, net.initial_marking) if v > 0)
    reached = set(frontier)
    while frontier:
        node = frontier.popleft()
        for nxt in succ.get(node, ()):
            if nxt not in reached:
                reached.add(nxt)
                frontier.append(nxt)
    for p in net.places:
        if p not in reached and p in touched:
            diags.append(f"place {p} unreachable from initial marking")
    for t in net.transitions:
        if t not in reached and t in touched:
            diags.append(f"transition {t} unreachable from initial marking")
    return diags
