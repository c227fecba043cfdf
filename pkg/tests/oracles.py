"""Independent oracles for cross-checking the solvers.

Deliberately primitive: shortest paths by Bellman-Ford relaxation to a
fixpoint (no heaps, no tie-breaking, no shared code with the kernels
under test) and brute-force replay enumeration.
"""

from __future__ import annotations

from fractions import Fraction

from flowalign.reachability import ReachabilityGraph


def bellman_ford_from(rg: ReachabilityGraph, source: int) -> list[Fraction | None]:
    """Distance from ``source`` to every node; None = unreachable."""
    dist: list[Fraction | None] = [None] * len(rg.nodes)
    dist[source] = Fraction(0)
    for _ in range(len(rg.nodes)):
        changed = False
        for e in rg.edges:
            d = dist[e.tail]
            if d is None:
                continue
            nd = d + e.cost
            if dist[e.head] is None or nd < dist[e.head]:
                dist[e.head] = nd
                changed = True
        if not changed:
            break
    return dist


def bellman_ford_to(rg: ReachabilityGraph, target: int) -> list[Fraction | None]:
    """Distance from every node to ``target`` (relaxation on reversed edges)."""
    dist: list[Fraction | None] = [None] * len(rg.nodes)
    dist[target] = Fraction(0)
    for _ in range(len(rg.nodes)):
        changed = False
        for e in rg.edges:
            d = dist[e.head]
            if d is None:
                continue
            nd = d + e.cost
            if dist[e.tail] is None or nd < dist[e.tail]:
                dist[e.tail] = nd
                changed = True
        if not changed:
            break
    return dist


def oracle_shortest_cost(rg: ReachabilityGraph) -> Fraction | None:
    """Exhaustive-relaxation shortest-path cost initial -> final."""
    if rg.final_index is None:
        return None
    return bellman_ford_from(rg, rg.initial_index)[rg.final_index]
