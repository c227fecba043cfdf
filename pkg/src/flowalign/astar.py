"""Best-first optimal alignment over the synchronous product's state space.

The search expands markings directly (no pre-built reachability graph),
ordered by f = g + h with ties broken by larger g, then FIFO.  The
marking-equation heuristic is the exact optimum of the continuous
state-equation relaxation ``min c.x s.t. I x = m_f - m, x >= 0``; it is
admissible but not assumed consistent, so entries are reopened whenever a
strictly better g arrives, which preserves optimality.  g, h, and all
costs are exact rationals; epsilon-cost silent moves enter g and h
exactly as they do in the flow formulation, so both methods optimize the
identical objective.
"""

from __future__ import annotations

import functools
import heapq
import itertools
import math
import time
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .errors import InvalidInputError
from .flow import Alignment, Method
from .petri import Marking, firing_data, incidence_matrices
from .simplex import solve_min_eq
from .sync_product import SynchronousProduct


class Heuristic(Enum):
    ZERO = "zero"
    MARKING_EQUATION = "marking_equation"


class SearchOutcome(Enum):
    OPTIMAL = "optimal"
    TIMEOUT = "timeout"
    EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class SearchConfig:
    heuristic: Heuristic = Heuristic.MARKING_EQUATION
    timeout: float = 30.0  # seconds
    max_expansions: int = 10_000_000
    token_cap: int = 8

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise InvalidInputError("timeout must be positive")
        if self.max_expansions < 1 or self.token_cap < 1:
            raise InvalidInputError("max_expansions and token_cap must be >= 1")


@dataclass
class SearchStats:
    expansions: int = 0
    heuristic_calls: int = 0
    queue_peak: int = 0
    wall_time: float = 0.0
    outcome: SearchOutcome = SearchOutcome.EXHAUSTED


@functools.lru_cache(maxsize=None)
def _relaxation_data(sp: SynchronousProduct):
    inc = incidence_matrices(sp.net).incidence
    rows = [[int(v) for v in inc[i, :]] for i in range(inc.shape[0])]
    costs = [m.cost for m in sp.moves]
    return rows, costs


def marking_equation_heuristic(sp: SynchronousProduct, m: Marking) -> Fraction | float:
    """Optimal value of the state-equation relaxation from ``m`` to m_f.

    Returns ``math.inf`` when even the continuous relaxation cannot reach
    the final marking (the state is a dead end).  Always a lower bound on
    the true remaining alignment cost.
    """
    final = sp.net.final_marking
    if len(m) != len(final):
        raise InvalidInputError("marking does not index the product's places")
    if m == final:
        return Fraction(0)
    rows, costs = _relaxation_data(sp)
    rhs = [f - v for f, v in zip(final, m)]
    result = solve_min_eq(rows, rhs, costs)
    if result is None:
        return math.inf
    return result[0]


def astar_align(
    sp: SynchronousProduct, cfg: SearchConfig = SearchConfig()
) -> tuple[Alignment | None, SearchStats]:
    """A* over product markings; optimal when it completes.

    Outcomes TIMEOUT and EXHAUSTED are reported in the stats, never
    raised.  Self-loop successors are skipped and successors exceeding
    the per-place token cap are pruned, mirroring reachability-graph
    construction so both methods search the same capped space.
    """
    stats = SearchStats()
    t0 = time.monotonic()
    net = sp.net
    start = net.initial_marking
    goal = net.final_marking
    pre, post = firing_data(net)
    n_trans = len(net.transitions)
    moves = sp.moves
    cap = cfg.token_cap
    zero_h = cfg.heuristic is Heuristic.ZERO

    # Exact heuristic values, computed lazily: a successor is queued under
    # the derived admissible bound max(0, h(parent) - move cost) and only
    # gets its own relaxation solved when it is about to be expanded.
    h_exact: dict[Marking, Fraction | float] = {}

    def h(marking: Marking) -> Fraction | float:
        if zero_h:
            return Fraction(0)
        val = h_exact.get(marking)
        if val is None:
            stats.heuristic_calls += 1
            val = marking_equation_heuristic(sp, marking)
            h_exact[marking] = val
        return val

    def finish(outcome: SearchOutcome, alignment: Alignment | None = None):
        stats.outcome = outcome
        stats.wall_time = time.monotonic() - t0
        return alignment, stats

    h0 = h(start)
    if h0 == math.inf:
        return finish(SearchOutcome.EXHAUSTED)

    counter = itertools.count()
    best_g: dict[Marking, Fraction] = {start: Fraction(0)}
    parent: dict[Marking, tuple[Marking, int]] = {}
    heap: list = [(h0, Fraction(0), next(counter), start)]
    while heap:
        stats.queue_peak = max(stats.queue_peak, len(heap))
        if time.monotonic() - t0 > cfg.timeout:
            return finish(SearchOutcome.TIMEOUT)
        f, neg_g, _, cur = heapq.heappop(heap)
        g = -neg_g
        if g > best_g.get(cur, math.inf):
            continue
        if cur == goal:
            moves_seq = []
            node = cur
            while node != start:
                node, j = parent[node]
                moves_seq.append(moves[j])
            moves_seq.reverse()
            return finish(SearchOutcome.OPTIMAL, Alignment.from_moves(tuple(moves_seq), Method.ASTAR))
        hc = h(cur)
        if hc == math.inf:
            continue  # dead end even in the relaxation
        if g + hc > f:
            # Queued under a weaker bound; requeue at the exact f.
            heapq.heappush(heap, (g + hc, neg_g, next(counter), cur))
            continue
        if stats.expansions >= cfg.max_expansions:
            return finish(SearchOutcome.EXHAUSTED)
        stats.expansions += 1
        for j in range(n_trans):
            enabled = True
            for i, w in pre[j]:
                if cur[i] < w:
                    enabled = False
                    break
            if not enabled:
                continue
            succ = list(cur)
            for i, w in pre[j]:
                succ[i] -= w
            capped = False
            for i, w in post[j]:
                succ[i] += w
                if succ[i] > cap:
                    capped = True
            if capped:
                continue
            succ_t = tuple(succ)
            if succ_t == cur:
                continue
            ng = g + moves[j].cost
            old = best_g.get(succ_t)
            if old is not None and ng >= old:
                continue
            hs = h_exact.get(succ_t)
            if hs is None:
                hs = hc - moves[j].cost
                if hs < 0:
                    hs = Fraction(0)
            elif hs == math.inf:
                continue
            best_g[succ_t] = ng
            parent[succ_t] = (cur, j)
            heapq.heappush(heap, (ng + hs, -ng, next(counter), succ_t))
    return finish(SearchOutcome.EXHAUSTED)
