"""Min-cost unit-flow alignment on the reachability graph.

The alignment problem is a one-unit minimum-cost flow over the graph's
node-arc incidence matrix: minimize total edge cost subject to flow
conservation (one unit entering at the initial marking, leaving at the
final marking) and 0 <= x_e <= 1.  Because every incidence column holds
exactly one +1 and one -1 the constraint matrix is totally unimodular,
so with an integral balance vector every basic optimum is integral and
selects a single initial-to-final path.

The kernel here is a label-setting shortest path (valid since all move
costs are nonnegative and exactly one unit flows), run in exact rational
arithmetic.  Optimality is re-certified from the distance labels, and
among equal-cost optima the lexicographically smallest path under edge
index order is returned so goldens are deterministic.

This module also builds (never solves) the step-indexed MILP matrices of
the direct synchronous-product formulation, whose combined constraint
matrix is in general *not* totally unimodular; ``find_non_tu_witness``
searches it for a square submatrix with |det| >= 2.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import (
    InternalInvariantError,
    InvalidInputError,
    UnreachableFinalError,
)
from .petri import incidence_matrices
from .reachability import NodeArcIncidence, ReachabilityGraph, node_arc_incidence
from .sync_product import GAP, MoveKind, SyncMove, SynchronousProduct


class Method(Enum):
    LP = "lp"
    ASTAR = "astar"


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    TRUNCATED_GRAPH = "truncated_graph"


@dataclass(frozen=True, eq=False)
class FlowProblem:
    """One-unit min-cost flow instance over a reachability graph."""

    incidence: NodeArcIncidence
    costs: tuple[Fraction, ...]
    balance: tuple[int, ...]
    source: int
    sink: int


@dataclass(frozen=True)
class FlowSolution:
    x: tuple[Fraction, ...]
    objective: Fraction | None
    status: SolveStatus


@dataclass(frozen=True)
class Alignment:
    """An ordered move sequence relating a trace to a model execution."""

    moves: tuple[SyncMove, ...]
    total_cost: Fraction
    method: Method
    num_sync: int
    num_model: int
    num_tau: int
    num_log: int

    @classmethod
    def from_moves(cls, moves: tuple[SyncMove, ...], method: Method) -> "Alignment":
        counts = {kind: 0 for kind in MoveKind}
        total = Fraction(0)
        for m in moves:
            counts[m.kind] += 1
            total += m.cost
        return cls(
            moves=moves,
            total_cost=total,
            method=method,
            num_sync=counts[MoveKind.SYNC],
            num_model=counts[MoveKind.MODEL],
            num_tau=counts[MoveKind.MODEL_TAU],
            num_log=counts[MoveKind.LOG],
        )

    def log_projection(self) -> tuple[str, ...]:
        """Trace-side labels of all moves with a trace component."""
        return tuple(m.label_pair[1] for m in self.moves if m.label_pair[1] != GAP)

    def model_projection(self) -> tuple[str, ...]:
        """Process transitions of all moves with a model component."""
        return tuple(
            m.process_transition for m in self.moves if m.process_transition is not None
        )


def assemble_flow_problem(rg: ReachabilityGraph) -> FlowProblem:
    """Balance +1 at the initial node, -1 at the final node, 0 elsewhere.

    Raises :class:`UnreachableFinalError` when the graph has no final
    node, distinguishing truncation and token-cap pruning from genuine
    unreachability.
    """
    if rg.final_index is None:
        if rg.stats.truncated:
            raise UnreachableFinalError(
                "truncated",
                "final marking not reached: graph construction hit a resource limit",
            )
        if rg.stats.cap_prunes:
            raise UnreachableFinalError(
                "token_cap",
                "final marking not reached: branches were pruned by the token cap",
            )
        raise UnreachableFinalError(
            "unreachable", "final marking is unreachable in the full graph"
        )
    balance = [0] * len(rg.nodes)
    if rg.initial_index != rg.final_index:
        balance[rg.initial_index] = 1
        balance[rg.final_index] = -1
    return FlowProblem(
        incidence=node_arc_incidence(rg),
        costs=tuple(e.cost for e in rg.edges),
        balance=tuple(balance),
        source=rg.initial_index,
        sink=rg.final_index,
    )


def _edge_endpoints(b: NodeArcIncidence) -> tuple[list[int], list[int]]:
    tails = [-1] * b.cols
    heads = [-1] * b.cols
    for r, c, v in b.entries:
        if v == 1:
            tails[c] = r
        elif v == -1:
            heads[c] = r
    if -1 in tails or -1 in heads:
        raise InvalidInputError("incidence matrix is not a valid edge-column structure")
    return tails, heads


def solve_min_cost_unit_flow(fp: FlowProblem) -> FlowSolution:
    """Exact label-setting solve; the optimum is an integral extreme point.

    The returned ``x`` is 0/1 per edge, the chosen edges form one simple
    source-to-sink path, and the objective is certified against the
    shortest-path distance labels before returning.
    """
    n_edges = fp.incidence.cols
    if any(c < 0 for c in fp.costs):
        raise InvalidInputError("edge costs must be nonnegative")
    if fp.source == fp.sink:
        return FlowSolution(x=(Fraction(0),) * n_edges, objective=Fraction(0), status=SolveStatus.OPTIMAL)

    tails, heads = _edge_endpoints(fp.incidence)
    out: list[list[int]] = [[] for _ in range(fp.incidence.rows)]
    for e in range(n_edges):
        out[tails[e]].append(e)

    INF = None
    dist: list[Fraction | None] = [INF] * fp.incidence.rows
    dist[fp.source] = Fraction(0)
    counter = itertools.count()
    heap: list[tuple[Fraction, int, int]] = [(Fraction(0), next(counter), fp.source)]
    done = [False] * fp.incidence.rows
    while heap:
        d, _, v = heapq.heappop(heap)
        if done[v]:
            continue
        done[v] = True
        for e in out[v]:
            nd = d + fp.costs[e]
            h = heads[e]
            if dist[h] is None or nd < dist[h]:
                dist[h] = nd
                heapq.heappush(heap, (nd, next(counter), h))

    if dist[fp.sink] is None:
        return FlowSolution(x=(Fraction(0),) * n_edges, objective=None, status=SolveStatus.INFEASIBLE)

    # Tight edges (dist[head] == dist[tail] + cost) carry every optimal
    # path; they form a DAG because zero-cost cycles cannot exist.
    tight = [
        e
        for e in range(n_edges)
        if dist[tails[e]] is not None
        and dist[heads[e]] is not None
        and dist[heads[e]] == dist[tails[e]] + fp.costs[e]
    ]
    reach_sink = {fp.sink}
    rev: list[list[int]] = [[] for _ in range(fp.incidence.rows)]
    for e in tight:
        rev[heads[e]].append(e)
    stack = [fp.sink]
    while stack:
        v = stack.pop()
        for e in rev[v]:
            t = tails[e]
            if t not in reach_sink:
                reach_sink.add(t)
                stack.append(t)

    tight_out: list[list[int]] = [[] for _ in range(fp.incidence.rows)]
    for e in tight:
        tight_out[tails[e]].append(e)

    chosen: list[int] = []
    cur = fp.source
    for _ in range(n_edges + 1):
        if cur == fp.sink:
            break
        nxt = next((e for e in tight_out[cur] if heads[e] in reach_sink), None)
        if nxt is None:
            raise InternalInvariantError("tight-edge walk lost the sink")
        chosen.append(nxt)
        cur = heads[nxt]
    else:
        raise InternalInvariantError("tight-edge walk did not terminate (cycle?)")

    objective = dist[fp.sink]
    path_cost = sum((fp.costs[e] for e in chosen), Fraction(0))
    _certify(fp, dist, chosen, tails, heads, objective, path_cost)

    x = [Fraction(0)] * n_edges
    for e in chosen:
        x[e] = Fraction(1)
    return FlowSolution(x=tuple(x), objective=objective, status=SolveStatus.OPTIMAL)


def _certify(fp, dist, chosen, tails, heads, objective, path_cost) -> None:
    # Label correctness proves optimality: dist(head) <= dist(tail) + cost
    # everywhere, with equality along the chosen path.
    if path_cost != objective:
        raise InternalInvariantError("path cost disagrees with distance label")
    if dist[fp.source] != 0:
        raise InternalInvariantError("source distance is nonzero")
    for e in range(fp.incidence.cols):
        dt = dist[tails[e]]
        dh = dist[heads[e]]
        if dt is not None and (dh is None or dh > dt + fp.costs[e]):
            raise InternalInvariantError(f"distance label violated at edge {e}")
    for e in chosen:
        if dist[heads[e]] != dist[tails[e]] + fp.costs[e]:
            raise InternalInvariantError(f"chosen edge {e} is not tight")


def verify_integrality(sol: FlowSolution, tol: Fraction = Fraction(0)) -> bool:
    """True iff every flow value is within ``tol`` of 0 or 1."""
    if sol.status is not SolveStatus.OPTIMAL:
        raise InvalidInputError("verify_integrality expects an OPTIMAL solution")
    return all(abs(v) <= tol or abs(v - 1) <= tol for v in sol.x)


def extract_alignment(
    rg: ReachabilityGraph, sp: SynchronousProduct, sol: FlowSolution
) -> Alignment:
    """Order the chosen edges into a path and map them to moves."""
    if sol.status is not SolveStatus.OPTIMAL:
        raise InvalidInputError("extract_alignment expects an OPTIMAL solution")
    chosen = [i for i, v in enumerate(sol.x) if v == 1]
    if any(v not in (0, 1) for v in sol.x):
        raise InternalInvariantError("flow solution is not integral")
    by_tail: dict[int, int] = {}
    for i in chosen:
        e = rg.edges[i]
        if e.tail in by_tail:
            raise InternalInvariantError(f"two chosen edges leave node {e.tail}")
        by_tail[e.tail] = i

    moves: list[SyncMove] = []
    cur = rg.initial_index
    for _ in range(len(chosen)):
        if cur not in by_tail:
            raise InternalInvariantError("chosen edges do not form a single path")
        i = by_tail.pop(cur)
        e = rg.edges[i]
        moves.append(sp.move(e.transition))
        cur = e.head
    if by_tail or cur != rg.final_index:
        raise InternalInvariantError("chosen edges do not form an initial-to-final path")

    alignment = Alignment.from_moves(tuple(moves), Method.LP)
    if alignment.total_cost != sol.objective:
        raise InternalInvariantError("alignment cost disagrees with LP objective")
    return alignment


@dataclass
class LpRunStats:
    """Timings and sizes for one LP-path run (microseconds)."""

    rg_nodes: int = 0
    rg_edges: int = 0
    rg_build_us: int = 0
    solve_us: int = 0
    truncated: bool = False
    status: SolveStatus = SolveStatus.INFEASIBLE


def lp_align(
    sp: SynchronousProduct, limits=None
) -> tuple[Alignment | None, LpRunStats]:
    """Product -> bounded reachability graph -> flow solve -> alignment.

    Returns ``(None, stats)`` with status ``TRUNCATED_GRAPH`` when the
    graph was cut short before reaching the final marking (a timeout-like
    outcome, not a cost), and ``INFEASIBLE`` when the final marking is
    genuinely unreachable.
    """
    from .reachability import build_reachability_graph

    stats = LpRunStats()
    t0 = time.perf_counter_ns()
    rg = build_reachability_graph(sp, limits)
    stats.rg_build_us = (time.perf_counter_ns() - t0) // 1000
    stats.rg_nodes = len(rg.nodes)
    stats.rg_edges = len(rg.edges)
    stats.truncated = rg.stats.truncated

    t1 = time.perf_counter_ns()
    try:
        fp = assemble_flow_problem(rg)
    except UnreachableFinalError as exc:
        stats.solve_us = (time.perf_counter_ns() - t1) // 1000
        stats.status = (
            SolveStatus.TRUNCATED_GRAPH
            if exc.reason in ("truncated", "token_cap")
            else SolveStatus.INFEASIBLE
        )
        return None, stats
    sol = solve_min_cost_unit_flow(fp)
    if sol.status is not SolveStatus.OPTIMAL:
        stats.solve_us = (time.perf_counter_ns() - t1) // 1000
        stats.status = sol.status
        return None, stats
    alignment = extract_alignment(rg, sp, sol)
    stats.solve_us = (time.perf_counter_ns() - t1) // 1000
    stats.status = SolveStatus.OPTIMAL
    return alignment, stats


def move_table(alignment: Alignment) -> str:
    """Line-based move table: kind, model-side label, trace-side label, cost."""
    rows = ["kind\tmodel\ttrace\tcost"]
    for m in alignment.moves:
        l1 = "tau" if (m.label_pair[0] is None) else m.label_pair[0]
        l2 = m.label_pair[1]
        rows.append(f"{m.kind.value}\t{l1}\t{l2}\t{m.cost}")
    rows.append(f"total\t\t\t{alignment.total_cost}")
    return "\n".join(rows) + "\n"


def alignment_to_dict(alignment: Alignment) -> dict:
    """Structured-object form of an alignment (JSON-ready)."""
    return {
        "method": alignment.method.value,
        "total_cost": str(alignment.total_cost),
        "num_sync": alignment.num_sync,
        "num_model": alignment.num_model,
        "num_tau": alignment.num_tau,
        "num_log": alignment.num_log,
        "moves": [
            {
                "kind": m.kind.value,
                "model_label": "tau" if m.label_pair[0] is None else m.label_pair[0],
                "trace_label": m.label_pair[1],
                "process_transition": m.process_transition,
                "trace_transition": m.trace_transition,
                "cost": str(m.cost),
            }
            for m in alignment.moves
        ],
    }


# ---------------------------------------------------------------------------
# Step-indexed MILP on the synchronous product (built for structural
# contrast; deliberately never solved).
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MilpMatrices:
    """Constraint blocks of the direct formulation with horizon ``n``.

    Variables are ``x[j,k]`` (transition j fires at step k), laid out
    step-major (``(k-1)*|T| + j``), followed by the ``n`` termination
    indicators ``z_k``.  Equalities: final-marking balance (|P| rows)
    then one-move-or-terminated (n rows).  Inequalities: prefix
    nonnegativity (n*|P| rows, as ``A x <= b``) then termination
    monotonicity (n-1 rows).
    """

    horizon: int
    num_places: int
    num_transitions: int
    a_eq: np.ndarray
    b_eq: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    objective: tuple[Fraction, ...]

    @property
    def num_vars(self) -> int:
        return self.horizon * self.num_transitions + self.horizon

    def combined_matrix(self) -> np.ndarray:
        return np.vstack([self.a_eq, self.a_ub])


def build_milp_matrices(sp: SynchronousProduct, n: int) -> MilpMatrices:
    if n < 1:
        raise InvalidInputError("horizon must be >= 1")
    inc = incidence_matrices(sp.net).incidence
    n_p, n_t = inc.shape
    n_vars = n * n_t + n
    z0 = n * n_t  # first z column

    a_eq = np.zeros((n_p + n, n_vars), dtype=np.int64)
    b_eq = np.zeros(n_p + n, dtype=np.int64)
    for k in range(n):
        a_eq[:n_p, k * n_t : (k + 1) * n_t] = inc
    m_i = np.array(sp.net.initial_marking, dtype=np.int64)
    m_f = np.array(sp.net.final_marking, dtype=np.int64)
    b_eq[:n_p] = m_f - m_i
    for k in range(n):
        a_eq[n_p + k, k * n_t : (k + 1) * n_t] = 1
        a_eq[n_p + k, z0 + k] = 1
        b_eq[n_p + k] = 1

    a_ub = np.zeros((n * n_p + (n - 1), n_vars), dtype=np.int64)
    b_ub = np.zeros(n * n_p + (n - 1), dtype=np.int64)
    for k in range(n):
        # prefix row block k: m_i + I * sum_{step<=k} x >= 0, normalized
        # to -I-copies <= m_i, so each block stacks k+1 copies of -I.
        for step in range(k + 1):
            a_ub[k * n_p : (k + 1) * n_p, step * n_t : (step + 1) * n_t] = -inc
        b_ub[k * n_p : (k + 1) * n_p] = m_i
    for k in range(n - 1):
        a_ub[n * n_p + k, z0 + k] = 1
        a_ub[n * n_p + k, z0 + k + 1] = -1

    objective = tuple(m.cost for m in sp.moves) * n + (Fraction(0),) * n
    return MilpMatrices(
        horizon=n,
        num_places=n_p,
        num_transitions=n_t,
        a_eq=a_eq,
        b_eq=b_eq,
        a_ub=a_ub,
        b_ub=b_ub,
        objective=objective,
    )


class TuWitness(NamedTuple):
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    determinant: int


def _det_int(m: list[list[int]]) -> int:
    """Exact integer determinant (fraction-free Bareiss elimination)."""
    a = [row[:] for row in m]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


_BLOCK_CELLS = 4_000_000  # cap on temporary array size during scans


def _scan_order2(a: np.ndarray, deadline: float) -> TuWitness | None:
    rows, cols = a.shape
    cb = min(cols, 512)
    rb = max(1, _BLOCK_CELLS // (cb * cb))
    for i in range(rows - 1):
        ai = a[i]
        for j0 in range(i + 1, rows, rb):
            if time.monotonic() > deadline:
                return None
            rest = a[j0 : min(j0 + rb, rows)]
            for c1 in range(0, cols, cb):
                if time.monotonic() > deadline:
                    return None
                b1 = ai[c1 : c1 + cb]
                r1 = rest[:, c1 : c1 + cb]
                for c2 in range(c1, cols, cb):
                    b2 = ai[c2 : c2 + cb]
                    r2 = rest[:, c2 : c2 + cb]
                    # det[(j, k, l)] = a[i,k]*a[j,l] - a[i,l]*a[j,k]
                    d = b1[None, :, None] * r2[:, None, :] - b2[None, None, :] * r1[:, :, None]
                    hit = np.argwhere(np.abs(d) >= 2)
                    if hit.size:
                        j_off, k_off, l_off = (int(v) for v in hit[0])
                        j = j0 + j_off
                        k, l = c1 + k_off, c2 + l_off
                        if k > l:
                            k, l = l, k
                        det = int(a[i, k]) * int(a[j, l]) - int(a[i, l]) * int(a[j, k])
                        return TuWitness((i, j), (k, l), det)
    return None


def _col_triple_blocks(cols: int, block: int = 200_000):
    buf: list[tuple[int, int, int]] = []
    for tri in itertools.combinations(range(cols), 3):
        buf.append(tri)
        if len(buf) == block:
            yield np.array(buf, dtype=np.int64)
            buf = []
    if buf:
        yield np.array(buf, dtype=np.int64)


def _scan_order3(a: np.ndarray, deadline: float) -> TuWitness | None:
    rows, cols = a.shape
    for block in _col_triple_blocks(cols):
        if time.monotonic() > deadline:
            return None
        for rt in itertools.combinations(range(rows), 3):
            if time.monotonic() > deadline:
                return None
            s0, s1, s2 = a[rt[0]][block], a[rt[1]][block], a[rt[2]][block]
            det = (
                s0[:, 0] * (s1[:, 1] * s2[:, 2] - s1[:, 2] * s2[:, 1])
                - s0[:, 1] * (s1[:, 0] * s2[:, 2] - s1[:, 2] * s2[:, 0])
                + s0[:, 2] * (s1[:, 0] * s2[:, 1] - s1[:, 1] * s2[:, 0])
            )
            hit = np.nonzero(np.abs(det) >= 2)[0]
            if hit.size:
                t = block[int(hit[0])]
                return TuWitness(rt, tuple(int(v) for v in t), int(det[int(hit[0])]))
    return None


def find_non_tu_witness(
    matrix: np.ndarray,
    order_limit: int = 3,
    budget_s: float = 10.0,
    seed: int = 0,
) -> TuWitness | None:
    """Search square submatrices for a determinant of magnitude >= 2.

    Orders 2 and 3 are enumerated exhaustively in deterministic index
    order (vectorized in memory-bounded blocks, stopping at the budget);
    higher orders up to ``order_limit`` are sampled randomly for the
    remaining budget.  A witness proves the matrix is not totally
    unimodular; an empty result proves nothing.
    """
    if order_limit < 2:
        raise InvalidInputError("order_limit must be >= 2")
    a = np.asarray(matrix, dtype=np.int64)
    rows, cols = a.shape
    deadline = time.monotonic() + budget_s

    if rows >= 2 and cols >= 2:
        w = _scan_order2(a, deadline)
        if w is not None:
            return w
    if order_limit >= 3 and rows >= 3 and cols >= 3:
        w = _scan_order3(a, deadline)
        if w is not None:
            return w

    rng = np.random.RandomState(seed)
    for order in range(4, order_limit + 1):
        if rows < order or cols < order:
            break
        while time.monotonic() <= deadline:
            r = sorted(rng.choice(rows, size=order, replace=False).tolist())
            c = sorted(rng.choice(cols, size=order, replace=False).tolist())
            det = _det_int([[int(a[i, j]) for j in c] for i in r])
            if abs(det) >= 2:
                return TuWitness(tuple(r), tuple(c), det)
    return None
