"""Benchmark harness: per-instance records, CSV output, bucket reports.

One record per (trace, model) instance.  All columns except the four
trailing ``*_us`` timing columns are deterministic given inputs, config,
and seed, so CSV output diffs cleanly against goldens.  Parallel runs
fan out per instance and re-sort results to input order before writing,
producing the same file as a serial run (timing columns aside).
"""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .astar import Heuristic, SearchConfig, SearchOutcome, astar_align
from .errors import InvalidInputError
from .flow import Method, SolveStatus, lp_align
from .model_io import EventLog, parse_pnml, parse_xes, read_csv_log
from .petri import PetriNet, Trace
from .reachability import ExplorationLimits, default_limits
from .selector import SelectionThresholds, hybrid_align, token_replay_fitness
from .sync_product import CostConfig, product_for_trace


@dataclass(frozen=True)
class RunConfig:
    method: str = "both"  # astar | lp | hybrid | both
    cost: CostConfig = CostConfig()
    max_depth: int | None = None  # None: per-instance default
    max_nodes: int = 2_000_000
    max_edges: int = 8_000_000
    token_cap: int = 8
    heuristic: Heuristic = Heuristic.MARKING_EQUATION
    timeout_s: float = 30.0  # per-instance search budget
    thresholds: SelectionThresholds = SelectionThresholds()
    parallel: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.method not in ("astar", "lp", "hybrid", "both"):
            raise InvalidInputError(f"unknown method {self.method!r}")
        if self.timeout_s <= 0 or self.parallel < 1:
            raise InvalidInputError("timeout must be > 0 and parallelism >= 1")

    def limits_for(self, sp) -> ExplorationLimits:
        depth = self.max_depth if self.max_depth is not None else default_limits(sp).max_depth
        return ExplorationLimits(
            max_depth=depth,
            max_nodes=self.max_nodes,
            max_edges=self.max_edges,
            token_cap=self.token_cap,
        )

    def search_config(self) -> SearchConfig:
        return SearchConfig(
            heuristic=self.heuristic,
            timeout=self.timeout_s,
            token_cap=self.token_cap,
        )


@dataclass
class BenchmarkRecord:
    case_id: str
    model_id: str
    trace_length: int
    method_chosen: str = ""
    astar_outcome: str = ""
    lp_outcome: str = ""
    astar_cost: Fraction | None = None
    lp_cost: Fraction | None = None
    costs_agree: bool | None = None
    lp_win: bool | None = None
    rg_nodes: int | None = None
    rg_edges: int | None = None
    astar_expansions: int | None = None
    astar_time_us: int | None = None
    lp_total_time_us: int | None = None
    rg_build_time_us: int | None = None
    lp_solve_time_us: int | None = None


CSV_COLUMNS = (
    "case_id",
    "model_id",
    "trace_length",
    "method_chosen",
    "astar_outcome",
    "lp_outcome",
    "astar_cost",
    "lp_cost",
    "costs_agree",
    "lp_win",
    "rg_nodes",
    "rg_edges",
    "astar_expansions",
    # timing columns are last and excluded from byte-stability guarantees
    "astar_time_us",
    "lp_total_time_us",
    "rg_build_time_us",
    "lp_solve_time_us",
)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def write_csv(records: list[BenchmarkRecord], out) -> None:
    """Write records in input order with the frozen column set."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([_cell(getattr(r, col)) for col in CSV_COLUMNS])


def records_to_csv_text(records: list[BenchmarkRecord]) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


def run_instance(
    net: PetriNet,
    trace: Trace,
    cfg: RunConfig,
    model_id: str = "model",
    fitness: float = 1.0,
) -> BenchmarkRecord:
    """Align one trace against one model with the configured method(s)."""
    rec = BenchmarkRecord(case_id=trace.case_id, model_id=model_id, trace_length=len(trace.activities))

    if cfg.method == "hybrid":
        result = hybrid_align(
            net,
            trace,
            fitness,
            cfg.thresholds,
            limits=None,
            search=cfg.search_config(),
            cost=cfg.cost,
        )
        rec.method_chosen = result.method_chosen.value
        if result.method_chosen is Method.LP and not result.fell_back_to_astar:
            rec.lp_outcome = result.outcome
            rec.rg_build_time_us = result.timings.get("rg_build_us")
            rec.lp_solve_time_us = result.timings.get("lp_solve_us")
            if result.alignment is not None:
                rec.lp_cost = result.alignment.total_cost
                rec.lp_total_time_us = (
                    result.timings.get("product_us", 0)
                    + result.timings.get("rg_build_us", 0)
                    + result.timings.get("lp_solve_us", 0)
                )
        else:
            rec.astar_outcome = result.outcome
            if result.alignment is not None:
                rec.astar_cost = result.alignment.total_cost
                rec.astar_time_us = result.timings.get("product_us", 0) + result.timings.get("astar_us", 0)
        return rec

    t0 = time.perf_counter_ns()
    sp = product_for_trace(net, trace, cfg.cost)
    product_us = (time.perf_counter_ns() - t0) // 1000
    if cfg.method in ("astar", "both"):
        t1 = time.perf_counter_ns()
        alignment, stats = astar_align(sp, cfg.search_config())
        rec.astar_time_us = product_us + (time.perf_counter_ns() - t1) // 1000
        rec.astar_outcome = stats.outcome.value
        rec.astar_expansions = stats.expansions
        if alignment is not None:
            rec.astar_cost = alignment.total_cost
    if cfg.method in ("lp", "both"):
        alignment, lp_stats = lp_align(sp, cfg.limits_for(sp))
        rec.lp_outcome = lp_stats.status.value
        rec.rg_nodes = lp_stats.rg_nodes
        rec.rg_edges = lp_stats.rg_edges
        rec.rg_build_time_us = lp_stats.rg_build_us
        rec.lp_solve_time_us = lp_stats.solve_us
        rec.lp_total_time_us = product_us + lp_stats.rg_build_us + lp_stats.solve_us
        if alignment is not None:
            rec.lp_cost = alignment.total_cost

    both_optimal = (
        rec.astar_outcome == SearchOutcome.OPTIMAL.value
        and rec.lp_outcome == SolveStatus.OPTIMAL.value
    )
    if both_optimal:
        rec.costs_agree = rec.astar_cost == rec.lp_cost
        rec.lp_win = rec.lp_total_time_us < rec.astar_time_us
    return rec


def _instance_task(args):
    idx, net, trace, cfg, model_id, fitness = args
    try:
        return idx, run_instance(net, trace, cfg, model_id, fitness)
    except Exception as exc:  # single-instance failures never abort a run
        rec = BenchmarkRecord(
            case_id=trace.case_id,
            model_id=model_id,
            trace_length=len(trace.activities),
            astar_outcome=f"error: {exc}",
            lp_outcome=f"error: {exc}",
        )
        return idx, rec


def run_conformance(
    net: PetriNet, event_log: EventLog, cfg: RunConfig, model_id: str = "model"
) -> list[BenchmarkRecord]:
    """One record per trace, in log order."""
    fitness = token_replay_fitness(net, event_log) if cfg.method == "hybrid" else 1.0
    tasks = [
        (i, net, trace, cfg, model_id, fitness)
        for i, trace in enumerate(event_log.traces)
    ]
    if cfg.parallel == 1 or len(tasks) <= 1:
        results = [_instance_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.parallel) as pool:
            results = list(pool.map(_instance_task, tasks))
    results.sort(key=lambda pair: pair[0])
    return [rec for _, rec in results]


@dataclass
class Summary:
    instances: int = 0
    both_optimal: int = 0
    agreement: int = 0
    lp_wins: int = 0
    timeouts: int = 0
    mean_astar_us: float = 0.0
    mean_lp_us: float = 0.0

    def render(self) -> str:
        agree_rate = 100.0 * self.agreement / self.both_optimal if self.both_optimal else 100.0
        win_rate = 100.0 * self.lp_wins / self.both_optimal if self.both_optimal else 0.0
        return (
            f"instances: {self.instances}\n"
            f"both optimal: {self.both_optimal}\n"
            f"cost agreement: {agree_rate:.1f}%\n"
            f"lp win rate: {win_rate:.1f}%\n"
            f"mean astar time: {self.mean_astar_us:.0f} us\n"
            f"mean lp time: {self.mean_lp_us:.0f} us\n"
            f"timeouts: {self.timeouts}\n"
        )


def summarize(records: list[BenchmarkRecord]) -> Summary:
    s = Summary(instances=len(records))
    astar_times = [r.astar_time_us for r in records if r.astar_time_us is not None]
    lp_times = [r.lp_total_time_us for r in records if r.lp_total_time_us is not None]
    for r in records:
        if r.costs_agree is not None:
            s.both_optimal += 1
            s.agreement += 1 if r.costs_agree else 0
            s.lp_wins += 1 if r.lp_win else 0
        if "timeout" in (r.astar_outcome or "") or "truncated" in (r.lp_outcome or ""):
            s.timeouts += 1
    s.mean_astar_us = sum(astar_times) / len(astar_times) if astar_times else 0.0
    s.mean_lp_us = sum(lp_times) / len(lp_times) if lp_times else 0.0
    return s


LENGTH_BUCKETS = ((1, 10), (11, 20), (21, 30), (31, 50), (51, 100), (101, None))


def bucket_label(lo: int, hi: int | None) -> str:
    return f"{lo}-{hi}" if hi is not None else f">{lo - 1}"


def bucket_report(records: list[BenchmarkRecord]) -> str:
    """Aggregate by trace-length bucket: win rate, speedup, time split."""
    lines = ["bucket\tinstances\tlp_win_%\tspeedup\trg_build_us\tlp_solve_us\trg_nodes"]
    for lo, hi in LENGTH_BUCKETS:
        rows = [
            r
            for r in records
            if (r.trace_length >= lo or (lo == 1 and r.trace_length == 0))
            and (hi is None or r.trace_length <= hi)
        ]
        if not rows:
            lines.append(f"{bucket_label(lo, hi)}\t0\t\t\t\t\t")
            continue
        both = [r for r in rows if r.costs_agree is not None]
        wins = sum(1 for r in both if r.lp_win)
        win_rate = f"{100.0 * wins / len(both):.1f}" if both else ""
        astar_t = [r.astar_time_us for r in both]
        lp_t = [r.lp_total_time_us for r in both]
        speedup = (
            f"{(sum(astar_t) / len(astar_t)) / (sum(lp_t) / len(lp_t)):.2f}"
            if both and sum(lp_t)
            else ""
        )
        rg_build = [r.rg_build_time_us for r in rows if r.rg_build_time_us is not None]
        lp_solve = [r.lp_solve_time_us for r in rows if r.lp_solve_time_us is not None]
        rg_nodes = [r.rg_nodes for r in rows if r.rg_nodes is not None]
        mean = lambda xs: f"{sum(xs) / len(xs):.0f}" if xs else ""
        lines.append(
            f"{bucket_label(lo, hi)}\t{len(rows)}\t{win_rate}\t{speedup}"
            f"\t{mean(rg_build)}\t{mean(lp_solve)}\t{mean(rg_nodes)}"
        )
    return "\n".join(lines) + "\n"


def scan_corpus(corpus_dir: str | Path) -> list[tuple[Path, Path]]:
    """(model, log) pairs: every ``*.xes``/``*.csv`` beside each ``*.pnml``."""
    root = Path(corpus_dir)
    pairs: list[tuple[Path, Path]] = []
    for model_path in sorted(root.rglob("*.pnml")):
        for log_path in sorted(model_path.parent.glob("*.xes")) + sorted(
            model_path.parent.glob("*.csv")
        ):
            pairs.append((model_path, log_path))
    return pairs


def run_corpus(corpus_dir: str | Path, cfg: RunConfig) -> list[BenchmarkRecord]:
    records: list[BenchmarkRecord] = []
    for model_path, log_path in scan_corpus(corpus_dir):
        net = parse_pnml(model_path)
        if log_path.suffix == ".csv":
            event_log = read_csv_log(log_path)
        else:
            event_log = parse_xes(log_path)
        model_id = str(model_path.relative_to(Path(corpus_dir)))
        log_id = log_path.stem
        recs = run_conformance(net, event_log, cfg, model_id=model_id)
        for r in recs:
            r.case_id = f"{log_id}/{r.case_id}"
        records.extend(recs)
    return records
