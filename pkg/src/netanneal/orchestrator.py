"""Outer optimization loops: precision/threshold schedules, split cycling with
patience, worker-pool dispatch with replica duplication, best-of-alternatives
merge, and the sector-planning baseline driver."""
from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence, runtime_checkable

import numpy as np

from .annealer import AnnealConfig, SubnetState, optimize_subnet, task_seed
from .decomposition import (OptimizedUnit, Split, Subnet, build_subnets,
                            enumerate_splits, filter_edges, group_units,
                            sector_partition)
from .network import CorrelationGraph, Network, build_correlation_graph

QUALITY_EPS = 1e-12


@dataclass(frozen=True)
class Schedule:
    p: float
    p_increment: float
    th_min: float
    th_max: float
    patience: int

    def __post_init__(self) -> None:
        if not 0 <= self.p <= 1:
            raise ValueError("p must be in [0, 1]")
        if not 0 < self.p_increment <= 1:
            raise ValueError("p_increment must be in (0, 1]")
        if self.th_min > self.th_max:
            raise ValueError("th_min must be <= th_max")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


def threshold(s: Schedule) -> float:
    """Current filtering threshold: th_min + (th_max - th_min) * p."""
    return s.th_min + (s.th_max - s.th_min) * s.p


def advance_precision(s: Schedule) -> Schedule:
    """Bump p by its increment, clamped to 1. Advancing past 1 is a caller bug."""
    if s.p >= 1:
        raise ValueError("precision already at maximum; the run should have terminated")
    return replace(s, p=min(1.0, s.p + s.p_increment))


@dataclass
class TraceRecord:
    wall_time: float
    quality: float
    p: float
    th: float
    split_index: int
    event: str = "merge"


@dataclass
class LevelStats:
    p: float
    th: float
    edge_count: int
    n_subnets: int
    n_splits: int


@dataclass
class RunTrace:
    records: list[TraceRecord] = field(default_factory=list)
    levels: list[LevelStats] = field(default_factory=list)
    fingerprint: str = ""

    def qualities(self) -> np.ndarray:
        return np.array([r.quality for r in self.records])

    def to_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    def dumps(self) -> str:
        out = io.StringIO()
        out.write("# netanneal-trace v1\n")
        if self.fingerprint:
            out.write(f"# fingerprint={self.fingerprint}\n")
        for lv in self.levels:
            out.write(f"# level p={lv.p:.17g} th={lv.th:.17g} edges={lv.edge_count} "
                      f"subnets={lv.n_subnets} splits={lv.n_splits}\n")
        w = csv.writer(out)
        w.writerow(["elapsed_seconds", "quality", "p", "th", "split_index", "event"])
        for r in self.records:
            w.writerow([f"{r.wall_time:.6f}", f"{r.quality:.12g}", f"{r.p:.17g}",
                        f"{r.th:.17g}", r.split_index, r.event])
        return out.getvalue()

    @classmethod
    def from_csv(cls, path: str | Path) -> "RunTrace":
        trace = cls()
        lines = Path(path).read_text().splitlines()
        body = []
        for ln in lines:
            if ln.startswith("# fingerprint="):
                trace.fingerprint = ln.split("=", 1)[1]
            elif ln.startswith("# level "):
                kv = dict(tok.split("=") for tok in ln[len("# level "):].split())
                trace.levels.append(LevelStats(float(kv["p"]), float(kv["th"]),
                                               int(kv["edges"]), int(kv["subnets"]),
                                               int(kv["splits"])))
            elif not ln.startswith("#"):
                body.append(ln)
        for row in csv.DictReader(body):
            trace.records.append(TraceRecord(float(row["elapsed_seconds"]), float(row["quality"]),
                                             float(row["p"]), float(row["th"]),
                                             int(row["split_index"]), row["event"]))
        return trace


class _Clock:
    """Strictly increasing elapsed-seconds source."""

    def __init__(self) -> None:
        self._t0 = time.perf_counter()
        self._last = 0.0

    def __call__(self) -> float:
        t = time.perf_counter() - self._t0
        if t <= self._last:
            t = self._last + 1e-9
        self._last = t
        return t


# ---- objective adapters --------------------------------------------------------


@runtime_checkable
class QualityModel(Protocol):
    def global_quality(self, params: np.ndarray) -> float: ...

    def subnet_energy(self, params: np.ndarray, free_ids) -> Callable[[SubnetState], float]: ...


class CallableQuality:
    """Adapter for a plain params-matrix -> quality callable: subnet energy is the
    negated global quality with the free rows substituted."""

    def __init__(self, fn: Callable[[np.ndarray], float]):
        self._fn = fn

    def global_quality(self, params: np.ndarray) -> float:
        return float(self._fn(params))

    def subnet_energy(self, params: np.ndarray, free_ids):
        free_ids = np.asarray(sorted(free_ids), dtype=int)
        base = params.copy()

        def energy(state: SubnetState) -> float:
            p = base.copy()
            p[free_ids] = np.asarray(state.free_params).reshape(free_ids.size, -1)
            return -float(self._fn(p))

        return energy


def as_quality_model(objective) -> QualityModel:
    if isinstance(objective, QualityModel):
        return objective
    if callable(objective):
        return CallableQuality(objective)
    raise TypeError("objective must be a QualityModel or a params -> quality callable")


# ---- dispatch and merge ----------------------------------------------------------


@dataclass(frozen=True)
class Assignment:
    subnet: Subnet
    worker_id: int
    replica_id: int


def dispatch(split: Split, worker_count: int, rng: np.random.Generator) -> list[Assignment]:
    """Assign every subnet at least once, duplicating uniformly at random until
    there is one task per worker; tasks are packed round-robin across workers."""
    if not split.subnets:
        raise ValueError("cannot dispatch an empty split")
    if worker_count < 1:
        raise ValueError("worker_count must be >= 1")
    subnets = sorted(split.subnets, key=lambda s: s.key)
    idxs = list(range(len(subnets)))
    extra = max(worker_count, len(subnets)) - len(subnets)
    if extra:
        idxs += [int(i) for i in rng.integers(0, len(subnets), size=extra)]
    replica_counter: dict[int, int] = {}
    out = []
    for pos, i in enumerate(sorted(idxs)):
        rep = replica_counter.get(i, 0)
        replica_counter[i] = rep + 1
        out.append(Assignment(subnets[i], pos % worker_count, rep))
    return out


@dataclass
class SubnetResult:
    subnet: Subnet
    replica_id: int
    free_params: np.ndarray
    energy: float


def _best_replicas(results: Sequence[SubnetResult]) -> list[SubnetResult]:
    """Minimum-energy replica per subnet (ties to the lowest replica id), and a
    disjointness check across distinct subnets."""
    by_key: dict[int, list[SubnetResult]] = {}
    for r in results:
        by_key.setdefault(r.subnet.key, []).append(r)
    seen: set[int] = set()
    winners = []
    for key in sorted(by_key):
        group = sorted(by_key[key], key=lambda r: (r.energy, r.replica_id))
        ids = group[0].subnet.all_ids
        if seen & ids:
            raise ValueError("results reference overlapping non-replica subnets")
        seen |= ids
        winners.append(group[0])
    return winners


def merge(net: Network, results: Sequence[SubnetResult],
          objective=None) -> tuple[Network, bool]:
    """Write each subnet's best replica into the network; `improved` reports
    whether global quality strictly increased (False when no objective given)."""
    params = net.params_matrix()
    for r in _best_replicas(results):
        ids = np.asarray(sorted(r.subnet.all_ids), dtype=int)
        params[ids] = np.asarray(r.free_params).reshape(ids.size, -1)
    merged = net.with_params(params)
    improved = False
    if objective is not None and results:
        model = as_quality_model(objective)
        improved = model.global_quality(params) > model.global_quality(net.params_matrix()) + QUALITY_EPS
    return merged, improved


# ---- run loops --------------------------------------------------------------------


def _subnet_state(params: np.ndarray, bounds: np.ndarray, free_ids: np.ndarray) -> SubnetState:
    k = bounds.shape[0]
    b = np.tile(bounds, (free_ids.size, 1))
    return SubnetState(params[free_ids].ravel(), b)


def _gated_commit(params: np.ndarray, q: float, winners: list[SubnetResult],
                  model: QualityModel) -> tuple[np.ndarray, float, bool]:
    """Apply winners one subnet at a time, keeping only strict global improvements."""
    improved = False
    for r in winners:
        ids = np.asarray(sorted(r.subnet.all_ids), dtype=int)
        cand = params.copy()
        cand[ids] = np.asarray(r.free_params).reshape(ids.size, -1)
        q_new = model.global_quality(cand)
        if q_new > q + QUALITY_EPS:
            params, q, improved = cand, q_new, True
    return params, q, improved


def run_alternative(net: Network, sched: Schedule, cfg: AnnealConfig, corr, objective,
                    workers: int, *, lanes: Optional[int] = None, unit_size: int = 1,
                    split_mode: str = "auto", exact_cap: int = 20,
                    budget_s: Optional[float] = None,
                    master_seed: Optional[int] = None,
                    commit_hook: Optional[Callable[[np.ndarray], None]] = None
                    ) -> tuple[Network, RunTrace]:
    """Alternative-decomposition run: filter -> group -> subnets -> splits, cycle
    splits with patience, advance precision, stop after the p = 1 level.

    `workers` sizes the execution pool; `lanes` (default: workers) is the logical
    core count used for replica duplication, kept separate so the committed
    sequence is identical for any physical worker count.
    """
    model = as_quality_model(objective)
    master = cfg.seed if master_seed is None else master_seed
    lanes = workers if lanes is None else lanes
    params = net.params_matrix()
    bounds = net.bounds()
    g = build_correlation_graph(net, corr)
    clock = _Clock()
    trace = RunTrace()
    q = model.global_quality(params)
    sched_cur = sched
    trace.records.append(TraceRecord(clock(), q, sched_cur.p, threshold(sched_cur), -1, "init"))

    level_idx = 0
    with ThreadPoolExecutor(max_workers=workers) as pool:
        while True:
            th = threshold(sched_cur)
            gf = filter_edges(g, th)
            units = group_units(gf, unit_size)
            subnets = build_subnets(gf, units)
            mode = split_mode
            if mode == "auto":
                mode = "exact" if len(subnets) <= exact_cap else "greedy"
            splits = enumerate_splits(subnets, mode, exact_cap=exact_cap)
            trace.levels.append(LevelStats(sched_cur.p, th, gf.edge_count(),
                                           len(subnets), len(splits)))
            no_improve = 0
            visit = 0
            out_of_budget = False
            while no_improve < sched_cur.patience:
                split = splits[visit % len(splits)]
                assignments = dispatch(split, lanes, task_seed(master, 7, level_idx, visit))
                snapshot = params.copy()

                def work(a: Assignment, _snap=snapshot, _lvl=level_idx, _visit=visit):
                    free_ids = np.asarray(sorted(a.subnet.all_ids), dtype=int)
                    energy = model.subnet_energy(_snap, free_ids)
                    s0 = _subnet_state(_snap, bounds, free_ids)
                    rng = task_seed(master, _lvl, _visit, a.subnet.key, a.replica_id)
                    best, e = optimize_subnet(s0, sched_cur.p, cfg, energy, rng)
                    return SubnetResult(a.subnet, a.replica_id, best.free_params, e)

                results = list(pool.map(work, assignments))
                winners = _best_replicas(results)
                params, q, improved = _gated_commit(params, q, winners, model)
                if improved and commit_hook is not None:
                    commit_hook(params)
                trace.records.append(TraceRecord(clock(), q, sched_cur.p, th,
                                                 visit % len(splits), "merge"))
                no_improve = 0 if improved else no_improve + 1
                visit += 1
                if budget_s is not None and clock() >= budget_s:
                    out_of_budget = True
                    break
            if out_of_budget or sched_cur.p >= 1.0:
                break
            sched_cur = advance_precision(sched_cur)
            level_idx += 1
    return net.with_params(params), trace


def run_sector_baseline(net: Network, k: int, cfg: AnnealConfig, corr, objective,
                        workers: int, *, patience: int = 10, balance_tol: float = 0.25,
                        cooling: float = 0.95, budget_s: Optional[float] = None,
                        master_seed: Optional[int] = None,
                        commit_hook: Optional[Callable[[np.ndarray], None]] = None
                        ) -> tuple[Network, RunTrace]:
    """Sector-planning baseline: one min-crossing-weight partition into k parts,
    then repeated full-step annealing rounds over all parts in parallel with a
    geometric temperature decay, until `patience` rounds bring no improvement."""
    model = as_quality_model(objective)
    master = cfg.seed if master_seed is None else master_seed
    params = net.params_matrix()
    bounds = net.bounds()
    g = build_correlation_graph(net, corr)
    parts = sector_partition(g, k, balance_tol)
    clock = _Clock()
    trace = RunTrace()
    trace.levels.append(LevelStats(0.0, 0.0, g.edge_count(), len(parts), 1))
    q = model.global_quality(params)
    trace.records.append(TraceRecord(clock(), q, 0.0, 0.0, -1, "init"))

    no_improve = 0
    rnd = 0
    with ThreadPoolExecutor(max_workers=workers) as pool:
        while no_improve < patience:
            cfg_r = replace(cfg, t0=cfg.t0 * cooling ** rnd)
            snapshot = params.copy()

            def work(part: OptimizedUnit, _snap=snapshot, _cfg=cfg_r, _rnd=rnd):
                free_ids = np.asarray(sorted(part.member_ids), dtype=int)
                energy = model.subnet_energy(_snap, free_ids)
                s0 = _subnet_state(_snap, bounds, free_ids)
                rng = task_seed(master, 13, _rnd, part.key)
                best, e = optimize_subnet(s0, 0.0, _cfg, energy, rng)
                return SubnetResult(Subnet(part, frozenset()), 0, best.free_params, e)

            results = list(pool.map(work, parts))
            winners = _best_replicas(results)
            params, q, improved = _gated_commit(params, q, winners, model)
            if improved and commit_hook is not None:
                commit_hook(params)
            trace.records.append(TraceRecord(clock(), q, 0.0, 0.0, rnd, "merge"))
            no_improve = 0 if improved else no_improve + 1
            rnd += 1
            if budget_s is not None and clock() >= budget_s:
                break
    return net.with_params(params), trace
