"""Edge filtering, unit grouping, subnet selection and alternative-split enumeration,
plus the crossing-weight-minimizing sector partitioner used as a baseline."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import CorrelationGraph

EXACT_SUBNET_CAP = 20


@dataclass(frozen=True)
class OptimizedUnit:
    """Group of strongly correlated elements optimized together."""

    member_ids: frozenset[int]

    def __post_init__(self) -> None:
        if not self.member_ids:
            raise ValueError("unit must be non-empty")

    @property
    def key(self) -> int:
        return min(self.member_ids)


@dataclass(frozen=True)
class Subnet:
    """An optimized unit plus its directly connected context elements."""

    unit: OptimizedUnit
    context_ids: frozenset[int]

    def __post_init__(self) -> None:
        if self.context_ids & self.unit.member_ids:
            raise ValueError("context must be disjoint from the unit")

    @property
    def all_ids(self) -> frozenset[int]:
        return self.unit.member_ids | self.context_ids

    @property
    def key(self) -> int:
        return self.unit.key


@dataclass
class Split:
    """A maximal set of pairwise non-overlapping subnets."""

    subnets: list[Subnet] = field(default_factory=list)

    def covered_ids(self) -> frozenset[int]:
        out: frozenset[int] = frozenset()
        for s in self.subnets:
            out |= s.all_ids
        return out

    def coverage(self) -> int:
        return len(self.covered_ids())


def filter_edges(g: CorrelationGraph, th: float) -> CorrelationGraph:
    """Zero out every edge with weight strictly below the threshold."""
    if th < 0:
        raise ValueError("threshold must be >= 0")
    w = g.weights.copy()
    w[w < th] = 0.0
    return CorrelationGraph(w)


def group_units(g: CorrelationGraph, unit_size: int) -> list[OptimizedUnit]:
    """Agglomerate elements into units by repeatedly merging across the heaviest
    remaining positive edge, subject to the size bound."""
    if unit_size < 1:
        raise ValueError("unit_size must be >= 1")
    if g.n < 1:
        raise ValueError("graph must be non-empty")
    parent = list(range(g.n))
    size = [1] * g.n

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    # sort descending by weight, ties broken by lowest (i, j) for reproducibility
    for i, j, w in sorted(g.edges(), key=lambda e: (-e[2], e[0], e[1])):
        ri, rj = find(i), find(j)
        if ri != rj and size[ri] + size[rj] <= unit_size:
            parent[rj] = ri
            size[ri] += size[rj]
    groups: dict[int, set[int]] = {}
    for v in range(g.n):
        groups.setdefault(find(v), set()).add(v)
    units = [OptimizedUnit(frozenset(m)) for m in groups.values()]
    return sorted(units, key=lambda u: u.key)


def build_subnets(g_filtered: CorrelationGraph, units: list[OptimizedUnit]) -> list[Subnet]:
    """One subnet per unit: the unit plus every element with a surviving edge into it."""
    covered: set[int] = set()
    for u in units:
        if covered & u.member_ids:
            raise ValueError("units must be disjoint")
        covered |= u.member_ids
    if covered != set(range(g_filtered.n)):
        raise ValueError("units must cover all elements")
    subnets = []
    for u in units:
        members = sorted(u.member_ids)
        adj = np.nonzero(g_filtered.weights[members].sum(axis=0) > 0)[0]
        context = frozenset(int(v) for v in adj) - u.member_ids
        subnets.append(Subnet(u, context))
    return subnets


def _max_coverage_with_seed(subnets: list[Subnet], seed_idx: int) -> list[int]:
    """Indices of the maximum-total-coverage conflict-free set containing the seed.

    Subnets in one candidate pool are conflict-free iff their all_ids are disjoint,
    so total coverage is the sum of sizes. Branch-and-bound over index order;
    ties resolved toward the lexicographically smallest index set.
    """
    # the seed is forced: search only among subnets compatible with it
    seed_ids = subnets[seed_idx].all_ids
    pool = [i for i in range(len(subnets)) if i != seed_idx and not (subnets[i].all_ids & seed_ids)]
    sizes = [len(subnets[i].all_ids) for i in pool]
    n = len(pool)
    conflict = [[bool(subnets[pool[a]].all_ids & subnets[pool[b]].all_ids) for b in range(n)]
                for a in range(n)]

    best: list[int] = []
    best_cov = -1

    def rec(idx: int, chosen: list[int], cov: int, remaining: int) -> None:
        nonlocal best, best_cov
        if cov + remaining < best_cov:
            return
        if idx == n:
            if cov > best_cov:
                best, best_cov = list(chosen), cov
            return
        rest = remaining - sizes[idx]
        if all(not conflict[idx][c] for c in chosen):
            chosen.append(idx)
            rec(idx + 1, chosen, cov + sizes[idx], rest)
            chosen.pop()
        rec(idx + 1, chosen, cov, rest)

    rec(0, [], 0, sum(sizes))
    return sorted([seed_idx] + [pool[i] for i in best])


def _greedy_with_seed(subnets: list[Subnet], seed_idx: int) -> list[int]:
    order = sorted(range(len(subnets)), key=lambda i: (-len(subnets[i].all_ids), subnets[i].key))
    chosen = [seed_idx]
    used = set(subnets[seed_idx].all_ids)
    for i in order:
        if i != seed_idx and not (subnets[i].all_ids & used):
            chosen.append(i)
            used |= subnets[i].all_ids
    return sorted(chosen)


def enumerate_splits(subnets: list[Subnet], mode: str = "exact",
                     exact_cap: int = EXACT_SUBNET_CAP) -> list[Split]:
    """Enumerate alternative splits so every candidate subnet is used at least once.

    Seeds are taken in key order from the still-untapped subnets; each split is
    grown to a maximal non-overlapping set (optimal coverage in exact mode,
    size-descending greedy otherwise) and all its subnets are marked tapped.
    """
    if not subnets:
        raise ValueError("no subnets to enumerate")
    if mode not in ("exact", "greedy"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact" and len(subnets) > exact_cap:
        raise ValueError(
            f"exact split enumeration capped at {exact_cap} subnets (got {len(subnets)}); use greedy mode")
    ordered = sorted(range(len(subnets)), key=lambda i: subnets[i].key)
    tapped: set[int] = set()
    splits: list[Split] = []
    for seed in ordered:
        if seed in tapped:
            continue
        if mode == "exact":
            idxs = _max_coverage_with_seed(subnets, seed)
        else:
            idxs = _greedy_with_seed(subnets, seed)
        tapped.update(idxs)
        splits.append(Split([subnets[i] for i in sorted(idxs, key=lambda i: subnets[i].key)]))
    return splits


def export_splits(splits: list[Split]) -> str:
    """Human-readable dump of splits for debugging and the orchestrator trace."""
    lines = []
    for si, split in enumerate(splits):
        lines.append(f"split {si}")
        for s in split.subnets:
            members = ",".join(map(str, sorted(s.unit.member_ids)))
            ctx = ",".join(map(str, sorted(s.context_ids)))
            lines.append(f"  subnet {s.key} unit={members} context={ctx}")
    return "\n".join(lines) + "\n"


def crossing_weight(g: CorrelationGraph, parts: list[OptimizedUnit]) -> float:
    """Total weight of edges whose endpoints fall in different parts."""
    label = np.empty(g.n, dtype=int)
    for pi, p in enumerate(parts):
        for v in p.member_ids:
            label[v] = pi
    total = 0.0
    for i, j, w in g.edges():
        if label[i] != label[j]:
            total += w
    return total


def sector_partition(g: CorrelationGraph, k: int, balance_tol: float = 0.25) -> list[OptimizedUnit]:
    """Partition into k balanced parts minimizing total crossing weight:
    greedy growth from heavy seeds followed by pairwise-swap refinement."""
    n = g.n
    if not 1 <= k <= n:
        raise ValueError("k must be in [1, n]")
    if k == 1:
        return [OptimizedUnit(frozenset(range(n)))]
    cap = int(np.ceil(n / k) * (1 + balance_tol))
    w = g.weights

    label = np.full(n, -1, dtype=int)
    # seeds: start from the strongest vertex, then repeatedly take the vertex
    # least connected to the seeds picked so far (keeps seeds in distinct clusters)
    strength = w.sum(axis=1)
    seeds = [int(np.argmax(strength))]
    while len(seeds) < k:
        conn_to_seeds = w[:, seeds].sum(axis=1)
        conn_to_seeds[seeds] = np.inf
        seeds.append(int(np.argmin(conn_to_seeds)))
    for pi, s in enumerate(seeds):
        label[s] = pi
    sizes = [1] * k

    # balanced growth: the currently smallest part claims the unassigned vertex
    # it is most strongly connected to; ties by lowest vertex id
    while np.any(label < 0):
        pi = int(np.argmin(sizes))
        free = np.nonzero(label < 0)[0]
        conn = w[np.ix_(free, np.nonzero(label == pi)[0])].sum(axis=1)
        v = int(free[np.argmax(conn)])
        label[v] = pi
        sizes[pi] += 1

    # Kernighan-Lin refinement: single moves where balance allows, then chained
    # pairwise swaps with lock-and-revert between every pair of parts.
    # Gains are read from a connection matrix C[v, part] = sum of w[v, u] over
    # u in part, updated incrementally.
    floor = max(1, int(np.floor(n / k) * (1 - balance_tol)))

    def connections() -> np.ndarray:
        onehot = np.zeros((n, k))
        onehot[np.arange(n), label] = 1.0
        return w @ onehot

    def total_crossing(c: np.ndarray) -> float:
        internal = c[np.arange(n), label].sum()
        return 0.5 * (c.sum() - internal)

    eps = 1e-9 * (1.0 + w.sum())

    def kl_pass(pa: int, pb: int, c: np.ndarray) -> bool:
        """One KL swap chain between parts pa and pb; keeps the best prefix."""
        locked = np.zeros(n, dtype=bool)
        history: list[tuple[int, int]] = []
        gains: list[float] = []
        while True:
            va = np.nonzero((label == pa) & ~locked)[0]
            vb = np.nonzero((label == pb) & ~locked)[0]
            if va.size == 0 or vb.size == 0:
                break
            gain = ((c[va, pb] - c[va, pa])[:, None]
                    + (c[vb, pa] - c[vb, pb])[None, :]
                    - 2.0 * w[np.ix_(va, vb)])
            ai, bi = np.unravel_index(np.argmax(gain), gain.shape)
            g, v, u = float(gain[ai, bi]), int(va[ai]), int(vb[bi])
            label[v], label[u] = pb, pa
            c[:, pa] += w[:, u] - w[:, v]
            c[:, pb] += w[:, v] - w[:, u]
            locked[v] = locked[u] = True
            history.append((v, u))
            gains.append(g)
        prefix = np.cumsum(gains) if gains else np.array([])
        best_len = int(np.argmax(prefix)) + 1 if len(prefix) else 0
        if best_len == 0 or prefix[best_len - 1] <= eps:
            best_len = 0
        for v, u in reversed(history[best_len:]):
            label[v], label[u] = pa, pb
            c[:, pa] += w[:, v] - w[:, u]
            c[:, pb] += w[:, u] - w[:, v]
        return best_len > 0

    c = connections()
    best_cross = total_crossing(c)
    for _ in range(100):  # refinement rounds; each must strictly improve
        moved = False
        # balance-respecting single moves
        for v in range(n):
            pv = label[v]
            if sizes[pv] <= floor:
                continue
            for pi in range(k):
                if pi != pv and sizes[pi] < cap and c[v, pi] > c[v, pv] + eps:
                    label[v] = pi
                    c[:, pv] -= w[:, v]
                    c[:, pi] += w[:, v]
                    sizes[pv] -= 1
                    sizes[pi] += 1
                    moved = True
                    break
        for pa in range(k):
            for pb in range(pa + 1, k):
                if kl_pass(pa, pb, c):
                    moved = True
        cross = total_crossing(c)
        if not moved or cross >= best_cross - eps:
            break
        best_cross = cross

    parts = []
    for pi in range(k):
        members = frozenset(int(v) for v in np.nonzero(label == pi)[0])
        if members:
            parts.append(OptimizedUnit(members))
    return sorted(parts, key=lambda p: p.key)
