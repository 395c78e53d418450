"""Local-dominance community search with a modularity sweep over center counts.

Stages: attribute each node the sum of its incident edge weights, point every
node at its strongest neighbor (ties broken by id so the pointer structure is
acyclic), take pointer sinks as local leaders, link each leader to its nearest
dominating leader by breadth-first search, then score leaders by value x hop
distance and sweep the number of centers, keeping the partition with the best
modularity.
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .congestion import CongestionSubgraph, largest_connected_component
from .metrics import modularity_from_arrays


@dataclass
class DetectConfig:
    k_max: int = 150
    candidate_ks: list[int] | None = None
    level_count: int = 4


@dataclass
class ValuedGraph:
    """Index-space weighted graph with node values and dominance pointers."""

    ids: list                    # node identifiers, index-aligned
    eu: np.ndarray               # edge endpoints (indices)
    ev: np.ndarray
    w: np.ndarray                # edge weights
    adj: list[list[int]]         # neighbor indices
    rank: np.ndarray             # id order rank; smaller id -> smaller rank
    x: np.ndarray | None = None
    pointer: np.ndarray | None = None  # -1 = no pointer

    @classmethod
    def from_edges(cls, ids: list, eu, ev, w) -> "ValuedGraph":
        n = len(ids)
        eu = np.asarray(eu, dtype=np.int64)
        ev = np.asarray(ev, dtype=np.int64)
        w = np.asarray(w, dtype=float)
        adj: list[list[int]] = [[] for _ in range(n)]
        for a, b in zip(eu, ev):
            adj[a].append(int(b))
            adj[b].append(int(a))
        order = sorted(range(n), key=lambda i: ids[i])
        rank = np.empty(n, dtype=np.int64)
        rank[order] = np.arange(n)
        return cls(ids=list(ids), eu=eu, ev=ev, w=w, adj=adj, rank=rank)

    @classmethod
    def from_subgraph(cls, g: CongestionSubgraph) -> "ValuedGraph":
        if g.weights is None and g.edges:
            raise ValueError("subgraph edge weights are not assigned")
        index = {u: i for i, u in enumerate(g.nodes)}
        eu = [index[u] for u, _ in g.edges]
        ev = [index[v] for _, v in g.edges]
        w = g.weights if g.weights is not None else np.zeros(0)
        return cls.from_edges(g.nodes, eu, ev, w)

    def key(self, u: int) -> tuple[float, int]:
        """Dominance key: higher value wins, then smaller id."""
        return (float(self.x[u]), -int(self.rank[u]))


@dataclass
class LeaderForest:
    leaders: np.ndarray                 # node indices, sorted
    parent: dict[int, int | None]       # leader -> dominating leader (None for roots)
    delta: dict[int, int]               # leader -> hop distance to parent (roots: 1 + max)
    comp: np.ndarray                    # component id per node
    roots: dict[int, int]               # component id -> root leader

    def gamma(self, x: np.ndarray) -> dict[int, float]:
        return {int(u): float(x[u]) * self.delta[int(u)] for u in self.leaders}


@dataclass
class Partition:
    ids: list                           # node identifiers, index-aligned
    labels: np.ndarray                  # community label = index of the community's center
    centers: list[int]                  # center node indices
    levels: dict[int, int]              # center -> bottleneck level (1 = most severe)
    gamma: dict[int, float]             # leader scores used for selection

    def as_id_map(self) -> dict:
        return {self.ids[i]: self.ids[int(self.labels[i])] for i in range(len(self.ids))}


@dataclass
class SweepResult:
    bin_start: int
    per_k: dict[int, float] = field(default_factory=dict)
    best_k: int | None = None
    best_q: float | None = None
    best_partition: Partition | None = None
    runtime_ms: float = 0.0

    @property
    def centers(self) -> list:
        if self.best_partition is None:
            return []
        return [self.best_partition.ids[c] for c in self.best_partition.centers]


def attribute_values(vg: ValuedGraph) -> ValuedGraph:
    """x_u = sum of weights of edges incident to u; isolated nodes get 0."""
    x = np.zeros(len(vg.ids))
    np.add.at(x, vg.eu, vg.w)
    np.add.at(x, vg.ev, vg.w)
    vg.x = x
    return vg

def build_pointer_dag(vg: ValuedGraph) -> ValuedGraph:
    """Point each node at its maximum-key neighbor when that key beats its own."""
    n = len(vg.ids)
    pointer = np.full(n, -1, dtype=np.int64)
    for u in range(n):
        if not vg.adj[u]:
            continue
        best = max(vg.adj[u], key=vg.key)
        if vg.key(best) > vg.key(u):
            pointer[u] = best
    vg.pointer = pointer
    return vg


def find_local_leaders(vg: ValuedGraph) -> np.ndarray:
    """Leaders = nodes without an outgoing pointer (includes isolated nodes)."""
    return np.where(vg.pointer < 0)[0]


def leader_of_nodes(vg: ValuedGraph) -> np.ndarray:
    """Terminal leader of every node's pointer chain (path-compressed)."""
    n = len(vg.ids)
    leader = np.full(n, -1, dtype=np.int64)
    for u in range(n):
        path = []
        v = u
        while leader[v] < 0 and vg.pointer[v] >= 0:
            path.append(v)
            v = vg.pointer[v]
        end = int(leader[v]) if leader[v] >= 0 else v
        leader[v] = end
        for p in path:
            leader[p] = end
    return leader


def _components(vg: ValuedGraph) -> tuple[np.ndarray, int]:
    n = len(vg.ids)
    comp = np.full(n, -1, dtype=np.int64)
    nc = 0
    for s in range(n):
        if comp[s] >= 0:
            continue
        comp[s] = nc
        q = deque([s])
        while q:
            u = q.popleft()
            for v in vg.adj[u]:
                if comp[v] < 0:
                    comp[v] = nc
                    q.append(v)
        nc += 1
    return comp, nc


def lbfs_link_leaders(vg: ValuedGraph, leaders: np.ndarray) -> LeaderForest:
    """Link every non-root leader to the nearest leader with a dominating key.

    The search runs level by level and stops at the first level containing an
    eligible leader; equidistant candidates resolve by higher value, then
    smaller id. Per component the maximum-key leader is the root; its delta is
    one more than the largest delta in the forest so it always ranks first.
    """
    comp, _ = _components(vg)
    is_leader = np.zeros(len(vg.ids), dtype=bool)
    is_leader[leaders] = True
    roots: dict[int, int] = {}
    for u in leaders:
        c = int(comp[u])
        if c not in roots or vg.key(int(u)) > vg.key(roots[c]):
            roots[c] = int(u)
    root_set = set(roots.values())
    parent: dict[int, int | None] = {}
    delta: dict[int, int] = {}
    for start in leaders:
        start = int(start)
        if start in root_set:
            continue
        seen = {start}
        frontier = [start]
        dist = 0
        found = None
        while frontier and found is None:
            dist += 1
            nxt = []
            candidates = []
            for u in frontier:
                for v in vg.adj[u]:
                    if v in seen:
                        continue
                    seen.add(v)
                    nxt.append(v)
                    if is_leader[v] and vg.key(v) > vg.key(start):
                        candidates.append(v)
            if candidates:
                found = max(candidates, key=vg.key)
            frontier = nxt
        parent[start] = found  # connected component guarantees found is not None
        delta[start] = dist
    max_delta = max(delta.values(), default=0)
    for r in root_set:
        parent[r] = None
        delta[r] = max_delta + 1
    return LeaderForest(
        leaders=np.sort(leaders), parent=parent, delta=delta, comp=comp, roots=roots
    )


def _leader_order(vg: ValuedGraph, forest: LeaderForest) -> list[int]:
    """Leaders by descending center score; component roots always first."""
    gamma = forest.gamma(vg.x)
    root_set = set(forest.roots.values())

    def sort_key(u: int):
        return (-gamma[u], -vg.x[u], vg.rank[u])

    roots = sorted(root_set, key=sort_key)
    rest = sorted((int(u) for u in forest.leaders if int(u) not in root_set), key=sort_key)
    return roots + rest


def select_centers(vg: ValuedGraph, forest: LeaderForest, k: int) -> list[int]:
    """Top-k leaders by gamma = x * delta (ties: higher x, then smaller id).

    Component roots are always selected, so the effective k is at least the
    number of components; k above the leader count clamps down.
    """
    order = _leader_order(vg, forest)
    k = max(1, min(k, len(order)))
    k = max(k, len(forest.roots))
    return order[:k]


def _centers_to_labels(
    vg: ValuedGraph, forest: LeaderForest, centers: list[int], leader_of: np.ndarray
) -> np.ndarray:
    center_set = set(centers)
    cache: dict[int, int] = {}

    def center_of(leader: int) -> int:
        if leader in cache:
            return cache[leader]
        chain = []
        u = leader
        while u not in center_set and u not in cache:
            chain.append(u)
            nxt = forest.parent[u]
            if nxt is None:
                break
            u = nxt
        end = cache.get(u, u)
        cache[u] = end
        for c in chain:
            cache[c] = end
        return end

    return np.array([center_of(int(leader_of[u])) for u in range(len(vg.ids))], dtype=np.int64)


def _assign_levels(gamma: dict[int, float], centers: list[int], level_count: int) -> dict[int, int]:
    """Quantile levels of center gamma within the snapshot; level 1 = most severe."""
    ordered = sorted(centers, key=lambda c: (-gamma[c], c))
    n = len(ordered)
    levels = {}
    for pos, c in enumerate(ordered):
        levels[c] = min(level_count, 1 + (pos * level_count) // n)
    return levels


def assign_partition(
    vg: ValuedGraph, forest: LeaderForest, centers: list[int], level_count: int = 4
) -> Partition:
    leader_of = leader_of_nodes(vg)
    labels = _centers_to_labels(vg, forest, centers, leader_of)
    gamma = forest.gamma(vg.x)
    return Partition(
        ids=vg.ids,
        labels=labels,
        centers=list(centers),
        levels=_assign_levels(gamma, centers, level_count),
        gamma=gamma,
    )


def modularity_sweep(
    vg: ValuedGraph,
    forest: LeaderForest,
    candidate_ks: list[int] | None = None,
    k_max: int = 150,
    level_count: int = 4,
) -> SweepResult:
    """Evaluate modularity for each candidate center count; keep the argmax (ties: smaller k)."""
    t0 = time.perf_counter()
    n_leaders = len(forest.leaders)
    if candidate_ks is None:
        candidate_ks = list(range(1, min(n_leaders, k_max) + 1))
    if not candidate_ks:
        raise ValueError("candidate_ks must be nonempty")
    order = _leader_order(vg, forest)
    leader_of = leader_of_nodes(vg)
    gamma = forest.gamma(vg.x)
    result = SweepResult(bin_start=0)
    best_labels = None
    best_centers = None
    for k in sorted(set(candidate_ks)):
        k_eff = max(max(1, min(k, n_leaders)), len(forest.roots))
        centers = order[:k_eff]
        labels = _centers_to_labels(vg, forest, centers, leader_of)
        q = modularity_from_arrays(vg.eu, vg.ev, vg.w, labels)
        result.per_k[k] = q
        if q is not None and (result.best_q is None or q > result.best_q):
            result.best_q = q
            result.best_k = k
            best_labels = labels
            best_centers = centers
    if best_centers is None:
        # zero total edge weight: Q is undefined for every k, keep the smallest-k partition
        k = sorted(set(candidate_ks))[0]
        best_centers = order[: max(max(1, min(k, n_leaders)), len(forest.roots))]
        best_labels = _centers_to_labels(vg, forest, best_centers, leader_of)
        result.best_k = k
    if best_centers is not None:
        result.best_partition = Partition(
            ids=vg.ids,
            labels=best_labels,
            centers=list(best_centers),
            levels=_assign_levels(gamma, best_centers, level_count),
            gamma=gamma,
        )
    result.runtime_ms = (time.perf_counter() - t0) * 1000.0
    return result


def detect_communities(
    snapshot: CongestionSubgraph,
    adj=None,
    config: DetectConfig | None = None,
) -> SweepResult:
    """Full per-snapshot pipeline: weight edges, LCC, local search, modularity sweep."""
    config = config or DetectConfig()
    t0 = time.perf_counter()
    if adj is not None:
        from .features import apply_edge_weights

        apply_edge_weights(snapshot, adj)
    if not snapshot.nodes:
        return SweepResult(bin_start=snapshot.bin_start)
    lcc = largest_connected_component(snapshot)
    vg = ValuedGraph.from_subgraph(lcc)
    attribute_values(vg)
    build_pointer_dag(vg)
    leaders = find_local_leaders(vg)
    forest = lbfs_link_leaders(vg, leaders)
    result = modularity_sweep(
        vg, forest, candidate_ks=config.candidate_ks, k_max=config.k_max, level_count=config.level_count
    )
    result.bin_start = snapshot.bin_start
    result.runtime_ms = (time.perf_counter() - t0) * 1000.0
    return result
