"""Per-timestamp congestion subgraphs over the road network.

A segment is a congestion instance at a bin when its TSI is present and at
least the threshold (default 0.7). Edges connect road-adjacent congested
segments; edge weights are filled in later from the fused adjacency matrix.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .ingest import RoadNetwork, TsiMatrix

log = logging.getLogger(__name__)

DEFAULT_TSI_THRESHOLD = 0.7


@dataclass(frozen=True)
class CongestionInstance:
    segment_id: str
    bin_index: int
    tsi: float


@dataclass
class CongestionSubgraph:
    bin_start: int
    bin_index: int
    nodes: list[str]                      # sorted segment ids
    edges: list[tuple[str, str]]          # (u, v) with u < v, sorted
    weights: np.ndarray | None = None     # per-edge, aligned with `edges`

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)


@dataclass
class CongestionGraphSequence:
    subgraphs: list[CongestionSubgraph] = field(default_factory=list)

    def __iter__(self):
        return iter(self.subgraphs)

    def __len__(self) -> int:
        return len(self.subgraphs)


def extract_instances(tsi: TsiMatrix, threshold: float = DEFAULT_TSI_THRESHOLD) -> list[list[CongestionInstance]]:
    """Congestion instances per bin: TSI present and >= threshold."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    hits = tsi.mask & (tsi.values >= threshold)
    out: list[list[CongestionInstance]] = []
    for j in range(len(tsi.bin_starts)):
        rows = np.where(hits[:, j])[0]
        out.append(
            [CongestionInstance(tsi.segment_ids[i], j, float(tsi.values[i, j])) for i in rows]
        )
    return out


def build_subgraph(
    instances: list[CongestionInstance], network: RoadNetwork, bin_start: int, bin_index: int
) -> CongestionSubgraph:
    """Nodes = congested segments; edge iff both endpoints congested and road-adjacent."""
    nodes = []
    for inst in instances:
        if inst.segment_id not in network.adjacency:
            log.warning("segment %s not in network, dropped from bin %d", inst.segment_id, bin_index)
            continue
        nodes.append(inst.segment_id)
    nodes = sorted(set(nodes))
    present = set(nodes)
    edges = []
    for u in nodes:
        for v in network.adjacency[u]:
            if v in present and u < v:
                edges.append((u, v))
    edges.sort()
    return CongestionSubgraph(bin_start=bin_start, bin_index=bin_index, nodes=nodes, edges=edges)


def build_graph_sequence(
    tsi: TsiMatrix, network: RoadNetwork, threshold: float = DEFAULT_TSI_THRESHOLD
) -> CongestionGraphSequence:
    per_bin = extract_instances(tsi, threshold)
    subs = [
        build_subgraph(insts, network, int(tsi.bin_starts[j]), j)
        for j, insts in enumerate(per_bin)
    ]
    return CongestionGraphSequence(subs)


def connected_components(nodes: list[str], edges: list[tuple[str, str]]) -> list[list[str]]:
    """Components as sorted node lists, ordered by (-size, smallest member)."""
    adj: dict[str, list[str]] = {u: [] for u in nodes}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen: set[str] = set()
    comps: list[list[str]] = []
    for start in nodes:
        if start in seen:
            continue
        comp = []
        q = deque([start])
        seen.add(start)
        while q:
            u = q.popleft()
            comp.append(u)
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    q.append(v)
        comps.append(sorted(comp))
    comps.sort(key=lambda c: (-len(c), c[0]))
    return comps


def largest_connected_component(g: CongestionSubgraph) -> CongestionSubgraph:
    """Induced subgraph on the largest component; ties broken by smallest member id."""
    if not g.nodes:
        return g
    comp = set(connected_components(g.nodes, g.edges)[0])
    keep = [i for i, (u, v) in enumerate(g.edges) if u in comp and v in comp]
    return CongestionSubgraph(
        bin_start=g.bin_start,
        bin_index=g.bin_index,
        nodes=sorted(comp),
        edges=[g.edges[i] for i in keep],
        weights=None if g.weights is None else g.weights[keep],
    )


def write_edge_dump(seq: CongestionGraphSequence, path) -> None:
    """Debug dump: one row per edge, `timestamp,seg_u,seg_v`."""
    with open(path, "w", newline="") as fh:
        fh.write("timestamp,seg_u,seg_v\n")
        for g in seq:
            for u, v in g.edges:
                fh.write(f"{g.bin_start},{u},{v}\n")
