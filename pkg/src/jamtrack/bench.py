"""Synthetic dynamic networks with planted evolving communities.

Degree-capped planted-partition approximation of the classic dynamic
community benchmarks: per node an expected degree is drawn from a truncated
power law, a (1 - mu) fraction of its stubs is wired inside its community and
the rest outside. Four evolution scenarios (birthdeath, expandcontract, hide,
mergesplit) mutate the planted communities between snapshots; edges are
redrawn from the current community assignment with the same wiring rule.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import FormatError

SCENARIOS = ("birthdeath", "expandcontract", "hide", "mergesplit")

POWER_LAW_EXPONENT = 2.0
# stub matching loses a few percent of edges to self loops and duplicates;
# the degree target is inflated to compensate
DEGREE_CALIBRATION = 1.07


@dataclass
class BenchmarkConfig:
    scenario: str
    n: int = 2000
    snapshots: int = 5
    avg_degree: float = 20.0
    max_degree: int = 40
    mu: float = 0.2
    community_size_range: tuple[int, int] = (50, 100)
    intensity: float = 0.3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; valid: {', '.join(SCENARIOS)}")
        if not 0 < self.mu < 1:
            raise ValueError("mu must be in (0, 1)")
        if not self.avg_degree < self.max_degree < self.n:
            raise ValueError("need avg_degree < max_degree < n")
        smin, smax = self.community_size_range
        if smin < 2 or smax < smin or smin > self.n:
            raise FormatError("community sizes cannot tile n")


@dataclass
class BenchmarkSnapshot:
    index: int
    nodes: list[int]                    # sorted, ids persist across snapshots
    edges: list[tuple[int, int]]        # (u, v) with u < v, sorted
    labels: dict[int, int]              # node -> planted community


@dataclass
class DynamicBenchmark:
    config: BenchmarkConfig
    snapshots: list[BenchmarkSnapshot] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)


def _solve_kmin(avg: float, kmax: int) -> float:
    """Minimum degree of the truncated power law hitting the target mean."""
    target = avg * DEGREE_CALIBRATION
    lo, hi = 1.0, float(kmax)
    for _ in range(80):
        mid = (lo + hi) / 2
        mean = mid * kmax * np.log(kmax / mid) / (kmax - mid) if kmax != mid else mid
        if mean < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def _draw_degrees(n: int, avg: float, kmax: int, rng: np.random.Generator) -> np.ndarray:
    kmin = _solve_kmin(avg, kmax)
    u = rng.random(n)
    a = 1.0 - POWER_LAW_EXPONENT  # = -1
    x = ((kmax**a - kmin**a) * u + kmin**a) ** (1.0 / a)
    return np.clip(np.round(x).astype(int), 2, kmax)


def _sample_sizes(n: int, size_range: tuple[int, int], rng: np.random.Generator) -> list[int]:
    smin, smax = size_range
    sizes: list[int] = []
    while sum(sizes) < n:
        sizes.append(int(rng.integers(smin, smax + 1)))
    excess = sum(sizes) - n
    sizes[-1] -= excess
    if sizes[-1] < smin:
        if len(sizes) == 1:
            raise FormatError("community sizes cannot tile n")
        sizes[-2] += sizes[-1]
        sizes.pop()
    return sizes


def _wire(
    labels: dict[int, int],
    mu: float,
    avg_degree: float,
    max_degree: int,
    rng: np.random.Generator,
    mu_override: dict[int, float] | None = None,
) -> list[tuple[int, int]]:
    """Stub-matching wiring: (1 - mu) of each node's stubs inside its community."""
    nodes = sorted(labels)
    degs = _draw_degrees(len(nodes), avg_degree, max_degree, rng)
    node_mu = np.full(len(nodes), mu)
    if mu_override:
        for i, u in enumerate(nodes):
            if labels[u] in mu_override:
                node_mu[i] = mu_override[labels[u]]
    intra = np.round(degs * (1.0 - node_mu)).astype(int)
    inter = degs - intra
    label_arr = {u: labels[u] for u in nodes}
    edges: set[tuple[int, int]] = set()

    comms: dict[int, list[int]] = {}
    for i, u in enumerate(nodes):
        comms.setdefault(labels[u], []).append(i)
    for c in sorted(comms):
        stubs: list[int] = []
        for i in comms[c]:
            stubs.extend([i] * intra[i])
        stub_arr = np.array(stubs, dtype=np.int64)
        rng.shuffle(stub_arr)
        for a, b in zip(stub_arr[0::2], stub_arr[1::2]):
            if a != b:
                edges.add((min(a, b), max(a, b)))

    stubs = []
    for i in range(len(nodes)):
        stubs.extend([i] * inter[i])
    stub_arr = np.array(stubs, dtype=np.int64)
    rng.shuffle(stub_arr)
    for a, b in zip(stub_arr[0::2], stub_arr[1::2]):
        if a != b and label_arr[nodes[a]] != label_arr[nodes[b]]:
            edges.add((min(a, b), max(a, b)))

    return sorted((nodes[a], nodes[b]) for a, b in edges)


def generate(config: BenchmarkConfig) -> DynamicBenchmark:
    """Generate a seeded dynamic benchmark for the configured scenario."""
    rng = np.random.default_rng(config.seed)
    sizes = _sample_sizes(config.n, config.community_size_range, rng)
    node_order = rng.permutation(config.n)
    labels: dict[int, int] = {}
    pos = 0
    for c, size in enumerate(sizes):
        for u in node_order[pos : pos + size]:
            labels[int(u)] = c
        pos += size
    next_node = config.n
    next_comm = len(sizes)
    bench = DynamicBenchmark(config=config)
    hidden_comm: int | None = None
    smin, smax = config.community_size_range

    for j in range(config.snapshots):
        if j > 0:
            labels = dict(labels)
            comms: dict[int, list[int]] = {}
            for u, c in labels.items():
                comms.setdefault(c, []).append(u)
            comm_ids = sorted(comms)
            if config.scenario == "birthdeath":
                dead = int(rng.choice(comm_ids))
                for u in comms[dead]:
                    del labels[u]
                born_size = max(smin, round(len(comms[dead]) * (1.0 - config.intensity)))
                born = next_comm
                next_comm += 1
                for _ in range(born_size):
                    labels[next_node] = born
                    next_node += 1
                bench.events.append(
                    {"snapshot": j, "type": "death", "community": dead}
                )
                bench.events.append(
                    {"snapshot": j, "type": "birth", "community": born, "size": born_size}
                )
            elif config.scenario == "expandcontract":
                grow, shrink = (int(c) for c in rng.choice(comm_ids, size=2, replace=False))
                n_grow = max(1, round(config.intensity * len(comms[grow])))
                for _ in range(n_grow):
                    labels[next_node] = grow
                    next_node += 1
                n_shrink = max(1, round(config.intensity * len(comms[shrink])))
                n_shrink = min(n_shrink, len(comms[shrink]) - smin)
                victims = rng.choice(sorted(comms[shrink]), size=max(n_shrink, 0), replace=False)
                for u in victims:
                    del labels[int(u)]
                bench.events.append(
                    {"snapshot": j, "type": "expand", "community": grow, "added": n_grow}
                )
                bench.events.append(
                    {"snapshot": j, "type": "contract", "community": shrink, "removed": int(len(victims))}
                )
            elif config.scenario == "hide":
                if hidden_comm is not None:
                    bench.events.append({"snapshot": j, "type": "restore", "community": hidden_comm})
                candidates = [c for c in comm_ids if c != hidden_comm]
                hidden_comm = int(rng.choice(candidates))
                bench.events.append({"snapshot": j, "type": "hide", "community": hidden_comm})
            elif config.scenario == "mergesplit":
                a, b = (int(c) for c in rng.choice(comm_ids, size=2, replace=False))
                merged = next_comm
                next_comm += 1
                for u in comms[a] + comms[b]:
                    labels[u] = merged
                splittable = [
                    c for c in comm_ids if c not in (a, b) and len(comms[c]) >= 2 * max(2, smin // 2)
                ]
                bench.events.append(
                    {"snapshot": j, "type": "merge", "communities": [a, b], "into": merged}
                )
                if splittable:
                    victim = int(rng.choice(splittable))
                    members = sorted(comms[victim])
                    half = len(members) // 2
                    picked = rng.permutation(members)
                    new_comm = next_comm
                    next_comm += 1
                    for u in picked[:half]:
                        labels[int(u)] = new_comm
                    bench.events.append(
                        {"snapshot": j, "type": "split", "community": victim, "spawned": new_comm}
                    )

        mu_override = None
        if config.scenario == "hide" and hidden_comm is not None:
            # the hidden community's stubs all point outward: pure background noise
            mu_override = {hidden_comm: 0.999}
        edges = _wire(labels, config.mu, config.avg_degree, config.max_degree, rng, mu_override)
        bench.snapshots.append(
            BenchmarkSnapshot(index=j, nodes=sorted(labels), edges=edges, labels=dict(labels))
        )
    return bench


def realized_degree_stats(snapshot: BenchmarkSnapshot) -> tuple[float, int]:
    """Exact (mean, max) of the snapshot's degree sequence."""
    if not snapshot.nodes:
        raise ValueError("empty snapshot")
    deg = {u: 0 for u in snapshot.nodes}
    for u, v in snapshot.edges:
        deg[u] += 1
        deg[v] += 1
    values = list(deg.values())
    return (float(np.mean(values)), int(max(values)) if values else 0)


def write_bundle(bench: DynamicBenchmark, outdir) -> None:
    """Bundle directory: edges_<j>.csv, labels_<j>.csv, events.json, config.json."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    for snap in bench.snapshots:
        with open(out / f"edges_{snap.index}.csv", "w", newline="") as fh:
            fh.write("u,v\n")
            for u, v in snap.edges:
                fh.write(f"{u},{v}\n")
        with open(out / f"labels_{snap.index}.csv", "w", newline="") as fh:
            fh.write("node,community\n")
            for u in snap.nodes:
                fh.write(f"{u},{snap.labels[u]}\n")
    with open(out / "events.json", "w") as fh:
        json.dump(bench.events, fh, indent=2, sort_keys=True)
    cfg = asdict(bench.config)
    cfg["community_size_range"] = list(cfg["community_size_range"])
    with open(out / "config.json", "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)


def read_bundle(outdir) -> DynamicBenchmark:
    out = Path(outdir)
    with open(out / "config.json") as fh:
        cfg = json.load(fh)
    cfg["community_size_range"] = tuple(cfg["community_size_range"])
    config = BenchmarkConfig(**cfg)
    with open(out / "events.json") as fh:
        events = json.load(fh)
    snaps = []
    j = 0
    while (out / f"edges_{j}.csv").exists():
        edges = []
        with open(out / f"edges_{j}.csv") as fh:
            next(fh)
            for line in fh:
                u, v = line.strip().split(",")
                edges.append((int(u), int(v)))
        labels = {}
        with open(out / f"labels_{j}.csv") as fh:
            next(fh)
            for line in fh:
                u, c = line.strip().split(",")
                labels[int(u)] = int(c)
        snaps.append(BenchmarkSnapshot(index=j, nodes=sorted(labels), edges=edges, labels=labels))
        j += 1
    return DynamicBenchmark(config=config, snapshots=snaps, events=events)
