"""Evaluation metrics, baseline community-similarity measures, tracking and
bottleneck propagation probabilities."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FormatError


# ---------------------------------------------------------------------------
# partition quality

def nmi(x, y) -> float:
    """Normalized mutual information 2*I/(H(X)+H(Y)) with natural-log entropies.

    Accepts label sequences (index-aligned) or node->label mappings over the
    same node set. Two single-cluster partitions score 1; exactly one
    degenerate side scores 0.
    """
    if isinstance(x, dict) or isinstance(y, dict):
        if not (isinstance(x, dict) and isinstance(y, dict)):
            raise FormatError("both partitions must be mappings or both sequences")
        if set(x) != set(y):
            raise FormatError("partitions must cover the same node set")
        keys = sorted(x)
        x = [x[k] for k in keys]
        y = [y[k] for k in keys]
    xa = np.asarray(x)
    ya = np.asarray(y)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise FormatError("label arrays must be 1-D and of equal length")
    n = len(xa)
    if n == 0:
        raise FormatError("empty partitions")
    _, xi = np.unique(xa, return_inverse=True)
    _, yi = np.unique(ya, return_inverse=True)
    nx, ny = xi.max() + 1, yi.max() + 1
    joint = np.zeros((nx, ny))
    np.add.at(joint, (xi, yi), 1.0)
    joint /= n
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)

    def entropy(p):
        nz = p > 0
        return float(-(p[nz] * np.log(p[nz])).sum())

    hx, hy = entropy(px), entropy(py)
    if hx + hy == 0:
        return 1.0
    if hx == 0 or hy == 0:
        return 0.0
    nzj = joint > 0
    outer = px[:, None] * py[None, :]
    mi = float((joint[nzj] * np.log(joint[nzj] / outer[nzj])).sum())
    return 2.0 * mi / (hx + hy)


def modularity_from_arrays(eu, ev, w, labels) -> float | None:
    """Weighted Newman modularity; None when the total edge weight is zero."""
    eu = np.asarray(eu, dtype=np.int64)
    ev = np.asarray(ev, dtype=np.int64)
    w = np.asarray(w, dtype=float)
    labels = np.asarray(labels)
    m = w.sum()
    if m <= 0:
        return None
    _, inv = np.unique(labels, return_inverse=True)
    ncomm = inv.max() + 1
    deg = np.zeros(len(labels))
    np.add.at(deg, eu, w)
    np.add.at(deg, ev, w)
    intra = inv[eu] == inv[ev]
    lc = np.bincount(inv[eu][intra], weights=w[intra], minlength=ncomm)
    dc = np.bincount(inv, weights=deg, minlength=ncomm)
    return float((lc / m - (dc / (2.0 * m)) ** 2).sum())


def modularity(g, partition) -> float | None:
    """Modularity of a partition over a weighted congestion subgraph.

    `partition` is a node->community mapping covering all nodes of `g`.
    """
    index = {u: i for i, u in enumerate(g.nodes)}
    missing = [u for u in g.nodes if u not in partition]
    if missing:
        raise FormatError(f"partition misses {len(missing)} nodes, e.g. {missing[0]!r}")
    labels = [partition[u] for u in g.nodes]
    if not g.edges:
        return None
    w = g.weights if g.weights is not None else np.ones(len(g.edges))
    eu = [index[u] for u, _ in g.edges]
    ev = [index[v] for _, v in g.edges]
    return modularity_from_arrays(eu, ev, w, np.asarray(labels, dtype=object))


# ---------------------------------------------------------------------------
# baseline community-similarity measures

def sim_jaccard(a: set, b: set) -> float:
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def sim_maxratio(a: set, b: set, k: float = 0.3) -> float:
    if not a and not b:
        return 0.0
    r = len(a & b) / max(len(a), len(b))
    return r if r >= k else 0.0


def sim_ged(a: set, b: set, importance: dict | None = None) -> float:
    """Group-evolution similarity: member overlap scaled by overlap importance.

    `importance` maps nodes to a centrality weight in the source snapshot
    (degree centrality by default usage); missing entries count as 1.
    """
    if not a:
        return 0.0
    importance = importance or {}
    inter = a & b
    ni = lambda n: float(importance.get(n, 1.0))
    denom = sum(ni(n) for n in a)
    num = sum(ni(n) for n in inter)
    if denom <= 0:
        return 0.0
    return (len(inter) / len(a)) * (num / denom)


def sim_transition_vectors(va, vb, k: float = 0.3) -> float:
    """Harmonic-mean overlap of two probability vectors; zeroed at or below k."""
    va = np.asarray(va, dtype=float)
    vb = np.asarray(vb, dtype=float)
    if va.shape != vb.shape:
        raise FormatError("probability vectors must share a shape")
    denom = va + vb
    nz = denom > 0
    s = float((2.0 * va[nz] * vb[nz] / denom[nz]).sum())
    return s if s > k else 0.0


def sim_icem(a: set, b: set, k1: float = 0.1, k2: float = 0.5) -> tuple[str, float, float]:
    """ICEM classification: (kind, forward score, backward score).

    kind is "very_similar", "partially_similar" or "dissimilar". Very-similar
    additionally requires the backward score above k1 so a tiny community
    inside a huge one does not qualify.
    """
    if not a or not b:
        return ("dissimilar", 0.0, 0.0)
    inter = len(a & b)
    s1 = inter / len(a)
    s2 = inter / len(b)
    if s1 > k2 and s2 > k1:
        return ("very_similar", s1, s2)
    if s1 > k1 and s2 > k1:
        return ("partially_similar", s1, s2)
    return ("dissimilar", s1, s2)


def sim_overlap(a: set, b: set) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / min(len(a), len(b))


# ---------------------------------------------------------------------------
# cross-snapshot tracking

TRACKING_METHODS = ("jaccard", "maxratio", "ged", "transition", "icem", "overlap")

DEFAULT_THRESHOLDS = {
    "jaccard": 0.1,
    "maxratio": 0.3,
    "ged": 0.1,
    "transition": 0.3,  # fixed fallback; gamma-curve auto threshold is an extension point
    "icem": (0.1, 0.5),
    "overlap": 0.5,
}


@dataclass(frozen=True)
class MatchEvent:
    snapshot_i: int
    community_i: object | None
    snapshot_j: int
    community_j: object | None
    score: float
    kind: str  # continue | merge | split | birth | death


def _communities(partition: dict) -> dict:
    comms: dict = {}
    for node, label in partition.items():
        comms.setdefault(label, set()).add(node)
    return comms


def _pair_score(method: str, a: set, b: set, thresholds, importance) -> float:
    """Score of a candidate match; 0 means unmatched."""
    if method == "jaccard":
        s = sim_jaccard(a, b)
        return s if s > thresholds else 0.0
    if method == "maxratio":
        return sim_maxratio(a, b, thresholds)
    if method == "ged":
        s = sim_ged(a, b, importance)
        return s if s >= thresholds else 0.0
    if method == "transition":
        nodes = sorted(a | b)
        va = np.array([1.0 / len(a) if n in a else 0.0 for n in nodes])
        vb = np.array([1.0 / len(b) if n in b else 0.0 for n in nodes])
        return sim_transition_vectors(va, vb, thresholds)
    if method == "icem":
        kind, s1, _ = sim_icem(a, b, *thresholds)
        return s1 if kind != "dissimilar" else 0.0
    if method == "overlap":
        s = sim_overlap(a, b)
        return s if s >= thresholds else 0.0
    raise ValueError(f"unknown tracking method {method!r}; valid: {', '.join(TRACKING_METHODS)}")


def track_communities(
    partitions: list[dict],
    method: str = "jaccard",
    thresholds=None,
    importance: list[dict] | None = None,
) -> list[MatchEvent]:
    """Match communities between consecutive snapshots and classify events.

    `partitions` holds one node->community mapping per snapshot. `importance`
    optionally supplies per-snapshot node centralities for the GED method.
    """
    if len(partitions) < 2:
        raise ValueError("need at least 2 snapshots to track")
    if method not in TRACKING_METHODS:
        raise ValueError(f"unknown tracking method {method!r}; valid: {', '.join(TRACKING_METHODS)}")
    if thresholds is None:
        thresholds = DEFAULT_THRESHOLDS[method]
    events: list[MatchEvent] = []
    for i in range(len(partitions) - 1):
        src = _communities(partitions[i])
        dst = _communities(partitions[i + 1])
        imp = importance[i] if importance else None
        matches: dict[tuple, float] = {}
        for ca, a in sorted(src.items(), key=lambda kv: str(kv[0])):
            for cb, b in sorted(dst.items(), key=lambda kv: str(kv[0])):
                s = _pair_score(method, a, b, thresholds, imp)
                if s > 0:
                    matches[(ca, cb)] = s
        out_deg = {ca: 0 for ca in src}
        in_deg = {cb: 0 for cb in dst}
        for ca, cb in matches:
            out_deg[ca] += 1
            in_deg[cb] += 1
        for (ca, cb), s in sorted(matches.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1]))):
            if out_deg[ca] > 1:
                kind = "split"
            elif in_deg[cb] > 1:
                kind = "merge"
            else:
                kind = "continue"
            events.append(MatchEvent(i, ca, i + 1, cb, s, kind))
        for ca in sorted(src, key=str):
            if out_deg[ca] == 0:
                events.append(MatchEvent(i, ca, i + 1, None, 0.0, "death"))
        for cb in sorted(dst, key=str):
            if in_deg[cb] == 0:
                events.append(MatchEvent(i, None, i + 1, cb, 0.0, "birth"))
    return events


def write_events_csv(events: list[MatchEvent], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("snapshot_i,community_i,snapshot_j,community_j,score,event\n")
        for e in events:
            ci = "" if e.community_i is None else e.community_i
            cj = "" if e.community_j is None else e.community_j
            fh.write(f"{e.snapshot_i},{ci},{e.snapshot_j},{cj},{e.score:.6f},{e.kind}\n")


# ---------------------------------------------------------------------------
# bottleneck propagation

@dataclass
class TransitionMatrix:
    src_levels: list[int]
    dst_levels: list[int]
    probabilities: np.ndarray  # (len(src_levels), len(dst_levels))
    n_total: int


def propagation_probability(
    levels_src: dict[int, set], levels_dst: dict[int, set], n_total: int
) -> TransitionMatrix:
    """P[k -> k'] = |bottlenecks at level k shared with level k'| / n_total."""
    if n_total <= 0:
        raise ValueError("total bottleneck count must be positive")
    src_levels = sorted(levels_src)
    dst_levels = sorted(levels_dst)
    probs = np.zeros((len(src_levels), len(dst_levels)))
    for i, k in enumerate(src_levels):
        for j, kp in enumerate(dst_levels):
            probs[i, j] = len(levels_src[k] & levels_dst[kp]) / n_total
    return TransitionMatrix(src_levels, dst_levels, probs, n_total)


def write_transition_csv(tm: TransitionMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("src_level,dst_level,probability\n")
        for i, k in enumerate(tm.src_levels):
            for j, kp in enumerate(tm.dst_levels):
                fh.write(f"{k},{kp},{tm.probabilities[i, j]:.6f}\n")
