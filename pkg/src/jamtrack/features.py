"""Node-feature similarity matrices and their entropy-weighted fusion.

Five per-snapshot similarity matrices are supported: segment curvature (K),
node degree within the snapshot subgraph (D), spatial proximity of segment
centroids (S), cosine similarity of full-day TSI magnitude spectra (F), and
cosine similarity of the raw TSI day series (T). A variant tag such as
"KDSF" selects which matrices enter the fusion; entropy weights make
low-entropy (discriminative) features count more.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .congestion import CongestionGraphSequence, CongestionSubgraph
from .errors import FormatError
from .ingest import RoadNetwork, TsiMatrix

FEATURE_TAGS = ("K", "D", "S", "F", "T")
VARIANT_TAGS = ("KS", "KD", "DS", "KF", "SK", "DF", "KDS", "KDF", "KSF", "DSF", "KDST", "KDSF")
DEFAULT_VARIANT = "KDSF"


def canonical_variant(tag: str) -> str:
    """Validate a variant tag; SK and KS name the same variant."""
    tag = tag.upper()
    if tag == "SK":
        tag = "KS"
    if tag not in VARIANT_TAGS:
        raise ValueError(f"unknown variant {tag!r}; valid: {', '.join(VARIANT_TAGS)}")
    return tag


@dataclass
class AdaptiveAdjacency:
    """Fused similarity matrix for one snapshot, with the weights that built it."""

    node_ids: list[str]
    matrix: np.ndarray        # (n, n), symmetric, values in [0, 1]
    weights: np.ndarray       # entropy weights of the active features, sums to 1
    variant: str              # e.g. KDSF
    bin_start: int = 0


def segment_curvature(polyline: np.ndarray) -> float:
    """Total absolute turning angle (radians) per meter of polyline length."""
    pts = np.asarray(polyline, dtype=float)
    if pts.shape[0] < 2:
        raise ValueError("polyline needs at least 2 points")
    deltas = np.diff(pts, axis=0)
    seg_len = np.hypot(deltas[:, 0], deltas[:, 1])
    total = seg_len.sum()
    if total <= 0:
        raise ValueError("polyline has zero length")
    if pts.shape[0] == 2:
        return 0.0
    headings = np.arctan2(deltas[:, 1], deltas[:, 0])
    turns = np.diff(headings)
    turns = (turns + np.pi) % (2 * np.pi) - np.pi  # wrap to (-pi, pi]
    return float(np.abs(turns).sum() / total)


def scalar_similarity(values, tag: str = "K") -> np.ndarray:
    """Min-max complement similarity for a scalar node feature: 1 - |df| / range."""
    v = np.asarray(values, dtype=float)
    spread = v.max() - v.min() if v.size else 0.0
    if v.size == 0:
        return np.zeros((0, 0))
    if spread == 0:
        return np.ones((v.size, v.size))
    sim = 1.0 - np.abs(v[:, None] - v[None, :]) / spread
    np.fill_diagonal(sim, 1.0)
    return sim


def spatial_similarity(centroids) -> np.ndarray:
    """1 - d/d_max over pairwise Euclidean distances; all co-located -> all ones."""
    c = np.asarray(centroids, dtype=float)
    if c.size == 0:
        return np.zeros((0, 0))
    diff = c[:, None, :] - c[None, :, :]
    d = np.sqrt((diff**2).sum(axis=-1))
    dmax = d.max()
    if dmax == 0:
        return np.ones((c.shape[0], c.shape[0]))
    sim = 1.0 - d / dmax
    np.fill_diagonal(sim, 1.0)
    return sim


def _clamped_cosine(rows: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity clamped to [0, 1]; zero rows are similar only to themselves."""
    norms = np.linalg.norm(rows, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = rows / safe[:, None]
    sim = np.clip(unit @ unit.T, 0.0, 1.0)
    zero = norms == 0
    sim[zero, :] = 0.0
    sim[:, zero] = 0.0
    np.fill_diagonal(sim, 1.0)
    return sim


def fft_magnitudes(series: np.ndarray) -> np.ndarray:
    """Magnitude spectrum of each row with the DC bin removed (length floor(L/2))."""
    arr = np.atleast_2d(np.asarray(series, dtype=float))
    return np.abs(np.fft.rfft(arr, axis=1))[:, 1:]


def fft_similarity(series) -> np.ndarray:
    """Cosine similarity of DC-free magnitude spectra; shift-invariant by construction."""
    arr = np.atleast_2d(np.asarray(series, dtype=float))
    if arr.shape[1] < 4:
        raise FormatError("TSI series must have length >= 4")
    return _clamped_cosine(fft_magnitudes(arr))


def tsi_similarity(series) -> np.ndarray:
    """Cosine similarity of the raw day series, clamped to [0, 1]."""
    arr = np.atleast_2d(np.asarray(series, dtype=float))
    if arr.shape[1] < 4:
        raise FormatError("TSI series must have length >= 4")
    return _clamped_cosine(arr)


def entropy_weights(matrices: list[np.ndarray]) -> np.ndarray:
    """Entropy weights over the strict upper triangles of the candidate matrices.

    A constant (maximum-entropy) matrix gets weight 0; if every matrix is
    constant the weights fall back to uniform.
    """
    if len(matrices) < 2:
        raise ValueError("need at least 2 matrices")
    shape = matrices[0].shape
    for m in matrices[1:]:
        if m.shape != shape:
            raise FormatError("similarity matrices must share one shape")
    n = shape[0]
    iu = np.triu_indices(n, k=1)
    n_entries = len(iu[0])
    ones = np.full(len(matrices), 1.0)
    if n_entries <= 1:
        return ones / ones.sum()
    entropies = []
    for m in matrices:
        x = m[iu]
        total = x.sum()
        if total <= 0:
            entropies.append(1.0)
            continue
        p = x / total
        nz = p > 0
        e = -(p[nz] * np.log(p[nz])).sum() / np.log(n_entries)
        entropies.append(min(e, 1.0))
    gains = 1.0 - np.asarray(entropies)
    if gains.sum() <= 0:
        return ones / ones.sum()
    return gains / gains.sum()


def fuse(matrices: list[np.ndarray], weights, variant: str, node_ids=None, bin_start: int = 0) -> AdaptiveAdjacency:
    """Convex combination M = sum_i w_i * F_i."""
    w = np.asarray(weights, dtype=float)
    if len(matrices) != len(w):
        raise FormatError("one weight per matrix required")
    shape = matrices[0].shape
    for m in matrices[1:]:
        if m.shape != shape:
            raise FormatError("similarity matrices must share one shape")
    fused = np.zeros(shape)
    for wi, m in zip(w, matrices):
        fused += wi * m
    ids = list(node_ids) if node_ids is not None else [str(i) for i in range(shape[0])]
    return AdaptiveAdjacency(node_ids=ids, matrix=fused, weights=w, variant=variant, bin_start=bin_start)


def snapshot_features(g: CongestionSubgraph, network: RoadNetwork, tsi: TsiMatrix) -> dict[str, np.ndarray]:
    """Raw per-node features for one snapshot: curvature, degree, centroid, day TSI series."""
    seg_index = {s: i for i, s in enumerate(tsi.segment_ids)}
    degree = {u: 0 for u in g.nodes}
    for u, v in g.edges:
        degree[u] += 1
        degree[v] += 1
    curvature = np.array([segment_curvature(network.polylines[u]) for u in g.nodes])
    degrees = np.array([degree[u] for u in g.nodes], dtype=float)
    centroids = np.array([network.centroid(u) for u in g.nodes]) if g.nodes else np.zeros((0, 2))
    series = np.array(
        [tsi.day_series(seg_index[u], g.bin_index) for u in g.nodes]
    ) if g.nodes else np.zeros((0, tsi.bins_per_day()))
    return {"curvature": curvature, "degree": degrees, "centroids": centroids, "series": series}


def _feature_matrix(letter: str, feats: dict[str, np.ndarray]) -> np.ndarray:
    if letter == "K":
        return scalar_similarity(feats["curvature"], "K")
    if letter == "D":
        return scalar_similarity(feats["degree"], "D")
    if letter == "S":
        return spatial_similarity(feats["centroids"])
    if letter == "F":
        return fft_similarity(feats["series"])
    if letter == "T":
        return tsi_similarity(feats["series"])
    raise ValueError(f"unknown feature letter {letter!r}")


def snapshot_adjacency(
    g: CongestionSubgraph, network: RoadNetwork, tsi: TsiMatrix, variant: str = DEFAULT_VARIANT
) -> AdaptiveAdjacency:
    """Similarity stack, entropy weights and fused matrix for one snapshot."""
    variant = canonical_variant(variant)
    feats = snapshot_features(g, network, tsi)
    mats = [_feature_matrix(letter, feats) for letter in variant]
    n = len(g.nodes)
    if n <= 1 or len(mats) < 2:
        weights = np.full(len(mats), 1.0 / len(mats))
    else:
        weights = entropy_weights(mats)
    return fuse(mats, weights, variant, node_ids=g.nodes, bin_start=g.bin_start)


def apply_edge_weights(g: CongestionSubgraph, adj: AdaptiveAdjacency) -> None:
    """Fill the subgraph's edge weights from the fused matrix."""
    index = {u: i for i, u in enumerate(adj.node_ids)}
    g.weights = np.array([adj.matrix[index[u], index[v]] for u, v in g.edges])


def build_adjacency_sequence(
    seq: CongestionGraphSequence,
    network: RoadNetwork,
    tsi: TsiMatrix,
    variant: str = DEFAULT_VARIANT,
) -> list[AdaptiveAdjacency]:
    """One fused adjacency per snapshot; also writes each subgraph's edge weights."""
    variant = canonical_variant(variant)
    out = []
    for g in seq:
        adj = snapshot_adjacency(g, network, tsi, variant)
        apply_edge_weights(g, adj)
        out.append(adj)
    return out


def neighborhood_overlap_weights(nodes: list, edges: list[tuple]) -> np.ndarray:
    """Jaccard overlap of the endpoints' neighbor sets, one value per edge.

    Topology-only stand-in for the fused feature similarity on graphs without
    segment attributes (synthetic benchmarks).
    """
    nbrs: dict = {u: set() for u in nodes}
    for u, v in edges:
        nbrs[u].add(v)
        nbrs[v].add(u)
    out = np.zeros(len(edges))
    for i, (u, v) in enumerate(edges):
        union = len(nbrs[u] | nbrs[v])
        out[i] = len(nbrs[u] & nbrs[v]) / union if union else 0.0
    return out


def write_matrix_csv(adj: AdaptiveAdjacency, path) -> None:
    """Square CSV with a header row/column of segment ids."""
    with open(path, "w", newline="") as fh:
        fh.write("segment_id," + ",".join(adj.node_ids) + "\n")
        for i, u in enumerate(adj.node_ids):
            fh.write(u + "," + ",".join(f"{x:.6f}" for x in adj.matrix[i]) + "\n")
