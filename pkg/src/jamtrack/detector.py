"""Scikit-learn style estimator wrapping the local-dominance community search."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClusterMixin

from .local_search import (
    ValuedGraph,
    attribute_values,
    build_pointer_dag,
    find_local_leaders,
    lbfs_link_leaders,
    modularity_sweep,
)


def validate_adjacency(X) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Check a weighted adjacency matrix and return its edge list.

    Accepts a dense array or scipy sparse matrix; requires a square, symmetric,
    nonnegative matrix. The diagonal is ignored. Returns (eu, ev, w, n) over
    the strictly-positive upper triangle.
    """
    if sp.issparse(X):
        A = sp.coo_matrix(X)
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"adjacency must be square, got {A.shape}")
        if (abs(A - A.T) > 1e-12).nnz:
            raise ValueError("adjacency must be symmetric")
        if A.nnz and A.data.min() < 0:
            raise ValueError("adjacency weights must be nonnegative")
        upper = (A.row < A.col) & (A.data > 0)
        return A.row[upper], A.col[upper], A.data[upper], A.shape[0]
    A = np.asarray(X, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"adjacency must be square, got {A.shape}")
    if not np.allclose(A, A.T, atol=1e-12):
        raise ValueError("adjacency must be symmetric")
    if A.size and A.min() < 0:
        raise ValueError("adjacency weights must be nonnegative")
    eu, ev = np.where(np.triu(A, k=1) > 0)
    return eu, ev, A[eu, ev], A.shape[0]


class LocalDominanceCommunities(BaseEstimator, ClusterMixin):
    """Graph clustering by local dominance with a modularity-selected center count.

    Parameters
    ----------
    k_max : upper bound of the center-count sweep.
    candidate_ks : explicit center counts to try (overrides the 1..k_max grid).
    level_count : number of severity levels assigned to centers.

    Attributes (after fit)
    ----------------------
    labels_ : community label per node (the center's node index).
    centers_ : selected center node indices.
    best_k_ : center count with the best modularity.
    modularity_ : best modularity (None for zero-weight graphs).
    leader_values_ : node value (weighted degree) per node.
    levels_ : center index -> severity level (1 = most severe).
    """

    def __init__(self, k_max: int = 150, candidate_ks=None, level_count: int = 4):
        self.k_max = k_max
        self.candidate_ks = candidate_ks
        self.level_count = level_count

    def fit(self, X, y=None):
        eu, ev, w, n = validate_adjacency(X)
        vg = ValuedGraph.from_edges(list(range(n)), eu, ev, w)
        attribute_values(vg)
        build_pointer_dag(vg)
        leaders = find_local_leaders(vg)
        forest = lbfs_link_leaders(vg, leaders)
        result = modularity_sweep(
            vg,
            forest,
            candidate_ks=list(self.candidate_ks) if self.candidate_ks else None,
            k_max=self.k_max,
            level_count=self.level_count,
        )
        part = result.best_partition
        self.labels_ = part.labels.copy()
        self.centers_ = list(part.centers)
        self.best_k_ = result.best_k
        self.modularity_ = result.best_q
        self.leader_values_ = vg.x.copy()
        self.levels_ = dict(part.levels)
        self.sweep_ = dict(result.per_k)
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X, y).labels_
