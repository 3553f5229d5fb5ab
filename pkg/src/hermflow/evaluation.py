"""Clustering metrics, cross-snapshot drift and the two spectral baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import comb

from .cluster import Clustering, KMeansConfig, kmeans_points, order_clusters
from .digraph import DENSE_LIMIT, WeightedDigraph, dense_adjacency


def _labels(x) -> np.ndarray:
    if isinstance(x, Clustering):
        return x.labels
    if hasattr(x, "labels"):
        return np.asarray(x.labels)
    return np.asarray(x)


@dataclass
class ContingencyTable:
    counts: np.ndarray
    row_labels: np.ndarray
    col_labels: np.ndarray

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def contingency_table(a, b) -> ContingencyTable:
    a, b = _labels(a), _labels(b)
    if a.shape != b.shape:
        raise ValueError(f"labelings differ in size: {a.shape} vs {b.shape}")
    ra, ia = np.unique(a, return_inverse=True)
    rb, ib = np.unique(b, return_inverse=True)
    counts = np.zeros((ra.size, rb.size), dtype=np.int64)
    np.add.at(counts, (ia, ib), 1)
    return ContingencyTable(counts, ra, rb)


def adjusted_rand_index(a, b) -> float:
    """Hubert-Arabie adjusted Rand index of two labelings of the same items."""
    t = contingency_table(a, b)
    n = t.total
    if n < 2:
        return 1.0
    sum_ij = float(comb(t.counts, 2).sum())
    sum_a = float(comb(t.row_sums, 2).sum())
    sum_b = float(comb(t.col_sums, 2).sum())
    expected = sum_a * sum_b / comb(n, 2)
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        # both trivial (single cluster or all singletons on both sides)
        return 1.0 if sum_ij == expected else 0.0
    return (sum_ij - expected) / (max_index - expected)


# -- matching ------------------------------------------------------------------


@dataclass
class MatchingResult:
    permutation: dict  # cluster of a -> cluster of b
    total_symmetric_difference: float
    per_cluster: dict  # cluster of a -> symmetric difference with its match


def _weights(n, weight: str, g: WeightedDigraph | None):
    if weight == "count":
        return np.ones(n)
    if weight == "volume":
        if g is None:
            raise ValueError("volume weighting needs the graph")
        return np.asarray(g.d_total, dtype=float)
    raise ValueError(f"unknown weight mode {weight!r}")


def symmetric_difference_matrix(a, b, w) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``D[i, j]`` = weight of ``A_i xor B_j`` over clusters with label >= 0."""
    a, b = _labels(a), _labels(b)
    keep = (a >= 0) | (b >= 0)
    ra = np.unique(a[(a >= 0)])
    rb = np.unique(b[(b >= 0)])
    inter = np.zeros((ra.size, rb.size))
    ia = np.searchsorted(ra, a)
    ib = np.searchsorted(rb, b)
    both = keep & (a >= 0) & (b >= 0)
    np.add.at(inter, (ia[both], ib[both]), w[both])
    size_a = np.array([w[a == x].sum() for x in ra])
    size_b = np.array([w[b == x].sum() for x in rb])
    D = size_a[:, None] + size_b[None, :] - 2 * inter
    return D, ra, rb


def _optimal_assignment(a, b, w):
    """Exact minimum total symmetric difference over partial bijections.

    The disagreement matrix is padded to square with dummy clusters; pairing a
    real cluster with a dummy costs its full weight, so choosing which clusters
    stay unmatched is part of the optimisation.
    Returns ``(pairs, per_pair, total, ra, rb)`` with ``pairs`` as index pairs.
    """
    D, ra, rb = symmetric_difference_matrix(a, b, w)
    size_a = np.array([w[a == x].sum() for x in ra])
    size_b = np.array([w[b == x].sum() for x in rb])
    m = max(ra.size, rb.size)
    P = np.zeros((m, m))
    P[: ra.size, : rb.size] = D
    P[: ra.size, rb.size :] = size_a[:, None]
    P[ra.size :, : rb.size] = size_b[None, :]
    rows, cols = linear_sum_assignment(P)
    real = (rows < ra.size) & (cols < rb.size)
    pairs = list(zip(rows[real].tolist(), cols[real].tolist()))
    return pairs, [float(D[i, j]) for i, j in pairs], float(P[rows, cols].sum()), ra, rb


def best_matching(a, b, weight: str = "count", g: WeightedDigraph | None = None) -> MatchingResult:
    """Bijection between clusters minimising the total symmetric difference.

    Unmatched clusters (when the cluster counts differ) count in full.
    """
    la, lb = _labels(a), _labels(b)
    if la.shape != lb.shape:
        raise ValueError("labelings differ in size")
    w = _weights(la.size, weight, g)
    pairs, per_pair, total, ra, rb = _optimal_assignment(la, lb, w)
    perm = {int(ra[i]): int(rb[j]) for i, j in pairs}
    per = {int(ra[i]): d for (i, _), d in zip(pairs, per_pair)}
    return MatchingResult(permutation=perm, total_symmetric_difference=total, per_cluster=per)


def _as_mapping(snap) -> Mapping:
    if isinstance(snap, Mapping):
        return snap
    return dict(enumerate(_labels(snap).tolist()))


def drift_series(
    snapshots: Sequence, weight_mode: str = "count", weights: Sequence | None = None
) -> list[float]:
    """Best-matching symmetric difference between consecutive snapshots.

    Each snapshot maps a vertex key (e.g. a country code) to a cluster label;
    a clustering or plain label array is keyed by vertex index. Keys missing
    from either snapshot of a pair, or labelled ``-1``, are left out of that
    comparison. ``weights`` supplies per-snapshot vertex weights for
    ``weight_mode="volume"``.
    """
    if len(snapshots) < 2:
        raise ValueError("drift needs at least two snapshots")
    snapshots = [_as_mapping(s) for s in snapshots]
    if weights is not None:
        weights = [_as_mapping(w) for w in weights]
    out = []
    for i in range(len(snapshots) - 1):
        s0, s1 = snapshots[i], snapshots[i + 1]
        keys = sorted(
            key for key in set(s0) & set(s1) if s0[key] is not None and s1[key] is not None
            and s0[key] >= 0 and s1[key] >= 0
        )
        a = np.array([s0[key] for key in keys], dtype=np.int64)
        b = np.array([s1[key] for key in keys], dtype=np.int64)
        if weight_mode == "count":
            w = np.ones(len(keys))
        elif weight_mode == "volume":
            if weights is None:
                raise ValueError("volume mode needs per-snapshot weights")
            w = np.array([0.5 * (weights[i][key] + weights[i + 1][key]) for key in keys])
        else:
            raise ValueError(f"unknown weight mode {weight_mode!r}")
        out.append(_optimal_assignment(a, b, w)[2])
    return out


# -- baselines -------------------------------------------------------------------


def _finish(g: WeightedDigraph, k: int, rows: np.ndarray, active: np.ndarray, cfg: KMeansConfig, name):
    labels, C, cost, init_costs = kmeans_points(rows, np.ones(rows.shape[0]), k, cfg)
    full = np.full(g.n, -1, dtype=np.int64)
    full[active] = labels
    c = Clustering(
        labels=full,
        k=k,
        centers=C,
        cost=cost,
        ordering=np.arange(k),
        raw_labels=full.copy(),
        init_costs=init_costs,
        diagnostics={"method": name, "k": k, "seed": cfg.seed},
    )
    return order_clusters(g, c)


def dd_sym_baseline(
    g: WeightedDigraph, k: int, cfg: KMeansConfig = KMeansConfig(), limit: int = DENSE_LIMIT
) -> Clustering:
    """Top-k eigenvectors of ``D^{-1} (M^T M + M M^T)`` fed to plain k-means."""
    M = dense_adjacency(g, limit)
    A = M.T @ M + M @ M.T
    deg = A.sum(axis=1)
    active = np.flatnonzero(deg > 0)
    A = A[np.ix_(active, active)]
    inv_sqrt = 1.0 / np.sqrt(deg[active])
    S = inv_sqrt[:, None] * A * inv_sqrt[None, :]
    vals, vecs = np.linalg.eigh(S)
    top = vecs[:, ::-1][:, :k]
    rows = inv_sqrt[:, None] * top  # eigenvectors of the random-walk matrix
    return _finish(g, k, rows, active, cfg, "ddsym")


def herm_rw_baseline(
    g: WeightedDigraph, k: int, cfg: KMeansConfig = KMeansConfig(), limit: int = DENSE_LIMIT
) -> Clustering:
    """Hermitian matrix ``i*M - i*M^T``; top ``ceil(k/2)`` eigenvectors by |eigenvalue|."""
    M = dense_adjacency(g, limit)
    H = 1j * M - 1j * M.T
    deg = g.d_total
    active = np.flatnonzero(deg > 0)
    H = H[np.ix_(active, active)]
    inv_sqrt = 1.0 / np.sqrt(deg[active])
    S = inv_sqrt[:, None] * H * inv_sqrt[None, :]
    vals, vecs = np.linalg.eigh(S)
    m = math.ceil(k / 2)
    idx = np.argsort(-np.abs(vals), kind="stable")[:m]
    V = inv_sqrt[:, None] * vecs[:, idx]
    rows = np.column_stack([V.real, V.imag])
    return _finish(g, k, rows, active, cfg, "hermrw")
