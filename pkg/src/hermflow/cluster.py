"""Spectral embedding, degree-weighted k-means and flow-chain ordering."""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .digraph import WeightedDigraph
from .eigensolver import EigenPair, SolverConfig, bottom_eigenpair, second_eigenvalue
from .flow import Partition, cluster_cut_matrix, cluster_volumes, phi_from_summary
from .hermitian import HermitianLaplacian, root_of_unity

log = logging.getLogger(__name__)

EXHAUSTIVE_ORDER_MAX_K = 8
MAX_RESEEDS = 3


class ClusteringError(ValueError):
    pass


@dataclass
class Embedding:
    points: np.ndarray  # complex, one per active vertex
    degrees: np.ndarray
    active: np.ndarray
    excluded: np.ndarray
    n: int


@dataclass(frozen=True)
class KMeansConfig:
    restarts: int = 16
    max_iters: int = 100
    seed: int = 0
    tolerance: float = 1e-10

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")


@dataclass
class Clustering:
    """Labels are full length with ``-1`` on excluded vertices.

    ``ordering[j]`` is the k-means cluster placed at chain position ``j``;
    ``raw_labels`` keeps the k-means numbering.
    """

    labels: np.ndarray
    k: int
    centers: np.ndarray
    cost: float
    ordering: np.ndarray
    raw_labels: np.ndarray
    init_costs: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def partition(self) -> Partition:
        return Partition(self.labels, self.k)


def spectral_embedding(g: WeightedDigraph, f1: EigenPair | np.ndarray) -> Embedding:
    """``F(v) = f1(v) / sqrt(d_v)`` on active vertices."""
    vec = f1.vector if isinstance(f1, EigenPair) else np.asarray(f1)
    if vec.shape != (g.n,):
        raise ValueError(f"eigenvector length {vec.shape} does not match n={g.n}")
    active = g.active
    deg = g.d_total[active]
    return Embedding(
        points=vec[active] / np.sqrt(deg),
        degrees=deg,
        active=active,
        excluded=np.flatnonzero(g.isolated),
        n=g.n,
    )


# -- k-means -------------------------------------------------------------------


def _sq_dists(X, C):
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def _kmeanspp(X, w, k, rng):
    n = X.shape[0]
    first = rng.choice(n, p=w / w.sum())
    centers = [X[first]]
    d2 = ((X - X[first]) ** 2).sum(axis=1)
    for _ in range(1, k):
        score = w * d2
        idx = rng.choice(n, p=score / score.sum())
        centers.append(X[idx])
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _weighted_means(X, w, labels, k):
    wsum = np.bincount(labels, weights=w, minlength=k)
    C = np.stack([np.bincount(labels, weights=w * X[:, d], minlength=k) for d in range(X.shape[1])], 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        C = C / wsum[:, None]
    return C, wsum


def _cost(X, w, labels, C):
    return float(np.sum(w * ((X - C[labels]) ** 2).sum(axis=1)))


def _lloyd(X, w, C, k, cfg: KMeansConfig):
    """Returns (labels, centers, cost) or None when re-seeding gives up."""
    reseeds = 0
    for _ in range(cfg.max_iters):
        labels = np.argmin(_sq_dists(X, C), axis=1)
        newC, wsum = _weighted_means(X, w, labels, k)
        empty = np.flatnonzero(wsum == 0)
        if empty.size:
            reseeds += 1
            if reseeds > MAX_RESEEDS:
                return None
            spread = w * ((X - C[labels]) ** 2).sum(axis=1)
            for j in empty:
                far = int(np.argmax(spread))
                newC[j] = X[far]
                spread[far] = -1.0
            C = newC
            continue
        shift = float(np.max(np.abs(newC - C)))
        C = newC
        if shift <= cfg.tolerance:
            break
    labels = np.argmin(_sq_dists(X, C), axis=1)
    C, wsum = _weighted_means(X, w, labels, k)
    if np.any(wsum == 0):
        return None
    return labels, C, _cost(X, w, labels, C)


def kmeans_points(X: np.ndarray, weights: np.ndarray, k: int, cfg: KMeansConfig = KMeansConfig()):
    """Weighted k-means on real points ``X`` (n, d): best of seeded k-means++ restarts.

    Returns ``(labels, centers, cost, init_costs)``.
    """
    X = np.asarray(X, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if X.shape[0] == 0 or np.unique(X, axis=0).shape[0] < k:
        raise ClusteringError(f"need at least k={k} distinct points")
    best = None
    init_costs = []
    ss = np.random.SeedSequence(cfg.seed)
    for child in ss.spawn(cfg.restarts):
        rng = np.random.default_rng(child)
        out = None
        for _attempt in range(MAX_RESEEDS + 1):
            C0 = _kmeanspp(X, w, k, rng)
            out = _lloyd(X, w, C0, k, cfg)
            if out is not None:
                break
        if out is None:
            continue
        lab0 = np.argmin(_sq_dists(X, C0), axis=1)
        init_costs.append(_cost(X, w, lab0, C0))
        if best is None or out[2] < best[2]:
            best = out
    if best is None:
        raise ClusteringError("k-means produced an empty cluster on every restart")
    labels, C, cost = best
    return labels, C, cost, init_costs


def weighted_kmeans(emb: Embedding, k: int, cfg: KMeansConfig = KMeansConfig()) -> Clustering:
    """Degree-weighted k-means of the embedded points in the plane."""
    X = np.column_stack([emb.points.real, emb.points.imag])
    labels, C, cost, init_costs = kmeans_points(X, emb.degrees, k, cfg)
    full = np.full(emb.n, -1, dtype=np.int64)
    full[emb.active] = labels
    return Clustering(
        labels=full,
        k=k,
        centers=C[:, 0] + 1j * C[:, 1],
        cost=cost,
        ordering=np.arange(k),
        raw_labels=full.copy(),
        init_costs=init_costs,
    )


# -- ordering ------------------------------------------------------------------


def best_order(W: np.ndarray, vol: np.ndarray) -> np.ndarray:
    """Cluster arrangement maximising the flow ratio (lexicographic tie-break)."""
    k = W.shape[0]
    if k == 1:
        return np.zeros(1, dtype=np.int64)
    if k <= EXHAUSTIVE_ORDER_MAX_K:
        perms = np.array(list(itertools.permutations(range(k))), dtype=np.int64)
        hi, lo = perms[:, 1:], perms[:, :-1]
        phi = (W[hi, lo] / (vol[hi] + vol[lo])).sum(axis=1)
        top = phi.max()
        return perms[np.flatnonzero(phi >= top - 1e-12)[0]]
    # greedy chain extension for large k
    gain = W.T / (vol[:, None] + vol[None, :])  # gain[lo, hi] for hi placed right after lo
    np.fill_diagonal(gain, -np.inf)
    lo, hi = np.unravel_index(int(np.argmax(gain)), gain.shape)
    chain = [int(lo), int(hi)]
    left = set(range(k)) - set(chain)
    while left:
        cand = sorted(left)
        up = [(gain[chain[-1], c], c) for c in cand]
        down = [(gain[c, chain[0]], c) for c in cand]
        bu, bd = max(up, key=lambda t: (t[0], -t[1])), max(down, key=lambda t: (t[0], -t[1]))
        if bu[0] >= bd[0]:
            chain.append(bu[1])
            left.discard(bu[1])
        else:
            chain.insert(0, bd[1])
            left.discard(bd[1])
    return np.array(chain, dtype=np.int64)


def order_clusters(g: WeightedDigraph, c: Clustering) -> Clustering:
    """Relabel clusters so index order maximises the flow ratio."""
    raw = Partition(c.raw_labels, c.k)
    W = cluster_cut_matrix(g, raw)
    vol = cluster_volumes(g, raw)
    order = best_order(W, vol)
    mapping = np.empty(c.k, dtype=np.int64)
    mapping[order] = np.arange(c.k)
    labels = raw.relabel(mapping).labels
    diag = dict(c.diagnostics)
    diag["phi"] = phi_from_summary(W, vol, order)
    return Clustering(
        labels=labels,
        k=c.k,
        centers=c.centers[order],
        cost=c.cost,
        ordering=order,
        raw_labels=c.raw_labels,
        init_costs=c.init_costs,
        diagnostics=diag,
    )


# -- pipeline --------------------------------------------------------------------


def simple_herm(
    g: WeightedDigraph,
    k: int,
    solver_cfg: SolverConfig = SolverConfig(),
    kmeans_cfg: KMeansConfig = KMeansConfig(),
    with_lambda2: bool = True,
) -> Clustering:
    """Bottom eigenvector -> embedding -> weighted k-means -> flow ordering."""
    if g.active.size < k:
        raise ClusteringError(f"graph has {g.active.size} non-isolated vertices, fewer than k={k}")
    timings = {}
    t0 = time.perf_counter()
    op = HermitianLaplacian(g, k)
    f1 = bottom_eigenpair(op, solver_cfg)
    timings["eigensolver"] = time.perf_counter() - t0
    diag = {
        "lambda1": f1.value,
        "residual1": f1.residual,
        "iterations1": f1.iterations,
        "k": k,
        "seed": kmeans_cfg.seed,
        "solver_seed": solver_cfg.seed,
        "isolated": int(g.isolated.sum()),
    }
    if with_lambda2:
        t = time.perf_counter()
        diag["lambda2"] = second_eigenvalue(op, f1, solver_cfg)
        timings["lambda2"] = time.perf_counter() - t
    t = time.perf_counter()
    emb = spectral_embedding(g, f1)
    c = weighted_kmeans(emb, k, kmeans_cfg)
    timings["kmeans"] = time.perf_counter() - t
    t = time.perf_counter()
    c = order_clusters(g, c)
    timings["ordering"] = time.perf_counter() - t
    c.diagnostics.update(diag)
    c.diagnostics["cost"] = c.cost
    c.diagnostics["timings"] = timings
    c.diagnostics["eigenvector"] = f1
    log.info("SimpleHerm k=%d lambda1=%.6g phi=%.6g cost=%.6g", k, f1.value, c.diagnostics["phi"], c.cost)
    return c


# -- analysis helpers --------------------------------------------------------------


def approximate_centers(g: WeightedDigraph, p: Partition, beta: complex) -> np.ndarray:
    """``(beta / sqrt(k)) * omega**j / sqrt(vol(S_j))`` for each cluster ``j``."""
    vol = cluster_volumes(g, p)
    if np.any(vol <= 0):
        raise ValueError("every cluster needs positive volume")
    root = root_of_unity(p.k)
    j = np.arange(p.k)
    return beta / math.sqrt(p.k) * root.power(j) / np.sqrt(vol)


def center_cost_identity(g: WeightedDigraph, p: Partition, f1: np.ndarray, y: np.ndarray):
    """Both sides of ``sum_j sum_{u in S_j} d_u |F(u) - p_j|^2 = ||f1 - beta y||^2``.

    ``beta = 1 / <f1, y>``. Returns ``(lhs, rhs)``.
    """
    f1 = np.asarray(f1)
    alpha = np.vdot(f1, y)
    if alpha == 0:
        raise ZeroDivisionError("f1 is orthogonal to y")
    beta = 1.0 / alpha
    centers = approximate_centers(g, p, beta)
    keep = p.labels >= 0
    d = g.d_total[keep]
    F = f1[keep] / np.sqrt(d)
    lhs = float(np.sum(d * np.abs(F - centers[p.labels[keep]]) ** 2))
    rhs = float(np.linalg.norm(f1 - beta * y) ** 2)
    return lhs, rhs


def optimal_cost_bound(gamma: float) -> float:
    """Upper bound ``1 / (gamma - 1)`` on the optimal embedding cost; ``inf`` when ``gamma <= 1``."""
    return 1.0 / (gamma - 1.0) if gamma > 1.0 else math.inf
