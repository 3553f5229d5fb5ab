"""Flow ratio of ordered partitions and the quantities built on it.

Convention: the flow ratio rewards edges from cluster ``j`` to cluster
``j - 1``, so the highest index is the source end of the chain and index 0
the sink.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .digraph import WeightedDigraph
from .hermitian import root_of_unity

BRUTE_FORCE_MAX_VERTICES = 12
BRUTE_FORCE_MAX_K = 4
DICUT_MAX_VERTICES = 48
_TIE_TOL = 1e-12


@dataclass
class Partition:
    """Cluster index per vertex; ``-1`` marks an excluded (isolated) vertex."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if self.labels.size and (self.labels.min() < -1 or self.labels.max() >= self.k):
            raise ValueError(f"labels must lie in -1..{self.k - 1}")

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.labels == j)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels[self.labels >= 0], minlength=self.k)

    def validate(self, g: WeightedDigraph) -> None:
        """Check coverage of active vertices and that every cluster has volume."""
        if self.labels.size != g.n:
            raise ValueError(f"partition has {self.labels.size} labels for {g.n} vertices")
        if np.any(self.labels[g.active] < 0):
            raise ValueError("partition leaves an active vertex unassigned")
        vols = cluster_volumes(g, self)
        empty = np.flatnonzero(self.sizes() == 0)
        if empty.size:
            raise ValueError(f"cluster {int(empty[0])} is empty")
        if np.any(vols <= 0):
            raise ValueError(f"cluster {int(np.flatnonzero(vols <= 0)[0])} has zero volume")

    def relabel(self, mapping) -> "Partition":
        """Apply ``new = mapping[old]``; excluded vertices stay excluded."""
        mapping = np.asarray(mapping, dtype=np.int64)
        out = self.labels.copy()
        keep = out >= 0
        out[keep] = mapping[out[keep]]
        return Partition(out, self.k)


def cluster_volumes(g: WeightedDigraph, p: Partition) -> np.ndarray:
    keep = p.labels >= 0
    return np.bincount(p.labels[keep], weights=g.d_total[keep], minlength=p.k)


def cluster_cut_matrix(g: WeightedDigraph, p: Partition) -> np.ndarray:
    """``W[a, b] = w(S_a, S_b)``; the diagonal holds internal weight."""
    W = np.zeros((p.k, p.k))
    a, b = p.labels[g.src], p.labels[g.dst]
    keep = (a >= 0) & (b >= 0)
    np.add.at(W, (a[keep], b[keep]), g.weight[keep])
    return W


@dataclass
class FlowReport:
    phi: float
    per_cut: list  # (w(S_j, S_{j-1}), vol(S_j) + vol(S_{j-1})) for j = 1..k-1
    rayleigh_bound: float  # 1 - (4/k) * phi, an upper bound on y*Ly


def flow_ratio(g: WeightedDigraph, p: Partition) -> FlowReport:
    p.validate(g)
    W = cluster_cut_matrix(g, p)
    vol = cluster_volumes(g, p)
    per_cut = [(float(W[j, j - 1]), float(vol[j] + vol[j - 1])) for j in range(1, p.k)]
    phi = float(sum(c / v for c, v in per_cut))
    return FlowReport(phi=phi, per_cut=per_cut, rayleigh_bound=1.0 - 4.0 / p.k * phi)


def phi_from_summary(W: np.ndarray, vol: np.ndarray, order) -> float:
    """Flow ratio of clusters arranged as ``order[0], order[1], ...``."""
    order = np.asarray(order)
    hi, lo = order[1:], order[:-1]
    return float(np.sum(W[hi, lo] / (vol[hi] + vol[lo])))


# -- exhaustive maximisation -------------------------------------------------


def _enumerate_theta(g: WeightedDigraph, k: int, active: np.ndarray, chunk: int = 1 << 16):
    n_act = active.size
    pos = np.full(g.n, -1)
    pos[active] = np.arange(n_act)
    su, sv, w = pos[g.src], pos[g.dst], g.weight
    deg = g.d_total[active]
    powers = k ** np.arange(n_act - 1, -1, -1, dtype=np.int64)
    total = k**n_act
    best_val, best_idx = -math.inf, -1
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        lab = (idx[:, None] // powers[None, :]) % k  # lexicographic order
        onehot = lab[:, :, None] == np.arange(k)
        surj = onehot.any(axis=1).all(axis=1)
        if not surj.any():
            continue
        lab, onehot, idx = lab[surj], onehot[surj], idx[surj]
        vol = onehot.astype(float).transpose(0, 2, 1) @ deg  # (rows, k)
        lu, lv = lab[:, su], lab[:, sv]
        phi = np.zeros(lab.shape[0])
        for j in range(1, k):
            cut = ((lu == j) & (lv == j - 1)).astype(float) @ w
            phi += cut / (vol[:, j] + vol[:, j - 1])
        top = phi.max()
        if top > best_val + _TIE_TOL:
            best_val = float(top)
            best_idx = int(idx[np.flatnonzero(phi >= top - _TIE_TOL)[0]])
    labels = (best_idx // powers) % k
    return best_val, labels


def _dicut_branch_and_bound(g: WeightedDigraph, active: np.ndarray):
    """Exact k=2 maximiser. With two clusters the denominator is vol(V), so
    the flow ratio is a directed max-cut (edges from cluster 1 into 0)."""
    n_act = active.size
    pos = np.full(g.n, -1)
    pos[active] = np.arange(n_act)
    out_e = [[] for _ in range(n_act)]
    in_e = [[] for _ in range(n_act)]
    for u, v, w in zip(pos[g.src].tolist(), pos[g.dst].tolist(), g.weight.tolist()):
        out_e[u].append((v, w))
        in_e[v].append((u, w))
    total = float(g.weight.sum())
    denom = 2.0 * total

    def value(lab):
        return sum(w for u in range(n_act) for v, w in out_e[u] if lab[u] == 1 and lab[v] == 0)

    # incumbent: net exporters to the source side, then single-flip local search
    lab = [1 if g.d_out[a] > g.d_in[a] else 0 for a in active]
    if len(set(lab)) < 2:
        lab[-1] = 1 - lab[0]
    cur = value(lab)
    improved = True
    while improved:
        improved = False
        for i in range(n_act):
            lab[i] ^= 1
            val = value(lab)
            if val > cur + _TIE_TOL and len(set(lab)) == 2:
                cur, improved = val, True
            else:
                lab[i] ^= 1
    best = {"val": cur, "lab": list(lab), "lex": False}

    assign = [-1] * n_act

    # An edge u -> v is lost once u is in cluster 0 or v in cluster 1, and cut
    # once u is in 1 and v in 0. Each edge is charged exactly once.
    def recurse(i, cut, lost, count1):
        bound = total - lost
        if best["lex"]:
            if bound <= best["val"] + _TIE_TOL:
                return
        elif bound < best["val"] - _TIE_TOL:
            return
        if i == n_act:
            if 0 < count1 < n_act and (
                cut > best["val"] + _TIE_TOL or (not best["lex"] and cut >= best["val"] - _TIE_TOL)
            ):
                best.update(val=cut, lab=list(assign), lex=True)
            return
        for label in (0, 1):
            assign[i] = label
            dc = dl = 0.0
            for v, w in out_e[i]:
                other = assign[v]
                if label == 0:
                    if other != 1:
                        dl += w
                elif other == 0:
                    dc += w
            for u, w in in_e[i]:
                other = assign[u]
                if label == 1:
                    if other != 0:
                        dl += w
                elif other == 1:
                    dc += w
            recurse(i + 1, cut + dc, lost + dl, count1 + label)
        assign[i] = -1

    recurse(0, 0.0, 0.0, 0)
    return best["val"] / denom, np.array(best["lab"], dtype=np.int64)


def theta_k_bruteforce(
    g: WeightedDigraph,
    k: int,
    max_vertices: int | None = None,
    max_k: int = BRUTE_FORCE_MAX_K,
) -> tuple[float, Partition]:
    """Exact maximum flow ratio over all k-way partitions of the active vertices.

    Ties go to the lexicographically smallest label vector. For ``k = 2`` an
    exact branch and bound is used, allowing larger graphs.
    """
    active = g.active
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > max_k:
        raise ValueError(f"brute force refused for k={k} > {max_k}")
    limit = max_vertices or (DICUT_MAX_VERTICES if k == 2 else BRUTE_FORCE_MAX_VERTICES)
    if active.size > limit:
        raise ValueError(f"brute force refused for {active.size} active vertices > {limit}")
    if active.size < k:
        raise ValueError("fewer active vertices than clusters")
    if k == 2:
        val, lab = _dicut_branch_and_bound(g, active)
    else:
        val, lab = _enumerate_theta(g, k, active)
    labels = np.full(g.n, -1, dtype=np.int64)
    labels[active] = lab
    return val, Partition(labels, k)


# -- indicator vector and eigengap parameter ---------------------------------


def indicator_vector_y(g: WeightedDigraph, p: Partition, k: int | None = None) -> np.ndarray:
    """Unit vector ``(1/sqrt(k)) * sum_j D^{1/2} chi_j / ||D^{1/2} chi_j||``.

    ``chi_j`` is ``omega**j`` on cluster ``j``. The result has full length
    ``g.n`` with zeros on excluded vertices.
    """
    k = p.k if k is None else k
    if k != p.k:
        raise ValueError("k does not match the partition")
    vol = cluster_volumes(g, p)
    if np.any(vol <= 0):
        raise ValueError("every cluster needs positive volume")
    root = root_of_unity(k)
    y = np.zeros(g.n, dtype=np.complex128)
    keep = p.labels >= 0
    lab = p.labels[keep]
    y[keep] = np.sqrt(g.d_total[keep]) * root.power(lab) / np.sqrt(vol[lab])
    return y / math.sqrt(k)


def rayleigh_closed_form(g: WeightedDigraph, p: Partition) -> float:
    """``y* L y`` from cluster-level cut weights and volumes alone.

    ``1 - (1/k) sum_{j,l} 2 w(S_j, S_l) cos(2 pi (l + 1 - j) / N) / sqrt(vol_j vol_l)``
    with ``N = ceil(2 pi k)``.
    """
    k = p.k
    order = root_of_unity(k).order
    W = cluster_cut_matrix(g, p)
    vol = cluster_volumes(g, p)
    j, l = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    terms = 2 * W * np.cos(2 * np.pi * (l + 1 - j) / order) / np.sqrt(np.outer(vol, vol))
    return float(1.0 - terms.sum() / k)


@dataclass
class GammaReport:
    theta_k: float
    lambda2: float
    gamma_k: float
    lambda1: float | None = None
    infinite: bool = False


def gamma_k(k: int, theta: float, lambda2: float, lambda1: float | None = None) -> GammaReport:
    """``lambda2 / (1 - (4/k) theta)``; flagged infinite when theta reaches k/4."""
    denom = 1.0 - 4.0 / k * theta
    if denom <= 0:
        return GammaReport(theta, lambda2, math.inf, lambda1, infinite=True)
    return GammaReport(theta, lambda2, lambda2 / denom, lambda1)


@dataclass
class StructureErrors:
    alpha: complex
    beta: complex
    y_error: float  # ||y - alpha f1||^2
    f_error: float  # ||f1 - beta y||^2


def structure_errors(f1: np.ndarray, y: np.ndarray) -> StructureErrors:
    """Projection coefficient ``alpha = <f1, y>`` and the two approximation errors."""
    alpha = complex(np.vdot(f1, y))
    if alpha == 0:
        raise ZeroDivisionError("f1 is orthogonal to y")
    beta = 1.0 / alpha
    return StructureErrors(
        alpha=alpha,
        beta=beta,
        y_error=float(np.linalg.norm(y - alpha * f1) ** 2),
        f_error=float(np.linalg.norm(f1 - beta * y) ** 2),
    )
