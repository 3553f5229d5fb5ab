"""Sparse weighted digraphs with degree, volume and cut queries."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

MERGE_POLICIES = ("reject", "net", "sum")
DENSE_LIMIT = 4096


class GraphError(ValueError):
    """Raised for malformed graph input."""


class WeightedDigraph:
    """Immutable weighted digraph.

    Edges are kept sorted by ``(src, dst)`` and mirrored into CSR (out) and
    CSC (in) form. Degrees are computed once at construction.

    Parameters
    ----------
    n : int
        Vertex count.
    src, dst, weight : array_like
        Edge arrays. Must already be free of self-loops, zero weights and
        duplicate ordered pairs; use :func:`from_edge_list` for raw input.
    """

    def __init__(self, n: int, src, dst, weight, *, self_loops_dropped: int = 0):
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        weight = np.asarray(weight, dtype=np.float64)
        order = np.lexsort((dst, src))
        self.n = int(n)
        self.src = src[order]
        self.dst = dst[order]
        self.weight = weight[order]
        for arr in (self.src, self.dst, self.weight):
            arr.setflags(write=False)
        self.self_loops_dropped = self_loops_dropped

        self.out_adj = sp.csr_matrix((self.weight, (self.src, self.dst)), shape=(self.n, self.n))
        self.in_adj = self.out_adj.tocsc()
        self.d_out = np.bincount(self.src, weights=self.weight, minlength=self.n).astype(np.float64)
        self.d_in = np.bincount(self.dst, weights=self.weight, minlength=self.n).astype(np.float64)
        self.d_total = self.d_in + self.d_out
        for arr in (self.d_out, self.d_in, self.d_total):
            arr.setflags(write=False)

    @property
    def m(self) -> int:
        return int(self.weight.size)

    @property
    def total_weight(self) -> float:
        return float(self.weight.sum())

    @property
    def isolated(self) -> np.ndarray:
        """Boolean mask of vertices with zero total degree."""
        return self.d_total == 0

    @property
    def active(self) -> np.ndarray:
        """Indices of vertices with positive total degree."""
        return np.flatnonzero(self.d_total > 0)

    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(u), int(v), float(w)) for u, v, w in zip(self.src, self.dst, self.weight)]

    def has_reciprocal_pairs(self) -> bool:
        fwd = set(zip(self.src.tolist(), self.dst.tolist()))
        return any((v, u) in fwd for u, v in fwd)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightedDigraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.weight, other.weight)
        )

    def __repr__(self) -> str:
        return f"WeightedDigraph(n={self.n}, m={self.m}, total_weight={self.total_weight:g})"


def from_edge_list(
    triples: Iterable[Sequence], n: int, merge_policy: str = "net"
) -> WeightedDigraph:
    """Build a graph from ``(u, v, weight)`` triples.

    Same-direction duplicates are summed under every policy. Reciprocal
    pairs are netted to the heavier direction (``net``), kept in both
    directions (``sum``) or rejected (``reject``). Self-loops are dropped and
    counted in ``self_loops_dropped``; zero-weight edges are dropped.
    """
    if merge_policy not in MERGE_POLICIES:
        raise GraphError(f"unknown merge policy {merge_policy!r}")
    rows = [tuple(t) for t in triples]
    if rows:
        src = np.array([r[0] for r in rows], dtype=np.int64)
        dst = np.array([r[1] for r in rows], dtype=np.int64)
        w = np.array([r[2] for r in rows], dtype=np.float64)
    else:
        src = dst = np.zeros(0, dtype=np.int64)
        w = np.zeros(0)
    return from_arrays(src, dst, w, n, merge_policy)


def from_arrays(src, dst, weight, n: int, merge_policy: str = "net") -> WeightedDigraph:
    """Array version of :func:`from_edge_list`."""
    if merge_policy not in MERGE_POLICIES:
        raise GraphError(f"unknown merge policy {merge_policy!r}")
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    w = np.asarray(weight, dtype=np.float64)
    if n < 0:
        raise GraphError("vertex count must be nonnegative")
    if src.size and (src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n):
        raise GraphError(f"vertex id out of range for n={n}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise GraphError("edge weights must be finite and nonnegative")

    loops = src == dst
    n_loops = int(loops.sum())
    src, dst, w = src[~loops], dst[~loops], w[~loops]

    # sum same-direction duplicates
    key = src * n + dst
    uniq, inv = np.unique(key, return_inverse=True)
    w = np.bincount(inv, weights=w, minlength=uniq.size) if uniq.size else np.zeros(0)
    base = max(n, 1)
    src, dst = uniq // base, uniq % base
    keep = w > 0
    src, dst, w = src[keep], dst[keep], w[keep]

    if merge_policy != "sum" and src.size:
        lookup = dict(zip(zip(src.tolist(), dst.tolist()), w.tolist()))
        recip = [(u, v) for (u, v) in lookup if (v, u) in lookup]
        if recip and merge_policy == "reject":
            u, v = recip[0]
            raise GraphError(f"reciprocal edges between {u} and {v} under 'reject' policy")
        if recip:
            out = []
            for (u, v), wt in lookup.items():
                back = lookup.get((v, u), 0.0)
                if wt > back:
                    out.append((u, v, wt - back))
            src = np.array([e[0] for e in out], dtype=np.int64)
            dst = np.array([e[1] for e in out], dtype=np.int64)
            w = np.array([e[2] for e in out], dtype=np.float64)
    return WeightedDigraph(n, src, dst, w, self_loops_dropped=n_loops)


def vertex_set(g: WeightedDigraph, s) -> np.ndarray:
    """Normalise a vertex set (id list or boolean mask) to sorted unique ids."""
    arr = np.asarray(s)
    if arr.dtype == bool:
        if arr.shape != (g.n,):
            raise GraphError("boolean mask must have one entry per vertex")
        return np.flatnonzero(arr)
    arr = arr.astype(np.int64).ravel()
    if arr.size and (arr.min() < 0 or arr.max() >= g.n):
        raise GraphError("vertex id out of range")
    out = np.unique(arr)
    if out.size != arr.size:
        raise GraphError("duplicate vertex ids in set")
    return out


def volume(g: WeightedDigraph, s) -> float:
    """Sum of total degrees over ``s``."""
    return float(g.d_total[vertex_set(g, s)].sum())


def cut_weight(g: WeightedDigraph, s, t) -> float:
    """Total weight of edges leaving ``s`` and entering ``t``."""
    s_idx, t_idx = vertex_set(g, s), vertex_set(g, t)
    if np.intersect1d(s_idx, t_idx).size:
        raise GraphError("cut_weight requires disjoint vertex sets")
    in_s = np.zeros(g.n, dtype=bool)
    in_t = np.zeros(g.n, dtype=bool)
    in_s[s_idx] = True
    in_t[t_idx] = True
    mask = in_s[g.src] & in_t[g.dst]
    return float(g.weight[mask].sum())


def dense_adjacency(g: WeightedDigraph, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Return the real n-by-n matrix with ``M[u, v] = w(u, v)``."""
    if g.n > limit:
        raise GraphError(f"dense adjacency refused for n={g.n} > {limit}")
    return g.out_adj.toarray()
