"""Hermitian adjacency and the normalised Hermitian Laplacian as an operator.

For a cluster count ``k`` every edge ``u -> v`` of weight ``w`` contributes
``w * omega`` at ``A[u, v]`` and its conjugate at ``A[v, u]``, where ``omega``
is the primitive ``ceil(2*pi*k)``-th root of unity. The Laplacian is
``L = I - D^{-1/2} A D^{-1/2}`` with ``D`` the total-degree matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .digraph import DENSE_LIMIT, GraphError, WeightedDigraph


@dataclass(frozen=True)
class RootOfUnity:
    k: int
    order: int
    value: complex

    def power(self, j) -> np.ndarray | complex:
        """``omega ** j`` computed from the angle, not by repeated products."""
        return np.exp(2j * np.pi * np.asarray(j) / self.order)


def root_of_unity(k: int) -> RootOfUnity:
    if k < 2:
        raise ValueError(f"cluster count must be at least 2, got {k}")
    order = math.ceil(2 * math.pi * k)
    return RootOfUnity(k=k, order=order, value=complex(np.exp(2j * np.pi / order)))


class HermitianLaplacian:
    """Matrix-free normalised Hermitian Laplacian of a digraph.

    Isolated vertices are compacted out: :meth:`matvec` acts on vectors with
    one entry per *active* vertex (``graph.active``). Use :meth:`expand` and
    :meth:`compact` to move between compact and full-length vectors. With
    ``keep_isolated=True`` every vertex is kept and an isolated vertex gets an
    identity row, so a graph without edges has ``L = I``.
    """

    def __init__(self, graph: WeightedDigraph, k: int, keep_isolated: bool = False):
        self.graph = graph
        self.root = root_of_unity(k)
        self.k = k
        self.active = np.arange(graph.n) if keep_isolated else graph.active
        self.n_active = int(self.active.size)
        pos = np.full(graph.n, -1, dtype=np.int64)
        pos[self.active] = np.arange(self.n_active)
        self._pos = pos
        deg = graph.d_total[self.active]
        self.inv_sqrt_degree = np.divide(1.0, np.sqrt(deg), out=np.zeros_like(deg), where=deg > 0)

        u, v = pos[graph.src], pos[graph.dst]
        scale = graph.weight * self.inv_sqrt_degree[u] * self.inv_sqrt_degree[v]
        fwd = scale * self.root.value
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        vals = np.concatenate([fwd, np.conj(fwd)])
        # normalised Hermitian adjacency D^{-1/2} A D^{-1/2}; duplicates (sum policy) add up
        self._adj = sp.csr_matrix((vals, (rows, cols)), shape=(self.n_active, self.n_active))
        self._adj.sum_duplicates()

    def compact(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape == (self.n_active,):
            return x
        if x.shape == (self.graph.n,):
            return x[self.active]
        raise GraphError(f"vector of length {x.shape} does not match operator")

    def expand(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(self.graph.n, dtype=np.result_type(x, np.complex128))
        out[self.active] = x
        return out

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Return ``L @ x`` for a compact vector ``x``."""
        x = np.asarray(x)
        if x.shape != (self.n_active,):
            raise GraphError(f"expected vector of length {self.n_active}, got {x.shape}")
        return x - self._adj @ x

    def matmat(self, X: np.ndarray) -> np.ndarray:
        """``L @ X`` for a block of compact column vectors."""
        return X - self._adj @ X

    def shifted_matvec(self, x: np.ndarray) -> np.ndarray:
        """Return ``(2I - L) @ x``, the operator whose top eigenpair is L's bottom one."""
        return x + self._adj @ x

    def dense(self, limit: int = DENSE_LIMIT) -> np.ndarray:
        if self.n_active > limit:
            raise GraphError(f"dense Laplacian refused for {self.n_active} active vertices > {limit}")
        return np.eye(self.n_active, dtype=np.complex128) - self._adj.toarray()


def dense_laplacian(op: HermitianLaplacian, limit: int = DENSE_LIMIT) -> np.ndarray:
    return op.dense(limit)


def laplacian_matvec(op: HermitianLaplacian, x: np.ndarray) -> np.ndarray:
    return op.matvec(x)


def rayleigh_quotient(op: HermitianLaplacian, x: np.ndarray, imag_tol: float = 1e-10) -> float:
    """``x* L x / x* x`` for a nonzero vector (compact or full length)."""
    x = op.compact(np.asarray(x, dtype=np.complex128))
    denom = np.vdot(x, x).real
    if denom == 0:
        raise ValueError("Rayleigh quotient of the zero vector")
    num = np.vdot(x, op.matvec(x))
    if abs(num.imag) > imag_tol * max(1.0, denom):
        raise ArithmeticError(f"x*Lx has imaginary part {num.imag:.3e}; operator not Hermitian?")
    return float(num.real / denom)
