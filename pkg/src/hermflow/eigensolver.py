"""Bottom eigenpairs of the Hermitian Laplacian by filtered subspace iteration.

All eigenvalues of ``L`` lie in ``[0, 2]``, so the largest eigenvalue of
``2I - L`` corresponds to the smallest of ``L`` and no spectral-radius
estimate is needed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .hermitian import HermitianLaplacian

log = logging.getLogger(__name__)

SHIFT = 2.0
DEGENERATE_GAP = 1e-6
DENSE_ORACLE_LIMIT = 1024


class ConvergenceError(RuntimeError):
    """Subspace iteration exhausted its budget before meeting the residual tolerance."""

    def __init__(self, message: str, best_residual: float, iterations: int):
        super().__init__(message)
        self.best_residual = best_residual
        self.iterations = iterations


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-8
    max_iterations: int | None = None
    seed: int = 0
    block_size: int = 8  # subspace width for the deflated second-eigenvalue solve
    filter_degree: int = 16  # Chebyshev polynomial degree per subspace sweep

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.block_size < 1:
            raise ValueError("block_size must be at least 1")
        if self.filter_degree < 1:
            raise ValueError("filter_degree must be at least 1")

    def budget(self, n: int) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return max(1000, int(10 * n * math.log(max(n, 2))))


@dataclass
class EigenPair:
    value: float
    vector: np.ndarray  # full length, zeros on isolated vertices
    residual: float
    iterations: int
    converged: bool = True
    flags: dict = field(default_factory=dict)


def normalize_phase(x: np.ndarray) -> np.ndarray:
    """Rotate ``x`` so its largest-magnitude entry is real and positive.

    Entries within a relative 1e-12 of the maximum count as tied and the first
    one wins, so rounding noise cannot flip the choice.
    """
    mag = np.abs(x)
    top = mag.max(initial=0.0)
    if top == 0:
        return x
    i = int(np.flatnonzero(mag >= top * (1 - 1e-12))[0])
    y = x * (np.conj(x[i]) / mag[i])
    y[i] = mag[i]
    return y


def _start_block(n: int, width: int, seed: int) -> np.ndarray:
    """Seeded complex Gaussian block, orthogonalised once against the all-equal vector."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, width)) + 1j * rng.standard_normal((n, width))
    X = X - X.mean(axis=0, keepdims=True)
    if n == 1 or not np.all(np.linalg.norm(X, axis=0) > 0):
        X = X + np.eye(n, width)
    return X


def _deflate(X: np.ndarray, f1: np.ndarray | None) -> np.ndarray:
    if f1 is None:
        return X
    return X - np.outer(f1, f1.conj() @ X)


def _chebyshev_filter(op: HermitianLaplacian, X: np.ndarray, f1, lo: float, degree: int):
    """Damp the spectrum of ``L`` on ``[lo, 2]`` and amplify everything below ``lo``.

    Uses the Chebyshev three-term recurrence on ``(L - c I) / e``; columns are
    rescaled every step and ``f1`` (if given) is projected out so the filter
    cannot re-grow the bottom eigenvector.
    """
    e = 0.5 * (SHIFT - lo)
    c = 0.5 * (SHIFT + lo)
    prev = X
    cur = _deflate((op.matmat(X) - c * X) / e, f1)
    for _ in range(2, degree + 1):
        nxt = _deflate(2.0 * (op.matmat(cur) - c * cur) / e - prev, f1)
        scale = np.linalg.norm(nxt, axis=0)
        scale[scale == 0] = 1.0
        prev, cur = cur / scale, nxt / scale
    return cur


def _block_iterate(op: HermitianLaplacian, X: np.ndarray, cfg: SolverConfig, deflate=None):
    """Filtered subspace iteration for the lowest eigenpair of ``L``.

    Each sweep projects out ``deflate`` (a unit compact vector, if given),
    re-orthonormalises and performs a Rayleigh-Ritz step; the lowest Ritz
    pair is tested against the residual tolerance. The block is then pushed
    through a Chebyshev filter whose damped interval runs from the largest
    Ritz value up to the spectral bound 2, or through one plain ``2I - L``
    step when that interval is too narrow.

    A small residual alone does not prove the pair is the lowest one: the
    block can contain an exact eigenvector of a higher, multiple eigenvalue.
    A pair is therefore accepted only after at least one filter step and
    once the lowest Ritz value has stopped decreasing.
    Returns ``(rho, x, residual, iterations, converged)``.
    """
    budget = cfg.budget(op.n_active)
    best = (math.inf, 0.0, X[:, 0])
    prev = math.inf
    for it in range(1, budget + 1):
        X, _ = np.linalg.qr(_deflate(X, deflate))
        LX = op.matmat(X)
        H = X.conj().T @ LX
        theta, S = np.linalg.eigh(0.5 * (H + H.conj().T))
        V, LV = X @ S, LX @ S
        rho = float(theta[0])
        res = float(np.linalg.norm(LV[:, 0] - rho * V[:, 0]))
        if res < best[0]:
            best = (res, rho, V[:, 0])
        if res <= cfg.tolerance and prev - rho <= cfg.tolerance:
            return rho, V[:, 0], res, it, True
        prev = rho
        if SHIFT - theta[-1] > 1e-3 and cfg.filter_degree > 1:
            X = _chebyshev_filter(op, V, deflate, float(theta[-1]), cfg.filter_degree)
        else:
            X = SHIFT * V - LV
    res, rho, x = best
    return rho, x, res, budget, False


def bottom_eigenpair(op: HermitianLaplacian, cfg: SolverConfig = SolverConfig()) -> EigenPair:
    """Smallest eigenvalue of ``L`` and its phase-normalised unit eigenvector.

    Raises
    ------
    ConvergenceError
        If the residual tolerance is not met within the iteration budget.
    """
    if op.n_active < 2:
        raise ValueError(f"operator has {op.n_active} active vertices; need at least 2")
    width = min(cfg.block_size, op.n_active)
    rho, x, res, its, ok = _block_iterate(op, _start_block(op.n_active, width, cfg.seed), cfg)
    if not ok:
        raise ConvergenceError(
            f"bottom eigenpair not converged after {its} iterations (best residual {res:.3e})",
            res,
            its,
        )
    x = normalize_phase(x)
    log.debug("lambda1=%.12g residual=%.3e iterations=%d", rho, res, its)
    return EigenPair(value=rho, vector=op.expand(x), residual=res, iterations=its)


def second_eigenvalue(
    op: HermitianLaplacian, bottom: EigenPair, cfg: SolverConfig = SolverConfig()
) -> float:
    """Smallest eigenvalue of ``L`` on the orthogonal complement of ``f1``."""
    return second_eigenpair(op, bottom, cfg).value


def second_eigenpair(
    op: HermitianLaplacian, bottom: EigenPair, cfg: SolverConfig = SolverConfig()
) -> EigenPair:
    if not bottom.converged:
        raise ValueError("bottom eigenpair is not converged")
    n = op.n_active
    f1 = op.compact(bottom.vector)
    f1 = f1 / np.linalg.norm(f1)
    width = max(1, min(cfg.block_size, n - 1))
    rho, x, res, its, ok = _block_iterate(op, _start_block(n, width, cfg.seed + 1), cfg, deflate=f1)
    if not ok:
        raise ConvergenceError(
            f"second eigenvalue not converged after {its} iterations (best residual {res:.3e})",
            res,
            its,
        )
    flags = {}
    if rho - bottom.value < DEGENERATE_GAP:
        flags["degenerate_eigengap"] = True
        log.warning("degenerate eigengap: lambda2 - lambda1 = %.3e", rho - bottom.value)
    return EigenPair(
        value=rho, vector=op.expand(normalize_phase(x)), residual=res, iterations=its, flags=flags
    )


def dense_eigen_oracle(op: HermitianLaplacian, limit: int = DENSE_ORACLE_LIMIT) -> list[EigenPair]:
    """Full eigendecomposition of the dense Laplacian, ascending."""
    if op.n_active > limit:
        raise ValueError(f"dense oracle refused for {op.n_active} active vertices > {limit}")
    lap = op.dense(limit)
    vals, vecs = np.linalg.eigh(lap)
    pairs = []
    for i, lam in enumerate(vals):
        v = normalize_phase(vecs[:, i])
        res = float(np.linalg.norm(lap @ v - lam * v))
        pairs.append(EigenPair(value=float(lam), vector=op.expand(v), residual=res, iterations=0))
    return pairs
