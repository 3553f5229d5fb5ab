"""Directed stochastic block model with a planted flow path.

Blocks ``B_0 .. B_{k-1}`` have ``n/k`` vertices each. Cross edges between
consecutive blocks point ``B_j -> B_{j+1}`` with probability ``eta``. The
returned ground truth labels block ``B_b`` as cluster ``k - 1 - b`` so that the
planted chain runs from high to low cluster index, which is the orientation
the flow ratio rewards.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .digraph import WeightedDigraph, from_arrays
from .flow import Partition

VARIANTS = ("all_pairs", "path_only")


@dataclass(frozen=True)
class DsbmParams:
    n: int
    k: int
    p: float
    q: float
    eta: float
    variant: str = "all_pairs"
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.n < 1:
            raise ValueError("n and k must be positive")
        if self.n % self.k:
            raise ValueError(f"k={self.k} must divide n={self.n}")
        if not (0 <= self.p <= 1 and 0 <= self.q <= 1):
            raise ValueError("p and q must lie in [0, 1]")
        if not 0.5 <= self.eta <= 1:
            raise ValueError("eta must lie in [0.5, 1]")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")

    @property
    def block_size(self) -> int:
        return self.n // self.k

    def as_dict(self) -> dict:
        return asdict(self)


def _block_pairs(params: DsbmParams, rng: np.random.Generator):
    """Yield ``(src, dst)`` arrays block pair by block pair, in a fixed order."""
    b = params.block_size
    iu, ju = np.triu_indices(b, 1)
    for a in range(params.k):
        off_a = a * b
        # intra-block pairs, uniform direction
        hit = rng.random(iu.size) < params.p
        flip = rng.random(iu.size) < 0.5
        u, v = iu[hit] + off_a, ju[hit] + off_a
        f = flip[hit]
        yield np.where(f, v, u), np.where(f, u, v)
        for c in range(a + 1, params.k):
            consecutive = c == a + 1
            if params.variant == "path_only" and not consecutive:
                continue
            off_c = c * b
            hit = rng.random((b, b)) < params.q
            forward = rng.random((b, b)) < (params.eta if consecutive else 0.5)
            uu, vv = np.nonzero(hit)
            fw = forward[uu, vv]
            uu, vv = uu + off_a, vv + off_c
            yield np.where(fw, uu, vv), np.where(fw, vv, uu)


def generate(params: DsbmParams) -> tuple[WeightedDigraph, Partition]:
    """Sample a graph and its ground-truth partition (unit weights)."""
    rng = np.random.default_rng(params.seed)
    parts = list(_block_pairs(params, rng))
    src = np.concatenate([s for s, _ in parts]) if parts else np.zeros(0, dtype=np.int64)
    dst = np.concatenate([d for _, d in parts]) if parts else np.zeros(0, dtype=np.int64)
    g = from_arrays(src, dst, np.ones(src.size), params.n, merge_policy="reject")
    block = np.arange(params.n) // params.block_size
    truth = Partition(labels=params.k - 1 - block, k=params.k)
    return g, truth


def _binomial_summary(hits: int, trials: int, expected: float) -> dict:
    freq = hits / trials if trials else float("nan")
    lo, hi = (
        stats.binomtest(hits, trials).proportion_ci(confidence_level=0.997, method="exact")
        if trials
        else (float("nan"), float("nan"))
    )
    sigma = np.sqrt(expected * (1 - expected) / trials) if trials else float("nan")
    return {
        "hits": hits,
        "trials": trials,
        "frequency": freq,
        "expected": expected,
        "ci_low": float(lo),
        "ci_high": float(hi),
        "z": float((freq - expected) / sigma) if sigma and sigma > 0 else 0.0,
    }


def empirical_check(params: DsbmParams, trials: int = 10) -> dict:
    """Edge and direction frequencies over ``trials`` independent draws.

    Confidence intervals are exact (Clopper-Pearson) at the 3-sigma level.
    """
    b, k = params.block_size, params.k
    intra_pairs = k * b * (b - 1) // 2
    n_consec = (k - 1) * b * b
    n_other = (k * (k - 1) // 2 - (k - 1)) * b * b
    intra = consec = other = forward = 0
    for t in range(trials):
        g, _ = generate(DsbmParams(**{**params.as_dict(), "seed": params.seed + t}))
        bs, bd = g.src // b, g.dst // b
        intra += int(np.sum(bs == bd))
        step = bd - bs
        consec += int(np.sum(np.abs(step) == 1))
        forward += int(np.sum(step == 1))
        other += int(np.sum(np.abs(step) >= 2))
    out = {
        "intra": _binomial_summary(intra, intra_pairs * trials, params.p),
        "consecutive": _binomial_summary(consec, n_consec * trials, params.q),
        "forward": _binomial_summary(forward, consec, params.eta),
    }
    expected_other = params.q if params.variant == "all_pairs" else 0.0
    out["non_consecutive"] = _binomial_summary(other, n_other * trials, expected_other)
    return out
