"""Benchmark sweeps over DSBM parameter grids for SimpleHerm and the baselines."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cluster import Clustering, ClusteringError, KMeansConfig, simple_herm
from .dsbm import DsbmParams, generate
from .eigensolver import ConvergenceError, SolverConfig
from .evaluation import adjusted_rand_index, dd_sym_baseline, herm_rw_baseline

log = logging.getLogger(__name__)

METHODS = ("simpleherm", "ddsym", "hermrw")
THREADS_ENV = "HERMFLOW_THREADS"


@dataclass(frozen=True)
class Protocol:
    name: str
    n: int
    k: int
    variant: str
    p_grid: tuple
    eta_grid: tuple


# q = p throughout; n is the default scale and may be overridden
PROTOCOLS = {
    "all_pairs": Protocol("all_pairs", 1000, 4, "all_pairs", (0.5, 0.6, 0.7, 0.8), (0.5, 0.6, 0.7, 0.8, 0.9)),
    "path_only": Protocol("path_only", 2000, 8, "path_only", (0.06, 0.075, 0.09), (0.7, 0.8, 0.9, 0.95)),
}


def run_method(g, k: int, method: str, seed: int = 0, solver_cfg: SolverConfig | None = None) -> Clustering:
    kcfg = KMeansConfig(seed=seed)
    if method == "simpleherm":
        return simple_herm(g, k, solver_cfg or SolverConfig(seed=seed), kcfg, with_lambda2=False)
    if method == "ddsym":
        return dd_sym_baseline(g, k, kcfg)
    if method == "hermrw":
        return herm_rw_baseline(g, k, kcfg)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def _cell(args) -> list[tuple]:
    n, k, variant, p, eta, seed, methods = args
    g, truth = generate(DsbmParams(n, k, p, p, eta, variant, seed))
    rows = []
    for m in methods:
        try:
            ari = adjusted_rand_index(run_method(g, k, m, seed), truth)
        except (ConvergenceError, ClusteringError) as exc:
            log.warning("%s failed at p=%s eta=%s seed=%s: %s", m, p, eta, seed, exc)
            ari = math.nan
        rows.append((m, p, eta, seed, float(ari)))
    return rows


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_sweep(
    protocol: str | Protocol,
    n: int | None = None,
    seeds=range(5),
    methods=METHODS,
    p_grid=None,
    eta_grid=None,
    workers: int | None = None,
) -> list[tuple]:
    """ARI of every method on every ``(p, eta, seed)`` cell.

    Returns rows ``(method, p, eta, seed, ari)`` ordered by ``p``, ``eta``,
    ``seed``, method. Cells are independent, so ``workers > 1`` runs them in
    separate processes without changing any result.
    """
    proto = PROTOCOLS[protocol] if isinstance(protocol, str) else protocol
    n = proto.n if n is None else n
    if n % proto.k:
        raise ValueError(f"n={n} is not divisible by k={proto.k}")
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    cells = [
        (n, proto.k, proto.variant, p, eta, s, tuple(methods))
        for p in (p_grid or proto.p_grid)
        for eta in (eta_grid or proto.eta_grid)
        for s in seeds
    ]
    workers = default_workers() if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_cell, cells))
    else:
        parts = [_cell(c) for c in cells]
    return [row for part in parts for row in part]


def mean_rows(rows: list[tuple]) -> list[tuple]:
    """Per ``(method, p, eta)`` mean over seeds, seed column set to ``"mean"``."""
    groups: dict = {}
    for m, p, eta, _seed, ari in rows:
        groups.setdefault((m, p, eta), []).append(ari)
    return [(m, p, eta, "mean", float(np.nanmean(v)) if not all(map(math.isnan, v)) else math.nan)
            for (m, p, eta), v in groups.items()]
