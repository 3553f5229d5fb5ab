import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hermflow.digraph import from_arrays
from hermflow.flow import Partition

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_digraph(rng, n, density=None, weighted=True, policy="net"):
    """Random simple digraph; ``density`` is the expected edges per vertex."""
    density = rng.uniform(0.5, 4.0) if density is None else density
    m = max(1, int(density * n))
    src = rng.integers(0, n, m)
    dst = rng.integers(0, n, m)
    w = rng.uniform(0.1, 2.0, m) if weighted else np.ones(m)
    return from_arrays(src, dst, w, n, merge_policy=policy)


def random_partition(rng, g, k):
    """Random labels on active vertices with every cluster nonempty (-1 elsewhere)."""
    active = g.active
    if active.size < k:
        return None
    lab = rng.integers(0, k, active.size)
    lab[rng.permutation(active.size)[:k]] = np.arange(k)
    labels = np.full(g.n, -1, dtype=np.int64)
    labels[active] = lab
    return Partition(labels, k)


def bipartite_one_way(a, b, weight=1.0):
    """Complete bipartite digraph with every edge from the first ``a`` to the last ``b`` vertices."""
    src, dst = np.meshgrid(np.arange(a), np.arange(a, a + b), indexing="ij")
    return from_arrays(src.ravel(), dst.ravel(), np.full(a * b, weight), a + b)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def planted_instances(sizes=((16, 2), (24, 2), (32, 2), (9, 3)), seeds=range(4)):
    """Small path-only DSBM graphs with their optimal partition and spectral data.

    Yields dicts with the graph, k, theta, lambda2, gamma, the optimal partition,
    its indicator vector y and the dense bottom eigenvector f1. Instances with
    isolated vertices are skipped.
    """
    from hermflow.dsbm import DsbmParams, generate
    from hermflow.eigensolver import dense_eigen_oracle
    from hermflow.flow import gamma_k, indicator_vector_y, theta_k_bruteforce
    from hermflow.hermitian import HermitianLaplacian

    for n, k in sizes:
        for seed in seeds:
            for eta in (0.9, 1.0):
                for p in (0.1, 0.3):
                    g, _ = generate(DsbmParams(n, k, p, 1.0, eta, "path_only", seed))
                    if g.active.size < n:
                        continue
                    pairs = dense_eigen_oracle(HermitianLaplacian(g, k))
                    theta, part = theta_k_bruteforce(g, k)
                    yield {
                        "graph": g,
                        "k": k,
                        "theta": theta,
                        "lambda2": pairs[1].value,
                        "gamma": gamma_k(k, theta, pairs[1].value).gamma_k,
                        "partition": part,
                        "y": indicator_vector_y(g, part),
                        "f1": pairs[0].vector,
                    }
