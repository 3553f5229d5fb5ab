"""Clustering directed graphs by flow imbalance with a complex Hermitian Laplacian."""

from .cluster import (
    Clustering,
    ClusteringError,
    Embedding,
    KMeansConfig,
    approximate_centers,
    center_cost_identity,
    optimal_cost_bound,
    order_clusters,
    simple_herm,
    spectral_embedding,
    weighted_kmeans,
)
from .digraph import GraphError, WeightedDigraph, cut_weight, from_arrays, from_edge_list, volume
from .dsbm import DsbmParams, empirical_check, generate
from .eigensolver import (
    ConvergenceError,
    EigenPair,
    SolverConfig,
    bottom_eigenpair,
    dense_eigen_oracle,
    second_eigenpair,
    second_eigenvalue,
)
from .evaluation import (
    adjusted_rand_index,
    best_matching,
    contingency_table,
    dd_sym_baseline,
    drift_series,
    herm_rw_baseline,
)
from .flow import (
    Partition,
    flow_ratio,
    gamma_k,
    indicator_vector_y,
    rayleigh_closed_form,
    structure_errors,
    theta_k_bruteforce,
)
from .hermitian import HermitianLaplacian, rayleigh_quotient, root_of_unity
from .sparsify import SparsifierConfig, preservation_report, sampling_probabilities, sparsify
from .trade import CountryIndex, TradeRecord, net_trade_graph, parse_trade_csv, reconcile_exports

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
