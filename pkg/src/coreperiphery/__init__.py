"""Core-periphery decomposition of sparse undirected networks.

Fits a two-group stochastic block model by maximum likelihood: an EM outer
loop re-estimates the group priors and mixing matrix while a sparse belief
propagation inner loop supplies the posterior marginals.  Also ships a
degree-only fast algorithm, a planted-network generator, an exact
small-graph oracle, and a benchmark harness.
"""

from .bench import SweepConfig, error_rate, run_sweep, weak_structure_linear_check
from .bp import BpResult, Params, odds_ratio, run_bp, two_point_marginals
from .degree_model import DegreeModelParams, fit_degree_model, naive_split
from .em import FitConfig, FitResult, bethe_objective, classify, fit, m_step
from .graph import Graph, LabelMap, from_edges, load_edge_list, write_edge_list
from .oracle import exact_em_step, exact_log_likelihood, exact_posterior
from .sbm import (MixingMatrix, PlantedNetwork, ThetaParametrization,
                  group_mean_degrees, mixing_from_theta, sample_sbm,
                  weak_structure_mixing)

__all__ = [
    "BpResult", "DegreeModelParams", "FitConfig", "FitResult", "Graph",
    "LabelMap", "MixingMatrix", "Params", "PlantedNetwork", "SweepConfig",
    "ThetaParametrization", "bethe_objective", "classify", "error_rate",
    "exact_em_step", "exact_log_likelihood", "exact_posterior", "fit",
    "fit_degree_model", "from_edges", "group_mean_degrees", "load_edge_list",
    "m_step", "mixing_from_theta", "naive_split", "odds_ratio", "run_bp",
    "run_sweep", "sample_sbm", "two_point_marginals",
    "weak_structure_linear_check", "write_edge_list",
]

__version__ = "0.1.0"
