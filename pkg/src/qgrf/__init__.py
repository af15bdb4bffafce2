"""Graph random features with antithetic (quasi-Monte Carlo) walk termination."""

from qgrf.coupling import CouplingScheme
from qgrf.features import FeatureMatrix, FeatureVector, WalkConfig, build_feature, build_feature_matrix
from qgrf.graph import Graph, GraphError, generate_er, generate_structured, load_edge_list

__all__ = [
    "CouplingScheme",
    "FeatureMatrix",
    "FeatureVector",
    "Graph",
    "GraphError",
    "WalkConfig",
    "build_feature",
    "build_feature_matrix",
    "generate_er",
    "generate_structured",
    "load_edge_list",
]
