"""Nearest-neighbor (density-based) metric on Euclidean point clouds.

Two bounded estimators are provided: a constant-factor one through the
edge-squared metric on a Euclidean spanner and a (1+ε)-style one through a
Steiner-point approximation graph.  A brute-force grid oracle supplies ground
truth.
"""
from .approx_graph import (ApproxGraph, ApproxGraphConstants, build_approx_graph, build_for_delta,
                           epsilon_to_delta, ptas_nn_distance, validate_approx_graph)
from .edge_squared import (SpannerConfig, approx3_nn_distance, complete_edge_squared_graph,
                           euclidean_spanner, sqdist)
from .geometry import (BoundingBox, GeometryError, PointSet, PolylinePath, discretize_path,
                       nearest_site, polyline_nn_length, second_nearest_distance,
                       segment_nn_length, voronoi_inradius)
from .graph import GraphError, WeightedGraph, read_graph, shortest_path, write_graph
from .oracle import GridOracle, GridOracleConfig, grid_oracle_nn_distance, sandwich_check
from .results import SCHEMA, DistanceResult
from .single_site import single_site_geodesic_path, single_site_nn_distance
from .steiner import (DeltaSample, compute_exclusion_radii, generate_delta_sample,
                      read_delta_sample, sample_size_report, write_delta_sample)

__version__ = "0.1.0"
