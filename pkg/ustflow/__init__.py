"""Unbalanced Sobolev transport between measures on weighted graphs."""

from .errors import InputError, MathDomainError, SolverError, UstError
from .graph import (
    PhysicalGraph,
    RootedPreprocess,
    build_graph,
    distances_from,
    graph_distance,
    perturb_weights,
    shortest_path_tree,
    validate_root,
)
from .kernel import GramMatrix, bandwidth_grid, gram, min_eigenvalue, neg_def_violation, rescale_gram
from .measure import DiscreteMeasure, add, dirac, new_measure, scale, zero_measure
from .oracle import (
    TransportInstance,
    TransportSolution,
    et_lambda,
    extend_problem,
    mass_sweep,
    partial_transport,
    solve_et,
    solve_transportation,
    wasserstein,
)
from .slicing import RootSet, SlicedUst, sample_roots, sliced_pairwise_matrix, sliced_ust
from .ust import EdgeMassProfile, UstParams, edge_cumulative_masses, pairwise_matrix, theta, ust_distance

__version__ = "0.1.0"
