"""Transfer operators for stochastic dynamics and weighted graphs.

Estimates Koopman, Perron-Frobenius, reweighted, forward-backward and
backward-forward operators from trajectory data, builds their exact
counterparts on graphs, and uses their spectra to detect metastable and
coherent sets.
"""

__version__ = "0.1.0"

from .basis import Box, BoxPartition, GaussianBasis, IndicatorBasis, box_index, evaluate_basis
from .clustering import (
    Partition,
    kmeans,
    metastability_bounds,
    metastability_score,
    projection_mass,
    save_partition,
    seba,
)
from .dynamics import (
    PairDataset,
    QuadrupleWellParams,
    SdeModel,
    drift_eval,
    euler_maruyama_step,
    gibbs_sampler,
    load_pairs,
    point_sampler,
    potential_eval,
    quadruple_well_model,
    sample_pairs,
    sample_trajectory_checkpoints,
    save_pairs,
    stationary_flux,
    uniform_sampler,
)
from .estimators import CovarianceSet, UlamResult, covariances, edmd, galerkin_eigenfunction, ulam
from .graph import (
    Graph,
    LayeredGraph,
    invariant_density,
    is_reversible,
    layered_forward_backward,
    nonreversible_perturbation,
    out_degree,
    read_edge_list,
    read_layered_edge_list,
    supra_laplacian,
    transition_matrix,
    write_edge_list,
    write_layered_edge_list,
)
from .operators import (
    Density,
    OperatorBundle,
    apply_langevin_generator,
    forward_backward_laplacian,
    operator_bundle,
    random_walk_laplacian,
    rate_matrix_exponential,
)
from .spectral import SpectralResult, general_eigs, selfadjoint_eigs, singular_pair, spectral_gap

__all__ = [name for name in dir() if not name.startswith("_")]
