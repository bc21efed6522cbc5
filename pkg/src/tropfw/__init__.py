"""Tropical Fermat-Weber consensus over Bergman fans of matroids."""

from .tropical import (
    TropicalPoint,
    SegmentDecomposition,
    canonicalize,
    d_max_plus,
    d_min_plus,
    d_tr,
    fw_objective,
    segment_decomposition,
    torus_equal,
    trop_norm,
)
from .matroid import (
    ConeSignature,
    Flat,
    Matroid,
    boundary_witness,
    closure,
    cone_signature,
    graph_matroid,
    graphic_matroid,
    is_connected_flat,
    is_m_ultrametric,
    matroid_from_text,
    matroid_to_text,
    maximal_proper_flats,
    rank,
    signature_leq,
    w_min,
)
from .projection import (
    PolytopeVertexSet,
    bergman_vertex_set,
    check_nonexpansive,
    project_bergman,
    project_polytope,
    project_ultrametric_fast,
)
from .fw import (
    FWSolution,
    directional_derivative,
    fw_m_ultrametric,
    fw_max_plus,
    fw_min_plus,
    fw_point,
    fw_set_oracle,
    fw_symmetric,
    hausdorff_shift,
)
from .phylo import (
    DissimilarityVector,
    PhyloTree,
    average_linkage,
    cophenetic_vector,
    is_tree_metric,
    is_ultrametric,
    min_internal_branch,
    parse_newick,
    rf_distance,
    single_linkage,
    topology_signature,
    tree_from_ultrametric,
    write_newick,
)
from .coalescent import NoiseSpec, SpeciesModel, perturb, simulate_gene_tree
from .estimators import fw_estimate, glass_estimate, steac_estimate
from .experiments import (
    ExperimentConfig,
    ExperimentRecord,
    NormMoments,
    estimate_norm_moments,
    hausdorff_experiment,
    run_experiment,
    safety_radius_demo,
    stochastic_safety_sigma,
    substream,
)

__version__ = "0.1.0"
