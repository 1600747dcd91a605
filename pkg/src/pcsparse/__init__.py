"""Point cloud sparsification by graph total-variation cut refinement."""

from .baseline import FilterConfig, cluster_filter, direct_sparsify
from .cloud import (
    add_gaussian_noise,
    knn_graph,
    make_cube_shell,
    make_grid,
    make_sphere_shell,
    merge_duplicate_points,
)
from .cutpursuit import (
    CutPursuitConfig,
    DirectionSet,
    RunTrace,
    build_flow_aniso,
    build_flow_iso,
    choose_directions,
    debias,
    run,
    run_l0,
    run_octree,
    threshold_cut,
)
from .errors import (
    CapabilityError,
    ConformanceError,
    DomainError,
    NumericalError,
    ParseError,
    SingularEdgeError,
    StepSizeError,
    TooLargeError,
)
from .fileio import read_cloud, write_cloud
from .graphs import (
    Graph,
    RegularizerSpec,
    adjoint,
    divergence,
    energy,
    equality_tolerance,
    gradient,
    operator_norm_estimate,
    p_laplacian,
    pq_norm,
    regularizer_gradient,
)
from .maxflow import (
    SINK,
    SOURCE,
    CutResult,
    FlowNetwork,
    brute_force_min_cut,
    check_submodular,
    cut_value,
    max_flow,
)
from .partition import (
    Partition,
    ReducedGraph,
    components_partition,
    expand,
    reduce_field,
    reduce_graph,
    single_subset_partition,
    split_binary,
    split_by_cut,
)
from .solvers import (
    PDConfig,
    Preconditioner,
    build_preconditioner,
    primal_dual_full,
    primal_dual_reduced,
    project_ball,
    solve_l0_reduced,
)

__version__ = "0.1.0"
