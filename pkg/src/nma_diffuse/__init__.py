"""Network meta-analysis through diffusion on the comparison network.

The covariance matrix of the network estimates, the hat matrix, and the
treatment effects themselves are computed by summing geometric series of
random-walk transition matrices instead of pseudoinverting the Laplacian;
a dense pseudoinverse oracle is provided for cross-validation, along with
walk simulations, walkers-and-drinks bookkeeping, and figure rendering.
"""

from .dataset import Comparison, Dataset, MultiArmStudy
from .diffusion import (
    ConvergenceReport,
    DiffusionTrace,
    SeriesResult,
    StationaryDistribution,
    centered_step,
    diffuse,
    power_series,
    stationary,
    steps_to_converge,
    verify_centered_identity,
)
from .errors import (
    InputDataError,
    NmaDiffuseError,
    NonConvergenceError,
    StructuralError,
)
from .estimator import (
    CovarianceMatrix,
    EstimationTrace,
    HatMatrix,
    NmaSummary,
    covariance,
    covariance_oracle,
    covariance_series_absorbing,
    covariance_series_centered,
    covariance_series_lazy,
    covariance_series_simple,
    estimate_iterative,
    hat_matrix,
    laplacian_pseudoinverse,
    nma_summary,
)
from .graphs import (
    BipartiteCheck,
    NmaGraph,
    TransitionMatrix,
    adjust_multiarm_weights,
    assemble_graph,
    build_design_matrix,
    is_bipartite,
    transition,
)
from .ingest import (
    ArmRecord,
    EffectMeasure,
    contrasts_from_arms,
    load_arms,
    load_contrasts,
    toy_dataset,
    toy_path,
    write_contrasts,
)
from .walkers import (
    BottleBoard,
    WalkState,
    bottle_board,
    diff_of_diffs,
    expected_stay,
    scale_by_degree,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Comparison",
    "Dataset",
    "MultiArmStudy",
    "ArmRecord",
    "EffectMeasure",
    "NmaGraph",
    "TransitionMatrix",
    "BipartiteCheck",
    "SeriesResult",
    "DiffusionTrace",
    "StationaryDistribution",
    "ConvergenceReport",
    "CovarianceMatrix",
    "HatMatrix",
    "EstimationTrace",
    "NmaSummary",
    "WalkState",
    "BottleBoard",
    "NmaDiffuseError",
    "InputDataError",
    "StructuralError",
    "NonConvergenceError",
    "load_contrasts",
    "write_contrasts",
    "load_arms",
    "contrasts_from_arms",
    "toy_dataset",
    "toy_path",
    "build_design_matrix",
    "adjust_multiarm_weights",
    "assemble_graph",
    "transition",
    "is_bipartite",
    "power_series",
    "stationary",
    "diffuse",
    "steps_to_converge",
    "centered_step",
    "verify_centered_identity",
    "laplacian_pseudoinverse",
    "covariance_oracle",
    "covariance_series_simple",
    "covariance_series_lazy",
    "covariance_series_centered",
    "covariance_series_absorbing",
    "covariance",
    "hat_matrix",
    "estimate_iterative",
    "nma_summary",
    "expected_stay",
    "scale_by_degree",
    "bottle_board",
    "diff_of_diffs",
]
