"""Selective-sampling nearest neighbor classification."""

from selsample.domain import (
    Adversarial1D,
    Checkerboard,
    Disk,
    DomainSpace,
    ImageTruth,
    UsageError,
    build_adversarial_1d,
    distance,
    label_of,
    read_pnm,
    sample_mu,
)
from selsample.predictor import (
    LabeledSample,
    SampleSet,
    TieFamily,
    k_nearest_tie_family,
    nearest_indices,
    predict_mnn,
    predict_nn,
    select_ambiguous_set,
)
from selsample.heuristics import (
    HeuristicSpec,
    nonmodal_count,
    phi_distance,
    phi_nmc_knn,
    phi_nmc_voronoi,
)
from selsample.voronoi import (
    Certificate,
    VoronoiIndex,
    build_index,
    certify_voronoi_neighbor,
    voronoi_neighbors,
)
from selsample.sampler import (
    KappaSchedule,
    ProcessConfig,
    RunTrace,
    kappa_value,
    run_process,
    seed_count_from_p,
    select_next,
)

__version__ = "0.1.0"

__all__ = [
    "Adversarial1D",
    "Certificate",
    "Checkerboard",
    "Disk",
    "DomainSpace",
    "HeuristicSpec",
    "ImageTruth",
    "KappaSchedule",
    "LabeledSample",
    "ProcessConfig",
    "RunTrace",
    "SampleSet",
    "TieFamily",
    "UsageError",
    "VoronoiIndex",
    "build_adversarial_1d",
    "build_index",
    "certify_voronoi_neighbor",
    "distance",
    "k_nearest_tie_family",
    "kappa_value",
    "label_of",
    "nearest_indices",
    "nonmodal_count",
    "phi_distance",
    "phi_nmc_knn",
    "phi_nmc_voronoi",
    "predict_mnn",
    "predict_nn",
    "read_pnm",
    "run_process",
    "sample_mu",
    "seed_count_from_p",
    "select_ambiguous_set",
    "select_next",
    "voronoi_neighbors",
]
