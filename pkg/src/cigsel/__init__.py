"""Graphical model selection for stationary Gaussian vector time series."""

from .bounds import (
    BoundReport,
    bound_report,
    fano_error_floor,
    graph_entropy,
    mi_entropy_bound,
    mi_linear_bound,
    necessary_sample_size,
    sufficient_sample_size,
)
from .model import (
    Acf,
    ClassParams,
    Graph,
    SampleBlock,
    SdmGrid,
    acf_moment,
    cig_from_inverse_sdm,
    eigen_band,
    graph_equal,
    partial_coherence,
    sdm_from_acf,
)
from .process import (
    FanoEnsemble,
    FilterSpec,
    InnovationCovariance,
    ProcessSpec,
    acf_of_spec,
    build_fano_ensemble,
    build_matching_process,
    exact_covariance,
    exponential_filter,
    sample,
    unit_impulse,
)
from .selector import (
    SelectionResult,
    diagonalization_oracle,
    dft_rows,
    mirror_extend,
    select_graph,
    select_neighborhood,
    z_statistics,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "bound_report",
    "fano_error_floor",
    "graph_entropy",
    "mi_entropy_bound",
    "mi_linear_bound",
    "necessary_sample_size",
    "sufficient_sample_size",
    "Acf",
    "ClassParams",
    "Graph",
    "SampleBlock",
    "SdmGrid",
    "acf_moment",
    "cig_from_inverse_sdm",
    "eigen_band",
    "graph_equal",
    "partial_coherence",
    "sdm_from_acf",
    "FanoEnsemble",
    "FilterSpec",
    "InnovationCovariance",
    "ProcessSpec",
    "acf_of_spec",
    "build_fano_ensemble",
    "build_matching_process",
    "exact_covariance",
    "exponential_filter",
    "sample",
    "unit_impulse",
    "SelectionResult",
    "diagonalization_oracle",
    "dft_rows",
    "mirror_extend",
    "select_graph",
    "select_neighborhood",
    "z_statistics",
]
