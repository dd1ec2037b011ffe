"""Sparsification toolkit for weighted directed graphs.

Directed spectral and directed-cut sparsifiers with exact degree
preservation, expander decompositions, dynamic (insert/delete) maintenance
with bounded recourse, and square-sparsifier preconditioning utilities.
"""

from .errors import (
    BetaTooSmall,
    ConditionViolated,
    DemandMismatch,
    DimensionMismatch,
    Disconnected,
    DisparseError,
    EdgeNotFound,
    KernelMismatch,
    NotBipartite,
    NotCertified,
    NotConverged,
    ParseError,
    PatchingFailed,
    PreconditionViolated,
    QueryUnsupported,
    SingularBlock,
    TooLarge,
)
from .graphs import (
    DELETE,
    INSERT,
    BipartiteLift,
    DiGraph,
    SchurResult,
    UndirectedGraph,
    UpdateEvent,
    contract,
    contract_lift_pairs,
    degree_balance,
    degree_vectors,
    directed_laplacian,
    incidence_matrices,
    is_eulerian,
    rev,
    schur_complement,
    und,
    undirected_laplacian,
)
from .dense import (
    approx_pinv_error,
    balanced_dicut_check,
    conductance_exact,
    conductance_sweep,
    cut_check_dicut,
    edge_connectivity,
    laplacian_solve,
    spectral_error,
)
from .expanders import (
    DynamicDecomposition,
    Piece,
    prune_on_delete,
    static_decompose,
    union_of_pieces,
)
from .dicut import (
    ConnectivityEstimate,
    MsfBundle,
    connectivity_estimate_expander,
    cut_oversampling,
    sparsify_dicut,
    sparsify_dicut_full,
    sparsify_dicut_msf,
    sparsify_dicut_msf_once,
    tbundle_msf,
)
from .connectivity import DynamicConnectivity, DynMsfBundle
from .dynamic import DynDicutAmortized, DynDicutWorstCase, DynSpectral, Metrics
from .dynstruct import (
    DegPreservingPatcher,
    DegreeSparsifier,
    IntervalPatcher,
    SegTree,
    degree_approx_error,
    subset_sample,
)
from .spectral import (
    SpectralSparsifier,
    max_spanning_forest,
    patching_external,
    patching_internal,
    patching_star,
    rounding,
    sample_degrees,
    sparsify_directed_spectral,
    sparsify_subgraph,
)

__version__ = "0.1.0"

__all__ = [
    "BipartiteLift",
    "ConnectivityEstimate",
    "DELETE",
    "DegPreservingPatcher",
    "DegreeSparsifier",
    "DiGraph",
    "DynDicutAmortized",
    "DynDicutWorstCase",
    "DynMsfBundle",
    "DynSpectral",
    "DynamicConnectivity",
    "DynamicDecomposition",
    "INSERT",
    "IntervalPatcher",
    "Metrics",
    "MsfBundle",
    "Piece",
    "SchurResult",
    "SegTree",
    "SpectralSparsifier",
    "UndirectedGraph",
    "UpdateEvent",
    "approx_pinv_error",
    "balanced_dicut_check",
    "conductance_exact",
    "conductance_sweep",
    "connectivity_estimate_expander",
    "contract",
    "contract_lift_pairs",
    "cut_check_dicut",
    "cut_oversampling",
    "degree_approx_error",
    "degree_balance",
    "degree_vectors",
    "directed_laplacian",
    "edge_connectivity",
    "incidence_matrices",
    "is_eulerian",
    "laplacian_solve",
    "max_spanning_forest",
    "patching_external",
    "patching_internal",
    "patching_star",
    "prune_on_delete",
    "rev",
    "rounding",
    "sample_degrees",
    "schur_complement",
    "sparsify_dicut",
    "sparsify_dicut_full",
    "sparsify_dicut_msf",
    "sparsify_dicut_msf_once",
    "sparsify_directed_spectral",
    "sparsify_subgraph",
    "spectral_error",
    "static_decompose",
    "subset_sample",
    "tbundle_msf",
    "und",
    "undirected_laplacian",
    "union_of_pieces",
    "BetaTooSmall",
    "ConditionViolated",
    "DemandMismatch",
    "DimensionMismatch",
    "Disconnected",
    "DisparseError",
    "EdgeNotFound",
    "KernelMismatch",
    "NotBipartite",
    "NotCertified",
    "NotConverged",
    "ParseError",
    "PatchingFailed",
    "PreconditionViolated",
    "QueryUnsupported",
    "SingularBlock",
    "TooLarge",
    "__version__",
]
