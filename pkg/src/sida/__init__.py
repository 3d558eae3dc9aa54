"""Sparse integrative discriminant analysis for multi-view data.

Joint association and classification: per-view discriminant directions that
separate classes and correlate views, made row-sparse through a constrained
convex program, optionally smoothed over a known variable network (SIDANet).
"""

from .data import (
    COVARIATE,
    PENALIZED,
    DataError,
    MultiViewDataset,
    ViewGraph,
    build_normalized_laplacian,
    encode_categorical,
    load_edge_list,
    load_labels_csv,
    load_view_csv,
    make_dataset,
    standardize,
)
from .fit import DiscriminantModel, fit, gram_schmidt, load_model, save_model
from .gev import GevSolution, assemble_coefficient, lda_directions, solve_gev
from .metrics import (
    EvalReport,
    classify_pooled,
    classify_separate,
    estimated_correlation,
    evaluate,
    rv_coefficient,
    scores,
    selection_metrics,
    stability_selection,
)
from .scatter import (
    ScatterSet,
    build_scatter_set,
    cross_covariance,
    regularized_inv_sqrt,
    scatter_matrices,
)
from .simulate import GeneratedData, ScenarioSpec, generate
from .solvers import (
    SparseSubproblem,
    project_weighted_l1,
    solve_row_sida,
    solve_view_sida,
    solve_view_sidanet,
)
from .tuning import CvResult, TuningSpec, cross_validate, make_candidates, tau_bounds

__version__ = "0.1.0"

__all__ = [
    "COVARIATE",
    "PENALIZED",
    "CvResult",
    "DataError",
    "DiscriminantModel",
    "EvalReport",
    "GeneratedData",
    "GevSolution",
    "MultiViewDataset",
    "ScatterSet",
    "ScenarioSpec",
    "SparseSubproblem",
    "TuningSpec",
    "ViewGraph",
    "assemble_coefficient",
    "build_normalized_laplacian",
    "build_scatter_set",
    "classify_pooled",
    "classify_separate",
    "cross_covariance",
    "cross_validate",
    "encode_categorical",
    "estimated_correlation",
    "evaluate",
    "fit",
    "generate",
    "gram_schmidt",
    "lda_directions",
    "load_edge_list",
    "load_labels_csv",
    "load_model",
    "load_view_csv",
    "make_candidates",
    "make_dataset",
    "project_weighted_l1",
    "regularized_inv_sqrt",
    "rv_coefficient",
    "save_model",
    "scatter_matrices",
    "scores",
    "selection_metrics",
    "solve_gev",
    "solve_row_sida",
    "solve_view_sida",
    "solve_view_sidanet",
    "stability_selection",
    "standardize",
    "tau_bounds",
]
