//! Nine-category multi-label tagging: one RBF SVM per actionability type over
//! that type's keyword-similarity features.

mod ensemble;
mod grid;
mod svm;
mod types;

pub use ensemble::{
    downsample_negatives, keyword_baseline, train_ensemble, Balanced, CategoryReport, Ensemble,
};
pub use grid::{grid_search, stratified_folds, GridCell, GridResult, DEFAULT_C_GRID, DEFAULT_GAMMA_GRID};
pub use svm::{
    classify_one, dual_objective, kernel_matrix, rbf_kernel, train_svm, train_svm_with_report, SolverReport,
    SvmHyperparams, SvmModel, SUPPORT_EPS,
};
pub use types::{ActionSet, ActionabilityType};
