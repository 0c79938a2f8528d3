//! Comparison models: a kernel SVM trained by SMO, a cross-entropy MLP
//! (CENet) and a deep extractor with a squared-hinge SVM head (DNMSVM).

mod cenet;
mod dnmsvm;
mod grid;
mod mlp;
mod svm;

pub use cenet::{Cenet, CenetParams};
pub use dnmsvm::{binary_target, Dnmsvm, DnmsvmParams, PENALTY_GRID};
pub use grid::{
    default_c_grid, default_gamma_grid, grid_search_cells, grid_search_cv, power_grid, select_best,
    GridCell, GridSelection,
};
pub use mlp::{Extractor, ExtractorShape};
pub use svm::{
    dual_objective, kkt_max_residual, smo_solve, smo_train, DualSolution, Kernel, SmoConfig,
    SvmModel, SUPPORT_THRESHOLD,
};
