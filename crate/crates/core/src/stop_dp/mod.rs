//! Backward induction for the discretised stopping problem: regression
//! estimates of continuation values on simulated paths, and an exact mode on
//! the deterministic clock.

mod basis;
mod induction;
mod regression;
mod tree;

pub use basis::{base_features, BasisFamily, BasisSpec};
pub use induction::{
    accumulate_lower_bound, backward_induction, lower_bound_estimate, stopping_time, DPResult,
    MeanEstimate, PathBatch, StopFlags, StoppingPolicy,
};
pub use regression::{fit_continuation, ContinuationModel};
pub use tree::{exact_tree_dp, ExactTreeResult, TreePolicy, MAX_TREE_STAGES};
