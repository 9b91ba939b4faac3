//! Comparator methods: Cox regression inversion and inverse-censoring weights.

mod cox;
mod ico;

pub use cox::{censoring_survival, cox_itr, design_row, fit_cox, CoxModel, CoxRule, Target};
pub use ico::{ico_weights, IcoWeights, ICO_FLOOR};
