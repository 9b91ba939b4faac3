//! Individualized treatment rules from right-censored survival data.
//!
//! A recursively imputed survival forest supplies rewards for each record,
//! and a weighted support vector machine turns those rewards into a rule.

pub mod baselines;
pub mod cli;
pub mod corpus;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod forest;
pub mod pipeline;
pub mod rewards;
pub mod rist;
pub mod rng;
pub mod sim;
pub mod survival;
pub mod svm;
