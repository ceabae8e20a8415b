//! Run statistics, replication aggregates and logistic growth.

mod logistic;
mod result;

pub use logistic::*;
pub use result::*;
