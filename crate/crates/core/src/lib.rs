//! Interpretability measurement for tabular default-risk classifiers.
//!
//! The crate trains four classifier families (logistic regression, decision
//! tree, random forest, gradient-boosted trees) on a 16-feature bond-issuer
//! schema, explains their predictions with LIME and with Shapley values,
//! and scores each model's interpretability as the cosine similarity
//! between the two methods' mean attribution vectors. A reporting pipeline
//! reproduces the full protocol end to end on synthetic or user-supplied
//! CSV data.

pub mod attribution;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod fixture;
pub mod lime;
pub mod metric;
pub mod models;
pub mod pipeline;
pub mod schema;
pub mod seeding;
pub mod shap;
pub mod standardize;

pub use error::{Error, Result};
