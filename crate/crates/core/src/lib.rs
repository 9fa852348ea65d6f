//! Case-mix-adjusted social inflation indices.
//!
//! The crate turns litigated-case records into annual social inflation rates
//! (ASIR) and cumulative chained indices (CSII) for five channels: plaintiff
//! win probability, settlement probability, verdict severity, settlement
//! severity and total payment. Probability channels are fitted with a
//! rolling-window logistic regression, severity channels with a rolling-window
//! linear quantile regression on log amounts. Estimation uncertainty comes from
//! a random-weighted bootstrap, and [`synthetic`] provides a data-generating
//! process with known ground truth for validation.

pub mod bootstrap;
pub mod data_model;
pub mod error;
pub mod glm;
pub mod index;
pub mod output;
pub mod quantreg;
pub mod synthetic;
pub mod window;

mod linalg;

pub use error::{Error, Result};
