//! Coalition formation for data sharing under local differential privacy.
//!
//! Players hold one data point each and may pool privatized copies to
//! estimate a population mean. Joining the single coalition trades
//! estimator accuracy against a privacy cost c_i·|S|^α·ε_i that scales
//! with the coalition size. The crate computes:
//!
//! * the centralized benchmark — the social-cost-minimizing coalition and
//!   privacy assignment a designer would pick ([`centralized`]);
//! * decentralized outcomes — Nash-stable and robust-stable (valid-entry)
//!   coalitions with selfishly chosen privacy levels, by closed-form
//!   condition, by definition-level oracle, and by exhaustive or structural
//!   search ([`decentralized`]);
//! * efficiency gaps — the Price of Stability in social cost and estimator
//!   variance, with the constant bound for α > 1/2 ([`efficiency`]);
//! * reproducible experiments — σ-sweeps, n-scaling exponent fits and
//!   Monte Carlo validation of the variance formula ([`experiments`]).

pub mod centralized;
pub mod cli;
pub mod decentralized;
pub mod efficiency;
pub mod error;
pub mod experiments;
pub mod model;

pub use error::{Error, Result};
pub use model::{Coalition, PrivacyProfile, ProblemInstance, Tolerance};
