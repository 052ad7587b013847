//! Naive significance tests for high-dimensional mean vectors and covariance
//! matrices.
//!
//! Each test estimates a simple target function (a squared distance between
//! means or covariance matrices, or a maximum of studentized differences) and
//! refers the standardized estimate to a closed-form limiting law. The crate also
//! provides U-statistic trace estimators with brute-force oracles, a constrained
//! ℓ1 precision-matrix estimator and a Monte Carlo harness for size and power.

pub mod covtest;
pub mod data;
pub mod error;
pub mod law;
pub mod manova;
pub mod meantest;
pub mod precision;
pub mod registry;
pub mod result;
pub mod simharness;
pub mod ustat;

pub use data::{pooled_covariance, sample_correlation, sample_covariance, sample_mean, DataMatrix, GroupedData};
pub use error::{Error, Result};
pub use law::{p_value, quantile, NullLaw};
pub use result::{TestMetadata, TestResult};
