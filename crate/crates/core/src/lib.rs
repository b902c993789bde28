//! Conditional independence graph estimation for stationary Gaussian time
//! series.
//!
//! The pipeline: smoothed PSD estimates on a frequency grid
//! ([`spectral`]), a sparse-group lasso penalized inverse-PSD fit solved by
//! ADMM ([`admm`]), and edge selection with BIC tuning ([`select`]). The
//! [`var`] module generates clustered VAR benchmarks with exact ground truth,
//! [`baseline`] provides the i.i.d. graphical lasso comparison, and
//! [`bench`] runs the Monte-Carlo comparison protocol.

pub mod admm;
pub mod baseline;
pub mod bench;
pub mod error;
pub mod linalg;
pub mod prox;
pub mod select;
pub mod spectral;
pub mod var;

pub use error::{Error, Result};
pub use num_complex::Complex64;
