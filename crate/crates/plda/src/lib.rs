//! Two-covariance PLDA for verification tasks, with MAP estimation of the
//! between-class variance and ellipse length normalization.
//!
//! The model assumes observed vectors `x = mu0 + M x'` where the latent `x'`
//! has within-class covariance `I` and a diagonal between-class covariance
//! `diag(epsilon)`. Everything downstream (scoring, shrinkage, normalization)
//! operates per dimension in that latent frame, which is what keeps the
//! likelihood ratios closed-form.
//!
//! Module map:
//! - [`data`]: vector collections and the text vector-file format
//! - [`stats`]: first/second moment accumulation over labeled data
//! - [`model`]: the trained model, latent transforms, marginal likelihoods
//! - [`train`]: maximum-likelihood EM fit of the two covariances
//! - [`shrink`]: virtual-sample and MAP (Inverse-Wishart) epsilon estimates
//! - [`lnorm`]: ellipse length normalization in the latent frame
//! - [`score`]: trial lists and log likelihood-ratio scoring
//! - [`lda`]: Fisher LDA projection fit on labeled vectors
//! - [`eer`]: equal error rate on the ROC convex hull
//! - [`sweep`]: development-set grid search over the prior weight alpha
//! - [`pipeline`]: end-to-end train/shrink/normalize/score/report runs
//! - [`synth`]: synthetic dataset generation from a known model
//! - [`sim`]: variance-of-variance Monte Carlo
//! - [`strategy`]: name-keyed registries for pluggable samplers, epsilon
//!   estimators and normalizers

// `!(x > 0.0)` is used throughout instead of `x <= 0.0`: the negated form
// also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod eer;
pub mod error;
pub mod lda;
pub mod lnorm;
pub mod model;
pub mod pipeline;
pub mod score;
pub mod shrink;
pub mod sim;
pub mod stats;
pub mod strategy;
pub mod sweep;
pub mod synth;
pub mod train;

mod linalg;
mod textio;

pub use error::{Error, Result};

// Re-exported so downstream users build vectors against the same version.
pub use nalgebra;

/// Floor applied to every between-class variance estimate. Dimensions with no
/// usable between-class spread are clamped here instead of collapsing to zero,
/// which keeps scoring and normalization well defined.
pub const EPSILON_FLOOR: f64 = 1e-6;

/// Floor applied to eigenvalues of the within-class covariance before it is
/// whitened. Directions below the floor are degenerate in the training data;
/// the whole matrix sitting below it is an error, not a clamp.
pub const WITHIN_EIGEN_FLOOR: f64 = 1e-6;

/// Smallest singular value a model transform may have before it is treated as
/// numerically singular.
pub const SINGULARITY_FLOOR: f64 = 1e-10;
