//! Calibration toolkit for large computer experiments.
//!
//! An expensive simulator is emulated with local approximate Gaussian
//! processes fitted on-the-fly around each prediction site, calibration
//! parameters are estimated by maximizing a modularized log posterior with a
//! derivative-free mesh search, and field predictions are de-biased by a
//! discrepancy model carrying observation noise. A synthetic benchmark
//! harness reproduces the whole pipeline end to end under a seeded Monte
//! Carlo protocol.
//!
//! Module map:
//!
//! * [`design`] — Latin hypercube sampling, maximin subsets, input scaling,
//!   and subsample-based separable lengthscale estimation.
//! * [`gp`] — dense zero-mean GP regression with analytically marginalized
//!   scale: correlation kernels, marginal likelihood, MLE, Student-t
//!   prediction.
//! * [`lagp`] — local approximate GP emulation over a large archive of
//!   simulator runs.
//! * [`optimizer`] — bound-constrained pattern search over a refining mesh,
//!   with space-filling initialization.
//! * [`calibration`] — the modularized calibration objective, search driver,
//!   field prediction and parametric bootstrap.
//! * [`benchmark`] — synthetic data generator, Monte Carlo comparison
//!   harness, main effects, and leave-one-out validation.

pub mod benchmark;
pub mod calibration;
pub mod data;
pub mod design;
pub mod error;
pub mod gp;
pub mod lagp;
pub mod optimizer;

pub(crate) mod kdtree;

pub use error::{Error, Result};
