// Copyright 2026 The dpcusum Authors
// SPDX-License-Identifier: Apache-2.0

//! Differentially private CUSUM change detection.
//!
//! The crate is organized around five pieces:
//!
//! * [`model`]: pre/post-change pairs, their log-likelihood ratio, sensitivity
//!   Δ, KL number and the surrogate sensitivity `A_δ`;
//! * [`noise`]: seeded Laplace noise and reproducible stream splitting;
//! * [`detect`]: the CUSUM, DP-CUSUM, δ-DP-CUSUM and sliding-window baseline
//!   state machines;
//! * [`calibrate`]: the ARL lower bound, threshold selection, WADD bound terms
//!   and the effective-privacy heatmap;
//! * [`harness`]: Monte Carlo ARL/WADD estimation, delay-vs-ARL sweeps, the
//!   empirical privacy audit and CSV persistence.
//!
//! ```
//! use dpcusum::{calibrate, detect::DetectorConfig, harness, ModelPair};
//!
//! let model = ModelPair::laplace_shift(0.2).unwrap();
//! let cal = calibrate::solve_threshold(100.0, 0.8, 0.4).unwrap();
//! let cfg = DetectorConfig::dp_cusum(&model, 0.8, cal.b).unwrap();
//! let wadd = harness::estimate_wadd(&cfg, &model, 50, 100_000, 1).unwrap();
//! assert!(wadd.estimate > 1.0);
//! ```

pub mod calibrate;
pub mod detect;
mod error;
pub mod harness;
pub mod model;
pub mod noise;
pub mod normal;

pub use error::{Error, Result};
pub use model::{ModelKind, ModelPair, Regime, SensitivityInfo};
