// Copyright 2026 The dpcusum Authors
// SPDX-License-Identifier: Apache-2.0

//! The guide under `book/src`, one module per chapter, so that `cargo test`
//! compiles and runs every Rust listing in it.

#[doc = include_str!("../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../book/src/models.md")]
pub mod models {}
#[doc = include_str!("../../book/src/detectors.md")]
pub mod detectors {}
#[doc = include_str!("../../book/src/calibration.md")]
pub mod calibration {}
#[doc = include_str!("../../book/src/unbounded.md")]
pub mod unbounded {}
#[doc = include_str!("../../book/src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../../book/src/audit.md")]
pub mod audit {}
#[doc = include_str!("../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../README.md")]
pub mod readme {}
