// Copyright 2026 The dpcusum Authors
// SPDX-License-Identifier: Apache-2.0

//! Statistical oracles on the pre-change CUSUM statistic.
//!
//! Under `f₀`, for every `t ≥ 1`, `b ≥ 0` and `0 < λ < 1`:
//!
//! ```text
//! P∞(S_t ≥ b) ≤ e^{−b}          E∞[e^{λ S_t}] ≤ 1 / (1 − λ)
//! ```
//!
//! The suites below simulate `S_t` and compare empirical frequencies and means
//! against these bounds with a three-standard-error allowance.

use super::mean_and_se;
use crate::error::{Error, Result};
use crate::model::{ModelPair, Regime};
use crate::noise::{Purpose, RngStream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub b: f64,
    pub t: u64,
    pub frequency: f64,
    pub bound: f64,
    /// Binomial standard error at the bound, `√(e^{−b}(1 − e^{−b}) / n)`.
    pub std_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfCheck {
    pub lambda: f64,
    pub t: u64,
    pub mean: f64,
    pub std_error: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `S_t` at each requested `t`, one row per trial.
fn simulate_paths(model: &ModelPair, ts: &[u64], trials: u64, seed: u64) -> Result<Vec<Vec<f64>>> {
    if ts.is_empty() || ts.contains(&0) {
        return Err(Error::InvalidInput("times must be nonempty and ≥ 1".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let t_max = *ts.iter().max().expect("nonempty");
    Ok((0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::for_trial(seed, i, Purpose::Data);
            let mut s = 0.0f64;
            let mut at = vec![0.0; ts.len()];
            for t in 1..=t_max {
                s = s.max(0.0) + model.llr_unchecked(model.sample(Regime::Pre, &mut rng));
                for (slot, &want) in at.iter_mut().zip(ts) {
                    if want == t {
                        *slot = s;
                    }
                }
            }
            at
        })
        .collect())
}

/// Empirical `P∞(S_t ≥ b)` against `e^{−b}` for every `(b, t)` pair.
pub fn tail_oracle_suite(
    model: &ModelPair,
    bs: &[f64],
    ts: &[u64],
    trials: u64,
    seed: u64,
) -> Result<Vec<TailCheck>> {
    if bs.iter().any(|&b| !(b >= 0.0)) {
        return Err(Error::InvalidInput("tail thresholds must be ≥ 0".into()));
    }
    let paths = simulate_paths(model, ts, trials, seed)?;
    let n = trials as f64;
    let mut out = Vec::new();
    for &b in bs {
        for (j, &t) in ts.iter().enumerate() {
            let hits = paths.iter().filter(|p| p[j] >= b).count();
            let frequency = hits as f64 / n;
            let bound = (-b).exp();
            let std_error = (bound * (1.0 - bound) / n).sqrt();
            out.push(TailCheck {
                b,
                t,
                frequency,
                bound,
                std_error,
                pass: frequency <= bound + 3.0 * std_error,
            });
        }
    }
    Ok(out)
}

/// Empirical `E∞[e^{λ S_t}]` against `1 / (1 − λ)`.
pub fn mgf_oracle_suite(
    model: &ModelPair,
    lambdas: &[f64],
    ts: &[u64],
    trials: u64,
    seed: u64,
) -> Result<Vec<MgfCheck>> {
    if lambdas.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
        return Err(Error::InvalidInput("lambda must lie in (0, 1)".into()));
    }
    let paths = simulate_paths(model, ts, trials, seed)?;
    let mut out = Vec::new();
    for &lambda in lambdas {
        for (j, &t) in ts.iter().enumerate() {
            let values: Vec<f64> = paths.iter().map(|p| (lambda * p[j]).exp()).collect();
            let (mean, std_error) = mean_and_se(&values);
            let bound = 1.0 / (1.0 - lambda);
            out.push(MgfCheck {
                lambda,
                t,
                mean,
                std_error,
                bound,
                pass: mean <= bound + 3.0 * std_error,
            });
        }
    }
    Ok(out)
}
