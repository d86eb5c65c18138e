// Copyright 2026 The dpcusum Authors
// SPDX-License-Identifier: Apache-2.0

//! Empirical check of the stopping-time privacy guarantee.
//!
//! For a fixed binary stream `X` and its neighbour `X'` (one bit flipped),
//! DP-CUSUM is run under `noise_draws` independent realizations of `(W, Z)`.
//! Both streams see the same realization, so differences in the outcome
//! histogram are caused by the flipped entry alone. For each event
//! `{T̃ = t}`, `t ≤ horizon`, plus the event "no alarm by the horizon", the
//! probability ratio is bounded above by `upper(p) / lower(p')` from exact
//! Clopper–Pearson intervals, in both directions.

use crate::detect::{Decision, Detector, DetectorConfig};
use crate::error::{Error, Result};
use crate::model::ModelPair;
use crate::noise::RngStream;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::inv_beta_reg;

/// Multiplicative slack on `e^ε` absorbing Monte Carlo error.
pub const AUDIT_SLACK: f64 = 1.1;
/// Two-sided confidence of each binomial interval.
const CONFIDENCE: f64 = 0.999;
const MAX_HORIZON: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditParams {
    pub model: ModelPair,
    pub stream: Vec<bool>,
    /// Entry flipped to form `X'`; `None` audits `X` against itself.
    pub neighbor_index: Option<usize>,
    pub epsilon: f64,
    pub b: f64,
    pub noise_draws: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    /// Alarm time; `horizon + 1` stands for "no alarm by the horizon".
    pub t: u64,
    pub p_x: f64,
    pub p_xprime: f64,
    /// Larger of the two point ratios (1 when both probabilities are 0).
    pub ratio: f64,
    /// Upper confidence bound on the larger ratio; infinite if a lower bound is 0.
    pub ratio_upper: f64,
    /// False when either probability is below `10 / noise_draws`.
    pub reliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub horizon: u64,
    pub epsilon: f64,
    pub b: f64,
    pub noise_draws: u64,
    pub seed: u64,
    pub entries: Vec<AuditEntry>,
    pub max_upper_bound: f64,
    pub limit: f64,
    pub pass: bool,
}

fn clopper_pearson(k: u64, n: u64) -> (f64, f64) {
    let alpha = 1.0 - CONFIDENCE;
    let (k, n) = (k as f64, n as f64);
    let lower = if k == 0.0 {
        0.0
    } else {
        inv_beta_reg(k, n - k + 1.0, 0.5 * alpha)
    };
    let upper = if k == n {
        1.0
    } else {
        inv_beta_reg(k + 1.0, n - k, 1.0 - 0.5 * alpha)
    };
    (lower, upper)
}

fn outcome(cfg: &DetectorConfig, model: &ModelPair, llrs: &[f64], rng: &mut RngStream) -> usize {
    let mut det = Detector::new(cfg, model, rng).expect("validated config");
    for (i, &l) in llrs.iter().enumerate() {
        if det.step_llr(l, rng).expect("not stopped") == Decision::Stop {
            return i;
        }
    }
    llrs.len()
}

pub fn privacy_audit(params: &AuditParams) -> Result<AuditReport> {
    let model = params.model;
    if !matches!(model, ModelPair::BernoulliShift { .. }) {
        return Err(Error::Config("the privacy audit needs a bernoulli_shift model".into()));
    }
    let horizon = params.stream.len();
    if horizon == 0 || horizon > MAX_HORIZON {
        return Err(Error::InvalidInput(format!(
            "audit stream length must be in 1..={MAX_HORIZON}, got {horizon}"
        )));
    }
    if let Some(k) = params.neighbor_index {
        if k >= horizon {
            return Err(Error::InvalidInput(format!(
                "neighbor index {k} outside stream of length {horizon}"
            )));
        }
    }
    if params.noise_draws == 0 {
        return Err(Error::InvalidInput("noise_draws must be at least 1".into()));
    }
    let cfg = DetectorConfig::dp_cusum(&model, params.epsilon, params.b)?;

    let llr = |bit: bool| model.llr_unchecked(if bit { 1.0 } else { 0.0 });
    let x: Vec<f64> = params.stream.iter().map(|&b| llr(b)).collect();
    let mut xp = params.stream.clone();
    if let Some(k) = params.neighbor_index {
        xp[k] = !xp[k];
    }
    let xp: Vec<f64> = xp.iter().map(|&b| llr(b)).collect();

    let events = horizon + 1;
    let counts = (0..params.noise_draws)
        .into_par_iter()
        .fold(
            || vec![0u64; 2 * events],
            |mut acc, i| {
                let mut rng = RngStream::new(params.seed, i);
                let mut rng_prime = rng.clone();
                acc[outcome(&cfg, &model, &x, &mut rng)] += 1;
                acc[events + outcome(&cfg, &model, &xp, &mut rng_prime)] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; 2 * events],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(u, v)| *u += v);
                a
            },
        );

    let n = params.noise_draws;
    let floor = 10.0 / n as f64;
    let entries: Vec<AuditEntry> = (0..events)
        .map(|e| {
            let (kx, kp) = (counts[e], counts[events + e]);
            let (px, pp) = (kx as f64 / n as f64, kp as f64 / n as f64);
            let (lx, ux) = clopper_pearson(kx, n);
            let (lp, up) = clopper_pearson(kp, n);
            let ratio = if kx == kp { 1.0 } else { (px / pp).max(pp / px) };
            let ratio_upper = (ux / lp).max(up / lx);
            AuditEntry {
                t: e as u64 + 1,
                p_x: px,
                p_xprime: pp,
                ratio,
                ratio_upper,
                reliable: px >= floor && pp >= floor,
            }
        })
        .collect();
    let max_upper_bound = entries
        .iter()
        .filter(|e| e.reliable)
        .map(|e| e.ratio_upper)
        .fold(1.0, f64::max);
    let limit = params.epsilon.exp() * AUDIT_SLACK;
    Ok(AuditReport {
        horizon: horizon as u64,
        epsilon: params.epsilon,
        b: params.b,
        noise_draws: n,
        seed: params.seed,
        entries,
        max_upper_bound,
        limit,
        pass: max_upper_bound <= limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(neighbor: Option<usize>, epsilon: f64, draws: u64) -> AuditParams {
        AuditParams {
            model: ModelPair::bernoulli_shift(0.3, 0.6).unwrap(),
            stream: vec![true, false, true, true, false, true],
            neighbor_index: neighbor,
            epsilon,
            b: 1.0,
            noise_draws: draws,
            seed: 3,
        }
    }

    #[test]
    fn identical_streams_give_unit_ratios() {
        let r = privacy_audit(&params(None, 1.0, 20_000)).unwrap();
        assert_eq!(r.entries.len(), 7);
        assert!(r.entries.iter().all(|e| e.ratio == 1.0 && e.p_x == e.p_xprime));
        assert!(r.pass);
        let total: f64 = r.entries.iter().map(|e| e.p_x).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weak_privacy_passes_easily() {
        let r = privacy_audit(&params(Some(2), 10.0, 20_000)).unwrap();
        assert!(r.pass);
        assert!(r.max_upper_bound < r.limit / 50.0, "{r:#?}");
    }

    #[test]
    fn clopper_pearson_brackets_estimate() {
        let (lo, hi) = clopper_pearson(50, 1000);
        assert!(lo < 0.05 && 0.05 < hi);
        assert_eq!(clopper_pearson(0, 10).0, 0.0);
        assert_eq!(clopper_pearson(10, 10).1, 1.0);
        // 99.9% exact interval for 0 successes out of 1000: 1 − 0.0005^{1/1000}.
        let (_, hi0) = clopper_pearson(0, 1000);
        assert!((hi0 - (1.0 - 0.0005f64.powf(1e-3))).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut p = params(Some(1), 1.0, 100);
        p.model = ModelPair::laplace_shift(0.5).unwrap();
        assert!(privacy_audit(&p).is_err());
        let mut p = params(Some(6), 1.0, 100);
        assert!(privacy_audit(&p).is_err());
        p.neighbor_index = None;
        p.stream = vec![true; 13];
        assert!(privacy_audit(&p).is_err());
        p.stream = vec![];
        assert!(privacy_audit(&p).is_err());
        let p = params(Some(1), 1.0, 0);
        assert!(privacy_audit(&p).is_err());
    }

    #[test]
    fn non_private_detector_would_fail() {
        // At ε = 20 the noise cannot hide the flip; the ratios must be far
        // above what a strongly private mechanism (ε = 0.05) would allow.
        let r = privacy_audit(&params(Some(0), 20.0, 200_000)).unwrap();
        let worst = r
            .entries
            .iter()
            .filter(|e| e.reliable)
            .map(|e| e.ratio)
            .fold(1.0, f64::max);
        assert!(worst > 0.05f64.exp() * AUDIT_SLACK, "{worst}");
    }
}
