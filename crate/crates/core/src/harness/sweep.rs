// Copyright 2026 The dpcusum Authors
// SPDX-License-Identifier: Apache-2.0

use super::estimate::{estimate, Metric};
use crate::detect::{DetectorSpec, Variant};
use crate::error::{Error, Result};
use crate::model::ModelPair;
use crate::noise::derive_seed;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// One point of a delay-vs-ARL curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub detector: Variant,
    pub model: ModelPair,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub b: f64,
    pub arl_est: f64,
    pub arl_se: f64,
    pub wadd_est: f64,
    pub wadd_se: f64,
    pub trials: u64,
    pub seed: u64,
    /// Not persisted; kept so callers can enforce the censoring limit.
    #[serde(skip)]
    pub arl_censored: f64,
    #[serde(skip)]
    pub wadd_censored: f64,
}

fn cmp_opt(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Estimates ARL and WADD for every `(detector, b)` pair.
///
/// ARL trials use the seed derived for `"arl"` and WADD trials the one for
/// `"wadd"`, shared across detectors and thresholds. Detectors therefore see
/// common data streams, stopping times are pathwise monotone along each
/// threshold ladder, and adding or removing thresholds leaves the other rows
/// unchanged. Detectors without their own `thresholds` use `default_thresholds`.
pub fn sweep_delay_vs_arl(
    detectors: &[DetectorSpec],
    default_thresholds: &[f64],
    model: &ModelPair,
    trials: u64,
    horizon: u64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if detectors.is_empty() {
        return Err(Error::InvalidInput("sweep needs at least one detector".into()));
    }
    let arl_seed = derive_seed(seed, "arl");
    let wadd_seed = derive_seed(seed, "wadd");
    let mut rows = Vec::new();
    for spec in detectors {
        let ladder = spec.thresholds.as_deref().unwrap_or(default_thresholds);
        if ladder.is_empty() {
            return Err(Error::InvalidInput(format!(
                "no thresholds given for detector {}",
                spec.variant.as_str()
            )));
        }
        for &b in ladder {
            let cfg = spec.resolve(model, b)?;
            let arl = estimate(Metric::Arl, &cfg, model, trials, horizon, arl_seed)?;
            let wadd = estimate(Metric::Wadd, &cfg, model, trials, horizon, wadd_seed)?;
            rows.push(SweepRow {
                detector: cfg.variant,
                model: *model,
                epsilon: cfg.epsilon,
                delta: cfg.delta,
                b,
                arl_est: arl.estimate,
                arl_se: arl.std_error,
                wadd_est: wadd.estimate,
                wadd_se: wadd.std_error,
                trials,
                seed,
                arl_censored: arl.censored_fraction,
                wadd_censored: wadd.censored_fraction,
            });
        }
    }
    rows.sort_by(|a, b| {
        a.detector
            .cmp(&b.detector)
            .then(cmp_opt(a.epsilon, b.epsilon))
            .then(cmp_opt(a.delta, b.delta))
            .then(a.b.total_cmp(&b.b))
    });
    Ok(rows)
}

/// Rows of one `(detector, ε, δ)` combination as `(ARL, WADD)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub detector: Variant,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    /// Sorted by ARL.
    pub points: Vec<(f64, f64)>,
}

impl Curve {
    /// WADD at `arl`, linear in `log ARL` between neighbouring points;
    /// `None` outside the sampled ARL range.
    pub fn wadd_at(&self, arl: f64) -> Option<f64> {
        let pts = &self.points;
        let first = pts.first()?;
        let last = pts.last()?;
        if arl < first.0 || arl > last.0 || arl <= 0.0 {
            return None;
        }
        if let Some(&(_, w)) = pts.iter().find(|p| p.0 == arl) {
            return Some(w);
        }
        let i = pts.iter().position(|p| p.0 > arl)?;
        let (a0, w0) = pts[i - 1];
        let (a1, w1) = pts[i];
        let frac = (arl.ln() - a0.ln()) / (a1.ln() - a0.ln());
        Some(w0 + frac * (w1 - w0))
    }

    pub fn arl_range(&self) -> Option<(f64, f64)> {
        Some((self.points.first()?.0, self.points.last()?.0))
    }

    pub fn label(&self) -> String {
        let mut s = self.detector.as_str().to_string();
        if let Some(e) = self.epsilon {
            s.push_str(&format!("(eps={e}"));
            if let Some(d) = self.delta {
                s.push_str(&format!(",delta={d}"));
            }
            s.push(')');
        }
        s
    }
}

/// Groups sweep rows into curves, preserving first-appearance order.
pub fn curves(rows: &[SweepRow]) -> Vec<Curve> {
    let mut out: Vec<Curve> = Vec::new();
    for r in rows {
        let key = (r.detector, r.epsilon, r.delta);
        match out.iter_mut().find(|c| (c.detector, c.epsilon, c.delta) == key) {
            Some(c) => c.points.push((r.arl_est, r.wadd_est)),
            None => out.push(Curve {
                detector: r.detector,
                epsilon: r.epsilon,
                delta: r.delta,
                points: vec![(r.arl_est, r.wadd_est)],
            }),
        }
    }
    for c in &mut out {
        c.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

/// WADD of one curve at one common ARL value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPoint {
    pub arl: f64,
    pub detector: Variant,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub wadd: Option<f64>,
}

/// Interpolates every curve onto the common ARL grid.
pub fn matched_comparison(rows: &[SweepRow], arl_grid: &[f64]) -> Vec<MatchedPoint> {
    let cs = curves(rows);
    let mut out = Vec::with_capacity(cs.len() * arl_grid.len());
    for &arl in arl_grid {
        for c in &cs {
            out.push(MatchedPoint {
                arl,
                detector: c.detector,
                epsilon: c.epsilon,
                delta: c.delta,
                wadd: c.wadd_at(arl),
            });
        }
    }
    out
}
