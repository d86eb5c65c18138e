// Copyright 2026 The dpcusum Authors
// SPDX-License-Identifier: Apache-2.0

use super::mean_and_se;
use crate::detect::{run_to_stop, Changepoint, Detector, DetectorConfig};
use crate::error::{Error, Result};
use crate::model::ModelPair;
use crate::noise::{RngStream, TrialStreams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Runs whose censored fraction exceeds this are rejected by [`check_censoring`].
pub const MAX_CENSORED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    /// Mean stopping time with no change (τ = ∞).
    #[serde(rename = "ARL")]
    Arl,
    /// Mean stopping time with the change at τ = 0, which is where the
    /// worst-case delay of these procedures is attained.
    #[serde(rename = "WADD")]
    Wadd,
}

impl Metric {
    fn changepoint(self) -> Changepoint {
        match self {
            Metric::Arl => Changepoint::Never,
            Metric::Wadd => Changepoint::At(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub metric: Metric,
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
    pub horizon: u64,
    pub censored_fraction: f64,
    pub config: DetectorConfig,
    pub model: ModelPair,
    pub master_seed: u64,
}

/// Censoring horizon for ARL runs targeting `γ`: `max(10⁶, 100γ)`.
pub fn arl_horizon(gamma: f64) -> u64 {
    (100.0 * gamma).max(1e6).min(u64::MAX as f64 / 2.0) as u64
}

/// Monte Carlo mean of the stopping time over `trials` independent streams.
pub fn estimate(
    metric: Metric,
    cfg: &DetectorConfig,
    model: &ModelPair,
    trials: u64,
    horizon: u64,
    seed: u64,
) -> Result<ExperimentReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    // Surface configuration errors once, before fanning out.
    Detector::new(cfg, model, &mut RngStream::new(seed, u64::MAX))?;

    let cp = metric.changepoint();
    let times = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut streams = TrialStreams::new(seed, i);
            run_to_stop(cfg, model, cp, horizon, &mut streams, false).map(|o| o.stopping_time)
        })
        .collect::<Result<Vec<_>>>()?;

    let censored = times.iter().filter(|t| t.is_censored()).count();
    let values: Vec<f64> = times.iter().map(|t| t.value() as f64).collect();
    let (mean, se) = mean_and_se(&values);
    Ok(ExperimentReport {
        metric,
        estimate: mean,
        std_error: se,
        trials,
        horizon,
        censored_fraction: censored as f64 / trials as f64,
        config: cfg.clone(),
        model: *model,
        master_seed: seed,
    })
}

/// Average run length: every observation pre-change. Censored runs count at
/// the horizon, which biases the estimate downward.
pub fn estimate_arl(
    cfg: &DetectorConfig,
    model: &ModelPair,
    trials: u64,
    horizon: u64,
    seed: u64,
) -> Result<ExperimentReport> {
    estimate(Metric::Arl, cfg, model, trials, horizon, seed)
}

/// Worst-case average detection delay, estimated as `E₀[T]` with the change at τ = 0.
pub fn estimate_wadd(
    cfg: &DetectorConfig,
    model: &ModelPair,
    trials: u64,
    horizon: u64,
    seed: u64,
) -> Result<ExperimentReport> {
    estimate(Metric::Wadd, cfg, model, trials, horizon, seed)
}

/// Fails when more than `max_fraction` of the runs hit the horizon.
pub fn check_censoring(report: &ExperimentReport, max_fraction: f64) -> Result<()> {
    if report.censored_fraction > max_fraction {
        Err(Error::OutOfDomain(format!(
            "{:?} run censored in {:.2}% of {} trials at horizon {} (limit {:.2}%)",
            report.metric,
            100.0 * report.censored_fraction,
            report.trials,
            report.horizon,
            100.0 * max_fraction
        )))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace(mu: f64) -> ModelPair {
        ModelPair::laplace_shift(mu).unwrap()
    }

    #[test]
    fn negative_threshold_stops_immediately() {
        // ℓ ≥ −0.2 for this model, so S₁ ≥ −1 always.
        let model = laplace(0.2);
        let r = estimate_arl(&DetectorConfig::cusum(-1.0).unwrap(), &model, 500, 1000, 3).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.std_error, 0.0);
        assert_eq!(r.censored_fraction, 0.0);
    }

    #[test]
    fn estimates_are_reproducible() {
        let model = laplace(0.5);
        let cfg = DetectorConfig::dp_cusum(&model, 1.0, 3.0).unwrap();
        let a = estimate_arl(&cfg, &model, 300, 100_000, 12).unwrap();
        let b = estimate_arl(&cfg, &model, 300, 100_000, 12).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        let c = estimate_arl(&cfg, &model, 300, 100_000, 13).unwrap();
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn independent_of_worker_count() {
        let model = laplace(0.5);
        let cfg = DetectorConfig::dp_cusum(&model, 1.0, 3.0).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_wadd(&cfg, &model, 400, 100_000, 5).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn censoring_is_reported_and_checked() {
        let model = laplace(0.5);
        let cfg = DetectorConfig::cusum(f64::INFINITY).unwrap();
        let r = estimate_arl(&cfg, &model, 10, 50, 1).unwrap();
        assert_eq!(r.censored_fraction, 1.0);
        assert_eq!(r.estimate, 50.0);
        assert!(check_censoring(&r, MAX_CENSORED_FRACTION).is_err());
        let ok = estimate_wadd(&DetectorConfig::cusum(2.0).unwrap(), &model, 10, 100_000, 1).unwrap();
        assert!(check_censoring(&ok, MAX_CENSORED_FRACTION).is_ok());
    }

    #[test]
    fn noiseless_dp_wadd_equals_cusum() {
        let model = laplace(0.5);
        let cusum = DetectorConfig::cusum(4.0).unwrap();
        let dp = DetectorConfig::dp_cusum(&model, 1.0, 4.0).unwrap().without_noise();
        let a = estimate_wadd(&cusum, &model, 500, 100_000, 77).unwrap();
        let b = estimate_wadd(&dp, &model, 500, 100_000, 77).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert_eq!(a.std_error, b.std_error);
    }

    #[test]
    fn wadd_nondecreasing_along_ladder() {
        let model = laplace(0.5);
        let base = DetectorConfig::dp_cusum(&model, 1.0, 0.0).unwrap();
        let mut last = 0.0;
        for b in [1.0, 2.0, 3.0, 5.0, 8.0] {
            let r = estimate_wadd(&base.with_threshold(b), &model, 300, 100_000, 9).unwrap();
            assert!(r.estimate >= last);
            last = r.estimate;
        }
    }

    #[test]
    fn cusum_delay_slope_matches_kl() {
        // First-order delay is b / I₀ = 8b for a Gaussian shift of 0.5.
        let model = ModelPair::gaussian_shift(0.5).unwrap();
        let b = 25.0;
        let r = estimate_wadd(&DetectorConfig::cusum(b).unwrap(), &model, 2000, 1_000_000, 4).unwrap();
        let ratio = r.estimate / b;
        assert!((ratio - 8.0).abs() < 0.8, "{ratio}");
    }

    #[test]
    fn invalid_arguments() {
        let model = laplace(0.5);
        let cfg = DetectorConfig::cusum(1.0).unwrap();
        assert!(estimate_arl(&cfg, &model, 0, 10, 1).is_err());
        assert!(estimate_arl(&cfg, &model, 10, 0, 1).is_err());
        let g = ModelPair::gaussian_shift(0.5).unwrap();
        let forged = DetectorConfig::dp_cusum(&model, 1.0, 1.0).unwrap();
        assert!(matches!(estimate_arl(&forged, &g, 10, 10, 1), Err(Error::Config(_))));
    }

    #[test]
    fn horizon_rule() {
        assert_eq!(arl_horizon(100.0), 1_000_000);
        assert_eq!(arl_horizon(1e5), 10_000_000);
    }
}
