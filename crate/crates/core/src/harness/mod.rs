// Copyright 2026 The dpcusum Authors
// SPDX-License-Identifier: Apache-2.0

//! Monte Carlo experiment engine.
//!
//! Every estimate is a pure function of its configuration and master seed.
//! Trial `i` draws from the streams `(seed, 4i + k)` only, trials run in
//! parallel on the ambient rayon pool, and results are reduced in trial order,
//! so the worker count never changes a reported number.

mod audit;
mod config;
mod estimate;
mod oracle;
mod persist;
mod sweep;

pub use audit::{privacy_audit, AuditEntry, AuditParams, AuditReport, AUDIT_SLACK};
pub use config::{AuditSection, ExperimentConfig, HeatmapSection};
pub use estimate::{
    arl_horizon, check_censoring, estimate, estimate_arl, estimate_wadd, ExperimentReport, Metric,
    MAX_CENSORED_FRACTION,
};
pub use oracle::{mgf_oracle_suite, tail_oracle_suite, MgfCheck, TailCheck};
pub use persist::{read_sweep_csv, write_heatmap_csv, write_sweep_csv, SWEEP_HEADER, HEATMAP_HEADER};
pub use sweep::{curves, matched_comparison, sweep_delay_vs_arl, Curve, MatchedPoint, SweepRow};

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Sample mean and standard error of the mean.
pub(crate) fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, (ss / (n - 1.0)).sqrt() / n.sqrt())
}
