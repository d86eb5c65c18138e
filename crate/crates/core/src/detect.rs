// Copyright 2026 The dpcusum Authors
// SPDX-License-Identifier: Apache-2.0

//! Streaming detectors.
//!
//! All four variants share the CUSUM recursion
//!
//! ```text
//! S₀ = 0,   S_t = max(0, S_{t−1}) + ℓ(X_t) = max_{1≤k≤t} Σ_{j=k..t} ℓ(X_j)
//! ```
//!
//! and differ in how the alarm is raised:
//!
//! * `Cusum` stops at the first `t` with `S_t ≥ b`.
//! * `DpCusum` draws `W ∼ Lap(2Δ/ε)` once, then at each step draws a fresh
//!   `Z_t ∼ Lap(2Δ/ε)` and stops at the first `t` with `S_t + Z_t ≥ b + W`.
//!   No comparison happens at `t = 0`.
//! * `DeltaDpCusum` is `DpCusum` with Δ replaced by `A_δ`, for models whose
//!   LLR is unbounded.
//! * `OnlinePcpd` keeps the last `m` LLR values, and once the window is full
//!   compares `max_k Σ_{j=k..m} ℓ_j + Lap(4Δ/ε)` against `b + Lap(8Δ/ε)`, the
//!   threshold noise being drawn once.

use crate::error::{Error, Result};
use crate::model::{ModelPair, Regime};
use crate::noise::{detector_scale, lap_sample, NoiseScale, TrialStreams};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Window size used by the sliding-window baseline unless configured otherwise.
pub const DEFAULT_WINDOW: usize = 700;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Cusum,
    DpCusum,
    DeltaDpCusum,
    OnlinePcpd,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Cusum => "cusum",
            Variant::DpCusum => "dp_cusum",
            Variant::DeltaDpCusum => "delta_dp_cusum",
            Variant::OnlinePcpd => "online_pcpd",
        }
    }

    pub fn is_private(self) -> bool {
        self != Variant::Cusum
    }

    fn noise_multipliers(self) -> Option<(f64, f64)> {
        match self {
            Variant::Cusum => None,
            Variant::DpCusum | Variant::DeltaDpCusum => Some((2.0, 2.0)),
            Variant::OnlinePcpd => Some((4.0, 8.0)),
        }
    }
}

/// A fully resolved detector: threshold, privacy level and the sensitivity
/// that calibrates the noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub variant: Variant,
    pub b: f64,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    /// Δ for bounded models, `A_δ` otherwise.
    pub sensitivity_used: Option<f64>,
    pub window: usize,
    /// When set, every noise draw is replaced by exactly 0.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub noiseless: bool,
}

fn check_threshold(b: f64) -> Result<()> {
    if b.is_nan() {
        Err(Error::InvalidInput("threshold b must not be NaN".into()))
    } else {
        Ok(())
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("epsilon must be > 0, got {epsilon}")))
    }
}

impl DetectorConfig {
    pub fn cusum(b: f64) -> Result<Self> {
        check_threshold(b)?;
        Ok(DetectorConfig {
            variant: Variant::Cusum,
            b,
            epsilon: None,
            delta: None,
            sensitivity_used: None,
            window: DEFAULT_WINDOW,
            noiseless: false,
        })
    }

    /// DP-CUSUM with the model's global sensitivity. Fails on unbounded models.
    pub fn dp_cusum(model: &ModelPair, epsilon: f64, b: f64) -> Result<Self> {
        check_threshold(b)?;
        check_epsilon(epsilon)?;
        let delta = model.sensitivity().delta.ok_or_else(|| {
            Error::Config(format!(
                "dp_cusum requires a bounded LLR sensitivity but {} is unbounded; \
                 use delta_dp_cusum with a failure probability delta",
                model.kind().as_str()
            ))
        })?;
        Ok(DetectorConfig {
            variant: Variant::DpCusum,
            b,
            epsilon: Some(epsilon),
            delta: None,
            sensitivity_used: Some(delta),
            window: DEFAULT_WINDOW,
            noiseless: false,
        })
    }

    /// DP-CUSUM calibrated by `A_δ`.
    pub fn delta_dp_cusum(model: &ModelPair, epsilon: f64, delta: f64, b: f64) -> Result<Self> {
        check_threshold(b)?;
        check_epsilon(epsilon)?;
        let a = model.a_delta(delta)?;
        Ok(DetectorConfig {
            variant: Variant::DeltaDpCusum,
            b,
            epsilon: Some(epsilon),
            delta: Some(delta),
            sensitivity_used: Some(a),
            window: DEFAULT_WINDOW,
            noiseless: false,
        })
    }

    /// Sliding-window baseline. Uses Δ when bounded, else `A_δ` (and then `delta` is required).
    pub fn online_pcpd(
        model: &ModelPair,
        epsilon: f64,
        delta: Option<f64>,
        window: usize,
        b: f64,
    ) -> Result<Self> {
        check_threshold(b)?;
        check_epsilon(epsilon)?;
        if window == 0 {
            return Err(Error::InvalidInput("window must be at least 1".into()));
        }
        let (sens, delta) = match (model.sensitivity().delta, delta) {
            (Some(d), _) => (d, None),
            (None, Some(delta)) => (model.a_delta(delta)?, Some(delta)),
            (None, None) => {
                return Err(Error::Config(format!(
                    "online_pcpd on unbounded model {} requires delta",
                    model.kind().as_str()
                )))
            }
        };
        Ok(DetectorConfig {
            variant: Variant::OnlinePcpd,
            b,
            epsilon: Some(epsilon),
            delta,
            sensitivity_used: Some(sens),
            window,
            noiseless: false,
        })
    }

    /// Same detector with a different threshold.
    pub fn with_threshold(&self, b: f64) -> Self {
        DetectorConfig { b, ..self.clone() }
    }

    /// Same detector with all noise draws forced to zero.
    pub fn without_noise(&self) -> Self {
        DetectorConfig {
            noiseless: true,
            ..self.clone()
        }
    }

    fn scales(&self) -> Option<(NoiseScale, NoiseScale)> {
        if self.noiseless {
            return None;
        }
        let (ms, mt) = self.variant.noise_multipliers()?;
        let eps = self.epsilon?;
        let sens = self.sensitivity_used?;
        Some((
            detector_scale(eps, sens, ms).ok()?,
            detector_scale(eps, sens, mt).ok()?,
        ))
    }

    /// Scale of the per-step statistic noise, if any.
    pub fn statistic_noise(&self) -> Option<NoiseScale> {
        self.scales().map(|s| s.0)
    }

    /// Scale of the one-off threshold noise, if any.
    pub fn threshold_noise(&self) -> Option<NoiseScale> {
        self.scales().map(|s| s.1)
    }
}

/// User-facing detector description, resolved against a model and threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    /// Per-detector threshold ladder, overriding the config-wide list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
}

impl DetectorSpec {
    pub fn resolve(&self, model: &ModelPair, b: f64) -> Result<DetectorConfig> {
        let need_eps = || {
            self.epsilon.ok_or_else(|| {
                Error::Config(format!("{} requires epsilon", self.variant.as_str()))
            })
        };
        match self.variant {
            Variant::Cusum => DetectorConfig::cusum(b),
            Variant::DpCusum => DetectorConfig::dp_cusum(model, need_eps()?, b),
            Variant::DeltaDpCusum => {
                let delta = self
                    .delta
                    .ok_or_else(|| Error::Config("delta_dp_cusum requires delta".into()))?;
                DetectorConfig::delta_dp_cusum(model, need_eps()?, delta, b)
            }
            Variant::OnlinePcpd => DetectorConfig::online_pcpd(
                model,
                need_eps()?,
                self.delta,
                self.window.unwrap_or(DEFAULT_WINDOW),
                b,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Stop,
}

/// Evolving state of one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorState {
    pub t: u64,
    /// CUSUM statistic `S_t`; the windowed statistic for the baseline.
    pub s: f64,
    /// Privatized statistic; `None` until the first comparison.
    pub s_tilde: Option<f64>,
    /// Threshold noise, fixed at construction.
    pub w: f64,
    pub stopped: bool,
}

/// Max suffix sum over the last `m` values, maintained with a monotone deque
/// of prefix sums: `max_k Σ_{j=k..i} ℓ_j = P_i − min_{i−m ≤ q < i} P_q`.
#[derive(Debug, Clone)]
struct SlidingWindow {
    m: u64,
    count: u64,
    prefix: f64,
    mins: VecDeque<(u64, f64)>,
}

impl SlidingWindow {
    fn new(m: usize) -> Self {
        SlidingWindow {
            m: m as u64,
            count: 0,
            prefix: 0.0,
            mins: VecDeque::with_capacity(m + 1),
        }
    }

    fn push(&mut self, llr: f64) -> Option<f64> {
        let q = self.count;
        while self.mins.back().is_some_and(|&(_, p)| p >= self.prefix) {
            self.mins.pop_back();
        }
        self.mins.push_back((q, self.prefix));
        self.count += 1;
        self.prefix += llr;
        let oldest = self.count.saturating_sub(self.m);
        while self.mins.front().is_some_and(|&(idx, _)| idx < oldest) {
            self.mins.pop_front();
        }
        if self.count >= self.m {
            Some(self.prefix - self.mins.front().map_or(0.0, |&(_, p)| p))
        } else {
            None
        }
    }
}

/// One running detector instance.
#[derive(Debug, Clone)]
pub struct Detector {
    cfg: DetectorConfig,
    model: ModelPair,
    statistic_noise: Option<NoiseScale>,
    window: Option<SlidingWindow>,
    state: DetectorState,
}

impl Detector {
    /// Builds a detector at `t = 0`, drawing the threshold noise from `rng`.
    pub fn new<R: Rng + ?Sized>(cfg: &DetectorConfig, model: &ModelPair, rng: &mut R) -> Result<Self> {
        check_threshold(cfg.b)?;
        if cfg.variant.is_private() {
            let eps = cfg.epsilon.ok_or_else(|| {
                Error::Config(format!("{} requires epsilon", cfg.variant.as_str()))
            })?;
            check_epsilon(eps)?;
            match cfg.sensitivity_used {
                Some(s) if s.is_finite() && s > 0.0 => {}
                _ => {
                    return Err(Error::Config(format!(
                        "{} requires a positive resolved sensitivity",
                        cfg.variant.as_str()
                    )))
                }
            }
        }
        if cfg.variant == Variant::DpCusum && !model.sensitivity().bounded {
            return Err(Error::Config(format!(
                "dp_cusum on unbounded model {}; use delta_dp_cusum",
                model.kind().as_str()
            )));
        }
        let scales = cfg.scales();
        let w = scales.map_or(0.0, |(_, threshold)| lap_sample(threshold, rng));
        let window = (cfg.variant == Variant::OnlinePcpd).then(|| SlidingWindow::new(cfg.window));
        Ok(Detector {
            cfg: cfg.clone(),
            model: *model,
            statistic_noise: scales.map(|s| s.0),
            window,
            state: DetectorState {
                t: 0,
                s: 0.0,
                s_tilde: None,
                w,
                stopped: false,
            },
        })
    }

    pub fn state(&self) -> &DetectorState {
        &self.state
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    /// Consumes one observation.
    pub fn step<R: Rng + ?Sized>(&mut self, x: f64, rng: &mut R) -> Result<Decision> {
        let l = self.model.llr(x)?;
        self.step_llr(l, rng)
    }

    /// Consumes one precomputed LLR value.
    pub fn step_llr<R: Rng + ?Sized>(&mut self, llr: f64, rng: &mut R) -> Result<Decision> {
        if self.state.stopped {
            return Err(Error::AlreadyStopped(self.state.t));
        }
        let st = &mut self.state;
        st.t += 1;
        let fired = match self.cfg.variant {
            Variant::Cusum => {
                st.s = st.s.max(0.0) + llr;
                st.s >= self.cfg.b
            }
            Variant::DpCusum | Variant::DeltaDpCusum => {
                st.s = st.s.max(0.0) + llr;
                let z = self.statistic_noise.map_or(0.0, |scale| lap_sample(scale, rng));
                let noisy = st.s + z;
                st.s_tilde = Some(noisy);
                noisy >= self.cfg.b + st.w
            }
            Variant::OnlinePcpd => {
                let window = self.window.as_mut().expect("baseline owns a window");
                match window.push(llr) {
                    Some(stat) => {
                        st.s = stat;
                        let z = self.statistic_noise.map_or(0.0, |scale| lap_sample(scale, rng));
                        let noisy = stat + z;
                        st.s_tilde = Some(noisy);
                        noisy >= self.cfg.b + st.w
                    }
                    None => false,
                }
            }
        };
        if fired {
            st.stopped = true;
            Ok(Decision::Stop)
        } else {
            Ok(Decision::Continue)
        }
    }
}

/// Changepoint of a simulated stream: observations `1..=τ` are pre-change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Changepoint {
    /// τ = ∞: every observation is pre-change.
    Never,
    At(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingTime {
    Stopped(u64),
    Censored(u64),
}

impl StoppingTime {
    /// Stopping time, or the horizon for censored runs.
    pub fn value(self) -> u64 {
        match self {
            StoppingTime::Stopped(t) | StoppingTime::Censored(t) => t,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, StoppingTime::Censored(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: u64,
    pub s: f64,
    pub s_tilde: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub stopping_time: StoppingTime,
    pub trajectory: Option<Vec<TracePoint>>,
}

/// Simulates one stream until an alarm or `horizon` observations.
pub fn run_to_stop(
    cfg: &DetectorConfig,
    model: &ModelPair,
    changepoint: Changepoint,
    horizon: u64,
    streams: &mut TrialStreams,
    record_trajectory: bool,
) -> Result<RunOutcome> {
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    let mut det = Detector::new(cfg, model, &mut streams.threshold)?;
    let mut trajectory = record_trajectory.then(Vec::new);
    for t in 1..=horizon {
        let regime = match changepoint {
            Changepoint::At(tau) if t > tau => Regime::Post,
            _ => Regime::Pre,
        };
        let x = model.sample(regime, &mut streams.data);
        let l = model.llr_unchecked(x);
        let decision = det.step_llr(l, &mut streams.statistic)?;
        if let Some(tr) = trajectory.as_mut() {
            tr.push(TracePoint {
                t,
                s: det.state.s,
                s_tilde: det.state.s_tilde,
            });
        }
        if decision == Decision::Stop {
            return Ok(RunOutcome {
                stopping_time: StoppingTime::Stopped(t),
                trajectory,
            });
        }
    }
    Ok(RunOutcome {
        stopping_time: StoppingTime::Censored(horizon),
        trajectory,
    })
}
