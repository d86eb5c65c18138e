// Copyright 2026 The dpcusum Authors
// SPDX-License-Identifier: Apache-2.0

//! Seeded Laplace noise.
//!
//! All randomness is drawn from [`RngStream`]s: a ChaCha8 generator keyed by a
//! 64-bit master seed and addressed by a 64-bit stream id. A Monte Carlo trial
//! owns the streams `(seed, 4·trial + k)` for `k ∈ {data, statistic noise,
//! threshold noise}`, so results never depend on how trials are scheduled.

use crate::error::{ensure_positive, Error, Result};
use crate::model::standard_laplace;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Scale β of the zero-mean Laplace law with density `exp(−|x|/β) / (2β)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NoiseScale(f64);

impl NoiseScale {
    pub fn new(beta: f64) -> Result<Self> {
        ensure_positive("noise scale", beta)?;
        Ok(NoiseScale(beta))
    }

    pub fn beta(self) -> f64 {
        self.0
    }
}

/// One draw from `Lap(β)`, by inverse CDF on a uniform in (−½, ½).
///
/// ```
/// use dpcusum::noise::{lap_sample, NoiseScale, RngStream};
///
/// let mut rng = RngStream::new(7, 0);
/// let z = lap_sample(NoiseScale::new(1.0).unwrap(), &mut rng);
/// assert!(z.is_finite());
/// ```
#[inline]
pub fn lap_sample<R: Rng + ?Sized>(scale: NoiseScale, rng: &mut R) -> f64 {
    scale.0 * standard_laplace(rng)
}

/// `β = multiplier · sensitivity / ε`.
///
/// DP-CUSUM uses multiplier 2 for both the statistic and the threshold; the
/// sliding-window baseline uses 4 for the statistic and 8 for the threshold.
pub fn detector_scale(epsilon: f64, sensitivity: f64, multiplier: f64) -> Result<NoiseScale> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be > 0, got {epsilon}")));
    }
    ensure_positive("sensitivity", sensitivity)?;
    ensure_positive("noise multiplier", multiplier)?;
    NoiseScale::new(multiplier * sensitivity / epsilon)
}

/// Sub-stream roles inside one Monte Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Data = 0,
    StatisticNoise = 1,
    ThresholdNoise = 2,
}

/// A reproducible generator addressed by `(master_seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        RngStream {
            master_seed,
            stream_id,
            rng,
        }
    }

    /// The stream for `purpose` within trial `trial`.
    pub fn for_trial(master_seed: u64, trial: u64, purpose: Purpose) -> Self {
        debug_assert!(trial < (1 << 62));
        RngStream::new(master_seed, trial * 4 + purpose as u64)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    #[inline]
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// The three independent streams one simulated trial consumes.
#[derive(Debug, Clone)]
pub struct TrialStreams {
    pub data: RngStream,
    pub statistic: RngStream,
    pub threshold: RngStream,
}

impl TrialStreams {
    pub fn new(master_seed: u64, trial: u64) -> Self {
        TrialStreams {
            data: RngStream::for_trial(master_seed, trial, Purpose::Data),
            statistic: RngStream::for_trial(master_seed, trial, Purpose::StatisticNoise),
            threshold: RngStream::for_trial(master_seed, trial, Purpose::ThresholdNoise),
        }
    }
}

/// Derives a child seed from a master seed and a label (FNV-1a, then splitmix64).
pub fn derive_seed(master_seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(master_seed ^ splitmix64(h))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(beta: f64, n: usize, seed: u64) -> Vec<f64> {
        let scale = NoiseScale::new(beta).unwrap();
        let mut rng = RngStream::new(seed, 0);
        (0..n).map(|_| lap_sample(scale, &mut rng)).collect()
    }

    #[test]
    fn scale_validation() {
        assert!(NoiseScale::new(0.0).is_err());
        assert!(NoiseScale::new(-1.0).is_err());
        assert!(NoiseScale::new(f64::INFINITY).is_err());
        assert_eq!(NoiseScale::new(0.5).unwrap().beta(), 0.5);
    }

    #[test]
    fn detector_scales() {
        assert!((detector_scale(0.8, 0.4, 2.0).unwrap().beta() - 1.0).abs() < 1e-15);
        assert!((detector_scale(1.0, 0.402, 2.0).unwrap().beta() - 0.804).abs() < 1e-15);
        assert!((detector_scale(2.0, 1.0, 8.0).unwrap().beta() - 4.0).abs() < 1e-15);
        assert!(detector_scale(0.0, 1.0, 2.0).is_err());
        assert!(detector_scale(-1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn laplace_moments() {
        let beta = detector_scale(0.8, 0.4, 2.0).unwrap().beta();
        let z = draws(beta, 1_000_000, 3);
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let abs_mean = z.iter().map(|v| v.abs()).sum::<f64>() / n;
        let second = z.iter().map(|v| v * v).sum::<f64>() / n;
        assert!(mean.abs() < 0.005, "{mean}");
        assert!((abs_mean - 1.0).abs() < 0.005, "{abs_mean}");
        assert!((second - 2.0).abs() < 0.03, "{second}");
    }

    #[test]
    fn laplace_variance_by_quadrature() {
        // Oracle for E[Z²] = 2β²: trapezoid rule on x² exp(−|x|/β)/(2β).
        let beta = 1.0;
        let (lo, hi, n) = (-60.0, 60.0, 600_000);
        let h = (hi - lo) / n as f64;
        let f = |x: f64| x * x * (-(x as f64).abs() / beta).exp() / (2.0 * beta);
        let mut acc = 0.5 * (f(lo) + f(hi));
        for i in 1..n {
            acc += f(lo + i as f64 * h);
        }
        assert!((acc * h - 2.0 * beta * beta).abs() < 1e-6);
    }

    #[test]
    fn kolmogorov_smirnov_against_laplace_cdf() {
        let mut z = draws(1.0, 100_000, 17);
        z.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = z.len() as f64;
        let cdf = |x: f64| {
            if x < 0.0 {
                0.5 * x.exp()
            } else {
                1.0 - 0.5 * (-x).exp()
            }
        };
        let d = z
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max((((i + 1) as f64) / n - f).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value ≈ 1.628 / √n.
        assert!(d < 1.628 / n.sqrt(), "D = {d}");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = {
            let mut r = RngStream::new(99, 5);
            (0..8).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = RngStream::new(99, 5);
            (0..8).map(|_| r.next_u64()).collect()
        };
        let c: Vec<u64> = {
            let mut r = RngStream::new(99, 6);
            (0..8).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
        let t = TrialStreams::new(99, 1);
        assert_eq!(t.data.stream_id(), 4);
        assert_eq!(t.statistic.stream_id(), 5);
        assert_eq!(t.threshold.stream_id(), 6);
        assert_eq!(t.data.master_seed(), 99);
    }

    #[test]
    fn derived_seeds_differ_by_label() {
        assert_eq!(derive_seed(1, "arl"), derive_seed(1, "arl"));
        assert_ne!(derive_seed(1, "arl"), derive_seed(1, "wadd"));
        assert_ne!(derive_seed(1, "arl"), derive_seed(2, "arl"));
    }
}
