// Copyright 2026 The dpcusum Authors
// SPDX-License-Identifier: Apache-2.0

//! Pre/post-change distribution pairs.
//!
//! Every model is a pair `(f₀, f₁)` of unit-scale distributions. The detector
//! only ever sees the log-likelihood ratio
//!
//! ```text
//! ℓ(x) = log f₁(x) / f₀(x)
//! ```
//!
//! which is evaluated in closed form for each family:
//!
//! | kind              | ℓ(x)                                   | Δ = sup |ℓ(x) − ℓ(y)|           |
//! |-------------------|----------------------------------------|---------------------------------|
//! | `laplace_shift`   | `|x| − |x − μ|`                        | `2|μ|`                          |
//! | `gaussian_shift`  | `μx − μ²/2`                            | unbounded                       |
//! | `bernoulli_shift` | `x·log(p₁/p₀) + (1−x)·log((1−p₁)/(1−p₀))` | `|log(p₁(1−p₀) / (p₀(1−p₁)))|` |
//!
//! When Δ is unbounded the private detector substitutes the surrogate `A_δ`,
//! the smallest `t` with `P(2|ℓ(X)| ≥ t) ≤ δ/2` under both `f₀` and `f₁`.

use crate::error::{ensure_finite, Error, Result};
use crate::normal;
use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Which side of the changepoint an observation comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Drawn from `f₀`.
    Pre,
    /// Drawn from `f₁`.
    Post,
}

/// Model family tag, as spelled in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    LaplaceShift,
    GaussianShift,
    BernoulliShift,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::LaplaceShift => "laplace_shift",
            ModelKind::GaussianShift => "gaussian_shift",
            ModelKind::BernoulliShift => "bernoulli_shift",
        }
    }
}

/// A validated pre/post-change pair.
///
/// Serialized as `{"kind":"gaussian_shift","mu":0.5}`,
/// `{"kind":"laplace_shift","mu":0.2}` or
/// `{"kind":"bernoulli_shift","p0":0.3,"p1":0.6}`.
///
/// ```
/// use dpcusum::ModelPair;
///
/// let model: ModelPair = serde_json::from_str(r#"{"kind":"laplace_shift","mu":0.2}"#).unwrap();
/// assert_eq!(model.sensitivity().delta, Some(0.4));
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDescriptor", into = "ModelDescriptor")]
pub enum ModelPair {
    /// `Laplace(0, 1)` → `Laplace(μ, 1)`.
    LaplaceShift { mu: f64 },
    /// `N(0, 1)` → `N(μ, 1)`.
    GaussianShift { mu: f64 },
    /// `Bernoulli(p₀)` → `Bernoulli(p₁)`; observations are 0 or 1.
    BernoulliShift { p0: f64, p1: f64 },
}

/// Global sensitivity of the LLR; `delta` is `None` when unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityInfo {
    pub bounded: bool,
    pub delta: Option<f64>,
}

impl ModelPair {
    pub fn laplace_shift(mu: f64) -> Result<Self> {
        Self::validated(ModelPair::LaplaceShift { mu })
    }

    pub fn gaussian_shift(mu: f64) -> Result<Self> {
        Self::validated(ModelPair::GaussianShift { mu })
    }

    pub fn bernoulli_shift(p0: f64, p1: f64) -> Result<Self> {
        Self::validated(ModelPair::BernoulliShift { p0, p1 })
    }

    fn validated(model: ModelPair) -> Result<Self> {
        match model {
            ModelPair::LaplaceShift { mu } | ModelPair::GaussianShift { mu } => {
                if !mu.is_finite() || mu == 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "{}: mu must be finite and nonzero, got {mu}",
                        model.kind().as_str()
                    )));
                }
            }
            ModelPair::BernoulliShift { p0, p1 } => {
                let inside = |p: f64| p > 0.0 && p < 1.0;
                if !inside(p0) || !inside(p1) {
                    return Err(Error::InvalidModel(format!(
                        "bernoulli_shift: p0 and p1 must lie in (0, 1), got ({p0}, {p1})"
                    )));
                }
                if p0 == p1 {
                    return Err(Error::InvalidModel(format!(
                        "bernoulli_shift: p0 and p1 must differ, got {p0} for both"
                    )));
                }
            }
        }
        Ok(model)
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelPair::LaplaceShift { .. } => ModelKind::LaplaceShift,
            ModelPair::GaussianShift { .. } => ModelKind::GaussianShift,
            ModelPair::BernoulliShift { .. } => ModelKind::BernoulliShift,
        }
    }

    /// Post-change location for the shift families.
    pub fn mu(&self) -> Option<f64> {
        match *self {
            ModelPair::LaplaceShift { mu } | ModelPair::GaussianShift { mu } => Some(mu),
            ModelPair::BernoulliShift { .. } => None,
        }
    }

    /// Log-likelihood ratio ℓ(x), checked for finite input.
    pub fn llr(&self, x: f64) -> Result<f64> {
        ensure_finite("x", x)?;
        Ok(self.llr_unchecked(x))
    }

    /// Hot-path LLR. For the Bernoulli model any `x ≥ 0.5` is treated as 1.
    #[inline]
    pub fn llr_unchecked(&self, x: f64) -> f64 {
        match *self {
            ModelPair::LaplaceShift { mu } => x.abs() - (x - mu).abs(),
            ModelPair::GaussianShift { mu } => mu * x - 0.5 * mu * mu,
            ModelPair::BernoulliShift { p0, p1 } => {
                if x >= 0.5 {
                    (p1 / p0).ln()
                } else {
                    ((1.0 - p1) / (1.0 - p0)).ln()
                }
            }
        }
    }

    pub fn sensitivity(&self) -> SensitivityInfo {
        match *self {
            ModelPair::LaplaceShift { mu } => SensitivityInfo {
                bounded: true,
                delta: Some(2.0 * mu.abs()),
            },
            ModelPair::GaussianShift { .. } => SensitivityInfo {
                bounded: false,
                delta: None,
            },
            ModelPair::BernoulliShift { p0, p1 } => SensitivityInfo {
                bounded: true,
                delta: Some(((p1 * (1.0 - p0)) / (p0 * (1.0 - p1))).ln().abs()),
            },
        }
    }

    /// KL number `I₀ = E_{f₁}[ℓ(X)]`.
    pub fn kl_post(&self) -> f64 {
        match *self {
            ModelPair::GaussianShift { mu } => 0.5 * mu * mu,
            ModelPair::LaplaceShift { mu } => {
                let m = mu.abs();
                m + (-m).exp() - 1.0
            }
            ModelPair::BernoulliShift { p0, p1 } => {
                p1 * (p1 / p0).ln() + (1.0 - p1) * ((1.0 - p1) / (1.0 - p0)).ln()
            }
        }
    }

    /// Exact `P(2|ℓ(X)| ≥ t)` with `X` drawn from the given regime.
    pub fn abs_llr_survival(&self, regime: Regime, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let s = 0.5 * t;
        match *self {
            ModelPair::GaussianShift { mu } => {
                // In terms of Y = sign(μ)·X the LLR is m·Y − m²/2.
                let m = mu.abs();
                match regime {
                    Regime::Pre => normal::sf(0.5 * m + s / m) + normal::cdf(0.5 * m - s / m),
                    Regime::Post => normal::sf(s / m - 0.5 * m) + normal::cdf(-s / m - 0.5 * m),
                }
            }
            ModelPair::LaplaceShift { mu } => {
                let m = mu.abs();
                if s > m {
                    return 0.0;
                }
                let loc = match regime {
                    Regime::Pre => 0.0,
                    Regime::Post => m,
                };
                laplace_cdf(0.5 * (m - s), loc) + 1.0 - laplace_cdf(0.5 * (m + s), loc)
            }
            ModelPair::BernoulliShift { p0, p1 } => {
                let p = match regime {
                    Regime::Pre => p0,
                    Regime::Post => p1,
                };
                let one = 2.0 * (p1 / p0).ln().abs();
                let zero = 2.0 * ((1.0 - p1) / (1.0 - p0)).ln().abs();
                let mut mass = 0.0;
                if one >= t {
                    mass += p;
                }
                if zero >= t {
                    mass += 1.0 - p;
                }
                mass
            }
        }
    }

    /// Surrogate sensitivity `A_δ` used when the LLR is unbounded.
    ///
    /// Gaussian shifts use the closed form `2|μ|·z_{δ/4} + μ²`, which satisfies
    /// both tail constraints but is slightly conservative; every other family
    /// bisects the exact survival function (see [`ModelPair::a_delta_exact`]).
    ///
    /// ```
    /// use dpcusum::ModelPair;
    ///
    /// let model = ModelPair::gaussian_shift(0.1).unwrap();
    /// let a = model.a_delta(0.1).unwrap();
    /// assert!((a - 0.402).abs() < 1e-3);
    /// ```
    pub fn a_delta(&self, delta: f64) -> Result<f64> {
        check_delta(delta)?;
        match *self {
            ModelPair::GaussianShift { mu } => {
                let m = mu.abs();
                Ok(2.0 * m * normal::upper_quantile(0.25 * delta) + m * m)
            }
            _ => self.a_delta_exact(delta),
        }
    }

    /// Smallest `t` (to 1e-9) with `max_i P_{f_i}(2|ℓ(X)| ≥ t) ≤ δ/2`, by bisection.
    ///
    /// The returned value is always on the feasible side of the boundary.
    pub fn a_delta_exact(&self, delta: f64) -> Result<f64> {
        check_delta(delta)?;
        let target = 0.5 * delta;
        let tail = |t: f64| {
            self.abs_llr_survival(Regime::Pre, t)
                .max(self.abs_llr_survival(Regime::Post, t))
        };
        if tail(0.0) <= target {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while tail(hi) > target {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "no finite A_delta for delta = {delta}"
                )));
            }
        }
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            if tail(mid) <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Draws one observation from `f₀` (Pre) or `f₁` (Post).
    pub fn sample<R: Rng + ?Sized>(&self, regime: Regime, rng: &mut R) -> f64 {
        match *self {
            ModelPair::LaplaceShift { mu } => {
                let loc = match regime {
                    Regime::Pre => 0.0,
                    Regime::Post => mu,
                };
                loc + standard_laplace(rng)
            }
            ModelPair::GaussianShift { mu } => {
                let z: f64 = StandardNormal.sample(rng);
                match regime {
                    Regime::Pre => z,
                    Regime::Post => mu + z,
                }
            }
            ModelPair::BernoulliShift { p0, p1 } => {
                let p = match regime {
                    Regime::Pre => p0,
                    Regime::Post => p1,
                };
                let u: f64 = rng.random();
                if u < p {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Short label used in CSV output.
    pub fn descriptor(&self) -> String {
        match *self {
            ModelPair::LaplaceShift { mu } => format!("laplace_shift(mu={mu})"),
            ModelPair::GaussianShift { mu } => format!("gaussian_shift(mu={mu})"),
            ModelPair::BernoulliShift { p0, p1 } => format!("bernoulli_shift(p0={p0},p1={p1})"),
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")))
    }
}

fn laplace_cdf(y: f64, loc: f64) -> f64 {
    if y < loc {
        0.5 * (y - loc).exp()
    } else {
        1.0 - 0.5 * (loc - y).exp()
    }
}

/// Unit-scale Laplace draw by inverse CDF.
#[inline]
pub(crate) fn standard_laplace<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    let u = u - 0.5;
    let mag = -(1.0 - 2.0 * u.abs()).ln();
    if u < 0.0 {
        -mag
    } else {
        mag
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDescriptor {
    kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
}

impl TryFrom<ModelDescriptor> for ModelPair {
    type Error = Error;

    fn try_from(d: ModelDescriptor) -> Result<Self> {
        if let Some(scale) = d.scale {
            if scale != 1.0 {
                return Err(Error::InvalidModel(format!("scale must be 1, got {scale}")));
            }
        }
        let missing = |field: &str| {
            Error::InvalidModel(format!("{} requires field `{field}`", d.kind.as_str()))
        };
        let unexpected = |field: &str| {
            Error::InvalidModel(format!("{} does not take field `{field}`", d.kind.as_str()))
        };
        match d.kind {
            ModelKind::LaplaceShift | ModelKind::GaussianShift => {
                if d.p0.is_some() {
                    return Err(unexpected("p0"));
                }
                if d.p1.is_some() {
                    return Err(unexpected("p1"));
                }
                let mu = d.mu.ok_or_else(|| missing("mu"))?;
                if d.kind == ModelKind::LaplaceShift {
                    ModelPair::laplace_shift(mu)
                } else {
                    ModelPair::gaussian_shift(mu)
                }
            }
            ModelKind::BernoulliShift => {
                if d.mu.is_some() {
                    return Err(unexpected("mu"));
                }
                let p0 = d.p0.ok_or_else(|| missing("p0"))?;
                let p1 = d.p1.ok_or_else(|| missing("p1"))?;
                ModelPair::bernoulli_shift(p0, p1)
            }
        }
    }
}

impl From<ModelPair> for ModelDescriptor {
    fn from(m: ModelPair) -> Self {
        let (mu, p0, p1) = match m {
            ModelPair::LaplaceShift { mu } | ModelPair::GaussianShift { mu } => (Some(mu), None, None),
            ModelPair::BernoulliShift { p0, p1 } => (None, Some(p0), Some(p1)),
        };
        ModelDescriptor {
            kind: m.kind(),
            mu,
            p0,
            p1,
            scale: None,
        }
    }
}
