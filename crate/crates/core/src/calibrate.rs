// Copyright 2026 The dpcusum Authors
// SPDX-License-Identifier: Apache-2.0

//! Analytic calibration.
//!
//! With the effective privacy factor `h = min(ε / 2Δ, 1)`, DP-CUSUM with
//! threshold `b > 0` satisfies
//!
//! ```text
//! E∞[T̃(b)] ≥ exp(h·b − 2) / (4 (b + 1)²)
//! ```
//!
//! The right-hand side decreases up to `b = 2/h − 1` and increases after it.
//! [`solve_threshold`] inverts it on the increasing branch, so that the
//! returned `b` guarantees an average run length of at least `γ`. For
//! unbounded models pass `A_δ` wherever a sensitivity is expected.

use crate::error::{ensure_positive, Error, Result};
use crate::ModelPair;
use serde::{Deserialize, Serialize};

/// `min(ε / (2·sens), 1)`.
pub fn h_factor(epsilon: f64, sens: f64) -> Result<f64> {
    ensure_positive("epsilon", epsilon)?;
    ensure_positive("sensitivity", sens)?;
    Ok((epsilon / (2.0 * sens)).min(1.0))
}

fn log_bound(b: f64, h: f64) -> f64 {
    h * b - 2.0 - 4f64.ln() - 2.0 * (b + 1.0).ln()
}

/// The ARL lower bound `exp(h·b − 2) / (4 (b + 1)²)`.
///
/// ```
/// use dpcusum::calibrate::arl_lower_bound;
///
/// let bound = arl_lower_bound(10.0, 0.8, 0.4).unwrap();
/// assert!((bound - 8f64.exp() / 484.0).abs() < 1e-9);
/// ```
pub fn arl_lower_bound(b: f64, epsilon: f64, sens: f64) -> Result<f64> {
    ensure_positive("b", b)?;
    let h = h_factor(epsilon, sens)?;
    Ok(log_bound(b, h).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub b: f64,
    #[serde(rename = "gamma")]
    pub gamma_target: f64,
    #[serde(rename = "h")]
    pub h_value: f64,
    pub bound_at_b: f64,
}

/// Threshold `b` on the increasing branch with `arl_lower_bound(b) = γ`.
///
/// Bisection runs on `log bound − log γ`, which stays well conditioned for
/// `γ` far beyond 10¹². The returned `b` is the upper end of the final
/// bracket, so `bound_at_b ≥ γ` up to rounding.
pub fn solve_threshold(gamma: f64, epsilon: f64, sens: f64) -> Result<CalibrationResult> {
    if !(gamma.is_finite() && gamma >= 1.0) {
        return Err(Error::InvalidInput(format!("gamma must be ≥ 1, got {gamma}")));
    }
    let h = h_factor(epsilon, sens)?;
    let target = gamma.ln();
    let f = |b: f64| log_bound(b, h) - target;

    let mut lo = 2.0 / h - 1.0 + 1e-6;
    debug_assert!(f(lo) < 0.0);
    let mut hi = ((4.0 * gamma).ln() + 2.0) / h;
    hi += 2.0 * (hi + 1.0).ln() / h;
    hi = hi.max(lo + 1.0);
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CalibrationResult {
        b: hi,
        gamma_target: gamma,
        h_value: h,
        bound_at_b: log_bound(hi, h).exp(),
    })
}

/// The two explicit terms of the detection-delay upper bound,
/// `b / I₀` and `4·sens / (I₀^{3/2} ε) · √b`. The additive constant is not known
/// in closed form and is deliberately not reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaddBoundTerms {
    pub leading: f64,
    pub second: f64,
}

pub fn wadd_bound_terms(b: f64, epsilon: f64, sens: f64, i0: f64) -> Result<WaddBoundTerms> {
    ensure_positive("epsilon", epsilon)?;
    ensure_positive("sensitivity", sens)?;
    ensure_positive("I0", i0)?;
    if !(b > 8.0 * i0) {
        return Err(Error::OutOfDomain(format!(
            "delay bound requires b > 8·I0 = {}, got b = {b}",
            8.0 * i0
        )));
    }
    Ok(WaddBoundTerms {
        leading: b / i0,
        second: 4.0 * sens / (i0.powf(1.5) * epsilon) * b.sqrt(),
    })
}

/// One cell of the effective-privacy heatmap for a Gaussian shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub mu: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub a_delta: f64,
    pub h: f64,
    /// First grid cell along ε (at this δ) lying on or above `ε = 2·A_δ`.
    pub on_boundary: bool,
}

/// Default grid side for [`heatmap_grid`].
pub const DEFAULT_GRID: usize = 60;

/// Cell midpoints covering ε ∈ (0, 3) and δ ∈ (0, 1).
pub fn default_axes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let eps = (0..n).map(|i| 3.0 * (i as f64 + 0.5) / n as f64).collect();
    let del = (0..n).map(|j| (j as f64 + 0.5) / n as f64).collect();
    (eps, del)
}

/// `h(ε, A_δ)` over the grid, with `A_δ = 2|μ| z_{δ/4} + μ²`. Rows are ordered
/// by δ, then ε, in the order the lists are given.
pub fn heatmap_grid(mu: f64, epsilons: &[f64], deltas: &[f64]) -> Result<Vec<HeatmapCell>> {
    if epsilons.is_empty() || deltas.is_empty() {
        return Err(Error::InvalidInput("heatmap grid must be nonempty".into()));
    }
    let model = ModelPair::gaussian_shift(mu)?;
    let mut cells = Vec::with_capacity(epsilons.len() * deltas.len());
    for &delta in deltas {
        let a = model.a_delta(delta)?;
        let first_optimal = epsilons
            .iter()
            .copied()
            .filter(|&e| e >= 2.0 * a)
            .fold(f64::INFINITY, f64::min);
        for &epsilon in epsilons {
            let h = h_factor(epsilon, a)?;
            cells.push(HeatmapCell {
                mu,
                epsilon,
                delta,
                a_delta: a,
                h,
                on_boundary: epsilon == first_optimal,
            });
        }
    }
    Ok(cells)
}

/// Points `(δ, ε = 2·A_δ)` of the optimality boundary.
pub fn boundary_curve(mu: f64, deltas: &[f64]) -> Result<Vec<(f64, f64)>> {
    let model = ModelPair::gaussian_shift(mu)?;
    deltas
        .iter()
        .map(|&d| Ok((d, 2.0 * model.a_delta(d)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_values() {
        assert_eq!(h_factor(0.8, 0.4).unwrap(), 1.0);
        assert_eq!(h_factor(0.4, 0.4).unwrap(), 0.5);
        assert_eq!(h_factor(3.0, 0.402).unwrap(), 1.0);
        assert!(h_factor(0.0, 1.0).is_err());
        assert!(h_factor(1.0, -1.0).is_err());
    }

    #[test]
    fn bound_values() {
        let e8 = 8f64.exp() / 484.0;
        assert!((arl_lower_bound(10.0, 1.0, 0.5).unwrap() - e8).abs() < 1e-12 * e8);
        assert!((e8 - 6.159).abs() < 1e-3);
        let v = arl_lower_bound(1.0, 1.0, 0.5).unwrap();
        assert!((v - (-1f64).exp() / 16.0).abs() < 1e-15);
        assert!((v - 0.02299).abs() < 1e-5);
        assert!(arl_lower_bound(20.0, 1.0, 0.5).unwrap() > arl_lower_bound(10.0, 1.0, 0.5).unwrap());
        assert!(arl_lower_bound(0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn solve_gamma_1000() {
        let r = solve_threshold(1000.0, 0.8, 0.4).unwrap();
        assert_eq!(r.h_value, 1.0);
        assert!((r.b - 15.96).abs() < 0.01, "{}", r.b);
        let bound = arl_lower_bound(r.b, 0.8, 0.4).unwrap();
        assert!(((bound - 1000.0) / 1000.0).abs() < 1e-9);
        assert!(r.bound_at_b >= 1000.0 * (1.0 - 1e-9));

        let half = solve_threshold(1000.0, 0.4, 0.4).unwrap();
        assert_eq!(half.h_value, 0.5);
        // e^{0.5b − 2} = 4000 (b + 1)²
        let lhs = (0.5 * half.b - 2.0).exp();
        let rhs = 4000.0 * (half.b + 1.0).powi(2);
        assert!(((lhs - rhs) / rhs).abs() < 1e-9);
        assert!(half.b > r.b);
    }

    #[test]
    fn solve_rejects_small_gamma() {
        assert!(solve_threshold(0.5, 1.0, 1.0).is_err());
        assert!(solve_threshold(f64::NAN, 1.0, 1.0).is_err());
        let r = solve_threshold(1.0, 1.0, 0.5).unwrap();
        assert!(r.b > 1.0);
    }

    #[test]
    fn round_trip_grid() {
        for gamma in [10.0, 1e2, 1e3, 1e4] {
            for h in [0.1, 0.25, 0.5, 1.0] {
                let r = solve_threshold(gamma, 2.0 * h, 1.0).unwrap();
                let bound = arl_lower_bound(r.b, 2.0 * h, 1.0).unwrap();
                assert!(((bound - gamma) / gamma).abs() < 1e-9, "γ={gamma} h={h}");
                assert!(r.b > 2.0 / h - 1.0);
            }
        }
    }

    #[test]
    fn threshold_over_log_gamma_approaches_one() {
        // Ratio b_γ / (log γ / h): 2.31, 1.71, 1.50, 1.39 for γ = 10³..10¹², then 1.06 at 10¹⁰⁰.
        let ratios: Vec<f64> = [1e3, 1e6, 1e9, 1e12, 1e100]
            .iter()
            .map(|&g: &f64| solve_threshold(g, 1.0, 0.5).unwrap().b / g.ln())
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
        assert!(ratios.iter().all(|&r| r > 1.0));
        assert!((ratios[3] - 1.388).abs() < 0.01, "{ratios:?}");
        assert!(ratios[4] < 1.1);
    }

    #[test]
    fn wadd_terms() {
        let t = wadd_bound_terms(16.0, 0.8, 0.4, 1.0).unwrap();
        assert_eq!(t.leading, 16.0);
        assert!((t.second - 8.0).abs() < 1e-12);
        assert!(matches!(wadd_bound_terms(8.0, 0.8, 0.4, 1.0), Err(Error::OutOfDomain(_))));
        let t2 = wadd_bound_terms(32.0, 0.8, 0.4, 1.0).unwrap();
        assert!((t2.second / t.second - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn heatmap_cells() {
        let cells = heatmap_grid(0.1, &[1.5], &[0.1]).unwrap();
        assert!((cells[0].a_delta - 0.402).abs() < 1e-3);
        assert_eq!(cells[0].h, 1.0);
        assert!(cells[0].on_boundary);

        let cells = heatmap_grid(0.5, &[0.5], &[0.1]).unwrap();
        let expected = 0.5 / (2.0 * cells[0].a_delta);
        assert!((cells[0].h - expected).abs() < 1e-15);
        assert!((cells[0].h - 0.1131).abs() < 5e-4, "{}", cells[0].h);
        assert!(!cells[0].on_boundary);

        assert!(heatmap_grid(0.1, &[], &[0.1]).is_err());
        assert!(heatmap_grid(0.0, &[1.0], &[0.1]).is_err());
    }

    #[test]
    fn heatmap_default_grid() {
        let (eps, del) = default_axes(DEFAULT_GRID);
        let cells = heatmap_grid(0.25, &eps, &del).unwrap();
        assert_eq!(cells.len(), 3600);
        for c in &cells {
            assert!(c.epsilon > 0.0 && c.epsilon < 3.0 && c.delta > 0.0 && c.delta < 1.0);
            assert_eq!(c.h == 1.0, c.epsilon >= 2.0 * c.a_delta);
        }
        for d in &del {
            let n = cells.iter().filter(|c| c.delta == *d && c.on_boundary).count();
            assert!(n <= 1);
        }
    }

    #[test]
    fn heatmap_h_decreases_with_mu() {
        let (eps, del) = default_axes(12);
        let grids: Vec<Vec<HeatmapCell>> = [0.1, 0.25, 0.5]
            .iter()
            .map(|&mu| heatmap_grid(mu, &eps, &del).unwrap())
            .collect();
        for i in 0..grids[0].len() {
            assert!(grids[0][i].h >= grids[1][i].h);
            assert!(grids[1][i].h >= grids[2][i].h);
        }
    }

    #[test]
    fn boundary_points() {
        let pts = boundary_curve(0.1, &[0.1]).unwrap();
        assert!((pts[0].1 - 0.804).abs() < 2e-3);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn h_monotone(eps in 0.01f64..5.0, sens in 0.01f64..5.0, de in 0.0f64..1.0, ds in 0.0f64..1.0) {
                let h = h_factor(eps, sens).unwrap();
                prop_assert!(h_factor(eps + de, sens).unwrap() >= h);
                prop_assert!(h_factor(eps, sens + ds).unwrap() <= h);
                prop_assert_eq!(h == 1.0, eps >= 2.0 * sens);
            }

            #[test]
            fn threshold_monotone(
                log_gamma in 0.5f64..25.0,
                step in 0.1f64..3.0,
                h in 0.05f64..1.0,
                dh in 0.01f64..0.5,
            ) {
                let g = log_gamma.exp();
                let b = solve_threshold(g, 2.0 * h, 1.0).unwrap().b;
                prop_assert!(solve_threshold((log_gamma + step).exp(), 2.0 * h, 1.0).unwrap().b > b);
                let h2 = (h + dh).min(1.0);
                if h2 > h {
                    prop_assert!(solve_threshold(g, 2.0 * h2, 1.0).unwrap().b < b);
                }
            }
        }
    }
}
