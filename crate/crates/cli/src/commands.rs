// Copyright 2026 The dpcusum Authors
// SPDX-License-Identifier: Apache-2.0

use crate::output::{emit, emit_json, emit_sidecar};
use crate::{AuditArgs, CalibrateArgs, CompareArgs, Failure, GlobalArgs, HeatmapArgs, ModelArgs, SimArgs};
use dpcusum::calibrate::{default_axes, heatmap_grid, solve_threshold, DEFAULT_GRID};
use dpcusum::detect::{DetectorSpec, Variant};
use dpcusum::harness::{
    check_censoring, estimate as run_estimate, matched_comparison, privacy_audit, read_sweep_csv,
    sweep_delay_vs_arl, write_heatmap_csv, write_sweep_csv, AuditParams, AuditReport,
    AuditSection, ExperimentConfig, ExperimentReport, HeatmapSection, MatchedPoint, Metric,
    SweepRow, MAX_CENSORED_FRACTION,
};
use dpcusum::noise::derive_seed;
use dpcusum::{Error, ModelPair};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;

type Outcome = Result<(), Failure>;

const DEFAULT_AUDIT_B: f64 = 2.0;
const DEFAULT_AUDIT_DRAWS: u64 = 1_000_000;

fn load_config(g: &GlobalArgs) -> Result<ExperimentConfig, Error> {
    match &g.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)
        }
        None => Ok(ExperimentConfig::default()),
    }
}

fn resolve_seed(g: &GlobalArgs, cfg: &ExperimentConfig) -> u64 {
    g.seed.or(cfg.seed).unwrap_or(0)
}

fn model_from_args(a: &ModelArgs) -> Result<Option<ModelPair>, Error> {
    let Some(kind) = &a.model else {
        if a.mu.is_some() || a.p0.is_some() || a.p1.is_some() {
            return Err(Error::Config("--mu, --p0 and --p1 require --model".into()));
        }
        return Ok(None);
    };
    let mut obj = serde_json::Map::new();
    obj.insert("kind".into(), json!(kind));
    for (key, v) in [("mu", a.mu), ("p0", a.p0), ("p1", a.p1)] {
        if let Some(v) = v {
            obj.insert(key.into(), json!(v));
        }
    }
    serde_json::from_value(Value::Object(obj))
        .map(Some)
        .map_err(|e| Error::InvalidModel(e.to_string()))
}

fn parse_variant(name: &str) -> Result<Variant, Error> {
    serde_json::from_value(json!(name)).map_err(|_| {
        Error::Config(format!(
            "unknown detector `{name}`; expected cusum, dp_cusum, delta_dp_cusum or online_pcpd"
        ))
    })
}

/// Config file overlaid with command-line flags, with seed and horizon filled in.
fn effective_config(g: &GlobalArgs, a: &SimArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = load_config(g)?;
    if let Some(m) = model_from_args(&a.model)? {
        cfg.model = Some(m);
    }
    match &a.variant {
        Some(name) => {
            cfg.detectors = vec![DetectorSpec {
                variant: parse_variant(name)?,
                epsilon: a.epsilon,
                delta: a.delta,
                window: a.window,
                thresholds: None,
            }];
        }
        None if a.epsilon.is_some() || a.delta.is_some() || a.window.is_some() => {
            return Err(Error::Config("--epsilon, --delta and --window require --variant".into()));
        }
        None => {}
    }
    if !a.thresholds.is_empty() {
        cfg.thresholds = a.thresholds.clone();
        for d in &mut cfg.detectors {
            d.thresholds = None;
        }
    }
    if let Some(t) = g.trials {
        cfg.trials = t;
    }
    if a.horizon.is_some() {
        cfg.horizon = a.horizon;
    }
    if a.gamma.is_some() {
        cfg.gamma = a.gamma;
    }
    cfg.seed = Some(resolve_seed(g, &cfg));
    cfg.horizon = Some(cfg.effective_horizon());
    cfg.validate()?;
    resolve_ladders(&mut cfg)?;
    Ok(cfg)
}

/// Gives every detector an explicit threshold list: its own, the shared one,
/// or the threshold calibrated from `gamma`.
fn resolve_ladders(cfg: &mut ExperimentConfig) -> Result<(), Error> {
    let model = cfg.require_model()?;
    if cfg.detectors.is_empty() {
        return Err(Error::Config(
            "no detectors; pass --variant or a config with `detectors`".into(),
        ));
    }
    let shared = cfg.thresholds.clone();
    for d in &mut cfg.detectors {
        if d.thresholds.is_some() {
            continue;
        }
        if !shared.is_empty() {
            d.thresholds = Some(shared.clone());
            continue;
        }
        let gamma = cfg.gamma.ok_or_else(|| {
            Error::Config(format!(
                "no thresholds for {}; pass --b or --gamma",
                d.variant.as_str()
            ))
        })?;
        let resolved = d.resolve(&model, 0.0)?;
        let (Some(eps), Some(sens)) = (resolved.epsilon, resolved.sensitivity_used) else {
            return Err(Error::Config(format!(
                "{} has no privacy calibration; pass --b",
                d.variant.as_str()
            )));
        };
        d.thresholds = Some(vec![solve_threshold(gamma, eps, sens)?.b]);
    }
    Ok(())
}

fn ladder(d: &DetectorSpec) -> &[f64] {
    d.thresholds.as_deref().unwrap_or(&[])
}

fn censoring_gate(g: &GlobalArgs, fractions: impl IntoIterator<Item = (String, f64)>) -> Outcome {
    if g.allow_censoring {
        return Ok(());
    }
    let bad: Vec<String> = fractions
        .into_iter()
        .filter(|(_, f)| *f > MAX_CENSORED_FRACTION)
        .map(|(label, f)| format!("{label} ({:.2}%)", 100.0 * f))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "more than {:.0}% of runs censored at the horizon: {}; raise --horizon or pass --allow-censoring",
            100.0 * MAX_CENSORED_FRACTION,
            bad.join(", ")
        )))
    }
}

pub fn calibrate(g: &GlobalArgs, a: &CalibrateArgs) -> Outcome {
    let result = solve_threshold(a.gamma, a.epsilon, a.delta_sens)?;
    emit_json(g.out.as_deref(), &result)?;
    Ok(())
}

#[derive(Serialize)]
struct EstimateArtifact<'a> {
    command: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
    reports: Vec<ExperimentReport>,
}

pub fn estimate(g: &GlobalArgs, a: &SimArgs, metric: Metric) -> Outcome {
    let cfg = effective_config(g, a)?;
    let model = cfg.require_model()?;
    let seed = cfg.seed.expect("seed resolved");
    let horizon = cfg.horizon.expect("horizon resolved");
    let (command, label) = match metric {
        Metric::Arl => ("arl", "arl"),
        Metric::Wadd => ("wadd", "wadd"),
    };
    let stream_seed = derive_seed(seed, label);
    let mut reports = Vec::new();
    for spec in &cfg.detectors {
        for &b in ladder(spec) {
            let det = spec.resolve(&model, b)?;
            reports.push(run_estimate(metric, &det, &model, cfg.trials, horizon, stream_seed)?);
        }
    }
    emit_json(
        g.out.as_deref(),
        &EstimateArtifact {
            command,
            seed,
            config: &cfg,
            reports: reports.clone(),
        },
    )?;
    if !g.allow_censoring {
        for r in &reports {
            check_censoring(r, MAX_CENSORED_FRACTION).map_err(|e| Failure::Check(e.to_string()))?;
        }
    }
    Ok(())
}

fn run_sweep(g: &GlobalArgs, a: &SimArgs) -> Result<(ExperimentConfig, Vec<SweepRow>), Error> {
    let cfg = effective_config(g, a)?;
    let model = cfg.require_model()?;
    let rows = sweep_delay_vs_arl(
        &cfg.detectors,
        &cfg.thresholds,
        &model,
        cfg.trials,
        cfg.horizon.expect("horizon resolved"),
        cfg.seed.expect("seed resolved"),
    )?;
    Ok((cfg, rows))
}

fn sweep_censoring(rows: &[SweepRow]) -> Vec<(String, f64)> {
    rows.iter()
        .flat_map(|r| {
            let label = format!("{} b={}", r.detector.as_str(), r.b);
            [
                (format!("ARL {label}"), r.arl_censored),
                (format!("WADD {label}"), r.wadd_censored),
            ]
        })
        .collect()
}

pub fn sweep(g: &GlobalArgs, a: &SimArgs) -> Outcome {
    let (cfg, rows) = run_sweep(g, a)?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    emit(g.out.as_deref(), &buf)?;
    emit_sidecar(g.out.as_deref(), "sweep", cfg.seed, &cfg)?;
    censoring_gate(g, sweep_censoring(&rows))
}

pub fn heatmap(g: &GlobalArgs, a: &HeatmapArgs) -> Outcome {
    let mut cfg = load_config(g)?;
    let section = cfg.heatmap.take();
    let mus = if a.mu.is_empty() {
        section.as_ref().map(|h| h.mu.clone()).unwrap_or_default()
    } else {
        a.mu.clone()
    };
    if mus.is_empty() {
        return Err(Failure::Invalid(Error::Config(
            "heatmap needs --mu or a config with `heatmap.mu`".into(),
        )));
    }
    let n = a
        .grid
        .or(section.and_then(|h| h.grid))
        .unwrap_or(DEFAULT_GRID);
    if n == 0 {
        return Err(Failure::Invalid(Error::InvalidInput("grid must be at least 1".into())));
    }
    let (eps, del) = default_axes(n);
    let mut cells = Vec::with_capacity(mus.len() * n * n);
    for &mu in &mus {
        cells.extend(heatmap_grid(mu, &eps, &del)?);
    }
    let mut buf = Vec::new();
    write_heatmap_csv(&cells, &mut buf)?;
    emit(g.out.as_deref(), &buf)?;
    let effective = ExperimentConfig {
        heatmap: Some(HeatmapSection { mu: mus, grid: Some(n) }),
        ..ExperimentConfig::default()
    };
    emit_sidecar(g.out.as_deref(), "heatmap", None, &effective)?;
    Ok(())
}

fn parse_stream(s: &str) -> Result<Vec<u8>, Error> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::InvalidInput(format!(
                "stream must contain only 0 and 1, found `{other}`"
            ))),
        })
        .collect()
}

#[derive(Serialize)]
struct AuditArtifact<'a> {
    command: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
    report: AuditReport,
}

pub fn audit(g: &GlobalArgs, a: &AuditArgs) -> Outcome {
    let mut cfg = load_config(g)?;
    if let Some(m) = model_from_args(&a.model)? {
        cfg.model = Some(m);
    }
    let model = cfg.require_model()?;
    let base = cfg.audit.take();
    let stream = match (&a.stream, &base) {
        (Some(s), _) => parse_stream(s)?,
        (None, Some(b)) => b.stream.clone(),
        (None, None) => {
            return Err(Failure::Invalid(Error::Config(
                "audit needs --stream or a config with an `audit` section".into(),
            )))
        }
    };
    let epsilon = a
        .epsilon
        .or(base.as_ref().map(|b| b.epsilon))
        .ok_or_else(|| Error::Config("audit needs --epsilon".into()))?;
    let section = AuditSection {
        stream,
        neighbor_index: a.neighbor.or(base.as_ref().and_then(|b| b.neighbor_index)),
        epsilon,
        b: a.b.or(base.as_ref().map(|b| b.b)).unwrap_or(DEFAULT_AUDIT_B),
        noise_draws: a
            .draws
            .or(base.as_ref().map(|b| b.noise_draws))
            .unwrap_or(DEFAULT_AUDIT_DRAWS),
    };
    let seed = resolve_seed(g, &cfg);
    let report = privacy_audit(&AuditParams {
        model,
        stream: section.stream.iter().map(|&bit| bit == 1).collect(),
        neighbor_index: section.neighbor_index,
        epsilon: section.epsilon,
        b: section.b,
        noise_draws: section.noise_draws,
        seed,
    })?;
    let effective = ExperimentConfig {
        model: Some(model),
        seed: Some(seed),
        audit: Some(section),
        ..ExperimentConfig::default()
    };
    effective.validate()?;
    let pass = report.pass;
    let (worst, limit) = (report.max_upper_bound, report.limit);
    emit_json(
        g.out.as_deref(),
        &AuditArtifact {
            command: "audit",
            seed,
            config: &effective,
            report,
        },
    )?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "privacy audit failed: probability ratio bound {worst:.4} exceeds {limit:.4}"
        )))
    }
}

#[derive(Serialize)]
struct ComparedPoint {
    #[serde(flatten)]
    point: MatchedPoint,
    /// WADD divided by exact CUSUM's WADD at the same ARL.
    ratio_to_cusum: Option<f64>,
}

#[derive(Serialize)]
struct CompareArtifact {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<ExperimentConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    arl_grid: Vec<f64>,
    points: Vec<ComparedPoint>,
}

pub fn compare(g: &GlobalArgs, a: &CompareArgs) -> Outcome {
    let (cfg, rows) = match &a.input {
        Some(path) => {
            let file = std::fs::File::open(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let cfg = match &g.config {
                Some(_) => Some(load_config(g)?),
                None => None,
            };
            (cfg, read_sweep_csv(file)?)
        }
        None => {
            let (cfg, rows) = run_sweep(g, &a.sim)?;
            (Some(cfg), rows)
        }
    };
    let grid = if a.arl_grid.is_empty() {
        cfg.as_ref().and_then(|c| c.arl_grid.clone()).unwrap_or_default()
    } else {
        a.arl_grid.clone()
    };
    if grid.is_empty() || grid.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(Failure::Invalid(Error::Config(
            "compare needs a positive --arl-grid or a config with `arl_grid`".into(),
        )));
    }
    let matched = matched_comparison(&rows, &grid);
    let reference = |arl: f64| {
        matched
            .iter()
            .find(|p| p.arl == arl && p.detector == Variant::Cusum)
            .and_then(|p| p.wadd)
    };
    let points = matched
        .iter()
        .map(|p| ComparedPoint {
            point: p.clone(),
            ratio_to_cusum: p.wadd.zip(reference(p.arl)).map(|(w, c)| w / c),
        })
        .collect();
    let swept = a.input.is_none();
    let mut cfg = cfg;
    if let Some(c) = cfg.as_mut() {
        c.arl_grid = Some(grid.clone());
    }
    emit_json(
        g.out.as_deref(),
        &CompareArtifact {
            command: "compare",
            seed: cfg.as_ref().and_then(|c| c.seed).filter(|_| swept),
            config: cfg,
            input: a.input.clone(),
            arl_grid: grid,
            points,
        },
    )?;
    if swept {
        censoring_gate(g, sweep_censoring(&rows))
    } else {
        Ok(())
    }
}
