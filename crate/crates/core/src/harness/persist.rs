// Copyright 2026 The dpcusum Authors
// SPDX-License-Identifier: Apache-2.0

use super::sweep::SweepRow;
use crate::calibrate::HeatmapCell;
use crate::detect::Variant;
use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelPair};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

pub const SWEEP_HEADER: &str = "detector,model,mu,epsilon,delta,b,arl_est,arl_se,wadd_est,wadd_se,trials,seed";
pub const HEATMAP_HEADER: &str = "mu,epsilon,delta,a_delta,h,on_boundary";

#[derive(Debug, Serialize, Deserialize)]
struct SweepRecord {
    detector: Variant,
    model: ModelKind,
    mu: Option<f64>,
    epsilon: Option<f64>,
    delta: Option<f64>,
    b: f64,
    arl_est: f64,
    arl_se: f64,
    wadd_est: f64,
    wadd_se: f64,
    trials: u64,
    seed: u64,
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(SWEEP_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(SweepRecord {
            detector: r.detector,
            model: r.model.kind(),
            mu: r.model.mu(),
            epsilon: r.epsilon,
            delta: r.delta,
            b: r.b,
            arl_est: r.arl_est,
            arl_se: r.arl_se,
            wadd_est: r.wadd_est,
            wadd_se: r.wadd_se,
            trials: r.trials,
            seed: r.seed,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a sweep CSV back. Only shift models can be reconstructed, since the
/// Bernoulli parameters are not part of the schema.
pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != SWEEP_HEADER {
        return Err(Error::InvalidInput(format!("unexpected sweep header: {header}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<SweepRecord>() {
        let rec = rec?;
        let mu = rec
            .mu
            .ok_or_else(|| Error::InvalidInput("sweep row without mu".into()))?;
        let model = match rec.model {
            ModelKind::LaplaceShift => ModelPair::laplace_shift(mu)?,
            ModelKind::GaussianShift => ModelPair::gaussian_shift(mu)?,
            ModelKind::BernoulliShift => {
                return Err(Error::InvalidInput(
                    "bernoulli sweeps cannot be read back from CSV".into(),
                ))
            }
        };
        rows.push(SweepRow {
            detector: rec.detector,
            model,
            epsilon: rec.epsilon,
            delta: rec.delta,
            b: rec.b,
            arl_est: rec.arl_est,
            arl_se: rec.arl_se,
            wadd_est: rec.wadd_est,
            wadd_se: rec.wadd_se,
            trials: rec.trials,
            seed: rec.seed,
            arl_censored: 0.0,
            wadd_censored: 0.0,
        });
    }
    Ok(rows)
}

pub fn write_heatmap_csv<W: Write>(cells: &[HeatmapCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if cells.is_empty() {
        w.write_record(HEATMAP_HEADER.split(','))?;
    }
    for c in cells {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrate::heatmap_grid;

    fn row(b: f64) -> SweepRow {
        SweepRow {
            detector: Variant::DpCusum,
            model: ModelPair::laplace_shift(0.2).unwrap(),
            epsilon: Some(0.8),
            delta: None,
            b,
            arl_est: 1234.5,
            arl_se: 12.25,
            wadd_est: 300.0,
            wadd_se: 3.5,
            trials: 2000,
            seed: 42,
            arl_censored: 0.0,
            wadd_censored: 0.0,
        }
    }

    #[test]
    fn sweep_header_is_exact() {
        let mut buf = Vec::new();
        write_sweep_csv(&[row(5.0)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_HEADER);
        assert_eq!(lines.next().unwrap(), "dp_cusum,laplace_shift,0.2,0.8,,5.0,1234.5,12.25,300.0,3.5,2000,42");

        let mut empty = Vec::new();
        write_sweep_csv(&[], &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().trim_end(), SWEEP_HEADER);
    }

    #[test]
    fn sweep_round_trip() {
        let rows = vec![row(5.0), row(6.5)];
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        assert_eq!(read_sweep_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn rejects_foreign_header() {
        let text = "detector,model,b\ncusum,laplace_shift,1\n";
        assert!(read_sweep_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn heatmap_header_is_exact() {
        let cells = heatmap_grid(0.1, &[0.5, 1.5], &[0.1]).unwrap();
        let mut buf = Vec::new();
        write_heatmap_csv(&cells, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], HEATMAP_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[2].ends_with(",1.0,true"), "{}", lines[2]);
    }
}
