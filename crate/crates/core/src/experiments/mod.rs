//! Config-driven studies behind the `pclt` binary, with CSV and JSON
//! persistence.
//!
//! Every report embeds the resolved config and the crate version. Output is
//! deterministic given (config, seed) except for the `timing` object, which
//! [`canonical_json`] strips.

mod clt;
mod config;
mod studies;

pub use clt::{fit_slope, ks_noise_floor, run_clt_study, LambdaResult, RunResult, Timing};
pub use config::{
    Budgets, ExperimentConfig, GammaBudgetConfig, LocalizationBudget, ModelConfig, OutputConfig, SpaceConfig, Standardization,
    MIN_SAMPLES,
};
pub use studies::{
    run_gamma_study, run_localization_study, run_oracle_suite, run_simulation, GammaLambda, GammaReport,
    LocalizationReport, OracleKind, SimulationReport, SimulationRow,
};

use crate::error::Result;
use crate::process::{sample_poisson, RandomStream, SpaceTimeDomain, View};
use crate::scores::ScoreFamily;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Least-squares slope with a percentile interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
}

impl SlopeFit {
    pub fn excludes_zero(&self) -> bool {
        self.hi < 0.0 || self.lo > 0.0
    }
}

/// `n` independent values of `H = Σ_{p ∈ P ∩ W} ξ(p, P)`, sample i drawn
/// from substream i.
pub fn sample_functional(
    score: &dyn ScoreFamily,
    domain: &Arc<SpaceTimeDomain>,
    n: usize,
    stream: RandomStream,
) -> Result<Vec<f64>> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let c = sample_poisson(domain, &domain.carrier, stream.substream(i as u64))?;
            Ok(score.window_sum(&View::of(&c), &domain.window))
        })
        .collect()
}

/// One row of the tidy plot-data CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub lambda: f64,
    pub metric: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub seed: u64,
}

pub const PLOT_COLUMNS: [&str; 7] = ["lambda", "metric", "value", "lo", "hi", "n", "seed"];

/// Tidy rows of a rate study, one per (λ, metric).
pub fn plot_rows(result: &RunResult) -> Vec<PlotRow> {
    let seed = result.config.seed;
    let mut rows = Vec::new();
    for r in &result.per_lambda {
        let mut push = |metric: &str, value: f64, lo: f64, hi: f64| {
            rows.push(PlotRow { lambda: r.lambda, metric: metric.into(), value, lo, hi, n: r.n, seed });
        };
        push("mean", r.mean, f64::NAN, f64::NAN);
        push("var", r.var, r.var_lo, r.var_hi);
        push("d_k", r.d_k, r.d_k_lo, r.d_k_hi);
        push("d_w", r.d_w, r.d_w_lo, r.d_w_hi);
        push("noise_floor", r.noise_floor, f64::NAN, f64::NAN);
        if let Some(b) = &r.bound {
            push("d_k_bound", b.d_k_bound, f64::NAN, f64::NAN);
            push("d_w_bound", b.d_w_bound, f64::NAN, f64::NAN);
        }
    }
    rows
}

/// Writes the rows (header always present, even with no rows).
pub fn emit_plot_data(rows: &[PlotRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(PLOT_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.lambda.to_string(),
            r.metric.clone(),
            r.value.to_string(),
            r.lo.to_string(),
            r.hi.to_string(),
            r.n.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_plot_data(path: &Path) -> Result<Vec<PlotRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// The JSON value with every top-level `timing` entry removed.
pub fn canonical_json(value: &serde_json::Value) -> serde_json::Value {
    let mut v = value.clone();
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timing");
    }
    v
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_plot_data_has_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.csv");
        emit_plot_data(&[], &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap().trim(), PLOT_COLUMNS.join(","));
        assert!(read_plot_data(&p).unwrap().is_empty());
    }

    #[test]
    fn plot_data_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rows.csv");
        let rows = vec![
            PlotRow { lambda: 64.0, metric: "d_k".into(), value: 0.1 / 3.0, lo: 1e-17, hi: 0.7, n: 100, seed: 7 },
            PlotRow { lambda: 128.0, metric: "var".into(), value: 123.456789, lo: f64::NAN, hi: 2.0, n: 100, seed: 7 },
        ];
        emit_plot_data(&rows, &p).unwrap();
        let back = read_plot_data(&p).unwrap();
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.metric, b.metric);
            assert!((a.value - b.value).abs() <= 1e-12 * a.value.abs());
            assert!((a.lo - b.lo).abs() <= 1e-12 || (a.lo.is_nan() && b.lo.is_nan()));
            assert_eq!((a.n, a.seed, a.lambda), (b.n, b.seed, b.lambda));
        }
    }
}
