//! Berry–Esseen rate studies across a dilating window family.

use super::config::{ExperimentConfig, Standardization};
use super::{sample_functional, SlopeFit, CODE_VERSION};
use crate::error::{Error, Result};
use crate::localization::{assemble_theorem_bound, integral_i_psi, BoundForm, BoundIngredients, BoundReport};
use crate::malliavin::{kolmogorov_to_normal, wasserstein_to_normal};
use crate::process::RandomStream;
use crate::stats::{linear_fit, mean, quantile, variance, variance_interval};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Expected Kolmogorov statistic of `n` exact draws, `√(π/2)·ln 2/√n`.
pub fn ks_noise_floor(n: usize) -> f64 {
    (std::f64::consts::PI / 2.0).sqrt() * std::f64::consts::LN_2 / (n as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaResult {
    pub lambda: f64,
    pub nu_window: f64,
    pub n: usize,
    /// Pilot draws; 0 under exact standardization.
    pub n_pilot: usize,
    /// Centre and variance used to standardize: pilot estimates, or the
    /// closed-form moments.
    pub standard_mean: f64,
    pub standard_var: f64,
    pub mean: f64,
    pub var: f64,
    pub var_lo: f64,
    pub var_hi: f64,
    pub d_k: f64,
    pub d_k_lo: f64,
    pub d_k_hi: f64,
    pub d_w: f64,
    pub d_w_lo: f64,
    pub d_w_hi: f64,
    pub noise_floor: f64,
    /// Assembled X = W bound, for scores with a known stabilization radius.
    pub bound: Option<BoundReport>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub per_lambda_s: Vec<f64>,
    pub total_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub version: String,
    pub config: ExperimentConfig,
    pub per_lambda: Vec<LambdaResult>,
    /// Slope of `ln d̂_K` against `ln λ`.
    pub d_k_slope: Option<SlopeFit>,
    pub d_w_slope: Option<SlopeFit>,
    pub warnings: Vec<String>,
    /// Wall-clock data; excluded from the canonical form.
    pub timing: Timing,
}

struct LambdaRun {
    result: LambdaResult,
    boot_k: Vec<f64>,
    boot_w: Vec<f64>,
}

fn standardized(h: &[f64], m: f64, v: f64) -> Vec<f64> {
    let s = v.sqrt();
    h.iter().map(|x| (x - m) / s).collect()
}

/// Per λ, draws `n` main samples and standardizes them by the pilot mean
/// and variance of `n/10` separate draws, or by closed-form moments. Under
/// pilot standardization the bootstrap resamples pilot and main jointly, so
/// pilot error shows up in the intervals.
pub fn run_clt_study(cfg: &ExperimentConfig) -> Result<RunResult> {
    let start = Instant::now();
    let root = RandomStream::new(cfg.seed).stream(0xc17);
    let score = cfg.score()?;
    let mut runs = Vec::with_capacity(cfg.lambdas.len());
    let mut per_lambda_s = Vec::new();
    let mut warnings = Vec::new();
    for (li, &lambda) in cfg.lambdas.iter().enumerate() {
        let t = Instant::now();
        let stream = root.substream(li as u64);
        let domain = cfg.domain(lambda)?;
        let n = cfg.n;
        let exact = match cfg.standardization {
            Standardization::Pilot => None,
            Standardization::Exact => Some(cfg.exact_moments(lambda)?.ok_or_else(|| {
                Error::Config(format!("no closed-form moments for {:?} at λ = {lambda}", cfg.model))
            })?),
        };
        let n_pilot = if exact.is_some() { 0 } else { (n / 10).max(10) };
        let pilot = sample_functional(score.as_ref(), &domain, n_pilot, stream.stream(1))?;
        let main = sample_functional(score.as_ref(), &domain, n, stream.stream(2))?;
        let (pm, pv) = exact.unwrap_or_else(|| (mean(&pilot), variance(&pilot)));
        if !(pv > 0.0) {
            return Err(Error::Diagnostic(format!("pilot variance {pv} at λ = {lambda} is not positive")));
        }
        let z = standardized(&main, pm, pv);
        let d_k = kolmogorov_to_normal(&z);
        let d_w = wasserstein_to_normal(&z);
        let reps = cfg.budgets.bootstrap;
        let boot: Vec<(f64, f64)> = (0..reps)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream.stream(3).substream(b as u64).rng();
                let (m, v) = match exact {
                    Some(mv) => mv,
                    None => {
                        let p: Vec<f64> = (0..n_pilot).map(|_| pilot[rng.random_range(0..n_pilot)]).collect();
                        (mean(&p), variance(&p))
                    }
                };
                let h: Vec<f64> = (0..n).map(|_| main[rng.random_range(0..n)]).collect();
                if !(v > 0.0) {
                    return (f64::NAN, f64::NAN);
                }
                let z = standardized(&h, m, v);
                (kolmogorov_to_normal(&z), wasserstein_to_normal(&z))
            })
            .collect();
        let boot_k: Vec<f64> = boot.iter().map(|b| b.0).collect();
        let boot_w: Vec<f64> = boot.iter().map(|b| b.1).collect();
        let finite = |v: &[f64]| v.iter().copied().filter(|x| x.is_finite()).collect::<Vec<_>>();
        let (bk, bw) = (finite(&boot_k), finite(&boot_w));
        let (var, var_lo, var_hi) = variance_interval(&main);
        let bound = match cfg.known_profile() {
            Some(psi) if var > 0.0 => {
                let mut ing = BoundIngredients::empty(cfg.c, cfg.bounded_exponents);
                let e = ing.exponents;
                ing.i_psi_k = Some(integral_i_psi(&psi, &domain, e.theta_k)?.value);
                ing.i_psi_w = Some(integral_i_psi(&psi, &domain, e.theta_w)?.value);
                ing.nu_window = Some(domain.nu_window());
                Some(assemble_theorem_bound(&ing, 1.0, var, BoundForm::XEqualsW)?)
            }
            _ => None,
        };
        runs.push(LambdaRun {
            result: LambdaResult {
                lambda,
                nu_window: domain.nu_window(),
                n,
                n_pilot,
                standard_mean: pm,
                standard_var: pv,
                mean: mean(&main),
                var,
                var_lo,
                var_hi,
                d_k,
                d_k_lo: quantile(&bk, 0.025),
                d_k_hi: quantile(&bk, 0.975),
                d_w,
                d_w_lo: quantile(&bw, 0.025),
                d_w_hi: quantile(&bw, 0.975),
                noise_floor: ks_noise_floor(n),
                bound,
            },
            boot_k,
            boot_w,
        });
        per_lambda_s.push(t.elapsed().as_secs_f64());
        log::info!("λ = {lambda}: d̂_K = {d_k:.5}, d̂_W = {d_w:.5}");
    }
    if let Some(last) = runs.last() {
        let r = &last.result;
        if r.d_k < 2.0 * r.noise_floor {
            let msg = format!(
                "at λ = {} the estimate d̂_K = {:.5} is within twice the sampling floor {:.5} ≈ 0.87/√n; increase n",
                r.lambda, r.d_k, r.noise_floor
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    let lambdas: Vec<f64> = runs.iter().map(|r| r.result.lambda).collect();
    let d_k_slope = fit_slope(&lambdas, &runs.iter().map(|r| r.result.d_k).collect::<Vec<_>>(), &runs.iter().map(|r| r.boot_k.clone()).collect::<Vec<_>>());
    let d_w_slope = fit_slope(&lambdas, &runs.iter().map(|r| r.result.d_w).collect::<Vec<_>>(), &runs.iter().map(|r| r.boot_w.clone()).collect::<Vec<_>>());
    Ok(RunResult {
        version: CODE_VERSION.to_string(),
        config: cfg.clone(),
        per_lambda: runs.into_iter().map(|r| r.result).collect(),
        d_k_slope,
        d_w_slope,
        warnings,
        timing: Timing { per_lambda_s, total_s: start.elapsed().as_secs_f64() },
    })
}

/// Least-squares slope of `ln y` on `ln λ`; the interval is the percentile
/// range of slopes refitted on matched bootstrap replicates.
pub fn fit_slope(lambdas: &[f64], ys: &[f64], boot: &[Vec<f64>]) -> Option<SlopeFit> {
    let xs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    if ys.iter().any(|y| !(*y > 0.0)) {
        return None;
    }
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let fit = linear_fit(&xs, &ly)?;
    let reps = boot.iter().map(|b| b.len()).min().unwrap_or(0);
    let slopes: Vec<f64> = (0..reps)
        .filter_map(|b| {
            let yb: Vec<f64> = boot.iter().map(|v| v[b]).collect();
            if yb.iter().any(|y| !(*y > 0.0)) {
                return None;
            }
            let lyb: Vec<f64> = yb.iter().map(|y| y.ln()).collect();
            linear_fit(&xs, &lyb).map(|f| f.slope)
        })
        .collect();
    let (lo, hi) = if slopes.len() >= 10 { (quantile(&slopes, 0.025), quantile(&slopes, 0.975)) } else { (f64::NAN, f64::NAN) };
    Some(SlopeFit { slope: fit.slope, intercept: fit.intercept, slope_se: fit.slope_se, lo, hi, n_points: xs.len() })
}
