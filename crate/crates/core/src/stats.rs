//! Descriptive statistics, confidence intervals and regression helpers.

use rand::Rng;
use serde::{Deserialize, Serialize};

pub const Z95: f64 = 1.959_963_984_540_054;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (two-pass).
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Standard error of the sample mean.
pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Mean with its standard error and normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Estimate {
    pub fn new(value: f64, stderr: f64) -> Self {
        Estimate { value, stderr, lo: value - Z95 * stderr, hi: value + Z95 * stderr }
    }

    pub fn exact(value: f64) -> Self {
        Estimate::new(value, 0.0)
    }

    pub fn from_samples(xs: &[f64]) -> Self {
        Estimate::new(mean(xs), std_error(xs))
    }
}

/// Wilson score interval for a binomial proportion at 95%.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Chi-square style confidence interval for a variance, normal approximation
/// via the fourth central moment.
pub fn variance_interval(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let v = variance(xs);
    let m = mean(xs);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    let se = ((m4 - v * v * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt();
    (v, v - Z95 * se, v + Z95 * se)
}

/// Asymptotic Kolmogorov p-value for a one-sample statistic `d` from `n` draws.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov statistic of `xs` against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0_f64, |acc, (i, &x)| {
        let f = cdf(x);
        acc.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Ordinary least squares fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub rss: f64,
    pub n: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_se = if n > 2 { (rss / (n - 2) as f64 / sxx).sqrt() } else { f64::NAN };
    Some(LinearFit { slope, intercept, slope_se, rss, n })
}

/// Percentile of a sample (linear interpolation between order statistics).
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(v.len() - 1);
    let t = pos - i as f64;
    v[i] * (1.0 - t) + v[j] * t
}

/// Percentile bootstrap interval of `stat` over resamples of `data`.
pub fn bootstrap_interval<T: Clone, R: Rng, S: Fn(&[T]) -> f64>(
    data: &[T],
    reps: usize,
    rng: &mut R,
    stat: S,
) -> (f64, f64) {
    let n = data.len();
    let mut values = Vec::with_capacity(reps);
    let mut buf = Vec::with_capacity(n);
    for _ in 0..reps {
        buf.clear();
        for _ in 0..n {
            buf.push(data[rng.random_range(0..n)].clone());
        }
        let v = stat(&buf);
        if v.is_finite() {
            values.push(v);
        }
    }
    (quantile(&values, 0.025), quantile(&values, 0.975))
}

/// Jackknife standard error of a statistic computed from per-block means.
/// `blocks[i]` holds the i-th observation; `stat` maps a mean vector to the
/// statistic. Returns (bias-corrected estimate, standard error).
pub fn jackknife<S: Fn(&[f64]) -> f64>(blocks: &[Vec<f64>], stat: S) -> (f64, f64) {
    let n = blocks.len();
    let dim = blocks.first().map_or(0, |b| b.len());
    let mut sums = vec![0.0; dim];
    for b in blocks {
        for (s, v) in sums.iter_mut().zip(b) {
            *s += v;
        }
    }
    let full_means: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    let full = stat(&full_means);
    if n < 2 {
        return (full, f64::NAN);
    }
    let mut loo = Vec::with_capacity(n);
    let mut means = vec![0.0; dim];
    for b in blocks {
        for k in 0..dim {
            means[k] = (sums[k] - b[k]) / (n - 1) as f64;
        }
        loo.push(stat(&means));
    }
    let loo_mean = mean(&loo);
    let nf = n as f64;
    let corrected = nf * full - (nf - 1.0) * loo_mean;
    let var = (nf - 1.0) / nf * loo.iter().map(|v| (v - loo_mean).powi(2)).sum::<f64>();
    (corrected, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn wilson_contains_truth_for_zero_successes() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
    }

    #[test]
    fn ks_p_value_limits() {
        assert!(ks_p_value(0.0, 100) > 0.999);
        assert!(ks_p_value(0.5, 100) < 1e-10);
        // Critical value 1.358/sqrt(n) corresponds to p ≈ 0.05.
        let p = ks_p_value(1.358 / 1000f64.sqrt(), 1000);
        assert!((p - 0.05).abs() < 0.01, "{p}");
    }

    #[test]
    fn fit_recovers_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 3.0).abs() < 1e-13);
    }

    #[test]
    fn jackknife_of_mean_is_plain_mean() {
        let blocks: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let (est, se) = jackknife(&blocks, |m| m[0]);
        assert!((est - 4.5).abs() < 1e-12);
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!((se - std_error(&xs)).abs() < 1e-12);
    }

    #[test]
    fn jackknife_removes_first_order_bias_of_square() {
        // E[mean²] = μ² + σ²/n; jackknife removes the σ²/n term exactly.
        let xs = [0.3, 1.7, 2.2, 0.9, 1.4];
        let blocks: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
        let (est, _) = jackknife(&blocks, |m| m[0] * m[0]);
        let m = mean(&xs);
        assert!((est - (m * m - variance(&xs) / 5.0)).abs() < 1e-12);
    }
}
