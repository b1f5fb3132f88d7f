use std::f64::consts::{FRAC_1_SQRT_2, PI};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const FRAC_2_SQRT_PI: f64 = 1.128_379_167_095_512_6;

pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `erf(z)` for `0 ≤ z < 2.2` by the positive-term series
/// `2/√π e^{−z²} Σ 2ⁿ z^{2n+1} / (2n+1)!!`.
fn erf_series(z: f64) -> f64 {
    let z2 = z * z;
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * z2 / (2.0 * n + 1.0);
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-z2).exp() * sum
}

/// `erfc(z)` for `z ≥ 2.1` by the continued fraction
/// `e^{−z²}/√π · 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + …))))`, evaluated
/// bottom-up at fixed depth.
fn erfc_cf(z: f64) -> f64 {
    let mut t = z;
    for n in (1..=120).rev() {
        t = z + 0.5 * n as f64 / t;
    }
    (-z * z).exp() / (PI.sqrt() * t)
}

/// Standard normal CDF; absolute error below 1e-14 for all `x`.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let z = x.abs() * FRAC_1_SQRT_2;
    if x.abs() < 3.0 {
        let e = erf_series(z);
        if x >= 0.0 {
            0.5 + 0.5 * e
        } else {
            0.5 - 0.5 * e
        }
    } else if z > 27.0 {
        if x > 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        let tail = 0.5 * erfc_cf(z);
        if x > 0.0 {
            1.0 - tail
        } else {
            tail
        }
    }
}

/// Inverse of [`normal_cdf`] on `(0, 1)`: rational initial guess refined by
/// Newton steps.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    let mut x = acklam(p);
    for _ in 0..3 {
        let pdf = normal_pdf(x);
        if pdf < 1e-300 {
            break;
        }
        let step = (normal_cdf(x) - p) / pdf;
        x -= step;
        if step.abs() < 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    let lo = 0.02425;
    if p < lo {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - lo {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// `sup_t |F̂_n(t) − Φ(t)|`, attained at the sample points.
pub fn kolmogorov_to_normal(samples: &[f64]) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = normal_cdf(x);
        sup = sup.max(((i + 1) as f64 / n - f).abs()).max((i as f64 / n - f).abs());
    }
    sup
}

/// `∫_a^b (c − Φ(t)) dt`, arranged to avoid cancellation in the tails.
fn gap_integral(c: f64, a: f64, b: f64) -> f64 {
    // G(t) = tΦ(t) + φ(t) is an antiderivative of Φ; G(−t) = ∫_t^∞ (1 − Φ).
    let g = |t: f64| if t == f64::NEG_INFINITY { 0.0 } else { t * normal_cdf(t) + normal_pdf(t) };
    if a >= b {
        return 0.0;
    }
    if b <= 0.0 {
        let lin = if c == 0.0 { 0.0 } else { c * (b - a) };
        lin - (g(b) - g(a))
    } else if a >= 0.0 {
        let lin = if c == 1.0 { 0.0 } else { (c - 1.0) * (b - a) };
        lin + (g(-a) - g(-b))
    } else {
        gap_integral(c, a, 0.0) + gap_integral(c, 0.0, b)
    }
}

/// `∫_a^b |c − Φ(t)| dt`.
fn abs_gap_integral(c: f64, a: f64, b: f64) -> f64 {
    let t = normal_quantile(c);
    if t <= a {
        -gap_integral(c, a, b)
    } else if t >= b {
        gap_integral(c, a, b)
    } else {
        gap_integral(c, a, t) - gap_integral(c, t, b)
    }
}

/// 1-Wasserstein distance between the empirical law of `samples` and
/// N(0, 1): `∫ |F̂_n − Φ|` integrated exactly piece by piece.
pub fn wasserstein_to_normal(samples: &[f64]) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    let nf = n as f64;
    let mut total = abs_gap_integral(0.0, f64::NEG_INFINITY, v[0]);
    for i in 0..n - 1 {
        if v[i + 1] > v[i] {
            total += abs_gap_integral((i + 1) as f64 / nf, v[i], v[i + 1]);
        }
    }
    total + abs_gap_integral(1.0, v[n - 1], f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_known_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.96) - 0.975_002_104_851_779_5).abs() < 1e-15);
        for x in [0.1, 0.7, 2.5, 2.99, 3.0, 3.5, 5.0, 8.0] {
            assert!((normal_cdf(-x) - (1.0 - normal_cdf(x))).abs() < 1e-15, "{x}");
        }
    }

    #[test]
    fn cdf_continuous_across_branch_point() {
        let below = normal_cdf(3.0f64.next_down());
        let at = normal_cdf(3.0);
        assert!((below - at).abs() < 1e-15);
    }

    #[test]
    fn quantile_inverts() {
        for p in [1e-10, 0.001, 0.1, 0.3, 0.5, 0.77, 0.99, 1.0 - 1e-9] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-15, "{p}");
        }
    }

    #[test]
    fn kolmogorov_cases() {
        assert_eq!(kolmogorov_to_normal(&[0.0; 7]), 0.5);
        assert_eq!(kolmogorov_to_normal(&[0.0]), 0.5);
        let n = 1000;
        let grid: Vec<f64> = (1..=n).map(|i| normal_quantile((i as f64 - 0.5) / n as f64)).collect();
        assert!(kolmogorov_to_normal(&grid) <= 0.5 / n as f64 + 1e-12);
    }

    #[test]
    fn wasserstein_cases() {
        let w = wasserstein_to_normal(&[0.0, 0.0]);
        assert!((w - (2.0 / PI).sqrt()).abs() < 1e-14);
        // Quantile-coupling form: W1 = ∫₀¹ |Φ⁻¹(u) − Q̂(u)| du.
        let n = 200;
        let grid: Vec<f64> = (1..=n).map(|i| normal_quantile((i as f64 - 0.5) / n as f64)).collect();
        let mut reference = 0.0;
        for (i, &q) in grid.iter().enumerate() {
            let f = |u: f64| (normal_quantile(u) - q).abs();
            let (a, m, b) = (i as f64 / n as f64, (i as f64 + 0.5) / n as f64, (i + 1) as f64 / n as f64);
            reference += crate::numeric::integrate(f, a, m, 1e-10, 1e-14).unwrap();
            reference += crate::numeric::integrate(f, m, b, 1e-10, 1e-14).unwrap();
        }
        let w = wasserstein_to_normal(&grid);
        assert!((w - reference).abs() < 1e-8, "{w} vs {reference}");
    }

    #[test]
    fn wasserstein_shift_is_lipschitz() {
        let xs: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64 / 101.0 - 0.5) * 3.0).collect();
        let w0 = wasserstein_to_normal(&xs);
        for c in [0.01, 0.3, -1.2] {
            let ys: Vec<f64> = xs.iter().map(|x| x + c).collect();
            assert!((wasserstein_to_normal(&ys) - w0).abs() <= c.abs() + 1e-12);
        }
    }
}
