use super::{diff1_view, Functional};
use crate::error::{config, Error, Result};
use crate::numeric::exact_sum;
use crate::process::{fixed_atom_id, sample_poisson, MarkedPoint, RandomStream, SpaceTimeDomain, View};
use crate::stats::{variance_interval, Z95};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaBudgets {
    pub n_outer_x: usize,
    pub n_outer_y: usize,
    pub n_inner: usize,
}

/// Sampler for the outer integration points.
pub trait OuterProposal: Send + Sync {
    /// A point (location, time; the mark is redrawn per inner sample) and
    /// its weight `d(ν⊗μ)/dq`.
    fn draw(&self, domain: &SpaceTimeDomain, id: u64, rng: &mut ChaCha8Rng) -> Result<(MarkedPoint, f64)>;
}

#[derive(Clone, Default)]
pub struct GammaOptions {
    /// Defaults to ν⊗μ-proportional sampling on the carrier.
    pub proposal: Option<Arc<dyn OuterProposal>>,
}

/// Monte Carlo estimates of γ̂₀…γ̂₆ for an unnormalized functional F.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimates {
    pub gamma: [f64; 7],
    pub stderr: [f64; 7],
    pub var: f64,
    pub var_ci: (f64, f64),
    pub mean: f64,
    pub budgets: GammaBudgets,
    pub seed: u64,
    pub bias_corrected: bool,
}

impl GammaEstimates {
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        let mut se = serde_json::Map::new();
        for i in 0..7 {
            obj.insert(format!("gamma{i}"), json!(self.gamma[i]));
            se.insert(format!("gamma{i}"), json!(self.stderr[i]));
        }
        obj.insert("var".into(), json!(self.var));
        obj.insert("var_ci".into(), json!([self.var_ci.0, self.var_ci.1]));
        obj.insert("mean".into(), json!(self.mean));
        obj.insert("stderr".into(), serde_json::Value::Object(se));
        obj.insert("budgets".into(), json!(self.budgets));
        obj.insert("seed".into(), json!(self.seed));
        obj.insert("bias_corrected".into(), json!(self.bias_corrected));
        serde_json::Value::Object(obj)
    }
}

struct InnerSample {
    f: f64,
    dx: Vec<f64>,
    dy: Vec<f64>,
    d2: Vec<f64>,
}

/// Moment tables entering the γ̂ formulas (inner averages).
struct Moments<'a> {
    e4x: &'a [f64],
    e4y: &'a [f64],
    e3y: &'a [f64],
    e4xy: &'a [f64],
}

fn gammas(m: &Moments, wx: &[f64], wy: &[f64], xs: &[usize], ys: &[usize]) -> [f64; 6] {
    let ny_all = wy.len();
    let nx = xs.len() as f64;
    let ny = ys.len() as f64;
    let mut g1 = 0.0;
    let mut g2 = 0.0;
    let mut g5 = 0.0;
    let mut g6 = 0.0;
    for &i in xs {
        let mut inner1 = 0.0;
        let mut inner2 = 0.0;
        let mut s5 = 0.0;
        let mut s6 = 0.0;
        for &j in ys {
            let e = m.e4xy[i * ny_all + j].max(0.0);
            let sq = e.sqrt();
            inner1 += wy[j] * m.e4y[j].max(0.0).sqrt().sqrt() * sq.sqrt();
            inner2 += wy[j] * sq;
            s5 += wy[j] * e;
            s6 += wy[j] * sq;
        }
        inner1 /= ny;
        inner2 /= ny;
        g1 += wx[i] * inner1 * inner1;
        g2 += wx[i] * inner2 * inner2;
        g5 += wx[i] * s5;
        g6 += wx[i] * s6 * m.e4x[i].max(0.0).sqrt();
    }
    let mut g3 = 0.0;
    let mut g4 = 0.0;
    for &j in ys {
        g3 += wy[j] * m.e3y[j];
        g4 += wy[j] * m.e4y[j];
    }
    [
        2.0 * (g1 / nx).sqrt(),
        2.0 * (g2 / nx).sqrt(),
        2.0 * g3 / ny,
        (4.0 * g4 / ny).max(0.0).sqrt(),
        (8.0 * g5 / (nx * ny)).max(0.0).sqrt(),
        (32.0 * g6 / (nx * ny)).max(0.0).sqrt(),
    ]
}

/// Estimates the sharpened second-order Poincaré terms of `f`.
///
/// Outer points x, y are drawn from the normalized ν⊗μ on the carrier (or
/// the proposal) and reweighted by the total mass. Each of the `n_inner`
/// configurations is shared by all (x, y) pairs (common random numbers)
/// with fresh marks for the added points. Fractional powers are applied
/// after inner averaging; below 1000 inner samples the inner averages are
/// jackknife bias-corrected. Standard errors combine inner, x and y
/// delete-one jackknives.
pub fn estimate_gammas(
    f: &dyn Functional,
    domain: &Arc<SpaceTimeDomain>,
    budgets: GammaBudgets,
    stream: RandomStream,
    options: &GammaOptions,
) -> Result<GammaEstimates> {
    let GammaBudgets { n_outer_x: nx, n_outer_y: ny, n_inner } = budgets;
    if nx < 10 || ny < 10 || n_inner < 10 {
        return config("every γ̂ budget must be at least 10");
    }
    let mass = domain.total_mass(&domain.carrier)?;
    let draw = |k: u64, id: u64, s: RandomStream| -> Result<(MarkedPoint, f64)> {
        let mut rng = s.substream(k).rng();
        match &options.proposal {
            Some(p) => p.draw(domain, id, &mut rng),
            None => Ok((domain.sample_point(&domain.carrier, id, &mut rng)?, mass)),
        }
    };
    let xs: Vec<(MarkedPoint, f64)> =
        (0..nx as u64).map(|k| draw(k, fixed_atom_id(0), stream.stream(10))).collect::<Result<_>>()?;
    let ys: Vec<(MarkedPoint, f64)> =
        (0..ny as u64).map(|k| draw(k, fixed_atom_id(1), stream.stream(11))).collect::<Result<_>>()?;
    let range = f.second_order_range();
    let space = domain.space;

    let samples: Vec<InnerSample> = (0..n_inner as u64)
        .into_par_iter()
        .map(|k| {
            let chi = sample_poisson(domain, &domain.carrier, stream.stream(12).substream(k))?;
            let view = View::of(&chi);
            let mut mark_rng = stream.stream(13).substream(k).rng();
            let xk: Vec<MarkedPoint> =
                xs.iter().map(|(p, _)| MarkedPoint { mark: domain.marks.sample(&mut mark_rng), ..*p }).collect();
            let yk: Vec<MarkedPoint> =
                ys.iter().map(|(p, _)| MarkedPoint { mark: domain.marks.sample(&mut mark_rng), ..*p }).collect();
            let fv = f.evaluate_view(&view);
            let dx: Vec<f64> = xk.iter().map(|x| diff1_view(f, &view, x)).collect();
            let dy: Vec<f64> = yk.iter().map(|y| diff1_view(f, &view, y)).collect();
            let mut d2 = vec![0.0; nx * ny];
            for (j, y) in yk.iter().enumerate() {
                let vy = view.with(y);
                let fy = if f.local_diff(&view, y).is_none() { Some(fv + dy[j]) } else { None };
                for (i, x) in xk.iter().enumerate() {
                    if let Some(r) = range {
                        if space.dist(&x.loc, &y.loc) >= r {
                            continue;
                        }
                    }
                    d2[i * ny + j] = match f.local_diff(&vy, x) {
                        Some(dxy) => dxy - dx[i],
                        None => {
                            let fxy = f.evaluate_view(&vy.with(x));
                            exact_sum(&[fxy, -(fv + dx[i]), -fy.unwrap_or(fv + dy[j]), fv])
                        }
                    };
                }
            }
            let all_finite = fv.is_finite()
                && dx.iter().chain(&dy).chain(&d2).all(|v| v.is_finite());
            if !all_finite {
                return Err(Error::Diagnostic(format!("non-finite difference operator in inner sample {k}")));
            }
            Ok(InnerSample { f: fv, dx, dy, d2 })
        })
        .collect::<Result<_>>()?;

    // Per-sample moment blocks: [|Dx|⁴ (nx), |Dy|⁴ (ny), |Dy|³ (ny), |D²|⁴ (nx·ny)].
    let width = nx + 2 * ny + nx * ny;
    let mut sums = vec![0.0; width];
    let mut blocks: Vec<Vec<f64>> = Vec::with_capacity(n_inner);
    for s in &samples {
        let mut b = Vec::with_capacity(width);
        b.extend(s.dx.iter().map(|v| v.powi(4)));
        b.extend(s.dy.iter().map(|v| v.powi(4)));
        b.extend(s.dy.iter().map(|v| v.abs().powi(3)));
        b.extend(s.d2.iter().map(|v| v.powi(4)));
        for (a, v) in sums.iter_mut().zip(&b) {
            *a += v;
        }
        blocks.push(b);
    }
    heavy_tail_warning(&blocks, &sums);
    let wx: Vec<f64> = xs.iter().map(|p| p.1).collect();
    let wy: Vec<f64> = ys.iter().map(|p| p.1).collect();
    let all_x: Vec<usize> = (0..nx).collect();
    let all_y: Vec<usize> = (0..ny).collect();
    let eval = |means: &[f64], xsel: &[usize], ysel: &[usize]| {
        let m = Moments {
            e4x: &means[..nx],
            e4y: &means[nx..nx + ny],
            e3y: &means[nx + ny..nx + 2 * ny],
            e4xy: &means[nx + 2 * ny..],
        };
        gammas(&m, &wx, &wy, xsel, ysel)
    };
    let n = n_inner as f64;
    let means: Vec<f64> = sums.iter().map(|s| s / n).collect();
    let full = eval(&means, &all_x, &all_y);

    // Inner jackknife.
    let mut loo_mean = [0.0; 6];
    let mut loo_vals = Vec::with_capacity(n_inner);
    let mut m = vec![0.0; width];
    for b in &blocks {
        for t in 0..width {
            m[t] = (sums[t] - b[t]) / (n - 1.0);
        }
        let g = eval(&m, &all_x, &all_y);
        for t in 0..6 {
            loo_mean[t] += g[t] / n;
        }
        loo_vals.push(g);
    }
    let bias_corrected = n_inner < 1000;
    let mut est = full;
    let mut var_inner = [0.0; 6];
    for t in 0..6 {
        if bias_corrected {
            est[t] = (n * full[t] - (n - 1.0) * loo_mean[t]).max(0.0);
        }
        var_inner[t] = (n - 1.0) / n * loo_vals.iter().map(|g| (g[t] - loo_mean[t]).powi(2)).sum::<f64>();
    }
    // Outer jackknives over x and y.
    let var_x = outer_jackknife(nx, |drop| {
        let sel: Vec<usize> = (0..nx).filter(|&i| i != drop).collect();
        eval(&means, &sel, &all_y)
    });
    let var_y = outer_jackknife(ny, |drop| {
        let sel: Vec<usize> = (0..ny).filter(|&j| j != drop).collect();
        eval(&means, &all_x, &sel)
    });

    let fs: Vec<f64> = samples.iter().map(|s| s.f).collect();
    let (var, lo, hi) = variance_interval(&fs);
    let mut gamma = [0.0; 7];
    let mut stderr = [0.0; 7];
    gamma[0] = (1.0 - var).abs();
    stderr[0] = (hi - lo) / (2.0 * Z95);
    for t in 0..6 {
        gamma[t + 1] = est[t];
        stderr[t + 1] = (var_inner[t] + var_x[t] + var_y[t]).sqrt();
    }
    Ok(GammaEstimates {
        gamma,
        stderr,
        var,
        var_ci: (lo, hi),
        mean: crate::stats::mean(&fs),
        budgets,
        seed: stream.seed,
        bias_corrected,
    })
}

fn outer_jackknife<G: Fn(usize) -> [f64; 6]>(n: usize, loo: G) -> [f64; 6] {
    let vals: Vec<[f64; 6]> = (0..n).map(loo).collect();
    let nf = n as f64;
    let mut out = [0.0; 6];
    for t in 0..6 {
        let m = vals.iter().map(|g| g[t]).sum::<f64>() / nf;
        out[t] = (nf - 1.0) / nf * vals.iter().map(|g| (g[t] - m).powi(2)).sum::<f64>();
    }
    out
}

fn heavy_tail_warning(blocks: &[Vec<f64>], sums: &[f64]) {
    let n = blocks.len();
    if n < 50 {
        return;
    }
    let mut dominated = 0;
    for (t, s) in sums.iter().enumerate() {
        let max = blocks.iter().map(|b| b[t]).fold(0.0, f64::max);
        if *s > 0.0 && max > 0.5 * s {
            dominated += 1;
        }
    }
    if dominated * 10 > sums.len() {
        log::warn!("fourth-moment estimates dominated by single samples in {dominated} of {} cells; tails may be heavy", sums.len());
    }
}
