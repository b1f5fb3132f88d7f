//! Paraboloid thinning of weighted points and the retained-point count.
//!
//! A weighted point `(x, h)` is retained when the boundary of its upward
//! paraboloid `h_z ≥ h + |x − z|²/(2t)` is not covered by the upward
//! paraboloids of the other points, which happens exactly when its closed
//! Laguerre cell
//! `{w : (z − x)·w ≤ (|z|² − |x|²)/2 + t(h_z − h) ∀z}` is nonempty.

mod lp;

use crate::error::{config, input, Error, Result};
use crate::geometry::{Point, Space, Window};
use crate::process::{Configuration, MarkLaw, MarkedPoint, SpaceTimeDomain, TimeMeasure, View};
use crate::scores::ScoreFamily;
use lp::{clip_box, distance_to_polygon, feasible_2d, HalfPlane};
use serde::{Deserialize, Serialize};

/// Slack allowed in every cell constraint (distance units in `w`).
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint {
    pub x: Point,
    pub h: f64,
}

impl WeightedPoint {
    pub fn new(x: &[f64], h: f64) -> Result<Self> {
        Ok(WeightedPoint { x: Point::new(x)?, h })
    }

    pub fn from_marked(p: &MarkedPoint) -> Self {
        WeightedPoint { x: p.loc, h: p.time_or_zero() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaguerreConfig {
    /// Paraboloid aperture.
    pub t: f64,
    /// Weight density `h^β` on `(0, h_max]`.
    pub beta: f64,
    pub dim: usize,
    /// Simulation halo beyond the window.
    pub margin: f64,
    pub h_max: f64,
    /// Seed of the constraint shuffle in the planar feasibility test.
    pub lp_seed: u64,
}

impl LaguerreConfig {
    pub fn new(t: f64, beta: f64, dim: usize, margin: f64, h_max: f64) -> Result<Self> {
        let cfg = LaguerreConfig { t, beta, dim, margin, h_max, lp_seed: 0x1a9 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0) || !self.t.is_finite() {
            return config(format!("t must be positive, got {}", self.t));
        }
        if !(self.beta > -1.0) {
            return config(format!("beta must exceed -1, got {}", self.beta));
        }
        if !(self.margin >= 0.0) || !self.margin.is_finite() {
            return config(format!("margin must be finite and non-negative, got {}", self.margin));
        }
        if !(self.h_max > 0.0) || !self.h_max.is_finite() {
            return config(format!("h_max must be positive, got {}", self.h_max));
        }
        check_dim(self.dim)
    }

    /// Window `W_λ = [−½λ^{1/d}, ½λ^{1/d}]^d`.
    pub fn window(&self, lambda: f64) -> Window {
        Window::centered_box(self.dim, lambda.powf(1.0 / self.dim as f64))
    }

    /// Unit-intensity domain on `(W_λ ⊕ margin) × (0, h_max]`, observed on `W_λ`.
    pub fn domain(&self, lambda: f64) -> Result<SpaceTimeDomain> {
        let side = lambda.powf(1.0 / self.dim as f64);
        let space = Space::euclidean(self.dim, side + 2.0 * self.margin)?;
        SpaceTimeDomain::new(
            space,
            self.window(lambda),
            Window::Full,
            1.0,
            TimeMeasure::PowerDensity { beta: self.beta, h_max: self.h_max },
            MarkLaw::PointMass { value: 1.0 },
        )
    }
}

/// Halo `m = (ln(ν(W)/ε)/ĉ)^{1/d}` from a spatial decay `exp(−ĉ r^d)`.
pub fn auto_margin(nu_window: f64, eps: f64, c_hat: f64, dim: usize) -> Result<f64> {
    Ok(log_budget(nu_window, eps, c_hat)?.powf(1.0 / dim as f64))
}

/// Weight cut-off `h_max = (ln(ν(W)/ε)/ĉ)^{2/d}` from a retention decay
/// `exp(−ĉ h^{d/2})`.
pub fn auto_h_max(nu_window: f64, eps: f64, c_hat: f64, dim: usize) -> Result<f64> {
    Ok(log_budget(nu_window, eps, c_hat)?.powf(2.0 / dim as f64).max(1e-9))
}

fn log_budget(nu_window: f64, eps: f64, c_hat: f64) -> Result<f64> {
    if !(c_hat > 0.0) || !(eps > 0.0) || !(nu_window > 0.0) {
        return config(format!("need positive ν(W), ε and rate (got {nu_window}, {eps}, {c_hat})"));
    }
    Ok((nu_window / eps).ln().max(0.0) / c_hat)
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > 2 {
        return Err(Error::Unsupported(format!("paraboloid thinning is implemented for d ∈ {{1, 2}}, got {d}")));
    }
    Ok(())
}

/// Cell constraint of competitor `z` against `p`: `a · w ≤ b`.
fn constraint(p: &WeightedPoint, z: &WeightedPoint, t: f64, d: usize) -> ([f64; 2], f64) {
    let mut a = [0.0; 2];
    let mut nz = 0.0;
    let mut nx = 0.0;
    for i in 0..d {
        a[i] = z.x[i] - p.x[i];
        nz += z.x[i] * z.x[i];
        nx += p.x[i] * p.x[i];
    }
    (a, 0.5 * (nz - nx) + t * (z.h - p.h))
}

/// Feasibility of the cell of `p` against `competitors`, intersected with
/// the ball `|w − x| ≤ radius` (infinite radius: no restriction).
fn cell_nonempty<'a, I>(p: &WeightedPoint, competitors: I, cfg: &LaguerreConfig, radius: f64) -> Result<bool>
where
    I: IntoIterator<Item = &'a WeightedPoint>,
{
    let d = p.x.len();
    check_dim(d)?;
    let tol = FEASIBILITY_TOL;
    match d {
        1 => {
            let (mut lo, mut hi) = (p.x[0] - radius, p.x[0] + radius);
            for z in competitors {
                let (a, b) = constraint(p, z, cfg.t, 1);
                let a = a[0];
                if a == 0.0 {
                    if b < -tol {
                        return Ok(false);
                    }
                } else if a > 0.0 {
                    hi = hi.min(b / a + tol);
                } else {
                    lo = lo.max(b / a - tol);
                }
            }
            Ok(lo <= hi)
        }
        _ => {
            let mut planes = Vec::new();
            let mut reach: f64 = 1.0;
            for z in competitors {
                reach = reach.max((z.x[0] - p.x[0]).abs()).max((z.x[1] - p.x[1]).abs());
                let (a, b) = constraint(p, z, cfg.t, 2);
                match HalfPlane::new(a, b, tol) {
                    Ok(h) => planes.push(h),
                    Err(true) => {}
                    Err(false) => return Ok(false),
                }
            }
            let x = [p.x[0], p.x[1]];
            if radius.is_finite() {
                let lo = [x[0] - radius, x[1] - radius];
                let hi = [x[0] + radius, x[1] + radius];
                let poly = clip_box(&planes, lo, hi, tol);
                Ok(!poly.is_empty() && distance_to_polygon(x, &poly) <= radius + tol)
            } else {
                // A nonempty cell reaches within this box of x unless it is a
                // sliver beyond every competitor by a factor 10⁴.
                let half = 1e4 * (reach + cfg.t * cfg.h_max.max(1.0));
                let lo = [x[0] - half, x[1] - half];
                let hi = [x[0] + half, x[1] + half];
                let seed = cfg.lp_seed ^ x[0].to_bits().rotate_left(17) ^ x[1].to_bits() ^ p.h.to_bits().rotate_left(31);
                Ok(feasible_2d(&planes, lo, hi, tol, seed))
            }
        }
    }
}

/// Whether `p` survives the thinning against `chi` (which must not
/// contain `p`).
pub fn is_retained(p: &WeightedPoint, chi: &[WeightedPoint], cfg: &LaguerreConfig) -> Result<bool> {
    if chi.iter().any(|z| z.x.len() != p.x.len()) {
        return input("weighted points of mixed dimension");
    }
    cell_nonempty(p, chi, cfg, f64::INFINITY)
}

/// Number of points of `chi` with location in `window` that are retained
/// against all other points of `chi`.
pub fn count_thinned(chi: &[WeightedPoint], window: &Window, cfg: &LaguerreConfig) -> Result<usize> {
    let d = cfg.dim;
    check_dim(d)?;
    let space = Space::euclidean(d, 1.0)?;
    let mut n = 0;
    for (i, p) in chi.iter().enumerate() {
        if !space.contains(window, &p.x) {
            continue;
        }
        let others = chi[..i].iter().chain(&chi[i + 1..]);
        if cell_nonempty(p, others, cfg, f64::INFINITY)? {
            n += 1;
        }
    }
    Ok(n)
}

/// Independent check of retention in `d = 1` by direct comparison of
/// parabolas: `p` is retained iff at some `w` its parabola
/// `h + (x − w)²/(2t)` is (weakly) the lowest.
///
/// The difference between the lowest competitor and `p` is a concave
/// piecewise linear function of `w` whose breakpoints are crossings of
/// parabola pairs, so evaluating at all pairwise crossings (plus one point
/// beyond each end) is exact. `grid_step`, when given, adds a uniform scan
/// of the same range.
pub fn boundary_scan_oracle_1d(p: &WeightedPoint, chi: &[WeightedPoint], t: f64, grid_step: Option<f64>) -> Result<bool> {
    if p.x.len() != 1 || chi.iter().any(|z| z.x.len() != 1) {
        return input("boundary scan is one-dimensional");
    }
    if chi.is_empty() {
        return Ok(true);
    }
    let height = |q: &WeightedPoint, w: f64| q.h + (q.x[0] - w) * (q.x[0] - w) / (2.0 * t);
    let all: Vec<&WeightedPoint> = std::iter::once(p).chain(chi).collect();
    let mut candidates = vec![p.x[0]];
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            let (a, b) = (all[i], all[j]);
            let dx = b.x[0] - a.x[0];
            if dx != 0.0 {
                // h_a + (x_a − w)²/2t = h_b + (x_b − w)²/2t.
                candidates.push(0.5 * (a.x[0] + b.x[0]) + t * (b.h - a.h) / dx);
            }
        }
    }
    let lo = candidates.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let hi = candidates.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    candidates.push(lo);
    candidates.push(hi);
    if let Some(step) = grid_step {
        let n = ((hi - lo) / step).ceil().min(1e7) as usize;
        candidates.extend((0..=n).map(|k| lo + k as f64 * step));
    }
    let lowest_at = |w: f64| {
        let hp = height(p, w);
        chi.iter().all(|z| {
            let gap = height(z, w) - hp;
            // Express the gap in the same distance units as the cell constraints.
            let scale = (z.x[0] - p.x[0]).abs() / t;
            if scale == 0.0 {
                gap >= -FEASIBILITY_TOL * t.max(1.0)
            } else {
                gap / scale >= -2.0 * FEASIBILITY_TOL
            }
        })
    };
    Ok(candidates.into_iter().any(lowest_at))
}

/// Retention indicator as a score, with weights carried in the time slot.
///
/// The space-restricted version only asks whether the part of the
/// paraboloid boundary inside the cylinder `B(x, r) × ℝ` is uncovered by
/// competitors inside the same cylinder; the weight restriction is the
/// canonical one.
#[derive(Clone, Debug)]
pub struct LaguerreScore {
    pub cfg: LaguerreConfig,
}

impl LaguerreScore {
    pub fn new(cfg: LaguerreConfig) -> Self {
        LaguerreScore { cfg }
    }
}

impl ScoreFamily for LaguerreScore {
    fn name(&self) -> String {
        format!("laguerre(t={}, β={}, d={})", self.cfg.t, self.cfg.beta, self.cfg.dim)
    }

    fn score(&self, p: &MarkedPoint, view: &View) -> f64 {
        let wp = WeightedPoint::from_marked(p);
        let others: Vec<WeightedPoint> = view.iter().filter(|q| q.id != p.id).map(WeightedPoint::from_marked).collect();
        let kept = cell_nonempty(&wp, &others, &self.cfg, f64::INFINITY).expect("validated dimension");
        if kept {
            1.0
        } else {
            0.0
        }
    }

    fn evaluate_space_restricted(&self, p: &MarkedPoint, chi: &Configuration, r: f64) -> f64 {
        if r == f64::INFINITY {
            return self.evaluate(p, chi);
        }
        let wp = WeightedPoint::from_marked(p);
        let others: Vec<WeightedPoint> = View::of(chi)
            .neighbors(&p.loc, r, Some(p.id))
            .into_iter()
            .map(|(q, _)| WeightedPoint::from_marked(q))
            .collect();
        if cell_nonempty(&wp, &others, &self.cfg, r).expect("validated dimension") {
            1.0
        } else {
            0.0
        }
    }

    fn abs_bound(&self) -> Option<f64> {
        Some(1.0)
    }

    fn moment_hint(&self) -> Option<f64> {
        Some(1.0)
    }
}
