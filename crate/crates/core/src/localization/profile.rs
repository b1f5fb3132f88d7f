//! Monte Carlo localization profiles ψ̂(r), φ̂(s) and the moment constant M̂₅.
//!
//! Each profile value is a maximum, over a fixed panel of base points and
//! adversarial additions A (|A| = 6), of the frequency with which a score
//! differs from its short-range version. The panel is a heuristic stand-in
//! for the supremum in the definition, not a certified bound.

use crate::error::{input, Error, Result};
use crate::geometry::{uniform_direction, Point, Space, SpaceKind, Window};
use crate::process::{fixed_atom_id, sample_poisson, MarkedPoint, RandomStream, SpaceTimeDomain, TimeMeasure};
use crate::scores::ScoreFamily;
use crate::stats::{linear_fit, quantile, wilson_interval};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

const ADVERSARY_SIZE: usize = 6;

/// Placement policy for the added set A around a base point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adversary {
    Empty,
    /// Six points at half the radius from the base point.
    Cluster,
    /// Six points on the window boundary.
    Boundary,
    /// Three points just inside and three just outside the radius.
    Straddle,
}

impl Adversary {
    pub fn panel() -> Vec<Adversary> {
        vec![Adversary::Empty, Adversary::Cluster, Adversary::Boundary, Adversary::Straddle]
    }
}

/// Which short-range family a profile compares against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Space,
    Time,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    /// Radius r or time s.
    pub arg: f64,
    /// Largest difference frequency over the panel.
    pub raw: f64,
    /// Wilson 95% interval of the maximizing panel cell.
    pub lo: f64,
    pub hi: f64,
    pub successes: u64,
    pub trials: u64,
    /// Panel cell attaining the maximum.
    pub cell: String,
    /// `min(2, 8·raw)`, with value 2 at argument 0.
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Profile {
    pub kind: ProfileKind,
    pub family: String,
    pub points: Vec<ProfilePoint>,
    pub cells: Vec<String>,
    /// Per trial, per argument, per cell: whether ξ differed.
    #[serde(skip)]
    pub outcomes: Vec<Vec<Vec<bool>>>,
    pub heuristic_panel: bool,
}

impl Profile {
    pub fn args(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.arg).collect()
    }

    pub fn raw(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.raw).collect()
    }

    /// `[[arg, raw, lo, hi], ...]`.
    pub fn to_rows(&self) -> Vec<[f64; 4]> {
        self.points.iter().map(|p| [p.arg, p.raw, p.lo, p.hi]).collect()
    }

    /// Raw profile recomputed on a resample of trials.
    fn raw_from(&self, trials: &[usize]) -> Vec<f64> {
        let n_args = self.points.len();
        let n_cells = self.cells.len();
        let mut counts = vec![vec![0u64; n_cells]; n_args];
        for &t in trials {
            for a in 0..n_args {
                for c in 0..n_cells {
                    counts[a][c] += self.outcomes[t][a][c] as u64;
                }
            }
        }
        counts.iter().map(|row| *row.iter().max().unwrap_or(&0) as f64 / trials.len().max(1) as f64).collect()
    }
}

fn profile_value(arg: f64, raw: f64) -> f64 {
    if arg <= 0.0 {
        2.0
    } else {
        (8.0 * raw).min(2.0)
    }
}

/// Base points: window center, the middle of one face (or a boundary point
/// of a ball), and a corner. On a full torus every point is equivalent and
/// only the center is used.
pub fn base_points(domain: &SpaceTimeDomain) -> Vec<(String, Point)> {
    let space = domain.space;
    match &domain.window {
        Window::Box { lo, hi } => {
            let full_torus = space.kind() == SpaceKind::FlatTorus
                && lo.iter().zip(hi).all(|(a, b)| b - a >= space.extent());
            let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
            let mut out = vec![("center".to_string(), space.point(&mid).expect("window point"))];
            if !full_torus {
                let mut face = mid.clone();
                face[0] = lo[0];
                out.push(("boundary".to_string(), space.point(&face).expect("window point")));
                out.push(("corner".to_string(), space.point(lo).expect("window point")));
            }
            out
        }
        Window::Ball { center, radius } => {
            let mut e1 = vec![0.0; space.dim()];
            e1[0] = 1.0;
            vec![("center".to_string(), *center), ("boundary".to_string(), space.point_at(center, *radius, &e1))]
        }
        Window::Full => vec![("center".to_string(), space.origin())],
    }
}

/// Random draws of one adversarial set, reused across radii so that the
/// profile is computed under common random numbers.
struct AdversaryDraws {
    dirs: Vec<[f64; 4]>,
    boundary: Vec<Point>,
    times: Vec<Option<f64>>,
    marks: Vec<f64>,
    unit: Vec<f64>,
}

fn draw_adversary(domain: &SpaceTimeDomain, rng: &mut ChaCha8Rng) -> AdversaryDraws {
    let space = domain.space;
    let d = space.dim();
    let dirs = (0..ADVERSARY_SIZE).map(|_| uniform_direction(d, rng)).collect();
    let boundary = (0..ADVERSARY_SIZE).map(|_| boundary_point(&space, &domain.window, rng)).collect();
    let times = (0..ADVERSARY_SIZE).map(|_| domain.sample_time(rng)).collect();
    let marks = (0..ADVERSARY_SIZE).map(|_| domain.marks.sample(rng)).collect();
    let unit = (0..ADVERSARY_SIZE).map(|_| rng.random::<f64>()).collect();
    AdversaryDraws { dirs, boundary, times, marks, unit }
}

fn boundary_point(space: &Space, window: &Window, rng: &mut ChaCha8Rng) -> Point {
    let d = space.dim();
    match space.resolve(window) {
        Window::Box { lo, hi } => {
            let mut c: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| a + rng.random::<f64>() * (b - a)).collect();
            let axis = rng.random_range(0..d);
            c[axis] = if rng.random::<bool>() { lo[axis] } else { hi[axis] };
            space.point(&c).expect("boundary point")
        }
        Window::Ball { center, radius } => {
            let dir = uniform_direction(d, rng);
            space.point_at(&center, radius, &dir[..d])
        }
        Window::Full => unreachable!(),
    }
}

/// The set A for a given base point, policy and scale; points outside the
/// carrier are dropped.
fn place(
    domain: &SpaceTimeDomain,
    z: &Point,
    policy: Adversary,
    scale: f64,
    time_anchor: Option<f64>,
    draws: &AdversaryDraws,
) -> Vec<MarkedPoint> {
    let space = domain.space;
    let d = space.dim();
    let mut out = Vec::new();
    for k in 0..ADVERSARY_SIZE {
        let (loc, time) = match policy {
            Adversary::Empty => return out,
            Adversary::Cluster => {
                let time = match (time_anchor, draws.times[k]) {
                    // Before the anchor, where a causal score can feel them.
                    (Some(s), Some(_)) => Some(s * draws.unit[k]),
                    (_, t) => t,
                };
                (space.point_at(z, 0.5 * scale, &draws.dirs[k][..d]), time)
            }
            Adversary::Boundary => (draws.boundary[k], draws.times[k]),
            Adversary::Straddle => {
                let f = if k % 2 == 0 { 0.999 } else { 1.001 };
                match (time_anchor, draws.times[k]) {
                    (Some(s), Some(_)) => (space.point_at(z, 0.5 * scale * draws.unit[k], &draws.dirs[k][..d]), Some(s * f)),
                    (_, t) => (space.point_at(z, scale * f, &draws.dirs[k][..d]), t),
                }
            }
        };
        if space.contains(&domain.carrier, &loc) {
            out.push(MarkedPoint { id: fixed_atom_id(1 + k as u64), loc, time, mark: draws.marks[k] });
        }
    }
    out
}

fn check_args(args: &[f64], n_trials: usize) -> Result<()> {
    if args.is_empty() || args.windows(2).any(|w| w[1] < w[0]) || args.iter().any(|a| a.is_nan()) {
        return input("profile arguments must be non-empty and sorted ascending");
    }
    if n_trials == 0 {
        return input("profile needs at least one trial");
    }
    Ok(())
}

/// Typical inter-point spacing `(1/intensity)^{1/d}`.
fn spacing(domain: &SpaceTimeDomain) -> f64 {
    if domain.intensity > 0.0 {
        domain.intensity.recip().powf(1.0 / domain.space.dim() as f64)
    } else {
        1.0
    }
}

/// ψ̂(r) = max over the panel of `P(ξ(z, P ∪ A) ≠ ξ^[r](z, P ∪ A))`.
pub fn estimate_psi(
    family: &dyn ScoreFamily,
    domain: &Arc<SpaceTimeDomain>,
    radii: &[f64],
    n_trials: usize,
    adversaries: &[Adversary],
    stream: RandomStream,
) -> Result<Profile> {
    check_args(radii, n_trials)?;
    let bases = base_points(domain);
    let cells: Vec<String> =
        bases.iter().flat_map(|(b, _)| adversaries.iter().map(move |a| format!("{b}/{a:?}"))).collect();
    let outcomes: Vec<Vec<Vec<bool>>> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let s = stream.stream(40).substream(i as u64);
            let chi = sample_poisson(domain, &domain.carrier, s)?;
            let mut rng = s.stream(41).rng();
            let mut rows = vec![Vec::with_capacity(cells.len()); radii.len()];
            for (_, zloc) in &bases {
                let z = MarkedPoint {
                    id: fixed_atom_id(0),
                    loc: *zloc,
                    time: domain.sample_time(&mut rng),
                    mark: domain.marks.sample(&mut rng),
                };
                let draws = draw_adversary(domain, &mut rng);
                for &adv in adversaries {
                    for (j, &r) in radii.iter().enumerate() {
                        let a = place(domain, &z.loc, adv, r, None, &draws);
                        let aug = chi.augment(&a)?;
                        let full = family.evaluate(&z, &aug);
                        let short = family.evaluate_space_restricted(&z, &aug, r);
                        rows[j].push(full != short);
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(assemble(ProfileKind::Space, family.name(), radii, cells, outcomes))
}

/// φ̂(s) = max over the panel of `P(ξ(z, P ∪ A) ≠ ξ^(s)(z, P ∪ A))`, with
/// base times `t_z ∈ {s/2, s}`.
pub fn estimate_phi(
    family: &dyn ScoreFamily,
    domain: &Arc<SpaceTimeDomain>,
    times: &[f64],
    n_trials: usize,
    adversaries: &[Adversary],
    stream: RandomStream,
) -> Result<Profile> {
    check_args(times, n_trials)?;
    if !domain.is_space_time() {
        return Err(Error::Domain("time profile on a space-only domain".into()));
    }
    let bases = base_points(domain);
    let fractions = [0.5, 1.0];
    let mut cells = Vec::new();
    for (b, _) in &bases {
        for f in fractions {
            for a in adversaries {
                cells.push(format!("{b}/t={f}s/{a:?}"));
            }
        }
    }
    let scale = spacing(domain);
    let outcomes: Vec<Vec<Vec<bool>>> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let st = stream.stream(50).substream(i as u64);
            let chi = sample_poisson(domain, &domain.carrier, st)?;
            let mut rng = st.stream(51).rng();
            let mut rows = vec![Vec::with_capacity(cells.len()); times.len()];
            for (_, zloc) in &bases {
                let mark = domain.marks.sample(&mut rng);
                let draws = draw_adversary(domain, &mut rng);
                for f in fractions {
                    for &adv in adversaries {
                        for (j, &s) in times.iter().enumerate() {
                            let z = MarkedPoint { id: fixed_atom_id(0), loc: *zloc, time: Some(f * s), mark };
                            let a = place(domain, zloc, adv, scale, Some(s), &draws);
                            let aug = chi.augment(&a)?;
                            let full = family.evaluate(&z, &aug);
                            let short = family.evaluate_time_restricted(&z, &aug, s);
                            rows[j].push(full != short);
                        }
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(assemble(ProfileKind::Time, family.name(), times, cells, outcomes))
}

fn assemble(kind: ProfileKind, family: String, args: &[f64], cells: Vec<String>, outcomes: Vec<Vec<Vec<bool>>>) -> Profile {
    let n = outcomes.len() as u64;
    let points = args
        .iter()
        .enumerate()
        .map(|(j, &arg)| {
            let counts: Vec<u64> =
                (0..cells.len()).map(|c| outcomes.iter().filter(|row| row[j][c]).count() as u64).collect();
            let (best, &k) = counts.iter().enumerate().max_by_key(|(i, k)| (**k, std::cmp::Reverse(*i))).unwrap_or((0, &0));
            let raw = k as f64 / n as f64;
            let (lo, hi) = wilson_interval(k, n);
            ProfilePoint {
                arg,
                raw,
                lo,
                hi,
                successes: k,
                trials: n,
                cell: cells.get(best).cloned().unwrap_or_default(),
                value: profile_value(arg, raw),
            }
        })
        .collect();
    Profile { kind, family, points, cells, outcomes, heuristic_panel: true }
}

/// Exponential rate of a profile: least squares of `ln raw` on the argument
/// over the points with `raw > 0`, with a percentile bootstrap interval
/// over trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `c` in `raw ≈ A e^{−c·arg}`.
    pub rate: f64,
    pub rate_se: f64,
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
}

pub fn fit_exponential_rate(profile: &Profile, reps: usize, stream: RandomStream) -> Result<RateFit> {
    let fit = |raw: &[f64]| -> Option<(f64, f64)> {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            profile.points.iter().zip(raw).filter(|(_, r)| **r > 0.0).map(|(p, r)| (p.arg, r.ln())).unzip();
        linear_fit(&xs, &ys).map(|f| (-f.slope, f.slope_se))
    };
    let raw = profile.raw();
    let (rate, rate_se) = fit(&raw).ok_or_else(|| Error::Diagnostic("fewer than three positive profile values".into()))?;
    let n = profile.outcomes.len();
    let mut rng = stream.stream(60).rng();
    let mut boot = Vec::with_capacity(reps);
    for _ in 0..reps {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        if let Some((r, _)) = fit(&profile.raw_from(&idx)) {
            boot.push(r);
        }
    }
    let (lo, hi) = if boot.len() >= reps / 2 && reps > 0 {
        (quantile(&boot, 0.025), quantile(&boot, 0.975))
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    };
    let n_points = raw.iter().filter(|r| **r > 0.0).count();
    Ok(RateFit { rate, rate_se, lo, hi, n_points })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    /// `max(1, max over the panel of the mean of |ξ^[r]|⁵)`.
    pub value: f64,
    pub cell: String,
    /// Set when a single draw carries more than half of the maximizing mean.
    pub heavy_tail: bool,
}

/// M̂₅ over base points, adversaries and `r ∈ radii ∪ {∞}`; a declared
/// bound on |ξ| short-circuits to `max(1, bound⁵)`.
pub fn estimate_m5(
    family: &dyn ScoreFamily,
    domain: &Arc<SpaceTimeDomain>,
    radii: &[f64],
    n_trials: usize,
    stream: RandomStream,
) -> Result<MomentEstimate> {
    if let Some(b) = family.abs_bound() {
        return Ok(MomentEstimate { value: b.abs().powi(5).max(1.0), cell: "declared bound".into(), heavy_tail: false });
    }
    if n_trials == 0 {
        return input("moment estimate needs at least one trial");
    }
    let mut rs: Vec<f64> = radii.to_vec();
    rs.push(f64::INFINITY);
    let bases = base_points(domain);
    let advs = Adversary::panel();
    let mut cells = Vec::new();
    for (b, _) in &bases {
        for a in &advs {
            for r in &rs {
                cells.push(format!("{b}/{a:?}/r={r}"));
            }
        }
    }
    let samples: Vec<Vec<f64>> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let s = stream.stream(70).substream(i as u64);
            let chi = sample_poisson(domain, &domain.carrier, s)?;
            let mut rng = s.stream(71).rng();
            let mut row = Vec::with_capacity(cells.len());
            for (_, zloc) in &bases {
                let z = MarkedPoint {
                    id: fixed_atom_id(0),
                    loc: *zloc,
                    time: domain.sample_time(&mut rng),
                    mark: domain.marks.sample(&mut rng),
                };
                let draws = draw_adversary(domain, &mut rng);
                for &adv in &advs {
                    for &r in &rs {
                        let scale = if r.is_finite() { r } else { spacing(domain) };
                        let aug = chi.augment(&place(domain, &z.loc, adv, scale, None, &draws))?;
                        let v = if r.is_finite() { family.evaluate_space_restricted(&z, &aug, r) } else { family.evaluate(&z, &aug) };
                        row.push(v.abs().powi(5));
                    }
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut best = (1.0, "floor".to_string(), false);
    for (c, name) in cells.iter().enumerate() {
        let col: Vec<f64> = samples.iter().map(|row| row[c]).collect();
        let sum: f64 = col.iter().sum();
        if !sum.is_finite() {
            return Err(Error::Diagnostic(format!("fifth moment diverges in panel cell {name}")));
        }
        let m = sum / col.len() as f64;
        if m > best.0 {
            let top = col.iter().copied().fold(0.0, f64::max);
            best = (m, name.clone(), col.len() >= 50 && top > 0.5 * sum);
        }
    }
    if best.2 {
        log::warn!("M5 estimate dominated by a single draw in {}; the fifth moment may be infinite", best.1);
    }
    Ok(MomentEstimate { value: best.0, cell: best.1, heavy_tail: best.2 })
}

/// Abscissa family for decay fits of `ln ψ̂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DecayModel {
    /// `ln ψ̂ = b − c·r`.
    Exponential,
    /// `ln ψ̂ = b − c·r^d`.
    Power { d: usize },
    /// `ln ψ̂ = b − c·e^{a r}`.
    DoubleExponential { a: f64 },
}

impl DecayModel {
    fn abscissa(&self, r: f64) -> f64 {
        match *self {
            DecayModel::Exponential => r,
            DecayModel::Power { d } => r.powi(d as i32),
            DecayModel::DoubleExponential { a } => (a * r).exp(),
        }
    }

    fn params(&self) -> usize {
        match self {
            DecayModel::DoubleExponential { .. } => 3,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub intercept: f64,
    pub rate: f64,
    pub rate_se: f64,
    pub aic: f64,
    pub n: usize,
    /// Largest fitted argument; the model is extrapolated beyond it.
    pub max_arg: f64,
    /// The fitted rate is negative, so the model is not a decay profile.
    pub increasing: bool,
}

impl DecayFit {
    /// Fitted `ln ψ̂(r)`.
    pub fn ln_raw(&self, r: f64) -> f64 {
        self.intercept - self.rate * self.model.abscissa(r)
    }

    pub fn extrapolated(&self, r: f64) -> bool {
        r > self.max_arg
    }
}

/// Least squares on `ln ψ̂` against each candidate abscissa, model chosen by
/// AIC. Needs at least three positive profile values.
pub fn fit_decay(profile: &Profile, dim: usize) -> Result<DecayFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        profile.points.iter().filter(|p| p.raw > 0.0 && p.arg > 0.0).map(|p| (p.arg, p.raw.ln())).unzip();
    if xs.len() < 3 {
        return Err(Error::Diagnostic("decay fit needs at least three positive profile values".into()));
    }
    let mut candidates = vec![DecayModel::Exponential];
    if dim > 1 {
        candidates.push(DecayModel::Power { d: dim });
    }
    for a in [0.25, 0.5, 1.0] {
        candidates.push(DecayModel::DoubleExponential { a });
    }
    let n = xs.len() as f64;
    let mut best: Option<DecayFit> = None;
    for m in candidates {
        let gs: Vec<f64> = xs.iter().map(|&r| m.abscissa(r)).collect();
        let Some(f) = linear_fit(&gs, &ys) else { continue };
        let rss = f.rss.max(1e-300 * n);
        let aic = n * (rss / n).ln() + 2.0 * m.params() as f64;
        let fit = DecayFit {
            model: m,
            intercept: f.intercept,
            rate: -f.slope,
            rate_se: f.slope_se,
            aic,
            n: xs.len(),
            max_arg: xs.iter().copied().fold(0.0, f64::max),
            increasing: f.slope > 0.0,
        };
        if best.as_ref().is_none_or(|b| fit.aic < b.aic) {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| Error::Diagnostic("no decay model could be fitted".into()))
}

/// Time measure support `[0, T]` of a domain, if bounded.
pub fn time_horizon(domain: &SpaceTimeDomain) -> Option<f64> {
    match domain.time {
        TimeMeasure::None => None,
        TimeMeasure::Lebesgue { t_max } => Some(t_max),
        TimeMeasure::PowerDensity { h_max, .. } => Some(h_max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scores::{ConstantScore, IsolatedScore, UStatKernel, UStatScore};

    fn torus_domain() -> Arc<SpaceTimeDomain> {
        let space = Space::torus(2, 6.0).unwrap();
        Arc::new(SpaceTimeDomain::space_only(space, Window::Full, 1.0).unwrap())
    }

    #[test]
    fn isolated_profile_vanishes_beyond_rho() {
        let dom = torus_domain();
        let radii = [0.0, 0.1, 0.2, 0.3, 0.45];
        let p = estimate_psi(&IsolatedScore::new(0.3), &dom, &radii, 300, &Adversary::panel(), RandomStream::new(3)).unwrap();
        assert_eq!(p.points[0].value, 2.0);
        assert!(p.points[1].raw > 0.0);
        assert_eq!(p.points[3].raw, 0.0);
        assert_eq!(p.points[4].raw, 0.0);
        assert!(p.points.iter().all(|q| (0.0..=1.0).contains(&q.raw) && q.lo <= q.raw && q.raw <= q.hi));
    }

    #[test]
    fn ustat_profile_vanishes_beyond_delta() {
        let dom = torus_domain();
        let score = UStatScore::new(UStatKernel::edge_count(0.2).unwrap());
        let p = estimate_psi(&score, &dom, &[0.1, 0.2, 0.4], 200, &Adversary::panel(), RandomStream::new(4)).unwrap();
        assert!(p.points[0].raw > 0.0);
        assert_eq!(p.points[1].raw, 0.0);
        assert_eq!(p.points[2].raw, 0.0);
    }

    #[test]
    fn profile_is_reproducible() {
        let dom = torus_domain();
        let run = || estimate_psi(&IsolatedScore::new(0.3), &dom, &[0.1, 0.2], 50, &Adversary::panel(), RandomStream::new(5)).unwrap();
        assert_eq!(run().to_rows(), run().to_rows());
    }

    #[test]
    fn declared_bounds_fix_m5() {
        let dom = torus_domain();
        let s = RandomStream::new(1);
        assert_eq!(estimate_m5(&ConstantScore(2.0), &dom, &[0.5], 10, s).unwrap().value, 32.0);
        assert_eq!(estimate_m5(&IsolatedScore::new(0.3), &dom, &[0.5], 10, s).unwrap().value, 1.0);
    }

    #[test]
    fn m5_of_unbounded_score_is_stable() {
        use crate::scores::{KnnScore, KnnScoreConfig};
        let dom = torus_domain();
        let knn = KnnScore::new(KnnScoreConfig { k: 1, alpha: 1.0 });
        let a = estimate_m5(&knn, &dom, &[0.5, 1.0], 400, RandomStream::new(7)).unwrap();
        let b = estimate_m5(&knn, &dom, &[0.5, 1.0], 400, RandomStream::new(8)).unwrap();
        assert!(a.value.is_finite() && a.value >= 1.0);
        assert!((a.value / b.value - 1.0).abs() < 0.5, "{} vs {}", a.value, b.value);
    }

    fn synthetic(raw: &[(f64, f64)]) -> Profile {
        let points = raw
            .iter()
            .map(|&(arg, r)| ProfilePoint {
                arg,
                raw: r,
                lo: r,
                hi: r,
                successes: 0,
                trials: 1,
                cell: String::new(),
                value: profile_value(arg, r),
            })
            .collect();
        Profile { kind: ProfileKind::Space, family: "synthetic".into(), points, cells: vec![], outcomes: vec![], heuristic_panel: false }
    }

    #[test]
    fn decay_fit_picks_generating_model() {
        let exp = synthetic(&(1..8).map(|k| (k as f64, 0.5 * (-0.7 * k as f64).exp())).collect::<Vec<_>>());
        let f = fit_decay(&exp, 2).unwrap();
        assert_eq!(f.model, DecayModel::Exponential);
        assert!((f.rate - 0.7).abs() < 1e-9);
        let pow = synthetic(&(1..8).map(|k| (0.3 * k as f64, (-(0.3 * k as f64).powi(2)).exp())).collect::<Vec<_>>());
        assert_eq!(fit_decay(&pow, 2).unwrap().model, DecayModel::Power { d: 2 });
        assert!(fit_decay(&synthetic(&[(1.0, 0.1), (2.0, 0.0)]), 2).is_err());
    }
}
