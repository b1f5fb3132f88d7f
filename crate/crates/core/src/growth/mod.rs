//! Spatial birth-growth with random speeds.
//!
//! Seeds arrive at `(z, t)` and grow radially at their own speed. A seed is
//! accepted when it is born (by the horizon `t0`) outside every ball grown by
//! a previously accepted seed; rejected seeds never block anything.

use crate::error::{config, input, Result};
use crate::geometry::{Point, Space, SpatialIndex, Window};
use crate::process::{MarkLaw, MarkedPoint, RandomStream, SpaceTimeDomain, TimeMeasure, View};
use crate::scores::ScoreFamily;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub loc: Point,
    pub birth: f64,
    pub speed: f64,
}

impl Seed {
    pub fn from_marked(p: &MarkedPoint) -> Seed {
        Seed { loc: p.loc, birth: p.time_or_zero(), speed: p.mark }
    }
}

/// Gap used to separate equal birth times.
pub const TIE_GAP: f64 = 1e-12;

/// Acceptance flags, in input order.
///
/// Seeds are swept by birth time (input order breaks ties). Equal birth
/// times are pulled apart by [`TIE_GAP`], with a warning.
pub fn simulate_acceptance(space: &Space, seeds: &[Seed], t0: f64) -> Result<Vec<bool>> {
    for (i, s) in seeds.iter().enumerate() {
        if !(s.birth >= 0.0) || !s.birth.is_finite() {
            return input(format!("seed {i} has invalid birth time {}", s.birth));
        }
        if !(s.speed >= 0.0) || !s.speed.is_finite() {
            return input(format!("seed {i} has invalid speed {}", s.speed));
        }
    }
    let n = seeds.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| seeds[a].birth.total_cmp(&seeds[b].birth).then(a.cmp(&b)));
    let mut times = Vec::with_capacity(n);
    let mut warned = false;
    for (k, &i) in order.iter().enumerate() {
        let mut t = seeds[i].birth;
        if k > 0 && t <= times[k - 1] {
            if !warned {
                log::warn!("equal birth times separated by {TIE_GAP:e}");
                warned = true;
            }
            t = (times[k - 1] + TIE_GAP).max(f64::next_up(times[k - 1]));
        }
        times.push(t);
    }
    let locs: Vec<Point> = order.iter().map(|&i| seeds[i].loc).collect();
    let index = SpatialIndex::build(space, &locs);

    let mut accepted = vec![false; n];
    let mut first: Option<f64> = None;
    let mut max_speed: f64 = 0.0;
    for k in 0..n {
        let s = &seeds[order[k]];
        if s.birth > t0 {
            continue;
        }
        let t = times[k];
        let covered = match first {
            None => false,
            Some(t_first) => {
                let reach = (t - t_first) * max_speed;
                let mut hit = false;
                index.for_each_within(&s.loc, reach, |i, d| {
                    if !hit && accepted[i] && times[i] < t && d < (t - times[i]) * seeds[order[i]].speed {
                        hit = true;
                    }
                });
                hit
            }
        };
        if !covered {
            accepted[k] = true;
            first.get_or_insert(t);
            max_speed = max_speed.max(s.speed);
        }
    }
    let mut flags = vec![false; n];
    for (k, &i) in order.iter().enumerate() {
        flags[i] = accepted[k];
    }
    debug_assert!(n > 2000 || verify_acceptance(space, seeds, t0, &flags), "acceptance flags fail re-verification");
    Ok(flags)
}

/// Checks flags against the acceptance rule by direct pairwise comparison:
/// every accepted seed lies outside all earlier accepted balls at its birth,
/// every rejected seed born by `t0` lies inside one.
///
/// Birth times must be distinct.
pub fn verify_acceptance(space: &Space, seeds: &[Seed], t0: f64, flags: &[bool]) -> bool {
    if flags.len() != seeds.len() {
        return false;
    }
    for (j, s) in seeds.iter().enumerate() {
        let covered = seeds.iter().enumerate().any(|(i, e)| {
            flags[i] && e.birth < s.birth && space.dist(&e.loc, &s.loc) < (s.birth - e.birth) * e.speed
        });
        let expect = s.birth <= t0 && !covered;
        let tied = seeds.iter().enumerate().any(|(i, e)| i != j && e.birth == s.birth);
        if flags[j] != expect && !tied {
            return false;
        }
    }
    true
}

/// Speed law and horizon of a birth-growth model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirthGrowthConfig {
    pub rho_min: f64,
    /// `C` in the tail bound on the excess speed, `P(R − ρ_min ≥ r) ≤ e^{−Cr}`.
    pub tail_rate: f64,
    /// Horizon; seeds born later are never accepted. May be infinite.
    pub t0: f64,
    pub bias_eps: f64,
    pub law: MarkLaw,
}

const TAIL_CHECK_DRAWS: usize = 100_000;

impl BirthGrowthConfig {
    /// Default speed law `ρ_min + Exp(C)`.
    pub fn new(rho_min: f64, tail_rate: f64, t0: f64, bias_eps: f64) -> Result<Self> {
        let law = MarkLaw::ShiftedExponential { min: rho_min, rate: tail_rate };
        BirthGrowthConfig::with_law(rho_min, tail_rate, t0, bias_eps, law)
    }

    /// Custom speed law, checked empirically against the declared lower
    /// bound and tail on a fixed stream of draws.
    pub fn with_law(rho_min: f64, tail_rate: f64, t0: f64, bias_eps: f64, law: MarkLaw) -> Result<Self> {
        if !(rho_min > 0.0) || !rho_min.is_finite() {
            return config(format!("rho_min must be positive, got {rho_min}"));
        }
        if !(tail_rate > 0.0) || !tail_rate.is_finite() {
            return config(format!("tail_rate_C must be positive, got {tail_rate}"));
        }
        if !(t0 > 0.0) {
            return config(format!("t0 must be positive, got {t0}"));
        }
        if !(bias_eps > 0.0) {
            return config(format!("bias_eps must be positive, got {bias_eps}"));
        }
        law.validate()?;
        let cfg = BirthGrowthConfig { rho_min, tail_rate, t0, bias_eps, law };
        cfg.check_tail()?;
        Ok(cfg)
    }

    fn check_tail(&self) -> Result<()> {
        let mut rng = RandomStream::new(0x5eed).stream(0xb6).rng();
        let draws: Vec<f64> = (0..TAIL_CHECK_DRAWS).map(|_| self.law.sample(&mut rng)).collect();
        if let Some(low) = draws.iter().copied().find(|&r| r < self.rho_min) {
            return config(format!("speed law produced {low} below rho_min {}", self.rho_min));
        }
        let n = draws.len() as f64;
        for k in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let r = k / self.tail_rate;
            let bound = (-self.tail_rate * r).exp();
            let freq = draws.iter().filter(|&&x| x - self.rho_min >= r).count() as f64 / n;
            let slack = 4.0 * (bound * (1.0 - bound) / n).sqrt() + 1.0 / n;
            if freq > bound + slack {
                return config(format!(
                    "speed law violates the declared tail at r = {r}: P = {freq} > e^(-Cr) = {bound}"
                ));
            }
        }
        Ok(())
    }

    /// Space-time domain `W × [0, t_max]` (carrier = window) with this
    /// speed law as mark.
    pub fn domain(&self, space: Space, window: Window, intensity: f64, t_max: f64) -> Result<SpaceTimeDomain> {
        SpaceTimeDomain::new(
            space,
            window.clone(),
            window,
            intensity,
            TimeMeasure::Lebesgue { t_max },
            self.law.clone(),
        )
    }
}

/// `T_max = max(4, ln(ν(W)/ε)/ĉ)` for a fitted time-decay rate `ĉ`.
pub fn pick_time_truncation(nu_window: f64, eps: f64, c_hat: f64) -> Result<f64> {
    if !(c_hat > 0.0) || !c_hat.is_finite() {
        return config(format!("time-decay rate must be positive, got {c_hat}"));
    }
    if !(eps > 0.0) {
        return config(format!("bias budget must be positive, got {eps}"));
    }
    if !(nu_window > 0.0) {
        return config(format!("window mass must be positive, got {nu_window}"));
    }
    Ok(((nu_window / eps).ln() / c_hat).max(4.0))
}

/// Acceptance indicator as a score. Space and time restrictions are the
/// canonical restrictions of the input.
#[derive(Clone, Debug)]
pub struct BirthGrowthScore {
    pub cfg: BirthGrowthConfig,
}

fn chrono(a: &MarkedPoint, b: &MarkedPoint) -> Ordering {
    a.time_or_zero().total_cmp(&b.time_or_zero()).then(a.id.cmp(&b.id))
}

impl BirthGrowthScore {
    pub fn new(cfg: BirthGrowthConfig) -> Self {
        BirthGrowthScore { cfg }
    }
}

impl ScoreFamily for BirthGrowthScore {
    fn name(&self) -> String {
        format!("birthgrowth(ρmin={}, C={})", self.cfg.rho_min, self.cfg.tail_rate)
    }

    fn score(&self, p: &MarkedPoint, view: &View) -> f64 {
        let tp = p.time_or_zero();
        if tp > self.cfg.t0 {
            return 0.0;
        }
        let earlier: Vec<&MarkedPoint> =
            view.iter().filter(|q| q.id != p.id && chrono(q, p) == Ordering::Less).collect();
        if earlier.is_empty() {
            return 1.0;
        }
        // A chain of coverings reaching p has total length at most
        // (t_p − t_min)·R_max, so seeds farther away cannot matter.
        let t_min = earlier.iter().map(|q| q.time_or_zero()).fold(f64::INFINITY, f64::min);
        let r_max = earlier.iter().map(|q| q.mark).fold(0.0, f64::max);
        let reach = (tp - t_min) * r_max;
        let space = view.space();
        let mut seeds: Vec<Seed> = earlier
            .iter()
            .filter(|q| space.dist(&q.loc, &p.loc) < reach || reach == f64::INFINITY)
            .map(|q| Seed::from_marked(q))
            .collect();
        seeds.push(Seed::from_marked(p));
        let flags = simulate_acceptance(space, &seeds, self.cfg.t0).expect("validated seeds");
        if flags[seeds.len() - 1] {
            1.0
        } else {
            0.0
        }
    }

    fn window_sum(&self, view: &View, window: &Window) -> f64 {
        let pts: Vec<&MarkedPoint> = view.iter().collect();
        let seeds: Vec<Seed> = pts.iter().map(|q| Seed::from_marked(q)).collect();
        let flags = simulate_acceptance(view.space(), &seeds, self.cfg.t0).expect("validated seeds");
        let space = view.space();
        pts.iter().zip(flags).filter(|(q, f)| *f && space.contains(window, &q.loc)).count() as f64
    }

    fn abs_bound(&self) -> Option<f64> {
        Some(1.0)
    }

    fn moment_hint(&self) -> Option<f64> {
        Some(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{sample_poisson, Configuration};
    use rand::seq::SliceRandom;
    use std::sync::Arc;

    fn line() -> Space {
        Space::euclidean(1, 100.0).unwrap()
    }

    fn seed(space: &Space, x: f64, t: f64, r: f64) -> Seed {
        Seed { loc: space.point(&[x]).unwrap(), birth: t, speed: r }
    }

    #[test]
    fn single_and_covered() {
        let s = line();
        assert_eq!(simulate_acceptance(&s, &[seed(&s, 0.0, 3.0, 1.0)], f64::INFINITY).unwrap(), vec![true]);
        let two = [seed(&s, 0.0, 1.0, 1.0), seed(&s, 0.5, 2.0, 1.0)];
        assert_eq!(simulate_acceptance(&s, &two, f64::INFINITY).unwrap(), vec![true, false]);
        let far = [seed(&s, 0.0, 1.0, 1.0), seed(&s, 1.5, 2.0, 1.0)];
        assert_eq!(simulate_acceptance(&s, &far, f64::INFINITY).unwrap(), vec![true, true]);
        assert_eq!(simulate_acceptance(&s, &far, 1.5).unwrap(), vec![true, false]);
        assert!(simulate_acceptance(&s, &[seed(&s, 0.0, -1.0, 1.0)], 1.0).is_err());
    }

    #[test]
    fn rejected_seeds_do_not_block() {
        let s = line();
        // Seed 1 is covered by seed 0; seed 2 would be covered by seed 1's ball
        // but lies outside seed 0's.
        let seeds = [seed(&s, 0.0, 0.0, 1.0), seed(&s, 0.9, 1.0, 10.0), seed(&s, 3.0, 1.5, 1.0)];
        assert_eq!(simulate_acceptance(&s, &seeds, f64::INFINITY).unwrap(), vec![true, false, true]);
    }

    #[test]
    fn permutation_invariant() {
        let s = Space::euclidean(2, 10.0).unwrap();
        let mut rng = RandomStream::new(4).rng();
        let locs = s.sample_uniform(&Window::Full, 150, &mut rng).unwrap();
        let law = MarkLaw::ShiftedExponential { min: 0.1, rate: 2.0 };
        let seeds: Vec<Seed> = locs
            .iter()
            .map(|&loc| Seed { loc, birth: rand::Rng::random::<f64>(&mut rng) * 5.0, speed: law.sample(&mut rng) })
            .collect();
        let flags = simulate_acceptance(&s, &seeds, f64::INFINITY).unwrap();
        assert!(verify_acceptance(&s, &seeds, f64::INFINITY, &flags));
        let mut perm: Vec<usize> = (0..seeds.len()).collect();
        perm.shuffle(&mut rng);
        let shuffled: Vec<Seed> = perm.iter().map(|&i| seeds[i]).collect();
        let f2 = simulate_acceptance(&s, &shuffled, f64::INFINITY).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            assert_eq!(f2[k], flags[i]);
        }
        let first = (0..seeds.len()).min_by(|&a, &b| seeds[a].birth.total_cmp(&seeds[b].birth)).unwrap();
        assert!(flags[first]);
    }

    #[test]
    fn tied_times_are_separated() {
        let s = line();
        let seeds = [seed(&s, 0.0, 1.0, 1.0), seed(&s, 0.0, 1.0, 1.0)];
        // The later copy is born TIE_GAP after, at distance 0 < TIE_GAP·1.
        assert_eq!(simulate_acceptance(&s, &seeds, f64::INFINITY).unwrap(), vec![true, false]);
    }

    #[test]
    fn truncation_formula() {
        assert_eq!(pick_time_truncation(1e3, 1e300, 1.0).unwrap(), 4.0);
        let t = pick_time_truncation(1e3, 1e-3, 1.0).unwrap();
        assert!((t - 1e6f64.ln()).abs() < 1e-12);
        let t2 = pick_time_truncation(2e3, 1e-3, 0.5).unwrap();
        let t1 = pick_time_truncation(1e3, 1e-3, 0.5).unwrap();
        assert!((t2 - t1 - 2f64.ln() / 0.5).abs() < 1e-12);
        assert!(pick_time_truncation(1e3, 1e-3, 0.0).is_err());
        assert!(pick_time_truncation(1e3, 1e-3, -1.0).is_err());
    }

    #[test]
    fn config_checks_tail() {
        assert!(BirthGrowthConfig::new(0.1, 2.0, f64::INFINITY, 1e-3).is_ok());
        assert!(BirthGrowthConfig::new(0.0, 2.0, f64::INFINITY, 1e-3).is_err());
        // Excess speed Exp(1) does not satisfy a declared tail rate of 2.
        let heavy = MarkLaw::ShiftedExponential { min: 0.1, rate: 1.0 };
        assert!(BirthGrowthConfig::with_law(0.1, 2.0, f64::INFINITY, 1e-3, heavy).is_err());
        let slow = MarkLaw::PointMass { value: 0.05 };
        assert!(BirthGrowthConfig::with_law(0.1, 2.0, f64::INFINITY, 1e-3, slow).is_err());
    }

    #[test]
    fn score_matches_full_sweep() {
        let cfg = BirthGrowthConfig::new(0.05, 4.0, f64::INFINITY, 1e-3).unwrap();
        let d = Arc::new(cfg.domain(Space::euclidean(1, 40.0).unwrap(), Window::Full, 1.0, 6.0).unwrap());
        let score = BirthGrowthScore::new(cfg);
        for k in 0..20 {
            let c: Configuration = sample_poisson(&d, &Window::Full, RandomStream::new(k)).unwrap();
            let seeds: Vec<Seed> = c.points().iter().map(Seed::from_marked).collect();
            let flags = simulate_acceptance(&d.space, &seeds, f64::INFINITY).unwrap();
            let view = View::of(&c);
            for (p, f) in c.points().iter().zip(&flags) {
                assert_eq!(score.score(p, &view), if *f { 1.0 } else { 0.0 });
            }
            let total = flags.iter().filter(|f| **f).count() as f64;
            assert_eq!(score.window_sum(&view, &Window::Full), total);
        }
    }
}
