//! Score functions ξ with their space- and time-restricted families.
//!
//! Every score treats the evaluated point as part of its input: `score(p, χ)`
//! means ξ(p, χ ∪ {p}), and a copy of `p` already present in χ (same id) is
//! not counted twice.

mod isolated;
mod knn;
mod ustat;

pub use isolated::IsolatedScore;
pub use knn::{k_nearest, KnnScore, KnnScoreConfig};
pub use ustat::{KernelFn, UStatKernel, UStatScore};

use crate::geometry::Window;
use crate::process::{Configuration, MarkedPoint, View};
use std::sync::Arc;

pub trait ScoreFamily: Send + Sync {
    fn name(&self) -> String;

    /// ξ(p, view ∪ {p}).
    fn score(&self, p: &MarkedPoint, view: &View) -> f64;

    fn evaluate(&self, p: &MarkedPoint, chi: &Configuration) -> f64 {
        self.score(p, &View::of(chi))
    }

    /// ξ^[r](p, χ). Default: the score of the input restricted to `B_r(p)`.
    fn evaluate_space_restricted(&self, p: &MarkedPoint, chi: &Configuration, r: f64) -> f64 {
        self.score(p, &View::of(&chi.restrict_space(&p.loc, r)))
    }

    /// ξ^(s)(p, χ). Default: `1{t_p < s}` times the score of the input
    /// restricted to times `< s`. On space-only domains every point carries
    /// time 0.
    fn evaluate_time_restricted(&self, p: &MarkedPoint, chi: &Configuration, s: f64) -> f64 {
        if p.time_or_zero() >= s {
            return 0.0;
        }
        self.score(p, &View::of(&restrict_time_or_zero(chi, s)))
    }

    /// A priori bound on E|ξ|⁵, used as a fallback for M₅.
    fn moment_hint(&self) -> Option<f64> {
        None
    }

    /// Certified `sup |ξ|`, if the score is bounded.
    fn abs_bound(&self) -> Option<f64> {
        None
    }

    /// `R` such that adding a point at distance `≥ R` from `q` never changes
    /// ξ(q, ·). `None` when no such range exists.
    fn interaction_range(&self) -> Option<f64> {
        None
    }

    /// `Σ_{q ∈ view, loc ∈ W} ξ(q, view)` in id order.
    fn window_sum(&self, view: &View, window: &Window) -> f64 {
        let space = view.space();
        view.iter().filter(|q| space.contains(window, &q.loc)).map(|q| self.score(q, view)).sum()
    }
}

/// Time restriction that treats space-only domains as carrying time 0.
pub(crate) fn restrict_time_or_zero(chi: &Configuration, s: f64) -> Configuration {
    if chi.domain().is_space_time() {
        chi.restrict_time(s).expect("space-time domain")
    } else if 0.0 < s {
        chi.clone()
    } else {
        Configuration::empty(chi.domain().clone())
    }
}

type ScoreFn = dyn Fn(&MarkedPoint, &View) -> f64 + Send + Sync;

/// A plain score wrapped with restriction-of-input as its short-range family.
#[derive(Clone)]
pub struct FnScore {
    name: String,
    f: Arc<ScoreFn>,
    bound: Option<f64>,
    range: Option<f64>,
}

impl FnScore {
    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn with_range(mut self, range: f64) -> Self {
        self.range = Some(range);
        self
    }
}

pub fn canonical_restrictions<F>(name: &str, f: F) -> FnScore
where
    F: Fn(&MarkedPoint, &View) -> f64 + Send + Sync + 'static,
{
    FnScore { name: name.to_string(), f: Arc::new(f), bound: None, range: None }
}

impl ScoreFamily for FnScore {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn score(&self, p: &MarkedPoint, view: &View) -> f64 {
        (self.f)(p, view)
    }

    fn abs_bound(&self) -> Option<f64> {
        self.bound
    }

    fn moment_hint(&self) -> Option<f64> {
        self.bound.map(|b| b.powi(5))
    }

    fn interaction_range(&self) -> Option<f64> {
        self.range
    }
}

/// ξ ≡ c.
#[derive(Clone, Copy, Debug)]
pub struct ConstantScore(pub f64);

impl ScoreFamily for ConstantScore {
    fn name(&self) -> String {
        format!("constant({})", self.0)
    }

    fn score(&self, _: &MarkedPoint, _: &View) -> f64 {
        self.0
    }

    fn abs_bound(&self) -> Option<f64> {
        Some(self.0.abs())
    }

    fn moment_hint(&self) -> Option<f64> {
        Some(self.0.abs().powi(5))
    }

    fn interaction_range(&self) -> Option<f64> {
        Some(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Space;
    use crate::process::{sample_poisson, MarkLaw, RandomStream, SpaceTimeDomain, TimeMeasure};

    #[test]
    fn time_restriction_kills_late_points() {
        let s = Space::euclidean(1, 10.0).unwrap();
        let d = Arc::new(
            SpaceTimeDomain::new(
                s,
                Window::Full,
                Window::Full,
                1.0,
                TimeMeasure::Lebesgue { t_max: 3.0 },
                MarkLaw::PointMass { value: 1.0 },
            )
            .unwrap(),
        );
        let c = sample_poisson(&d, &Window::Full, RandomStream::new(1)).unwrap();
        let count = canonical_restrictions("neighbours", |p, v| v.neighbors(&p.loc, 1.0, Some(p.id)).len() as f64);
        for p in c.points() {
            let t = p.time.unwrap();
            assert_eq!(count.evaluate_time_restricted(p, &c, t), 0.0);
            assert_eq!(count.evaluate_time_restricted(p, &c, t * 0.5), 0.0);
            let s = t + 0.5;
            let restricted = c.restrict_time(s).unwrap();
            assert_eq!(
                count.evaluate_time_restricted(p, &c, s),
                count.evaluate_time_restricted(p, &restricted, s)
            );
        }
    }
}
