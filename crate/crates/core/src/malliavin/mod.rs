//! Add-one costs, second-order Poincaré terms and distances to the normal law.

mod bounds;
mod distance;
mod gamma;

pub use bounds::{assemble_poincare_bounds, assemble_poincare_bounds_with_var, PoincareBounds};
pub use distance::{kolmogorov_to_normal, normal_cdf, normal_pdf, normal_quantile, wasserstein_to_normal};
pub use gamma::{estimate_gammas, GammaBudgets, GammaEstimates, GammaOptions, OuterProposal};

use crate::error::{input, Result};
use crate::geometry::Window;
use crate::numeric::exact_sum;
use crate::process::{Configuration, MarkedPoint, View};
use crate::scores::{canonical_restrictions, ConstantScore, IsolatedScore, ScoreFamily, UStatKernel, UStatScore};
use std::sync::Arc;

/// A Poisson functional F(χ).
pub trait Functional: Send + Sync {
    fn name(&self) -> String;

    fn evaluate_view(&self, view: &View) -> f64;

    fn evaluate(&self, chi: &Configuration) -> f64 {
        self.evaluate_view(&View::of(chi))
    }

    /// Add-one cost `F(view ∪ {p}) − F(view)` from local information only,
    /// when the functional supports it.
    fn local_diff(&self, _view: &View, _p: &MarkedPoint) -> Option<f64> {
        None
    }

    /// Distance beyond which two added points cannot interact:
    /// `D²_{p,q} F = 0` whenever `d(p, q) ≥ range`.
    fn second_order_range(&self) -> Option<f64> {
        None
    }
}

/// `H(χ) = Σ_{p ∈ χ, loc ∈ W} ξ(p, χ)`.
#[derive(Clone)]
pub struct ScoreSum {
    pub score: Arc<dyn ScoreFamily>,
    pub window: Window,
}

impl ScoreSum {
    pub fn new(score: Arc<dyn ScoreFamily>, window: Window) -> Self {
        ScoreSum { score, window }
    }
}

impl Functional for ScoreSum {
    fn name(&self) -> String {
        format!("sum[{}]", self.score.name())
    }

    fn evaluate_view(&self, view: &View) -> f64 {
        self.score.window_sum(view, &self.window)
    }

    fn local_diff(&self, view: &View, p: &MarkedPoint) -> Option<f64> {
        let range = self.score.interaction_range()?;
        if view.get(p.id).is_some() {
            return Some(0.0);
        }
        let space = view.space();
        let added = view.with(p);
        let mut terms = Vec::new();
        if space.contains(&self.window, &p.loc) {
            terms.push(self.score.score(p, &added));
        }
        for (q, _) in view.neighbors(&p.loc, range, Some(p.id)) {
            if space.contains(&self.window, &q.loc) {
                terms.push(self.score.score(q, &added) - self.score.score(q, view));
            }
        }
        Some(terms.iter().sum())
    }

    fn second_order_range(&self) -> Option<f64> {
        self.score.interaction_range().map(|r| 2.0 * r)
    }
}

/// Number of points in `window`.
pub fn count_functional(window: Window) -> ScoreSum {
    ScoreSum::new(Arc::new(ConstantScore(1.0)), window)
}

/// `Σ_{x ∈ χ ∩ W} g(x)`.
pub fn linear_functional<G>(g: G, window: Window) -> ScoreSum
where
    G: Fn(&MarkedPoint) -> f64 + Send + Sync + 'static,
{
    let s = canonical_restrictions("linear", move |p, _| g(p)).with_range(0.0);
    ScoreSum::new(Arc::new(s), window)
}

/// Number of unordered pairs at distance `< δ` (each pair counted once).
pub fn pair_count_functional(delta: f64, window: Window) -> Result<ScoreSum> {
    Ok(ScoreSum::new(Arc::new(UStatScore::new(UStatKernel::edge_count(delta)?)), window))
}

/// Number of isolated points in `window`.
pub fn isolated_count_functional(rho: f64, window: Window) -> ScoreSum {
    ScoreSum::new(Arc::new(IsolatedScore::new(rho)), window)
}

/// `a · F + b`.
#[derive(Clone)]
pub struct Affine {
    pub inner: Arc<dyn Functional>,
    pub scale: f64,
    pub shift: f64,
}

impl Functional for Affine {
    fn name(&self) -> String {
        format!("{}·{} + {}", self.scale, self.inner.name(), self.shift)
    }

    fn evaluate_view(&self, view: &View) -> f64 {
        self.scale * self.inner.evaluate_view(view) + self.shift
    }

    fn local_diff(&self, view: &View, p: &MarkedPoint) -> Option<f64> {
        self.inner.local_diff(view, p).map(|d| self.scale * d)
    }

    fn second_order_range(&self) -> Option<f64> {
        self.inner.second_order_range()
    }
}

/// `D_p F(view)`.
pub fn diff1_view(f: &dyn Functional, view: &View, p: &MarkedPoint) -> f64 {
    match f.local_diff(view, p) {
        Some(d) => {
            debug_assert!({
                let full = f.evaluate_view(&view.with(p)) - f.evaluate_view(view);
                (full - d).abs() <= 1e-9 * (1.0 + full.abs())
            }, "incremental add-one cost disagrees with re-evaluation");
            d
        }
        None => f.evaluate_view(&view.with(p)) - f.evaluate_view(view),
    }
}

/// `D_p F(χ) = F(χ ∪ {p}) − F(χ)`.
pub fn diff1(f: &dyn Functional, chi: &Configuration, p: &MarkedPoint) -> f64 {
    diff1_view(f, &View::of(chi), p)
}

/// `D²_{p,q} F(view)` by the four-term expansion, summed exactly so the
/// result is symmetric in `(p, q)` to the bit.
pub fn diff2_view(f: &dyn Functional, view: &View, p: &MarkedPoint, q: &MarkedPoint) -> Result<f64> {
    if p.id == q.id {
        return input("second-order difference needs two distinct points");
    }
    let vp = view.with(p);
    let vq = view.with(q);
    let vpq = vp.with(q);
    let terms =
        [f.evaluate_view(&vpq), -f.evaluate_view(&vp), -f.evaluate_view(&vq), f.evaluate_view(view)];
    Ok(exact_sum(&terms))
}

pub fn diff2(f: &dyn Functional, chi: &Configuration, p: &MarkedPoint, q: &MarkedPoint) -> Result<f64> {
    diff2_view(f, &View::of(chi), p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Space;
    use crate::process::{fixed_atom_id, sample_poisson, RandomStream, SpaceTimeDomain};
    use rand::Rng;

    fn setup() -> (Arc<SpaceTimeDomain>, Configuration) {
        let s = Space::torus(2, 5.0).unwrap();
        let d = Arc::new(SpaceTimeDomain::space_only(s, Window::Full, 2.0).unwrap());
        let c = sample_poisson(&d, &Window::Full, RandomStream::new(17)).unwrap();
        (d, c)
    }

    fn atom(d: &SpaceTimeDomain, k: u64, rng: &mut impl Rng) -> MarkedPoint {
        d.sample_point(&Window::Full, fixed_atom_id(k), rng).unwrap()
    }

    #[test]
    fn count_and_linear_costs() {
        let (d, c) = setup();
        let mut rng = RandomStream::new(1).rng();
        let count = count_functional(Window::Full);
        let lin = linear_functional(|p| p.loc[0] * 2.0, Window::Full);
        for k in 0..20 {
            let p = atom(&d, k, &mut rng);
            let q = atom(&d, k + 100, &mut rng);
            assert_eq!(diff1(&count, &c, &p), 1.0);
            assert!((diff1(&lin, &c, &p) - 2.0 * p.loc[0]).abs() < 1e-12);
            assert_eq!(diff2(&count, &c, &p, &q).unwrap(), 0.0);
        }
    }

    #[test]
    fn pair_count_costs() {
        let (d, c) = setup();
        let mut rng = RandomStream::new(2).rng();
        let f = pair_count_functional(0.4, Window::Full).unwrap();
        for k in 0..50 {
            let p = atom(&d, k, &mut rng);
            let q = atom(&d, k + 100, &mut rng);
            let nb = c.points().iter().filter(|z| d.space.dist(&p.loc, &z.loc) < 0.4).count();
            assert_eq!(diff1(&f, &c, &p), nb as f64);
            let expect = if d.space.dist(&p.loc, &q.loc) < 0.4 { 1.0 } else { 0.0 };
            assert_eq!(diff2(&f, &c, &p, &q).unwrap(), expect);
        }
    }

    #[test]
    fn diff2_rejects_equal_ids() {
        let (d, c) = setup();
        let mut rng = RandomStream::new(3).rng();
        let p = atom(&d, 0, &mut rng);
        assert!(diff2(&count_functional(Window::Full), &c, &p, &p).is_err());
    }
}
