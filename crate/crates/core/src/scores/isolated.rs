use super::ScoreFamily;
use crate::process::{Configuration, MarkedPoint, View};

/// Indicator that no other point lies within distance ρ (open ball).
///
/// The open ball makes ρ an exact stabilization radius: restricting the
/// input to `B_r(p)` with `r ≥ ρ` keeps every point that can matter.
#[derive(Clone, Copy, Debug)]
pub struct IsolatedScore {
    pub rho: f64,
}

impl IsolatedScore {
    pub fn new(rho: f64) -> Self {
        assert!(rho > 0.0, "isolation radius must be positive");
        IsolatedScore { rho }
    }
}

impl ScoreFamily for IsolatedScore {
    fn name(&self) -> String {
        format!("isolated(ρ={})", self.rho)
    }

    fn score(&self, p: &MarkedPoint, view: &View) -> f64 {
        let mut isolated = true;
        view.for_each_within(&p.loc, self.rho, |q, _| {
            if q.id != p.id {
                isolated = false;
            }
        });
        if isolated {
            1.0
        } else {
            0.0
        }
    }

    fn evaluate_space_restricted(&self, p: &MarkedPoint, chi: &Configuration, r: f64) -> f64 {
        if r >= self.rho {
            self.evaluate(p, chi)
        } else {
            self.score(p, &View::of(&chi.restrict_space(&p.loc, r)))
        }
    }

    fn abs_bound(&self) -> Option<f64> {
        Some(1.0)
    }

    fn moment_hint(&self) -> Option<f64> {
        Some(1.0)
    }

    fn interaction_range(&self) -> Option<f64> {
        Some(self.rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Space, Window};
    use crate::process::SpaceTimeDomain;
    use std::sync::Arc;

    #[test]
    fn singleton_and_close_neighbour() {
        let d = Arc::new(SpaceTimeDomain::space_only(Space::torus(2, 10.0).unwrap(), Window::Full, 1.0).unwrap());
        let p = MarkedPoint { id: 0, loc: d.space.point(&[0.0, 0.0]).unwrap(), time: None, mark: 1.0 };
        let q = MarkedPoint { id: 1, loc: d.space.point(&[0.15, 0.0]).unwrap(), time: None, mark: 1.0 };
        let s = IsolatedScore::new(0.3);
        let alone = Configuration::new(d.clone(), vec![p]).unwrap();
        assert_eq!(s.evaluate(&p, &alone), 1.0);
        let pair = Configuration::new(d.clone(), vec![p, q]).unwrap();
        assert_eq!(s.evaluate(&p, &pair), 0.0);
        assert_eq!(s.evaluate_space_restricted(&p, &pair, 0.1), 1.0);
        assert_eq!(s.evaluate_space_restricted(&p, &pair, 0.3), 0.0);
    }
}
