use super::{sample_poisson, fixed_atom_id, RandomStream, SpaceTimeDomain, View};
use crate::error::Result;
use crate::scores::ScoreFamily;
use crate::stats::{mean, std_error};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Two Monte Carlo sides of the Mecke identity
/// `E Σ_{z∈P∩W} ξ(z, P) = ∫_W E ξ(z, P ∪ {z}) (ν⊗μ)(dz)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeckeResult {
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub rhs_stderr: f64,
}

impl MeckeResult {
    pub fn stderr(&self) -> f64 {
        self.lhs_stderr.hypot(self.rhs_stderr)
    }

    /// `|lhs − rhs| ≤ k · √(stderr_lhs² + stderr_rhs²)`.
    pub fn agrees(&self, k: f64) -> bool {
        (self.lhs - self.rhs).abs() <= k * self.stderr()
    }
}

/// `n_outer` configurations estimate the left side; `n_inner` independent
/// pairs (z, P) estimate the right side, with z drawn from the normalized
/// ν⊗μ⊗Q on W and reweighted by its total mass.
pub fn mecke_check(
    domain: &Arc<SpaceTimeDomain>,
    score: &dyn ScoreFamily,
    n_outer: usize,
    n_inner: usize,
    stream: RandomStream,
) -> Result<MeckeResult> {
    let window = domain.window.clone();
    let carrier = domain.carrier.clone();
    let lhs: Vec<f64> = (0..n_outer)
        .into_par_iter()
        .map(|i| {
            let c = sample_poisson(domain, &carrier, stream.stream(1).substream(i as u64))?;
            Ok(score.window_sum(&View::of(&c), &window))
        })
        .collect::<Result<_>>()?;
    let mass = domain.total_mass(&window)?;
    let rhs: Vec<f64> = (0..n_inner)
        .into_par_iter()
        .map(|i| {
            let s = stream.stream(2).substream(i as u64);
            let c = sample_poisson(domain, &carrier, s)?;
            let mut rng = s.stream(3).rng();
            let z = domain.sample_point(&window, fixed_atom_id(0), &mut rng)?;
            Ok(mass * score.score(&z, &View::new(&c, &[z])))
        })
        .collect::<Result<_>>()?;
    Ok(MeckeResult { lhs: mean(&lhs), lhs_stderr: std_error(&lhs), rhs: mean(&rhs), rhs_stderr: std_error(&rhs) })
}
