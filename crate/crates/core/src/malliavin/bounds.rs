use super::GammaEstimates;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareBounds {
    pub d_k: f64,
    pub d_k_stderr: f64,
    pub d_w: f64,
    pub d_w_stderr: f64,
    pub var: f64,
}

/// `d_K ≤ Var⁻¹(γ̂₁ + ½γ̂₂ + γ̂₄ + γ̂₅ + γ̂₆)` and
/// `d_W ≤ √(2/π) Var⁻¹ γ̂₁ + (2π)^{−1/2} Var⁻¹ γ̂₂ + Var^{−3/2} γ̂₃`
/// for the standardized functional, using the estimated variance.
pub fn assemble_poincare_bounds(g: &GammaEstimates) -> Result<PoincareBounds> {
    assemble_poincare_bounds_with_var(g, g.var)
}

pub fn assemble_poincare_bounds_with_var(g: &GammaEstimates, var: f64) -> Result<PoincareBounds> {
    if !(var > 0.0) {
        return Err(Error::Diagnostic(format!("variance must be positive to standardize, got {var}")));
    }
    if g.gamma.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diagnostic("non-finite γ̂ estimate".into()));
    }
    let gm = &g.gamma;
    let se = &g.stderr;
    let ck = [0.0, 1.0, 0.5, 0.0, 1.0, 1.0, 1.0];
    let a = (2.0 / PI).sqrt();
    let b = 1.0 / (2.0 * PI).sqrt();
    let v32 = var.powf(1.5);
    let d_k = (0..7).map(|i| ck[i] * gm[i]).sum::<f64>() / var;
    let d_k_stderr = (0..7).map(|i| (ck[i] * se[i]).powi(2)).sum::<f64>().sqrt() / var;
    let d_w = a * gm[1] / var + b * gm[2] / var + gm[3] / v32;
    let d_w_stderr = ((a * se[1] / var).powi(2) + (b * se[2] / var).powi(2) + (se[3] / v32).powi(2)).sqrt();
    Ok(PoincareBounds { d_k, d_k_stderr, d_w, d_w_stderr, var })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::malliavin::GammaBudgets;

    fn estimates(gamma: [f64; 7], var: f64) -> GammaEstimates {
        GammaEstimates {
            gamma,
            stderr: [0.0; 7],
            var,
            var_ci: (var, var),
            mean: 0.0,
            budgets: GammaBudgets { n_outer_x: 10, n_outer_y: 10, n_inner: 10 },
            seed: 0,
            bias_corrected: false,
        }
    }

    #[test]
    fn linear_substitution() {
        let lambda: f64 = 100.0;
        let g = estimates([0.0, 0.0, 0.0, 0.0, 2.0 * lambda.sqrt(), 0.0, 0.0], lambda);
        let b = assemble_poincare_bounds(&g).unwrap();
        assert!((b.d_k - 2.0 / lambda.sqrt()).abs() < 1e-15);
        assert_eq!(b.d_w, 0.0);
    }

    #[test]
    fn zeros_and_bad_variance() {
        let b = assemble_poincare_bounds(&estimates([0.0; 7], 3.0)).unwrap();
        assert_eq!((b.d_k, b.d_w), (0.0, 0.0));
        assert!(assemble_poincare_bounds(&estimates([0.0; 7], 0.0)).is_err());
    }
}
