//! Assembly of the Kolmogorov and Wasserstein bounds from their
//! ingredients, and the mixed-moment gap bounds.

use super::integrals::{integral_g_q, integral_i_phi, integral_i_psi, Integral, PsiModel};
use crate::error::{input, Error, Result};
use crate::process::SpaceTimeDomain;
use serde::{Deserialize, Serialize};

/// Exponents `(θ, θ′, q)` entering the d_K and d_W constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub theta_k: f64,
    pub theta_prime_k: f64,
    pub q_k: f64,
    pub theta_w: f64,
    pub theta_prime_w: f64,
    pub q_w: f64,
}

impl Exponents {
    pub fn standard() -> Self {
        Exponents {
            theta_k: 1.0 / 240.0,
            theta_prime_k: 1.0 / 120.0,
            q_k: 1.0 / 120.0,
            theta_w: 1.0 / 50.0,
            theta_prime_w: 3.0 / 200.0,
            q_w: 3.0 / 200.0,
        }
    }

    /// Every exponent multiplied by 5, valid for certified bounded scores.
    pub fn bounded() -> Self {
        let s = Exponents::standard();
        Exponents {
            theta_k: 5.0 * s.theta_k,
            theta_prime_k: 5.0 * s.theta_prime_k,
            q_k: 5.0 * s.q_k,
            theta_w: 5.0 * s.theta_w,
            theta_prime_w: 5.0 * s.theta_prime_w,
            q_w: 5.0 * s.q_w,
        }
    }

    pub fn select(bounded: bool) -> Self {
        if bounded {
            Exponents::bounded()
        } else {
            Exponents::standard()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    SpaceTime,
    SpaceOnly,
    /// X = W: G_q is replaced by `ν(W)` (to the matching power). Without
    /// I_φ ingredients the space-only constants are used.
    XEqualsW,
}

/// Ingredients of the bounds. Missing entries are reported by name at
/// assembly time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundIngredients {
    pub c: f64,
    pub bounded: bool,
    pub exponents: Exponents,
    pub i_psi_k: Option<f64>,
    pub i_psi_w: Option<f64>,
    pub i_phi_k: Option<f64>,
    pub i_phi_w: Option<f64>,
    pub g_k: Option<f64>,
    pub g_w: Option<f64>,
    pub nu_window: Option<f64>,
    /// Divergence messages collected while computing the integrals.
    pub violations: Vec<String>,
}

impl BoundIngredients {
    pub fn empty(c: f64, bounded: bool) -> Self {
        BoundIngredients {
            c,
            bounded,
            exponents: Exponents::select(bounded),
            i_psi_k: None,
            i_psi_w: None,
            i_phi_k: None,
            i_phi_w: None,
            g_k: None,
            g_w: None,
            nu_window: None,
            violations: Vec::new(),
        }
    }

    /// All ingredients equal to `value` (sanity checks).
    pub fn uniform(c: f64, i: f64, g: f64) -> Self {
        BoundIngredients {
            i_psi_k: Some(i),
            i_psi_w: Some(i),
            i_phi_k: Some(i),
            i_phi_w: Some(i),
            g_k: Some(g),
            g_w: Some(g),
            nu_window: Some(g),
            ..BoundIngredients::empty(c, false)
        }
    }

    /// Integrals for a fitted ψ (and φ, on space-time domains) on a domain.
    /// `time_horizon = None` integrates φ over the untruncated time axis.
    pub fn compute(
        psi: &PsiModel,
        phi: Option<&PsiModel>,
        domain: &SpaceTimeDomain,
        c: f64,
        bounded: bool,
        time_horizon: Option<f64>,
    ) -> Result<Self> {
        let mut out = BoundIngredients::empty(c, bounded);
        let e = out.exponents;
        let take = |i: Integral, v: &mut Vec<String>| {
            if let Some(msg) = i.violation {
                v.push(msg);
            }
            i.value
        };
        let mut violations = Vec::new();
        out.i_psi_k = Some(take(integral_i_psi(psi, domain, e.theta_k)?, &mut violations));
        out.i_psi_w = Some(take(integral_i_psi(psi, domain, e.theta_w)?, &mut violations));
        if let Some(phi) = phi {
            out.i_phi_k = Some(take(integral_i_phi(phi, &domain.time, e.theta_prime_k, time_horizon)?, &mut violations));
            out.i_phi_w = Some(take(integral_i_phi(phi, &domain.time, e.theta_prime_w, time_horizon)?, &mut violations));
        }
        out.g_k = Some(take(integral_g_q(psi, domain, e.q_k)?, &mut violations));
        out.g_w = Some(take(integral_g_q(psi, domain, e.q_w)?, &mut violations));
        out.nu_window = Some(domain.nu_window());
        out.violations = violations;
        Ok(out)
    }
}

/// Assembled bounds with every factor listed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub form: BoundForm,
    pub c: f64,
    /// Always set: the universal scalar c is not quantified and defaults to 1.
    pub c_flag: String,
    pub exponents: Exponents,
    pub i_psi_k: f64,
    pub i_psi_w: f64,
    pub i_phi_k: Option<f64>,
    pub i_phi_w: Option<f64>,
    pub m5: f64,
    pub m5_pow_k: f64,
    pub m5_pow_w: f64,
    /// `G_{q_k}` or `ν(W)`.
    pub g_k: f64,
    pub g_w: f64,
    pub var: f64,
    pub c_k: f64,
    pub c_w: f64,
    pub d_k_bound: f64,
    /// Kolmogorov-type term plus the Wasserstein term.
    pub d_w_bound: f64,
    pub violations: Vec<String>,
}

fn need(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Input(format!("missing bound ingredient {name}")))
}

pub fn assemble_theorem_bound(ing: &BoundIngredients, m5: f64, var: f64, form: BoundForm) -> Result<BoundReport> {
    if !(var > 0.0) {
        return input(format!("Var H must be positive, got {var}"));
    }
    if !(m5 >= 1.0) {
        return input(format!("M5 must be at least 1, got {m5}"));
    }
    let i_psi_k = need(ing.i_psi_k, "I_psi(theta_k)")?;
    let i_psi_w = need(ing.i_psi_w, "I_psi(theta_w)")?;
    let (i_phi_k, i_phi_w) = match form {
        BoundForm::SpaceOnly => (None, None),
        BoundForm::XEqualsW if ing.i_phi_k.is_none() && ing.i_phi_w.is_none() => (None, None),
        _ => (Some(need(ing.i_phi_k, "I_phi(theta'_k)")?), Some(need(ing.i_phi_w, "I_phi(theta'_w)")?)),
    };
    let (g_k, g_w) = match form {
        BoundForm::XEqualsW => {
            let nu = need(ing.nu_window, "nu(W)")?;
            (nu, nu)
        }
        _ => (need(ing.g_k, "G_q_k")?, need(ing.g_w, "G_q_w")?),
    };
    let c_k = ing.c * i_psi_k.powi(3) * i_phi_k.map_or(1.0, |v| v.powf(3.5));
    let c_w = ing.c * i_psi_w.powi(3) * i_phi_w.map_or(1.0, |v| v.powi(4));
    let m5_pow_k = m5.powf(0.4);
    let m5_pow_w = m5.powf(0.6);
    let d_k_bound = c_k * m5_pow_k * g_k.sqrt() / var;
    let d_w_bound = d_k_bound + c_w * m5_pow_w * g_w / var.powf(1.5);
    Ok(BoundReport {
        form,
        c: ing.c,
        c_flag: "bounds hold modulo the unquantified universal constant c".into(),
        exponents: ing.exponents,
        i_psi_k,
        i_psi_w,
        i_phi_k,
        i_phi_w,
        m5,
        m5_pow_k,
        m5_pow_w,
        g_k,
        g_w,
        var,
        c_k,
        c_w,
        d_k_bound,
        d_w_bound,
        violations: ing.violations.clone(),
    })
}

/// Bound on `|E ΠX_i^{p_i} − E ΠX′_i^{p_i}|` for total degree q when the
/// four-tuples are α-close in bounded-Lipschitz distance. `bounded` uses
/// `|X_i| ≤ L`; otherwise `scale` is the moment bound M.
pub fn mixed_moment_gap_bound(q: u32, scale: f64, alpha: f64, bounded: bool) -> Result<f64> {
    if q == 0 {
        return input("q must be at least 1");
    }
    if !(0.0..=2.0).contains(&alpha) {
        return input(format!("bounded-Lipschitz distance lies in [0, 2], got {alpha}"));
    }
    if !(scale >= 0.0) {
        return input(format!("scale must be non-negative, got {scale}"));
    }
    let qf = q as f64;
    Ok(if bounded {
        2.0 * qf * scale.powf(qf) * alpha
    } else {
        (36.0 * qf + 16.0) * scale.powf(qf / (qf + 1.0)).max(1.0) * alpha.powf(1.0 / (qf + 1.0))
    })
}
