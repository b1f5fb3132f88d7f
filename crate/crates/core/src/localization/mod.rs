//! Localization profiles, integral ingredients and the assembled
//! Berry–Esseen bounds.
//!
//! ψ̂ and φ̂ are estimated through the probability-of-difference surrogate:
//! the frequency with which a score differs from its short-range version
//! bounds the bounded-Lipschitz distance between their laws.

mod bounds;
mod integrals;
mod profile;

pub use bounds::{
    assemble_theorem_bound, mixed_moment_gap_bound, BoundForm, BoundIngredients, BoundReport, Exponents,
};
pub use integrals::{
    halo_shape, hyperbolic_condition, integral_g_q, integral_g_q_shape, integral_i_phi, integral_i_psi,
    integral_i_psi_radial, HaloShape, HyperbolicCheck, Integral, PsiModel,
};
pub use profile::{
    base_points, estimate_m5, estimate_phi, estimate_psi, fit_decay, fit_exponential_rate, time_horizon, Adversary,
    DecayFit, DecayModel, MomentEstimate, Profile, ProfileKind, ProfilePoint, RateFit,
};
