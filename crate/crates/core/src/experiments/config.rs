//! Experiment configuration and model construction.

use crate::error::{config, Error, Result};
use crate::geometry::{Space, SpaceKind, Window};
use crate::growth::{BirthGrowthConfig, BirthGrowthScore};
use crate::laguerre::{LaguerreConfig, LaguerreScore};
use crate::localization::PsiModel;
use crate::malliavin::GammaBudgets;
use crate::process::SpaceTimeDomain;
use crate::scores::{ConstantScore, IsolatedScore, KernelFn, KnnScore, KnnScoreConfig, ScoreFamily, UStatKernel, UStatScore};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// `H = |P ∩ W|`.
    PoissonCount,
    Isolated { rho: f64 },
    /// Edge count of the δ-geometric graph.
    Edges { delta: f64 },
    /// Clique count `Σ weight` over k-cliques of the δ-graph.
    Cliques { order: usize, delta: f64, weight: f64 },
    Knn { k: usize, alpha: f64 },
    BirthGrowth {
        rho_min: f64,
        tail_rate: f64,
        #[serde(default = "infinite")]
        t0: f64,
        /// Time horizon of the simulation; derived from `bias_eps` and
        /// `time_rate` when absent.
        #[serde(default)]
        t_max: Option<f64>,
        #[serde(default)]
        time_rate: Option<f64>,
    },
    Laguerre {
        t: f64,
        beta: f64,
        #[serde(default = "one")]
        margin: f64,
        #[serde(default = "one")]
        h_max: f64,
    },
}

/// How draws of H are centred and scaled before measuring the distance to
/// N(0, 1).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Standardization {
    /// Mean and variance of separate pilot draws (n/10 of them).
    #[default]
    Pilot,
    /// Closed-form `E H` and `Var H`; only for models that have them.
    Exact,
}

fn infinite() -> f64 {
    f64::INFINITY
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub kind: SpaceKind,
    pub dim: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaBudgetConfig {
    pub n_outer_x: Option<usize>,
    pub n_outer_y: Option<usize>,
    pub n_inner: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizationBudget {
    pub radii: Vec<f64>,
    #[serde(default)]
    pub times: Vec<f64>,
    pub n_trials: usize,
    /// Index into the λ grid of the window used for profiling.
    #[serde(default)]
    pub lambda_index: usize,
    #[serde(default = "default_var_samples")]
    pub var_samples: usize,
}

fn default_var_samples() -> usize {
    400
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    #[serde(default)]
    pub gamma: Option<GammaBudgetConfig>,
    #[serde(default)]
    pub localization: Option<LocalizationBudget>,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
}

fn default_bootstrap() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_prefix")]
    pub prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir(), prefix: default_prefix() }
    }
}

fn default_dir() -> String {
    "out".into()
}

fn default_prefix() -> String {
    "run".into()
}

/// A single JSON document describing a study.
///
/// Windows form a dilating family indexed by λ: a box of volume λ (torus:
/// the whole torus of volume λ; Laguerre: `W_λ` with its halo) or, in
/// hyperbolic space, the ball of radius λ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub space: SpaceConfig,
    pub lambdas: Vec<f64>,
    #[serde(default = "one")]
    pub intensity: f64,
    /// Samples per λ.
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default = "default_eps")]
    pub bias_eps: f64,
    #[serde(default)]
    pub bounded_exponents: bool,
    #[serde(default)]
    pub standardization: Standardization,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_eps() -> f64 {
    0.01
}

pub const MIN_SAMPLES: usize = 100;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        ExperimentConfig::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return config("lambdas must be non-empty");
        }
        if self.lambdas.windows(2).any(|w| !(w[0] < w[1])) || self.lambdas.iter().any(|l| !(*l > 0.0)) {
            return config("lambdas must be positive and strictly ascending");
        }
        if self.n < MIN_SAMPLES {
            return config(format!("n must be at least {MIN_SAMPLES}, got {}", self.n));
        }
        if !(self.intensity > 0.0) || !self.intensity.is_finite() {
            return config("intensity must be positive and finite");
        }
        if !(self.c > 0.0) {
            return config("c must be positive");
        }
        if let Some(loc) = &self.budgets.localization {
            if loc.lambda_index >= self.lambdas.len() {
                return config("budgets.localization.lambda_index outside the lambda grid");
            }
        }
        // Construct every model once to surface parameter errors early.
        self.score()?;
        self.domain(self.lambdas[0])?;
        if self.standardization == Standardization::Exact {
            for &l in &self.lambdas {
                if self.exact_moments(l)?.is_none() {
                    return config(format!("standardization \"exact\" needs closed-form moments; none for {:?} at λ = {l}", self.model));
                }
            }
        }
        Ok(())
    }

    pub fn gamma_budgets(&self) -> Result<GammaBudgets> {
        let g = self.budgets.gamma.as_ref().ok_or_else(|| Error::Config("missing budget key budgets.gamma".into()))?;
        let get = |v: Option<usize>, key: &str| v.ok_or_else(|| Error::Config(format!("missing budget key budgets.gamma.{key}")));
        Ok(GammaBudgets {
            n_outer_x: get(g.n_outer_x, "n_outer_x")?,
            n_outer_y: get(g.n_outer_y, "n_outer_y")?,
            n_inner: get(g.n_inner, "n_inner")?,
        })
    }

    pub fn localization(&self) -> Result<&LocalizationBudget> {
        self.budgets.localization.as_ref().ok_or_else(|| Error::Config("missing budget key budgets.localization".into()))
    }

    fn birth_growth(&self) -> Result<Option<BirthGrowthConfig>> {
        match &self.model {
            ModelConfig::BirthGrowth { rho_min, tail_rate, t0, .. } => {
                Ok(Some(BirthGrowthConfig::new(*rho_min, *tail_rate, *t0, self.bias_eps)?))
            }
            _ => Ok(None),
        }
    }

    fn laguerre(&self) -> Result<Option<LaguerreConfig>> {
        match &self.model {
            ModelConfig::Laguerre { t, beta, margin, h_max } => {
                if self.space.kind != SpaceKind::EuclideanBox {
                    return config("the Laguerre model lives in a Euclidean box");
                }
                Ok(Some(LaguerreConfig::new(*t, *beta, self.space.dim, *margin, *h_max)?))
            }
            _ => Ok(None),
        }
    }

    pub fn score(&self) -> Result<Arc<dyn ScoreFamily>> {
        Ok(match &self.model {
            ModelConfig::PoissonCount => Arc::new(ConstantScore(1.0)),
            ModelConfig::Isolated { rho } => {
                if !(*rho > 0.0) {
                    return config("isolated: rho must be positive");
                }
                Arc::new(IsolatedScore::new(*rho))
            }
            ModelConfig::Edges { delta } => Arc::new(UStatScore::new(UStatKernel::edge_count(*delta)?)),
            ModelConfig::Cliques { order, delta, weight } => {
                Arc::new(UStatScore::new(UStatKernel::new(*order, *delta, KernelFn::Clique { weight: *weight })?))
            }
            ModelConfig::Knn { k, alpha } => {
                if *k == 0 || !(*alpha > 0.0) {
                    return config("knn: need k ≥ 1 and alpha > 0");
                }
                Arc::new(KnnScore::new(KnnScoreConfig { k: *k, alpha: *alpha }))
            }
            ModelConfig::BirthGrowth { .. } => Arc::new(BirthGrowthScore::new(self.birth_growth()?.expect("birth-growth"))),
            ModelConfig::Laguerre { .. } => Arc::new(LaguerreScore::new(self.laguerre()?.expect("laguerre"))),
        })
    }

    /// Exact localization profile for scores with a stabilization radius.
    pub fn known_profile(&self) -> Option<PsiModel> {
        match self.model {
            ModelConfig::PoissonCount => Some(PsiModel::Step { height: 2.0, delta: 0.0 }),
            ModelConfig::Isolated { rho } => Some(PsiModel::Step { height: 2.0, delta: rho }),
            ModelConfig::Edges { delta } | ModelConfig::Cliques { delta, .. } => Some(PsiModel::Step { height: 2.0, delta }),
            _ => None,
        }
    }

    /// `(E H, Var H)` where closed forms exist: the Poisson count anywhere,
    /// and isolated points on a flat torus of dimension 1 or 2 whose side is
    /// at least 4ρ (so no ball meets its own translate).
    ///
    /// Isolated points: with `p = e^{−γκρ^d}` and `V(r)` the volume of the
    /// intersection of two ρ-balls at distance r,
    /// `Var = γAp − γ²Ap²κρ^d + γ²Ap² ∫_{ρ≤|u|<2ρ} (e^{γV(|u|)} − 1) du`.
    pub fn exact_moments(&self, lambda: f64) -> Result<Option<(f64, f64)>> {
        let domain = self.domain(lambda)?;
        let g = self.intensity;
        match self.model {
            ModelConfig::PoissonCount => {
                let nu = domain.nu_window();
                Ok(Some((nu, nu)))
            }
            ModelConfig::Isolated { rho } if self.space.kind == SpaceKind::FlatTorus => {
                let dim = self.space.dim;
                let side = lambda.powf(1.0 / dim as f64);
                if side < 4.0 * rho || dim > 2 {
                    return Ok(None);
                }
                let area = side.powi(dim as i32);
                let (kappa, shell, lens): (f64, fn(f64) -> f64, fn(f64, f64) -> f64) = if dim == 1 {
                    (2.0, |_| 2.0, |r, rho| 2.0 * rho - r)
                } else {
                    (std::f64::consts::PI, |r| 2.0 * std::f64::consts::PI * r, |r, rho| {
                        2.0 * rho * rho * (r / (2.0 * rho)).acos() - 0.5 * r * (4.0 * rho * rho - r * r).max(0.0).sqrt()
                    })
                };
                let ball = kappa * rho.powi(dim as i32);
                let p = (-g * ball).exp();
                let tail = crate::numeric::integrate(
                    |r| shell(r) * (g * lens(r, rho)).exp_m1(),
                    rho,
                    2.0 * rho,
                    1e-12,
                    0.0,
                )?;
                let mean = g * area * p;
                let var = mean - g * g * area * p * p * ball + g * g * area * p * p * tail;
                Ok(Some((mean, var)))
            }
            _ => Ok(None),
        }
    }

    /// Birth-growth time horizon: explicit `t_max`, or `max(4, ln(ν/ε)/c)`.
    fn time_horizon(&self, nu_window: f64) -> Result<f64> {
        match &self.model {
            ModelConfig::BirthGrowth { t_max: Some(t), .. } => Ok(*t),
            ModelConfig::BirthGrowth { time_rate: Some(c), .. } => {
                crate::growth::pick_time_truncation(nu_window, self.bias_eps, *c)
            }
            ModelConfig::BirthGrowth { .. } => config("birth_growth needs t_max or time_rate"),
            _ => Ok(0.0),
        }
    }

    /// Domain of the window indexed by λ.
    pub fn domain(&self, lambda: f64) -> Result<Arc<SpaceTimeDomain>> {
        if let Some(lg) = self.laguerre()? {
            let mut d = lg.domain(lambda)?;
            d.intensity = self.intensity;
            return Ok(Arc::new(d));
        }
        let dim = self.space.dim;
        let (space, window) = match self.space.kind {
            SpaceKind::HyperbolicBall => (Space::hyperbolic(dim, lambda)?, Window::Full),
            SpaceKind::FlatTorus => (Space::torus(dim, lambda.powf(1.0 / dim as f64))?, Window::Full),
            SpaceKind::EuclideanBox => (Space::euclidean(dim, lambda.powf(1.0 / dim as f64))?, Window::Full),
        };
        let domain = match self.birth_growth()? {
            Some(bg) => {
                let nu = self.intensity * space.volume(&window)?;
                bg.domain(space, window, self.intensity, self.time_horizon(nu)?)?
            }
            None => SpaceTimeDomain::space_only(space, window, self.intensity)?,
        };
        Ok(Arc::new(domain))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"model": {"type": "isolated", "rho": 0.3}, "space": {"kind": "flat_torus", "dim": 2},
        "lambdas": [16, 64], "n": 200, "seed": 3}"#;

    #[test]
    fn parses_and_builds() {
        let cfg = ExperimentConfig::from_json(BASE).unwrap();
        let d = cfg.domain(64.0).unwrap();
        assert!((d.nu_window() - 64.0).abs() < 1e-9);
        assert_eq!(cfg.score().unwrap().name(), "isolated(ρ=0.3)");
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = BASE.replace("[16, 64]", "[64, 16]");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(Error::Config(_))));
        let bad = BASE.replace("\"n\": 200", "\"n\": 50");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(Error::Config(_))));
        let bad = BASE.replace("0.3", "-1");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(Error::Config(_))));
        let bad = BASE.replace("\"seed\"", "\"sede\"");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn missing_gamma_budget_key_is_named() {
        let cfg = ExperimentConfig::from_json(&BASE.replace(
            "\"seed\": 3",
            "\"seed\": 3, \"budgets\": {\"gamma\": {\"n_outer_x\": 10, \"n_outer_y\": 10}}",
        ))
        .unwrap();
        let err = cfg.gamma_budgets().unwrap_err();
        assert!(err.to_string().contains("budgets.gamma.n_inner"), "{err}");
    }

    #[test]
    fn exact_isolated_moments_match_monte_carlo() {
        use crate::experiments::sample_functional;
        use crate::process::RandomStream;
        use crate::stats::variance_interval;
        for dim in [1usize, 2] {
            let text = BASE.replace("\"dim\": 2", &format!("\"dim\": {dim}")).replace("0.3", "0.5");
            let cfg = ExperimentConfig::from_json(&text).unwrap();
            let (m, v) = cfg.exact_moments(64.0).unwrap().unwrap();
            let hs = sample_functional(cfg.score().unwrap().as_ref(), &cfg.domain(64.0).unwrap(), 40_000, RandomStream::new(77))
                .unwrap();
            let se = crate::stats::std_error(&hs);
            assert!((crate::stats::mean(&hs) - m).abs() < 4.0 * se, "d={dim}: mean {m}");
            let (vh, lo, hi) = variance_interval(&hs);
            let se_v = (hi - lo) / (2.0 * crate::stats::Z95);
            assert!((vh - v).abs() < 4.0 * se_v, "d={dim}: var {v} vs {vh} ± {se_v}");
        }
    }

    #[test]
    fn exact_standardization_needs_closed_forms() {
        let text = BASE.replace("\"seed\": 3", "\"seed\": 3, \"standardization\": \"exact\"");
        assert!(ExperimentConfig::from_json(&text).is_ok());
        let knn = text.replace("{\"type\": \"isolated\", \"rho\": 0.3}", "{\"type\": \"knn\", \"k\": 1, \"alpha\": 1}");
        assert!(matches!(ExperimentConfig::from_json(&knn), Err(Error::Config(_))));
    }

    #[test]
    fn birth_growth_horizon() {
        let cfg = ExperimentConfig::from_json(
            r#"{"model": {"type": "birth_growth", "rho_min": 0.05, "tail_rate": 5, "time_rate": 0.5},
                "space": {"kind": "euclidean_box", "dim": 1}, "lambdas": [100], "n": 100, "bias_eps": 0.01}"#,
        )
        .unwrap();
        let d = cfg.domain(100.0).unwrap();
        assert!((d.time_mass() - (1e4f64).ln() / 0.5).abs() < 1e-9);
    }
}
