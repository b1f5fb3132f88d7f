use crate::error::{config, input, Error, Result};
use crate::geometry::{Space, SpaceKind, Window};
use crate::process::config::MarkedPoint;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Time (or weight) measure μ of a space-time domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TimeMeasure {
    /// Space-only domain (Dirac mass at 0).
    None,
    /// Lebesgue measure on `[0, t_max]`.
    Lebesgue { t_max: f64 },
    /// Density `h^β dh` on `(0, h_max]`.
    PowerDensity { beta: f64, h_max: f64 },
}

/// Mark law Q.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MarkLaw {
    PointMass { value: f64 },
    /// `min + Exp(rate)`: `P(M ≥ r) = exp(−rate (r − min))` for `r ≥ min`.
    ShiftedExponential { min: f64, rate: f64 },
    Table { values: Vec<f64>, weights: Vec<f64> },
}

impl MarkLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            MarkLaw::PointMass { value } if value.is_finite() => Ok(()),
            MarkLaw::ShiftedExponential { min, rate } if min.is_finite() && *rate > 0.0 => Ok(()),
            MarkLaw::Table { values, weights }
                if !values.is_empty()
                    && values.len() == weights.len()
                    && weights.iter().all(|w| *w >= 0.0)
                    && weights.iter().sum::<f64>() > 0.0 =>
            {
                Ok(())
            }
            other => config(format!("invalid mark law {other:?}")),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            MarkLaw::PointMass { value } => *value,
            MarkLaw::ShiftedExponential { min, rate } => {
                let u: f64 = rng.random();
                min - (1.0 - u).ln() / rate
            }
            MarkLaw::Table { values, weights } => {
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                for (v, w) in values.iter().zip(weights) {
                    if u < *w {
                        return *v;
                    }
                    u -= w;
                }
                *values.last().unwrap()
            }
        }
    }
}

/// Metric measure space with window W, carrier X ⊇ W, spatial intensity,
/// time measure and mark law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeDomain {
    pub space: Space,
    pub window: Window,
    pub carrier: Window,
    /// ν = intensity × volume.
    pub intensity: f64,
    pub time: TimeMeasure,
    pub marks: MarkLaw,
}

impl SpaceTimeDomain {
    pub fn new(
        space: Space,
        window: Window,
        carrier: Window,
        intensity: f64,
        time: TimeMeasure,
        marks: MarkLaw,
    ) -> Result<Self> {
        let window = space.resolve(&window);
        let carrier = space.resolve(&carrier);
        space.check_window(&window)?;
        space.check_window(&carrier)?;
        if !(intensity >= 0.0) || !intensity.is_finite() {
            return config(format!("intensity must be finite and non-negative, got {intensity}"));
        }
        match time {
            TimeMeasure::None => {}
            TimeMeasure::Lebesgue { t_max } if t_max > 0.0 && t_max.is_finite() => {}
            TimeMeasure::PowerDensity { beta, h_max } if beta > -1.0 && h_max > 0.0 && h_max.is_finite() => {}
            ref other => return config(format!("invalid time measure {other:?} (need β > −1 and a finite horizon)")),
        }
        marks.validate()?;
        if !window_inside(&space, &window, &carrier) {
            return config("window must lie inside the carrier");
        }
        Ok(SpaceTimeDomain { space, window, carrier, intensity, time, marks })
    }

    /// Space-only domain with X = W, unit mark.
    pub fn space_only(space: Space, window: Window, intensity: f64) -> Result<Self> {
        SpaceTimeDomain::new(space, window.clone(), window, intensity, TimeMeasure::None, MarkLaw::PointMass { value: 1.0 })
    }

    pub fn is_space_time(&self) -> bool {
        self.time != TimeMeasure::None
    }

    /// ν(region).
    pub fn nu(&self, region: &Window) -> Result<f64> {
        Ok(self.intensity * self.space.volume(region)?)
    }

    pub fn nu_window(&self) -> f64 {
        self.nu(&self.window).expect("validated window")
    }

    pub fn nu_carrier(&self) -> f64 {
        self.nu(&self.carrier).expect("validated carrier")
    }

    /// Total mass of μ on its (truncated) support.
    pub fn time_mass(&self) -> f64 {
        match self.time {
            TimeMeasure::None => 1.0,
            TimeMeasure::Lebesgue { t_max } => t_max,
            TimeMeasure::PowerDensity { beta, h_max } => h_max.powf(beta + 1.0) / (beta + 1.0),
        }
    }

    pub fn total_mass(&self, region: &Window) -> Result<f64> {
        let m = self.nu(region)? * self.time_mass();
        if !m.is_finite() {
            return config("infinite intensity mass after truncation");
        }
        Ok(m)
    }

    pub fn sample_time<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        match self.time {
            TimeMeasure::None => None,
            TimeMeasure::Lebesgue { t_max } => Some(t_max * rng.random::<f64>()),
            TimeMeasure::PowerDensity { beta, h_max } => {
                // 1 − U avoids h = 0 exactly.
                let u: f64 = 1.0 - rng.random::<f64>();
                Some(h_max * u.powf(1.0 / (beta + 1.0)))
            }
        }
    }

    /// One point drawn from the normalized ν⊗μ⊗Q restricted to `region`.
    pub fn sample_point<R: Rng + ?Sized>(&self, region: &Window, id: u64, rng: &mut R) -> Result<MarkedPoint> {
        let loc = self.space.sample_uniform(region, 1, rng)?[0];
        let time = self.sample_time(rng);
        let mark = self.marks.sample(rng);
        Ok(MarkedPoint { id, loc, time, mark })
    }

    pub(crate) fn check_point(&self, p: &MarkedPoint) -> Result<()> {
        self.space.validate(&p.loc)?;
        if p.time.is_some() != self.is_space_time() {
            return input(format!("point {} time coordinate does not match the domain", p.id));
        }
        if let Some(t) = p.time {
            if !t.is_finite() {
                return input("non-finite time coordinate");
            }
        }
        if !self.space.contains(&self.carrier, &p.loc) {
            return Err(Error::Input(format!("point {} lies outside the carrier", p.id)));
        }
        Ok(())
    }
}

fn window_inside(space: &Space, w: &Window, x: &Window) -> bool {
    match (w, x) {
        (_, Window::Full) => true,
        (Window::Box { lo, hi }, Window::Box { lo: xl, hi: xh }) => {
            if space.kind() == SpaceKind::FlatTorus && xh.iter().zip(xl).all(|(a, b)| a - b >= space.extent()) {
                return true;
            }
            (0..lo.len()).all(|i| xl[i] <= lo[i] && hi[i] <= xh[i])
        }
        (Window::Ball { center, radius }, Window::Ball { center: xc, radius: xr }) => {
            space.dist(center, xc) + radius <= xr * (1.0 + 1e-12)
        }
        (Window::Ball { center, radius }, Window::Box { lo, hi }) => {
            (0..lo.len()).all(|i| lo[i] <= center[i] - radius && center[i] + radius <= hi[i])
        }
        (Window::Box { lo, hi }, Window::Ball { center, radius }) => {
            // All corners inside the (convex) Euclidean ball.
            let d = lo.len();
            (0..1usize << d).all(|mask| {
                let s: f64 = (0..d)
                    .map(|i| {
                        let c = if mask >> i & 1 == 1 { hi[i] } else { lo[i] };
                        (c - center[i]).powi(2)
                    })
                    .sum();
                s.sqrt() <= *radius
            })
        }
        (Window::Full, _) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn power_density_mass_and_support() {
        let s = Space::euclidean(1, 10.0).unwrap();
        let d = SpaceTimeDomain::new(
            s,
            Window::Full,
            Window::Full,
            1.0,
            TimeMeasure::PowerDensity { beta: 1.0, h_max: 2.0 },
            MarkLaw::PointMass { value: 1.0 },
        )
        .unwrap();
        assert_eq!(d.time_mass(), 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hs: Vec<f64> = (0..20000).map(|_| d.sample_time(&mut rng).unwrap()).collect();
        assert!(hs.iter().all(|h| *h > 0.0 && *h <= 2.0));
        // E h = ∫ h·h dh / 2 = 4/3.
        let m = crate::stats::mean(&hs);
        assert!((m - 4.0 / 3.0).abs() < 0.02, "{m}");
    }

    #[test]
    fn rejects_bad_beta_and_window_outside_carrier() {
        let s = Space::euclidean(1, 10.0).unwrap();
        let bad = SpaceTimeDomain::new(
            s,
            Window::Full,
            Window::Full,
            1.0,
            TimeMeasure::PowerDensity { beta: -1.0, h_max: 1.0 },
            MarkLaw::PointMass { value: 1.0 },
        );
        assert!(bad.is_err());
        let out = SpaceTimeDomain::new(
            s,
            Window::centered_box(1, 20.0),
            Window::Full,
            1.0,
            TimeMeasure::None,
            MarkLaw::PointMass { value: 1.0 },
        );
        assert!(out.is_err());
    }

    #[test]
    fn shifted_exponential_tail() {
        let law = MarkLaw::ShiftedExponential { min: 0.5, rate: 2.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..50000).map(|_| law.sample(&mut rng)).collect();
        assert!(xs.iter().all(|x| *x >= 0.5));
        let frac = xs.iter().filter(|x| **x >= 1.5).count() as f64 / xs.len() as f64;
        assert!((frac - (-2.0f64).exp()).abs() < 0.01);
    }
}
