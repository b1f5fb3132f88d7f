//! Monte Carlo laboratory for quantitative central limit theorems of
//! Poisson functionals.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] – metric measure spaces (Euclidean, flat torus, hyperbolic
//!   ball), volumes, uniform sampling and fixed-radius neighbour queries.
//! * [`process`] – marked Poisson sampling on space and space-time domains,
//!   configuration algebra and the Mecke-identity harness.
//! * [`scores`] – score functions with their short-range restrictions
//!   (local U-statistics, isolated points, k-nearest-neighbour lengths).
//! * [`growth`] – birth-growth acceptance dynamics with random speeds.
//! * [`laguerre`] – paraboloid thinning / Laguerre cell retention.
//! * [`malliavin`] – add-one costs, Monte Carlo estimates of the
//!   second-order Poincaré terms, distances to the normal law.
//! * [`localization`] – localization profiles, integral ingredients and
//!   the assembled Berry–Esseen bounds.
//! * [`oracle`] – slow independent reference implementations.
//! * [`experiments`] – config-driven studies used by the `pclt` binary.

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod growth;
pub mod laguerre;
pub mod localization;
pub mod malliavin;
pub mod numeric;
pub mod oracle;
pub mod process;
pub mod scores;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{Point, Space, SpaceKind, SpatialIndex, Window};
pub use malliavin::{Functional, GammaEstimates};
pub use process::{Configuration, MarkedPoint, RandomStream, SpaceTimeDomain, View};
pub use scores::ScoreFamily;
