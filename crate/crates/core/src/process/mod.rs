//! Marked Poisson processes on space and space-time domains.

mod config;
mod domain;
mod mecke;
mod rng;

pub use config::{fixed_atom_id, sample_poisson, Configuration, MarkedPoint, View, FIXED_ATOM_BASE};
pub use domain::{MarkLaw, SpaceTimeDomain, TimeMeasure};
pub use mecke::{mecke_check, MeckeResult};
pub use rng::RandomStream;
