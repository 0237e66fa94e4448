//! Heralded-HOM experiments, figures of merit and parameter sweeps.

mod hhom;
mod sweep;

pub use hhom::*;
pub use sweep::{sweep, SweepAxis, SweepResult, SweepRow};
