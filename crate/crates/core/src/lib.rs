//! Multimode Gaussian quantum optics on a spatial x spectral mode lattice.

pub mod detection;
pub mod elements;
pub mod experiments;
pub mod error;
pub mod layout;
pub mod linalg;
pub mod oracle;
pub mod state;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
pub use layout::{FrequencyGrid, ModeLayout};
pub use linalg::{CMatrix, C64};
pub use state::CovarianceState;
pub use transform::{Transform, TransformKind};
