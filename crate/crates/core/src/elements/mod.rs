//! Source models and optical elements.

pub mod jsa;
pub mod optics;

pub use jsa::{build_jsa, schmidt_decompose, JsaMatrix, JsaShape, JsaSpec, LobeSign, SchmidtData};
pub use optics::{
    bandpass_filter, beam_splitter, delay, loss, phase_shifter, rotation, squeezer,
    squeezer_conjugated_convention, squeezer_from_schmidt,
};
