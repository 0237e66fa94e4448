//! Mode indexing and the discretized frequency axis.
//!
//! Every vector of mode operators in this crate is ordered as
//! `(a_{1,1} .. a_{1,Nf}, a_{2,1} .. a_{Ns,Nf}, a^dag_{1,1} .. a^dag_{Ns,Nf})`:
//! all annihilation operators first (spatial-major, spectral-minor), then the
//! creation operators in the same order. Spatial and spectral labels are
//! zero-based throughout the API.

use std::ops::Range;

use crate::error::{Error, Result};

/// Spatial x spectral mode lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeLayout {
    n_spatial: usize,
    n_spectral: usize,
}

impl ModeLayout {
    pub fn new(n_spatial: usize, n_spectral: usize) -> Result<Self> {
        if n_spatial == 0 || n_spectral == 0 {
            return Err(Error::InvalidLayout(format!(
                "need at least one spatial and one spectral mode, got {n_spatial}x{n_spectral}"
            )));
        }
        Ok(Self {
            n_spatial,
            n_spectral,
        })
    }

    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn n_spectral(&self) -> usize {
        self.n_spectral
    }

    /// Total number of modes `N = Ns * Nf`.
    pub fn n_modes(&self) -> usize {
        self.n_spatial * self.n_spectral
    }

    /// Size of the doubled (annihilation + creation) basis, `2N`.
    pub fn dim(&self) -> usize {
        2 * self.n_modes()
    }

    /// Position of `a_{spatial, bin}` in the operator vector.
    pub fn index(&self, spatial: usize, bin: usize) -> usize {
        debug_assert!(spatial < self.n_spatial && bin < self.n_spectral);
        spatial * self.n_spectral + bin
    }

    /// Position of `a^dag_{spatial, bin}` in the operator vector.
    pub fn creation_index(&self, spatial: usize, bin: usize) -> usize {
        self.n_modes() + self.index(spatial, bin)
    }

    /// Annihilation-block indices belonging to one spatial mode.
    pub fn spatial_range(&self, spatial: usize) -> Range<usize> {
        let start = spatial * self.n_spectral;
        start..start + self.n_spectral
    }

    /// Spatial label owning a doubled-basis index.
    pub fn spatial_of(&self, index: usize) -> usize {
        (index % self.n_modes()) / self.n_spectral
    }

    /// Diagonal of the commutation metric `K = diag(1, .., 1, -1, .., -1)`.
    pub fn metric(&self) -> Vec<f64> {
        let n = self.n_modes();
        (0..2 * n).map(|i| if i < n { 1.0 } else { -1.0 }).collect()
    }

    /// Doubled-basis indices for a list of spatial modes, in the canonical
    /// order: the annihilation indices of every listed mode, then the
    /// matching creation indices.
    pub fn doubled_indices(&self, spatial_modes: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = spatial_modes
            .iter()
            .flat_map(|&s| self.spatial_range(s))
            .collect();
        let n = self.n_modes();
        let creation: Vec<usize> = out.iter().map(|&i| i + n).collect();
        out.extend(creation);
        out
    }

    /// Checks that `modes` is a nonempty list of distinct, in-range spatial labels.
    pub fn check_spatial_modes(&self, modes: &[usize]) -> Result<()> {
        if modes.is_empty() {
            return Err(Error::InvalidModes("empty spatial mode set".into()));
        }
        let mut seen = vec![false; self.n_spatial];
        for &m in modes {
            if m >= self.n_spatial {
                return Err(Error::InvalidModes(format!(
                    "spatial mode {m} out of range for {} spatial modes",
                    self.n_spatial
                )));
            }
            if seen[m] {
                return Err(Error::InvalidModes(format!("spatial mode {m} listed twice")));
            }
            seen[m] = true;
        }
        Ok(())
    }
}

/// Uniform discretization of an angular-frequency axis (rad/s).
///
/// Bin `k` (zero-based) sits at `center + (k - (n_bins - 1)/2) * step`, so the
/// bins are symmetric about `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    center: f64,
    step: f64,
    n_bins: usize,
}

impl FrequencyGrid {
    pub fn new(center: f64, step: f64, n_bins: usize) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::param("step", format!("must be positive and finite, got {step}")));
        }
        if !center.is_finite() {
            return Err(Error::param("center", "must be finite"));
        }
        if n_bins == 0 {
            return Err(Error::param("n_bins", "must be at least 1"));
        }
        Ok(Self {
            center,
            step,
            n_bins,
        })
    }

    /// Grid of `n_bins` bins whose outermost bin centers sit at `center +- half_span`.
    pub fn spanning(center: f64, half_span: f64, n_bins: usize) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::param("n_bins", "a spanning grid needs at least 2 bins"));
        }
        if !(half_span > 0.0) {
            return Err(Error::param("half_span", "must be positive"));
        }
        Self::new(center, 2.0 * half_span / (n_bins - 1) as f64, n_bins)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Offset of bin `k` from the grid center.
    pub fn offset(&self, k: usize) -> f64 {
        (k as f64 - (self.n_bins as f64 - 1.0) / 2.0) * self.step
    }

    pub fn bin_frequency(&self, k: usize) -> f64 {
        self.center + self.offset(k)
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_bins).map(move |k| self.bin_frequency(k))
    }

    /// Largest absolute offset of a bin from the center.
    pub fn half_span(&self) -> f64 {
        self.offset(self.n_bins - 1)
    }

    /// Period of the time axis implied by the discretization, `2 pi / step`.
    ///
    /// Delays are only meaningful modulo this period.
    pub fn time_period(&self) -> f64 {
        std::f64::consts::TAU / self.step
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_follows_spatial_major_order() {
        let l = ModeLayout::new(3, 4).unwrap();
        assert_eq!(l.n_modes(), 12);
        assert_eq!(l.index(0, 0), 0);
        assert_eq!(l.index(1, 0), 4);
        assert_eq!(l.index(2, 3), 11);
        assert_eq!(l.creation_index(0, 0), 12);
        assert_eq!(l.creation_index(2, 3), 23);
        assert_eq!(l.spatial_of(13), 0);
        assert_eq!(l.spatial_of(17), 1);
        for s in 0..3 {
            for w in 0..4 {
                assert!(l.creation_index(s, w) < l.dim());
            }
        }
    }

    #[test]
    fn metric_signs() {
        let l = ModeLayout::new(2, 2).unwrap();
        assert_eq!(l.metric(), vec![1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0]);
    }

    #[test]
    fn doubled_indices_keep_subset_order() {
        let l = ModeLayout::new(3, 2).unwrap();
        assert_eq!(l.doubled_indices(&[2, 0]), vec![4, 5, 0, 1, 10, 11, 6, 7]);
    }

    #[test]
    fn rejects_bad_layouts_and_modes() {
        assert!(ModeLayout::new(0, 3).is_err());
        assert!(ModeLayout::new(2, 0).is_err());
        let l = ModeLayout::new(2, 1).unwrap();
        assert!(l.check_spatial_modes(&[]).is_err());
        assert!(l.check_spatial_modes(&[0, 0]).is_err());
        assert!(l.check_spatial_modes(&[2]).is_err());
        assert!(l.check_spatial_modes(&[1, 0]).is_ok());
    }

    #[test]
    fn grid_is_symmetric_about_center() {
        let g = FrequencyGrid::new(10.0, 0.5, 5).unwrap();
        let f: Vec<f64> = g.frequencies().collect();
        assert_eq!(f, vec![9.0, 9.5, 10.0, 10.5, 11.0]);
        let even = FrequencyGrid::new(0.0, 1.0, 4).unwrap();
        assert_eq!(even.offset(0), -1.5);
        assert_eq!(even.offset(3), 1.5);
        assert!(FrequencyGrid::new(0.0, 0.0, 3).is_err());
        assert!(FrequencyGrid::new(0.0, -1.0, 3).is_err());
    }

    #[test]
    fn spanning_grid_hits_the_edges() {
        let g = FrequencyGrid::spanning(1.0, 4.0, 41).unwrap();
        assert!((g.bin_frequency(0) + 3.0).abs() < 1e-12);
        assert!((g.bin_frequency(40) - 5.0).abs() < 1e-12);
        assert!((g.step() - 0.2).abs() < 1e-12);
    }
}
