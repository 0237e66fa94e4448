//! Joint spectral amplitudes: parametric models, discretization, and the
//! Schmidt (singular value) decomposition.

use std::fmt::Write as _;

use log::warn;

use crate::error::{Error, Result};
use crate::layout::FrequencyGrid;
use crate::linalg::{c, svd, CMatrix};

/// Sign between the two lobes of a double-lobe JSA.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LobeSign {
    Plus,
    Minus,
}

impl LobeSign {
    pub fn value(self) -> f64 {
        match self {
            LobeSign::Plus => 1.0,
            LobeSign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JsaShape {
    /// Product of two Gaussians; separable (single Schmidt mode).
    Gaussian,
    /// Gaussian pump envelope in `d1 + d2` times `sinc(walkoff/2 * (d1 - d2))`.
    /// `walkoff` is the group-velocity walk-off time in seconds.
    Waveguide { walkoff: f64 },
    /// Gaussian signal marginal times an idler marginal made of two Gaussian
    /// lobes at `idler_center +- separation/2`, combined with `sign`.
    /// Separable for either sign.
    DoubleLobe { separation: f64, sign: LobeSign },
}

/// Parametric JSA model. All frequencies are angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsaSpec {
    pub shape: JsaShape,
    /// Squeezing parameter `xi`: the Frobenius norm of the discretized JSA.
    pub squeezing: f64,
    /// Bandwidth `zeta` (rad/s).
    pub bandwidth: f64,
    pub signal_center: f64,
    pub idler_center: f64,
}

impl JsaSpec {
    pub fn gaussian(squeezing: f64, bandwidth: f64, center: f64) -> Self {
        Self {
            shape: JsaShape::Gaussian,
            squeezing,
            bandwidth,
            signal_center: center,
            idler_center: center,
        }
    }

    pub fn waveguide(squeezing: f64, bandwidth: f64, walkoff: f64, center: f64) -> Self {
        Self {
            shape: JsaShape::Waveguide { walkoff },
            squeezing,
            bandwidth,
            signal_center: center,
            idler_center: center,
        }
    }

    pub fn double_lobe(
        squeezing: f64,
        bandwidth: f64,
        separation: f64,
        sign: LobeSign,
        center: f64,
    ) -> Self {
        Self {
            shape: JsaShape::DoubleLobe { separation, sign },
            squeezing,
            bandwidth,
            signal_center: center,
            idler_center: center,
        }
    }

    pub fn with_squeezing(mut self, squeezing: f64) -> Self {
        self.squeezing = squeezing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.squeezing >= 0.0) || !self.squeezing.is_finite() {
            return Err(Error::param("squeezing", format!("must be >= 0, got {}", self.squeezing)));
        }
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            return Err(Error::param("bandwidth", format!("must be > 0, got {}", self.bandwidth)));
        }
        match self.shape {
            JsaShape::Gaussian => {}
            JsaShape::Waveguide { walkoff } => {
                if !walkoff.is_finite() || walkoff < 0.0 {
                    return Err(Error::param("walkoff", format!("must be >= 0, got {walkoff}")));
                }
            }
            JsaShape::DoubleLobe { separation, .. } => {
                if !separation.is_finite() || separation < 0.0 {
                    return Err(Error::param(
                        "separation",
                        format!("must be >= 0, got {separation}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Half-width of the frequency window that holds the JSA, per axis.
    pub fn support_half_width(&self) -> f64 {
        match self.shape {
            JsaShape::Gaussian => 4.0 * self.bandwidth,
            JsaShape::Waveguide { walkoff } => {
                let sinc_scale = if walkoff > 0.0 {
                    std::f64::consts::TAU / walkoff
                } else {
                    0.0
                };
                4.0 * self.bandwidth.max(sinc_scale)
            }
            JsaShape::DoubleLobe { separation, .. } => separation / 2.0 + 4.0 * self.bandwidth,
        }
    }

    /// Unnormalized amplitude at detunings `d1 = nu1 - signal_center`,
    /// `d2 = nu2 - idler_center`.
    fn amplitude(&self, d1: f64, d2: f64) -> f64 {
        let z = self.bandwidth;
        let g = |x: f64| (-0.5 * (x / z).powi(2)).exp();
        match self.shape {
            JsaShape::Gaussian => g(d1) * g(d2),
            JsaShape::Waveguide { walkoff } => g(d1 + d2) * sinc(0.5 * walkoff * (d1 - d2)),
            JsaShape::DoubleLobe { separation, sign } => {
                let h = separation / 2.0;
                g(d1) * (g(d2 - h) + sign.value() * g(d2 + h))
            }
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Discretized JSA, `F[w1, w2] = dnu * F(nu_w1, nu_w2)` rescaled to Frobenius norm `xi`.
/// Rows index signal bins, columns idler bins.
#[derive(Debug, Clone, PartialEq)]
pub struct JsaMatrix {
    f: CMatrix,
    grid_signal: FrequencyGrid,
    grid_idler: FrequencyGrid,
}

impl JsaMatrix {
    /// Wraps an arbitrary matrix; the norm of `f` becomes the squeezing parameter.
    pub fn from_matrix(
        f: CMatrix,
        grid_signal: FrequencyGrid,
        grid_idler: FrequencyGrid,
    ) -> Result<Self> {
        if f.nrows() != grid_signal.n_bins() || f.ncols() != grid_idler.n_bins() {
            return Err(Error::DimensionMismatch {
                expected: grid_signal.n_bins(),
                found: f.nrows(),
            });
        }
        if f.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::param("jsa", "matrix has non-finite entries"));
        }
        Ok(Self {
            f,
            grid_signal,
            grid_idler,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.f
    }

    pub fn grid_signal(&self) -> &FrequencyGrid {
        &self.grid_signal
    }

    pub fn grid_idler(&self) -> &FrequencyGrid {
        &self.grid_idler
    }

    pub fn n_bins(&self) -> usize {
        self.f.nrows()
    }

    /// Frobenius norm, equal to the squeezing parameter.
    pub fn squeezing(&self) -> f64 {
        self.f.norm()
    }

    /// CSV dump of the real or imaginary part: one row per signal bin, one
    /// column per idler bin.
    pub fn to_csv(&self, imaginary: bool) -> String {
        let mut out = String::new();
        for i in 0..self.f.nrows() {
            let row: Vec<String> = (0..self.f.ncols())
                .map(|j| {
                    let z = self.f[(i, j)];
                    format!("{:.10e}", if imaginary { z.im } else { z.re })
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Samples `spec` on the two grids and rescales to Frobenius norm `xi`.
pub fn build_jsa(
    spec: &JsaSpec,
    grid_signal: &FrequencyGrid,
    grid_idler: &FrequencyGrid,
) -> Result<JsaMatrix> {
    spec.validate()?;
    for (grid, name) in [(grid_signal, "signal grid"), (grid_idler, "idler grid")] {
        if grid.step() > spec.bandwidth / 4.0 {
            return Err(Error::param(
                "grid",
                format!(
                    "{name} step {:e} rad/s is coarser than bandwidth/4 = {:e} rad/s",
                    grid.step(),
                    spec.bandwidth / 4.0
                ),
            ));
        }
    }
    let need = spec.support_half_width();
    for (grid, center, name) in [
        (grid_signal, spec.signal_center, "signal"),
        (grid_idler, spec.idler_center, "idler"),
    ] {
        let lo = grid.bin_frequency(0);
        let hi = grid.bin_frequency(grid.n_bins() - 1);
        if center - need < lo - 0.5 * grid.step() || center + need > hi + 0.5 * grid.step() {
            warn!("{name} grid [{lo:e}, {hi:e}] does not cover the JSA support {center:e} +- {need:e}");
        }
    }

    let step = (grid_signal.step() * grid_idler.step()).sqrt();
    let mut f = CMatrix::from_fn(grid_signal.n_bins(), grid_idler.n_bins(), |i, j| {
        let d1 = grid_signal.bin_frequency(i) - spec.signal_center;
        let d2 = grid_idler.bin_frequency(j) - spec.idler_center;
        c(step * spec.amplitude(d1, d2), 0.0)
    });
    let norm = f.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::param("jsa", "sampled JSA vanishes on the grid"));
    }
    f.scale_mut(spec.squeezing / norm);
    JsaMatrix::from_matrix(f, *grid_signal, *grid_idler)
}

/// `F = U diag(lambda) V^dag` with `lambda` sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtData {
    pub singular_values: Vec<f64>,
    pub u: CMatrix,
    pub v: CMatrix,
}

impl SchmidtData {
    /// Normalized Schmidt weights `alpha_l = lambda_l / xi`.
    pub fn weights(&self) -> Vec<f64> {
        let xi = self
            .singular_values
            .iter()
            .map(|l| l * l)
            .sum::<f64>()
            .sqrt();
        if xi == 0.0 {
            return vec![0.0; self.singular_values.len()];
        }
        self.singular_values.iter().map(|l| l / xi).collect()
    }

    /// `sum alpha_l^4`; 1 for a separable JSA.
    pub fn schmidt_purity(&self) -> f64 {
        self.weights().iter().map(|a| a.powi(4)).sum()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let n = self.singular_values.len();
        let mut us = self.u.clone();
        for l in 0..n {
            let s = self.singular_values[l];
            us.column_mut(l).scale_mut(s);
        }
        us * self.v.adjoint()
    }
}

pub fn schmidt_decompose(j: &JsaMatrix) -> SchmidtData {
    let d = svd(j.matrix());
    SchmidtData {
        singular_values: d.s,
        u: d.u,
        v: d.v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, C64};
    use std::f64::consts::TAU;

    const THZ: f64 = TAU * 1e12;

    fn grid(n: usize, half: f64) -> FrequencyGrid {
        FrequencyGrid::spanning(193.1 * THZ, half, n).unwrap()
    }

    #[test]
    fn gaussian_is_rank_one_with_norm_xi() {
        let zeta = 0.1 * THZ;
        let g = grid(41, 4.0 * zeta);
        let j = build_jsa(&JsaSpec::gaussian(0.5, zeta, g.center()), &g, &g).unwrap();
        assert!((j.squeezing() - 0.5).abs() < 1e-10);
        let s = schmidt_decompose(&j);
        assert!((s.singular_values[0] - 0.5).abs() < 1e-10);
        assert!(s.singular_values[1] < 1e-8);
    }

    #[test]
    fn waveguide_is_spectrally_impure() {
        let zeta = 0.1 * THZ;
        let spec = JsaSpec::waveguide(1.0, zeta, 29.0e-12, 193.1 * THZ);
        let g = grid(41, spec.support_half_width());
        let j = build_jsa(&spec, &g, &g).unwrap();
        let s = schmidt_decompose(&j);
        assert!(s.schmidt_purity() < 0.99);
        let total: f64 = s.singular_values.iter().map(|l| l * l).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn double_lobe_signs_share_the_spectrum() {
        let zeta = 0.03 * THZ;
        let sep = 0.8e12;
        let center = 193.1 * THZ;
        let plus = JsaSpec::double_lobe(0.4, zeta, sep, LobeSign::Plus, center);
        let minus = JsaSpec::double_lobe(0.4, zeta, sep, LobeSign::Minus, center);
        let g = grid(81, plus.support_half_width());
        let jp = build_jsa(&plus, &g, &g).unwrap();
        let jm = build_jsa(&minus, &g, &g).unwrap();
        assert!((jp.squeezing() - 0.4).abs() < 1e-10);
        assert!((jm.squeezing() - 0.4).abs() < 1e-10);
        let sp = schmidt_decompose(&jp);
        let sm = schmidt_decompose(&jm);
        for (a, b) in sp.singular_values.iter().zip(&sm.singular_values) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(sp.singular_values[1] < 1e-8);
        // the idler marginals are orthogonal
        let overlap: C64 = sp
            .v
            .column(0)
            .iter()
            .zip(sm.v.column(0).iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!(overlap.norm() < 1e-6);
    }

    #[test]
    fn svd_reconstructs_and_is_unitary() {
        let zeta = 0.1 * THZ;
        let spec = JsaSpec::waveguide(0.7, zeta, 29.0e-12, 193.1 * THZ);
        let g = grid(61, spec.support_half_width());
        let j = build_jsa(&spec, &g, &g).unwrap();
        let s = schmidt_decompose(&j);
        assert!(max_abs_diff(&s.reconstruct(), j.matrix()) < 1e-10 * 0.7);
        let n = j.n_bins();
        assert!(max_abs_diff(&(s.u.adjoint() * &s.u), &CMatrix::identity(n, n)) < 1e-10);
        assert!(max_abs_diff(&(s.v.adjoint() * &s.v), &CMatrix::identity(n, n)) < 1e-10);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let sum_sq: f64 = s.singular_values.iter().map(|l| l * l).sum();
        assert!((sum_sq - 0.49).abs() < 1e-10);
    }

    #[test]
    fn singular_values_ignore_diagonal_phases() {
        let zeta = 0.1 * THZ;
        let spec = JsaSpec::waveguide(0.7, zeta, 29.0e-12, 193.1 * THZ);
        let g = grid(41, spec.support_half_width());
        let j = build_jsa(&spec, &g, &g).unwrap();
        let n = j.n_bins();
        let pl = CMatrix::from_fn(n, n, |i, k| if i == k { C64::from_polar(1.0, 0.3 * i as f64) } else { C64::new(0.0, 0.0) });
        let pr = CMatrix::from_fn(n, n, |i, k| if i == k { C64::from_polar(1.0, -1.1 * (i * i) as f64) } else { C64::new(0.0, 0.0) });
        let jp = JsaMatrix::from_matrix(&pl * j.matrix() * &pr, g, g).unwrap();
        let a = schmidt_decompose(&j).singular_values;
        let b = schmidt_decompose(&jp).singular_values;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = grid(11, 1e12);
        assert!(build_jsa(&JsaSpec::gaussian(0.5, 0.0, g.center()), &g, &g).is_err());
        assert!(build_jsa(&JsaSpec::gaussian(-0.1, 1e12, g.center()), &g, &g).is_err());
        // step 0.2e12 > zeta/4 = 0.125e12
        assert!(build_jsa(&JsaSpec::gaussian(0.5, 0.5e12, g.center()), &g, &g).is_err());
    }

    #[test]
    fn csv_has_one_row_per_signal_bin() {
        let zeta = 0.1 * THZ;
        let g = grid(9, zeta);
        let j = build_jsa(&JsaSpec::gaussian(0.5, zeta, g.center()), &g, &g).unwrap();
        let re = j.to_csv(false);
        assert_eq!(re.lines().count(), 9);
        assert!(re.lines().all(|l| l.split(',').count() == 9));
        assert!(j.to_csv(true).lines().all(|l| l.split(',').all(|v| v.parse::<f64>().unwrap() == 0.0)));
    }
}
