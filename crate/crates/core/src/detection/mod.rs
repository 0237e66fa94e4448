//! Vacuum projections, threshold and photon-number-resolving detection.
//!
//! Every detector integrates over all spectral bins of its spatial mode.

mod factor;
mod pattern;
pub mod series;

pub use factor::FactoredState;
pub use pattern::{DetectionPattern, Outcome};
pub use series::{series_inv_sqrt_det, SeriesShape, TruncatedSeries};

use log::{debug, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{determinant, CMatrix, C64};
use crate::state::CovarianceState;

/// Probabilities below zero by at most this much are treated as rounding.
pub const CLAMP_TOL: f64 = 1e-10;

/// Clamps smaller than this are logged at debug level only.
const ROUNDOFF: f64 = 1e-12;

/// Limits and tolerances for detection queries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detector {
    /// Largest number of "on" modes in a threshold query.
    pub max_on_modes: usize,
    /// Largest total photon number in a PNR query.
    pub pnr_cutoff: usize,
    /// Eigenvalues of `sigma - 1` below this (absolute) are dropped before
    /// the series determinant.
    pub rank_tol: f64,
}

impl Default for Detector {
    fn default() -> Self {
        Self {
            max_on_modes: 16,
            pnr_cutoff: 12,
            rank_tol: 1e-13,
        }
    }
}

fn clamp_probability(p: f64, what: &str) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::Unphysical(format!("{what} probability is not finite")));
    }
    if !(-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(&p) {
        return Err(Error::Unphysical(format!("{what} probability {p:e} outside [0, 1]")));
    }
    if p < 0.0 {
        if p < -ROUNDOFF {
            warn!("{what} probability {p:e} clamped to 0");
        } else {
            debug!("{what} probability {p:e} clamped to 0");
        }
        return Ok(0.0);
    }
    if p > 1.0 {
        if p > 1.0 + ROUNDOFF {
            warn!("{what} probability 1 + {:e} clamped to 1", p - 1.0);
        } else {
            debug!("{what} probability 1 + {:e} clamped to 1", p - 1.0);
        }
        return Ok(1.0);
    }
    Ok(p)
}

/// `det(M)^{-1/2}` for a matrix whose determinant should be real positive.
fn inv_sqrt_real_det(m: &CMatrix) -> Result<f64> {
    let det = determinant(m);
    if det.re <= 0.0 || det.im.abs() > 1e-10 * det.re.abs().max(1.0) {
        return Err(Error::Unphysical(format!(
            "vacuum-projection determinant {det} is not real positive"
        )));
    }
    Ok(det.re.powf(-0.5))
}

fn vacuum_projection(sigma_s: &CMatrix) -> Result<f64> {
    let d = sigma_s.nrows();
    let m = (sigma_s + CMatrix::identity(d, d)) * C64::new(0.5, 0.0);
    inv_sqrt_real_det(&m)
}

/// Probability that every listed spatial mode is in vacuum,
/// `det((1 + sigma_S)/2)^{-1/2}`.
pub fn p_vacuum(state: &CovarianceState, spatial_modes: &[usize]) -> Result<f64> {
    FactoredState::new(state, spatial_modes, Detector::default().rank_tol)?.p_vacuum(spatial_modes)
}

/// Vacuum projection of a displaced Gaussian state,
/// `2^n exp(-d^dag (sigma + 1)^{-1} d) / sqrt(det(sigma + 1))` for `n` modes.
///
/// `sigma` and `d` already restricted to the projected modes, `d` ordered
/// like the covariance matrix (`d = (alpha, alpha^*)` for coherent amplitudes).
pub fn p_vacuum_displaced(sigma: &CMatrix, d: &[C64]) -> Result<f64> {
    let dim = sigma.nrows();
    if !sigma.is_square() || d.len() != dim || dim % 2 != 0 {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: d.len(),
        });
    }
    let shifted = sigma + CMatrix::identity(dim, dim);
    let dv = nalgebra::DVector::from_column_slice(d);
    let solved = shifted
        .clone()
        .lu()
        .solve(&dv)
        .ok_or_else(|| Error::Unphysical("sigma + 1 is singular".into()))?;
    let quad = dv.dotc(&solved);
    if quad.im.abs() > 1e-10 * quad.re.abs().max(1.0) {
        return Err(Error::Unphysical(format!("displacement quadratic form {quad} is complex")));
    }
    let base = vacuum_projection(sigma)?;
    clamp_probability(base * (-quad.re).exp(), "vacuum")
}

fn check_disjoint(on: &[usize], off: &[usize]) -> Result<()> {
    if let Some(m) = on.iter().find(|m| off.contains(m)) {
        return Err(Error::InvalidModes(format!(
            "spatial mode {m} is listed both on and off"
        )));
    }
    Ok(())
}

/// Threshold-detector probability that every mode in `on` clicks and every
/// mode in `off` stays dark, by inclusion-exclusion over subsets of `on`.
pub fn p_threshold(
    state: &CovarianceState,
    on: &[usize],
    off: &[usize],
    detector: &Detector,
) -> Result<f64> {
    check_disjoint(on, off)?;
    let all: Vec<usize> = on.iter().chain(off).copied().collect();
    state.layout().check_spatial_modes(&all)?;
    if on.len() > detector.max_on_modes {
        return Err(Error::LimitExceeded {
            what: "threshold on-modes",
            requested: on.len(),
            limit: detector.max_on_modes,
        });
    }
    FactoredState::new(state, &all, detector.rank_tol)?.p_threshold(on, off, detector)
}

/// Coefficients `P(n)` for every count vector `n <= max_counts` on `modes`,
/// obtained from a single series expansion.
#[derive(Debug, Clone)]
pub struct PnrTable {
    modes: Vec<usize>,
    shape: std::sync::Arc<SeriesShape>,
    probs: Vec<f64>,
}

impl PnrTable {
    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn max_counts(&self) -> &[usize] {
        self.shape.orders()
    }

    /// `P(counts)`; `None` outside the computed box.
    pub fn get(&self, counts: &[usize]) -> Option<f64> {
        self.shape.flat(counts).map(|f| self.probs[f])
    }

    /// All `(counts, probability)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        (0..self.probs.len()).map(|f| (self.shape.multi_index(f), self.probs[f]))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// PNR probabilities for every count vector in the box `max_counts`.
///
/// The box may exceed the per-query cutoff only through `detector.pnr_cutoff`
/// applied to `sum(max_counts)`.
pub fn pnr_table(
    state: &CovarianceState,
    modes: &[usize],
    max_counts: &[usize],
    detector: &Detector,
) -> Result<PnrTable> {
    FactoredState::new(state, modes, detector.rank_tol)?.pnr_table(modes, max_counts, detector)
}

/// Probability of detecting exactly `counts[i]` photons in `modes[i]`.
pub fn p_pnr(
    state: &CovarianceState,
    modes: &[usize],
    counts: &[usize],
    detector: &Detector,
) -> Result<f64> {
    let table = pnr_table(state, modes, counts, detector)?;
    Ok(table.get(counts).expect("corner of the box"))
}

/// `P(0), ..., P(n_max)` for one spatial mode.
pub fn pnr_distribution(
    state: &CovarianceState,
    spatial_mode: usize,
    n_max: usize,
    detector: &Detector,
) -> Result<Vec<f64>> {
    let table = pnr_table(state, &[spatial_mode], &[n_max], detector)?;
    Ok((0..=n_max).map(|n| table.get(&[n]).unwrap()).collect())
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Probability of `clicks[i]` clicks when each spatial mode is split evenly
/// over `m` threshold detectors. Tends to `p_pnr` as `m` grows.
pub fn p_fanout(state: &CovarianceState, modes: &[usize], clicks: &[usize], m: usize) -> Result<f64> {
    FactoredState::new(state, modes, Detector::default().rank_tol)?.p_fanout(modes, clicks, m)
}

/// Probability of a detection pattern.
pub fn probability(
    state: &CovarianceState,
    pattern: &DetectionPattern,
    detector: &Detector,
) -> Result<f64> {
    match pattern.counts() {
        Some(counts) => p_pnr(state, pattern.modes(), &counts, detector),
        None => {
            let (on, off) = pattern.threshold_sets();
            p_threshold(state, &on, &off, detector)
        }
    }
}

fn check_counts(modes: &[usize], counts: &[usize]) -> Result<()> {
    if modes.len() != counts.len() {
        return Err(Error::DimensionMismatch {
            expected: modes.len(),
            found: counts.len(),
        });
    }
    Ok(())
}

impl FactoredState {
    /// Probability that every listed spatial mode is in vacuum.
    pub fn p_vacuum(&self, spatial_modes: &[usize]) -> Result<f64> {
        let local = self.local(spatial_modes)?;
        let w: Vec<(usize, f64)> = local.iter().map(|&i| (i, 1.0)).collect();
        clamp_probability(inv_sqrt_real_det(&self.pencil(&w))?, "vacuum")
    }

    /// Threshold probability, by inclusion-exclusion over subsets of `on`.
    pub fn p_threshold(&self, on: &[usize], off: &[usize], detector: &Detector) -> Result<f64> {
        check_disjoint(on, off)?;
        if on.len() > detector.max_on_modes {
            return Err(Error::LimitExceeded {
                what: "threshold on-modes",
                requested: on.len(),
                limit: detector.max_on_modes,
            });
        }
        let on_local = self.local(on)?;
        let off_local = self.local(off)?;
        let n_on = on.len();
        let terms: Vec<Result<f64>> = (0u64..1u64 << n_on)
            .into_par_iter()
            .map(|mask| {
                let w: Vec<(usize, f64)> = (0..n_on)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| (on_local[i], 1.0))
                    .chain(off_local.iter().map(|&i| (i, 1.0)))
                    .collect();
                let value = if w.is_empty() {
                    1.0
                } else {
                    inv_sqrt_real_det(&self.pencil(&w))?
                };
                Ok(if mask.count_ones() % 2 == 0 { value } else { -value })
            })
            .collect();
        let mut total = 0.0;
        for t in terms {
            total += t?;
        }
        clamp_probability(total, "threshold")
    }

    /// PNR probabilities for every count vector in the box `max_counts`.
    ///
    /// Every factored mode not listed in `modes` is traced out.
    pub fn pnr_table(&self, modes: &[usize], max_counts: &[usize], detector: &Detector) -> Result<PnrTable> {
        check_counts(modes, max_counts)?;
        let total: usize = max_counts.iter().sum();
        if total > detector.pnr_cutoff {
            return Err(Error::LimitExceeded {
                what: "total photon number",
                requested: total,
                limit: detector.pnr_cutoff,
            });
        }
        let local = self.local(modes)?;
        {
            let mut sorted = local.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != local.len() {
                return Err(Error::InvalidModes("repeated spatial mode".into()));
            }
        }
        let variables: Vec<usize> = (0..modes.len()).filter(|&i| max_counts[i] > 0).collect();
        let orders: Vec<usize> = variables.iter().map(|&i| max_counts[i]).collect();
        let a0 = self.pencil(&local.iter().map(|&i| (i, 1.0)).collect::<Vec<_>>());
        let b: Vec<CMatrix> = variables.iter().map(|&v| self.gram(local[v]).clone()).collect();
        let f = series_inv_sqrt_det(&a0, &b, &orders)?;

        let shape = SeriesShape::new(max_counts);
        let mut probs = vec![0.0; shape.len()];
        for (flat, p) in probs.iter_mut().enumerate() {
            let counts = shape.multi_index(flat);
            let sub: Vec<usize> = variables.iter().map(|&i| counts[i]).collect();
            let coeff = f.coeff(&sub);
            let sign = if counts.iter().sum::<usize>() % 2 == 0 { 1.0 } else { -1.0 };
            if coeff.im.abs() > 1e-8 {
                warn!("PNR coefficient {counts:?} has imaginary part {:e}", coeff.im);
            }
            *p = clamp_probability(sign * coeff.re, "PNR")?;
        }
        Ok(PnrTable {
            modes: modes.to_vec(),
            shape,
            probs,
        })
    }

    /// Fan-out click probability, see [`p_fanout`].
    pub fn p_fanout(&self, modes: &[usize], clicks: &[usize], m: usize) -> Result<f64> {
        check_counts(modes, clicks)?;
        if m == 0 || clicks.iter().any(|&k| k > m) {
            return Err(Error::param("fan-out", "need m >= 1 and at most m clicks per mode"));
        }
        let local = self.local(modes)?;
        let mut total = 0.0;
        let mut ls = vec![0usize; modes.len()];
        loop {
            let mut weight = 1.0;
            let mut w = Vec::with_capacity(modes.len());
            for i in 0..modes.len() {
                let (k, l) = (clicks[i], ls[i]);
                weight *= binomial(m, k) * binomial(k, l) * if l % 2 == 0 { 1.0 } else { -1.0 };
                w.push((local[i], (m - k + l) as f64 / m as f64));
            }
            total += weight * inv_sqrt_real_det(&self.pencil(&w))?;

            let mut i = 0;
            loop {
                if i == ls.len() {
                    return clamp_probability(total, "fan-out");
                }
                if ls[i] < clicks[i] {
                    ls[i] += 1;
                    break;
                }
                ls[i] = 0;
                i += 1;
            }
        }
    }
}
