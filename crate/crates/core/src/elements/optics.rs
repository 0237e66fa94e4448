//! Optical elements as transforms on a full mode layout.

use crate::elements::jsa::{schmidt_decompose, JsaMatrix, SchmidtData};
use crate::error::{Error, Result};
use crate::layout::{FrequencyGrid, ModeLayout};
use crate::linalg::{c, kron, CMatrix, C64, ZERO};
use crate::transform::Transform;

fn check_grid(grid: &FrequencyGrid, layout: ModeLayout) -> Result<()> {
    if grid.n_bins() != layout.n_spectral() {
        return Err(Error::DimensionMismatch {
            expected: layout.n_spectral(),
            found: grid.n_bins(),
        });
    }
    Ok(())
}

/// Multimode two-mode squeezer generated by the JSA `j`.
///
/// Built in the Schmidt basis as `M = UU M_D UU^dag` with `UU = diag(U, V^*, U^*, V)`.
pub fn squeezer(
    j: &JsaMatrix,
    signal_spatial: usize,
    idler_spatial: usize,
    layout: ModeLayout,
) -> Result<Transform> {
    squeezer_from_schmidt(&schmidt_decompose(j), signal_spatial, idler_spatial, layout)
}

pub fn squeezer_from_schmidt(
    s: &SchmidtData,
    signal_spatial: usize,
    idler_spatial: usize,
    layout: ModeLayout,
) -> Result<Transform> {
    if signal_spatial == idler_spatial {
        return Err(Error::InvalidModes(format!(
            "signal and idler share spatial mode {signal_spatial}"
        )));
    }
    let nf = layout.n_spectral();
    if s.singular_values.len() != nf {
        return Err(Error::DimensionMismatch {
            expected: nf,
            found: s.singular_values.len(),
        });
    }
    let m = squeezer_block(s);
    let local = ModeLayout::new(2, nf)?;
    Transform::symplectic(local, m)?.embed(&[signal_spatial, idler_spatial], layout)
}

/// The `4 N_f` square matrix on `(a_s, a_i, a_s^dag, a_i^dag)`.
fn squeezer_block(s: &SchmidtData) -> CMatrix {
    let nf = s.singular_values.len();
    let ch = |x: &CMatrix| {
        let mut out = x.clone();
        for l in 0..nf {
            out.column_mut(l).scale_mut(s.singular_values[l].cosh());
        }
        out
    };
    let sh = |x: &CMatrix| {
        let mut out = x.clone();
        for l in 0..nf {
            out.column_mut(l).scale_mut(s.singular_values[l].sinh());
        }
        out
    };
    let u = &s.u;
    let v = &s.v;
    let uc = u.conjugate();
    let vc = v.conjugate();
    let mi = C64::new(0.0, -1.0);
    let pi = C64::new(0.0, 1.0);

    let blocks: [(usize, usize, CMatrix); 8] = [
        (0, 0, ch(u) * u.adjoint()),
        (0, 3, sh(u) * v.adjoint() * mi),
        (1, 1, ch(&vc) * v.transpose()),
        (1, 2, sh(&vc) * u.transpose() * mi),
        (2, 1, sh(&uc) * v.transpose() * pi),
        (2, 2, ch(&uc) * u.transpose()),
        (3, 0, sh(v) * u.adjoint() * pi),
        (3, 3, ch(v) * v.adjoint()),
    ];
    let mut m = CMatrix::from_element(4 * nf, 4 * nf, ZERO);
    for (r, col, b) in blocks {
        m.view_mut((r * nf, col * nf), (nf, nf)).copy_from(&b);
    }
    m
}

/// Squeezer built from the complex conjugate of the JSA. Symplectic, but a
/// different physical source; kept only to check that the verification
/// harness notices the swap.
#[doc(hidden)]
pub fn squeezer_conjugated_convention(
    j: &JsaMatrix,
    signal_spatial: usize,
    idler_spatial: usize,
    layout: ModeLayout,
) -> Result<Transform> {
    let conj = JsaMatrix::from_matrix(j.matrix().conjugate(), *j.grid_signal(), *j.grid_idler())?;
    squeezer(&conj, signal_spatial, idler_spatial, layout)
}

/// `2 x 2` real rotation, `[[cos, -sin], [sin, cos]]`.
pub fn rotation(theta: f64) -> CMatrix {
    let (s, co) = theta.sin_cos();
    CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
}

/// Frequency-independent beam splitter, `alpha = rotation(theta) (x) 1_{N_f}`.
pub fn beam_splitter(theta: f64, mode_pair: (usize, usize), layout: ModeLayout) -> Result<Transform> {
    let nf = layout.n_spectral();
    let alpha = kron(&rotation(theta), &CMatrix::identity(nf, nf));
    let local = ModeLayout::new(2, nf)?;
    Transform::unitary(local, &alpha)?.embed(&[mode_pair.0, mode_pair.1], layout)
}

/// `a -> exp(i phi) a` on every bin of one spatial mode.
pub fn phase_shifter(phi: f64, spatial_mode: usize, layout: ModeLayout) -> Result<Transform> {
    spectral_phase(spatial_mode, layout, |_| phi)
}

/// Time delay `tau` (s): bin `k` picks up `exp(i offset_k tau)`, the offset
/// measured from the grid center.
pub fn delay(
    tau: f64,
    spatial_mode: usize,
    grid: &FrequencyGrid,
    layout: ModeLayout,
) -> Result<Transform> {
    if !tau.is_finite() {
        return Err(Error::param("tau", "delay must be finite"));
    }
    check_grid(grid, layout)?;
    spectral_phase(spatial_mode, layout, |k| grid.offset(k) * tau)
}

fn spectral_phase(
    spatial_mode: usize,
    layout: ModeLayout,
    phase: impl Fn(usize) -> f64,
) -> Result<Transform> {
    let nf = layout.n_spectral();
    let alpha = CMatrix::from_fn(nf, nf, |i, k| {
        if i == k {
            C64::from_polar(1.0, phase(i))
        } else {
            ZERO
        }
    });
    let local = ModeLayout::new(1, nf)?;
    Transform::unitary(local, &alpha)?.embed(&[spatial_mode], layout)
}

/// Uniform loss `epsilon` on the listed spatial modes.
pub fn loss(epsilon: f64, spatial_modes: &[usize], layout: ModeLayout) -> Result<Transform> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::param("epsilon", format!("loss must lie in [0, 1], got {epsilon}")));
    }
    let k = spatial_modes.len();
    let nf = layout.n_spectral();
    let local = ModeLayout::new(k.max(1), nf)?;
    let n = local.n_modes();
    let u = CMatrix::identity(n, n) * c((1.0 - epsilon).sqrt(), 0.0);
    Transform::passive(local, u)?.embed(spatial_modes, layout)
}

/// Ideal bandpass filter passing bins whose frequency lies in
/// `[center - half_width, center + half_width]`.
pub fn bandpass_filter(
    center: f64,
    half_width: f64,
    spatial_modes: &[usize],
    grid: &FrequencyGrid,
    layout: ModeLayout,
) -> Result<Transform> {
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(Error::param("half_width", format!("must be > 0, got {half_width}")));
    }
    check_grid(grid, layout)?;
    let pass: Vec<bool> = grid
        .frequencies()
        .map(|nu| nu >= center - half_width && nu <= center + half_width)
        .collect();
    if !pass.iter().any(|&p| p) {
        return Err(Error::param(
            "filter",
            format!(
                "passband {center:e} +- {half_width:e} rad/s contains no bin of the grid [{:e}, {:e}]",
                grid.bin_frequency(0),
                grid.bin_frequency(grid.n_bins() - 1)
            ),
        ));
    }
    let k = spatial_modes.len();
    let nf = layout.n_spectral();
    let local = ModeLayout::new(k.max(1), nf)?;
    let n = local.n_modes();
    let u = CMatrix::from_fn(n, n, |i, j| {
        if i == j && pass[i % nf] {
            c(1.0, 0.0)
        } else {
            ZERO
        }
    });
    Transform::passive(local, u)?.embed(spatial_modes, layout)
}
