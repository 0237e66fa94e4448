//! Low-rank factorization `sigma_tilde ~ Q diag(lambda) Q^dag` shared by all
//! detection queries on one state.
//!
//! With `G_i = (Lambda/2) Q_i^dag Q_i` (rows of `Q` belonging to spatial mode
//! `i`), Sylvester's identity turns every vacuum projection into an `r x r`
//! determinant: `det(1 + sum_i w_i P_i sigma_tilde / 2) = det(1_r + sum_i w_i G_i)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitize, matmul, submatrix, CMatrix, C64};
use crate::state::CovarianceState;

/// Above this support size the eigenproblem goes through a randomized
/// range finder instead of a dense solve.
const DENSE_LIMIT: usize = 384;

const RANGE_SEED: u64 = 0x006d_6d67_6175_7373;

#[derive(Debug, Clone)]
pub struct FactoredState {
    modes: Vec<usize>,
    grams: Vec<CMatrix>,
    rank: usize,
}

/// Indices whose rows can be dropped from a Hermitian `a` while moving its
/// spectrum by at most `tol` (Weyl's bound on the Frobenius norm of the cut).
fn significant_rows(a: &CMatrix, tol: f64) -> Vec<usize> {
    let n = a.nrows();
    let mut norms: Vec<(f64, usize)> = (0..n)
        .map(|i| (a.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>(), i))
        .collect();
    norms.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let budget = tol * tol / 2.0;
    let mut dropped = 0.0;
    let mut keep: Vec<usize> = Vec::with_capacity(n);
    for &(s, i) in &norms {
        if dropped + s <= budget {
            dropped += s;
        } else {
            keep.push(i);
        }
    }
    keep.sort_unstable();
    keep
}

fn thin_q(y: &CMatrix) -> CMatrix {
    let f = faer::Mat::<C64>::from_fn(y.nrows(), y.ncols(), |i, j| y[(i, j)]);
    let q = f.qr().compute_thin_Q();
    CMatrix::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)])
}

fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenpairs of Hermitian `a` with `|lambda| > tol`.
fn dominant_eigenpairs(a: &CMatrix, tol: f64) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    let pick = |vals: Vec<f64>, vecs: CMatrix| {
        let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k].abs() > tol).collect();
        let q = CMatrix::from_fn(vecs.nrows(), keep.len(), |i, k| vecs[(i, keep[k])]);
        (keep.iter().map(|&k| vals[k]).collect(), q)
    };
    if n <= DENSE_LIMIT {
        let (vals, vecs) = hermitian_eigen(a);
        return pick(vals, vecs);
    }
    let scale = frobenius(a).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(RANGE_SEED);
    let mut p = 64;
    while 2 * p < n {
        let omega = CMatrix::from_fn(n, p, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let q = thin_q(&matmul(a, &thin_q(&matmul(a, &omega))));
        let aq = matmul(a, &q);
        let b = hermitize(&(q.adjoint() * &aq));
        let residual = a - matmul(&matmul(&q, &b), &q.adjoint());
        if frobenius(&residual) <= tol * scale {
            let (vals, w) = hermitian_eigen(&b);
            return pick(vals, matmul(&q, &w));
        }
        p *= 2;
    }
    let (vals, vecs) = hermitian_eigen(a);
    pick(vals, vecs)
}

impl FactoredState {
    /// Factors the reduced state on `spatial_modes`; eigenvalues of
    /// `sigma - 1` at or below `rank_tol` are dropped.
    pub fn new(state: &CovarianceState, spatial_modes: &[usize], rank_tol: f64) -> Result<Self> {
        let reduced = state.reduce(spatial_modes)?;
        let layout = reduced.layout();
        let d = layout.dim();
        let n = layout.n_modes();
        let nf = layout.n_spectral();
        let tilde = reduced.sigma_tilde();
        let support = significant_rows(&tilde, rank_tol);
        let (vals, vecs) = dominant_eigenpairs(&submatrix(&tilde, &support), rank_tol);
        let r = vals.len();
        let mut q = CMatrix::zeros(d, r);
        for k in 0..r {
            for (a, &i) in support.iter().enumerate() {
                q[(i, k)] = vecs[(a, k)];
            }
        }
        let grams = (0..spatial_modes.len())
            .map(|mode| {
                let rows: Vec<usize> = (0..nf)
                    .map(|w| mode * nf + w)
                    .chain((0..nf).map(|w| n + mode * nf + w))
                    .collect();
                let qp = CMatrix::from_fn(rows.len(), r, |i, k| q[(rows[i], k)]);
                let mut g = qp.adjoint() * qp;
                for (i, &v) in vals.iter().enumerate() {
                    g.row_mut(i).scale_mut(0.5 * v);
                }
                g
            })
            .collect();
        Ok(Self {
            modes: spatial_modes.to_vec(),
            grams,
            rank: r,
        })
    }

    /// Spatial modes covered, in factorization order.
    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    /// Number of retained eigenvalues of `sigma - 1`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Position of each global spatial mode within the factorization.
    pub(crate) fn local(&self, spatial_modes: &[usize]) -> Result<Vec<usize>> {
        spatial_modes
            .iter()
            .map(|m| {
                self.modes.iter().position(|x| x == m).ok_or_else(|| {
                    Error::InvalidModes(format!("spatial mode {m} is not part of the factored state"))
                })
            })
            .collect()
    }

    /// `G_i` for a local mode index.
    pub(crate) fn gram(&self, local: usize) -> &CMatrix {
        &self.grams[local]
    }

    /// `1_r + sum_i w_i G_i` over local mode indices.
    pub(crate) fn pencil(&self, weights: &[(usize, f64)]) -> CMatrix {
        let mut m = CMatrix::identity(self.rank, self.rank);
        for &(i, w) in weights {
            if w != 0.0 {
                m += self.grams[i].scale(w);
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn row_budget_keeps_large_rows() {
        let mut a = CMatrix::zeros(3, 3);
        a[(0, 0)] = c(1.0, 0.0);
        a[(2, 2)] = c(1e-20, 0.0);
        assert_eq!(significant_rows(&a, 1e-13), vec![0]);
        assert_eq!(significant_rows(&a, 0.0), vec![0, 2]);
    }

    #[test]
    fn randomized_path_matches_dense() {
        // Rank-3 Hermitian of size 500.
        let n = 500;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = CMatrix::from_fn(n, 3, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let a = hermitize(&(&x * CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0, 0.0), c(-0.5, 0.0), c(0.1, 0.0)])) * x.adjoint()));
        let (vals, q) = dominant_eigenpairs(&a, 1e-10);
        assert_eq!(vals.len(), 3);
        let back = &q * CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(3, vals.iter().map(|&v| c(v, 0.0)))) * q.adjoint();
        assert!(frobenius(&(back - &a)) < 1e-9);
    }
}
