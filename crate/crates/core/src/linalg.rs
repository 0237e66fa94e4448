//! Small dense complex linear-algebra helpers shared by the modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Largest absolute entrywise difference.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `(m + m^dag) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// `max |m - m^dag|`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `diag(a, b)`.
pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMatrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

/// Rows and columns of `m` picked by `idx`, in that order.
pub fn submatrix(m: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Matrix product; large operands go through faer's blocked kernel.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "matmul shape mismatch");
    if a.nrows() * a.ncols() * b.ncols() < 64 * 64 * 64 {
        return a * b;
    }
    let p = to_faer(a) * to_faer(b);
    from_faer(p.as_ref())
}

/// `m a m^dag` for an `m` that equals the identity outside a set of
/// indices; only the rows and columns in that set are touched.
pub fn local_congruence(m: &CMatrix, a: &CMatrix) -> CMatrix {
    let d = m.nrows();
    let one = c(1.0, 0.0);
    let support: Vec<usize> = (0..d)
        .filter(|&i| {
            (0..d).any(|j| {
                let e = if i == j { one } else { ZERO };
                m[(i, j)] != e || m[(j, i)] != e
            })
        })
        .collect();
    let k = support.len();
    if k == 0 {
        return a.clone();
    }
    let nnz: usize = support
        .iter()
        .map(|&i| support.iter().filter(|&&j| m[(i, j)] != ZERO).count())
        .sum();
    if nnz <= 4 * k {
        return sparse_congruence(m, a, &support);
    }
    if k == d {
        return matmul(&matmul(m, a), &m.adjoint());
    }
    let ms = submatrix(m, &support);
    let rows = CMatrix::from_fn(k, d, |i, j| a[(support[i], j)]);
    let rows = matmul(&ms, &rows);
    let mut out = a.clone();
    for (i, &r) in support.iter().enumerate() {
        for j in 0..d {
            out[(r, j)] = rows[(i, j)];
        }
    }
    let cols = CMatrix::from_fn(d, k, |i, j| out[(i, support[j])]);
    let cols = matmul(&cols, &ms.adjoint());
    for (j, &col) in support.iter().enumerate() {
        for i in 0..d {
            out[(i, col)] = cols[(i, j)];
        }
    }
    out
}

/// `local_congruence` for an `m` with a few nonzeros per row.
fn sparse_congruence(m: &CMatrix, a: &CMatrix, support: &[usize]) -> CMatrix {
    let d = a.nrows();
    let entries: Vec<Vec<(usize, C64)>> = support
        .iter()
        .map(|&i| {
            support
                .iter()
                .filter(|&&j| m[(i, j)] != ZERO)
                .map(|&j| (j, m[(i, j)]))
                .collect()
        })
        .collect();
    // Rows first: t = m a.
    let mut t = a.clone();
    for (&i, row) in support.iter().zip(&entries) {
        for col in 0..d {
            t[(i, col)] = row.iter().map(|&(j, v)| v * a[(j, col)]).sum();
        }
    }
    // Then columns: out = t m^dag.
    let mut out = t.clone();
    for (&i, row) in support.iter().zip(&entries) {
        for r in 0..d {
            out[(r, i)] = row.iter().map(|&(j, v)| t[(r, j)] * v.conj()).sum();
        }
    }
    out
}

/// Determinant through partial-pivot LU.
pub fn determinant(m: &CMatrix) -> C64 {
    m.clone().lu().determinant()
}

/// Residual of the symplectic condition, `max |M K M^dag - K|`.
pub fn symplectic_residual(m: &CMatrix) -> f64 {
    let n2 = m.nrows();
    let half = n2 / 2;
    // M K is M with its creation columns negated.
    let mut mk = m.clone();
    for j in half..n2 {
        for i in 0..n2 {
            mk[(i, j)] = -mk[(i, j)];
        }
    }
    let prod = mk * m.adjoint();
    let mut worst = 0.0_f64;
    for i in 0..n2 {
        for j in 0..n2 {
            let k = if i == j {
                if i < half {
                    1.0
                } else {
                    -1.0
                }
            } else {
                0.0
            };
            worst = worst.max((prod[(i, j)] - c(k, 0.0)).norm());
        }
    }
    worst
}

fn to_faer(m: &CMatrix) -> faer::Mat<C64> {
    // nalgebra and faer both store column-major.
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, C64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Full singular value decomposition `m = u diag(s) v^dag`, `s` descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

/// Square-matrix SVD.
///
/// Uses faer: the nalgebra 0.35 routine returns wrong factors for some
/// numerically rank-one inputs once singular vectors are requested.
pub fn svd(m: &CMatrix) -> Svd {
    assert!(m.is_square(), "svd expects a square matrix");
    let n = m.nrows();
    if n == 0 {
        return Svd {
            u: CMatrix::zeros(0, 0),
            s: Vec::new(),
            v: CMatrix::zeros(0, 0),
        };
    }
    let d = to_faer(m).svd().expect("SVD did not converge");
    let s_raw: Vec<f64> = (0..n).map(|k| d.S()[k].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s_raw[b].total_cmp(&s_raw[a]));
    let u = from_faer(d.U());
    let v = from_faer(d.V());
    Svd {
        u: CMatrix::from_fn(n, n, |i, l| u[(i, order[l])]),
        s: order.iter().map(|&k| s_raw[k]).collect(),
        v: CMatrix::from_fn(n, n, |i, l| v[(i, order[l])]),
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let h = hermitize(m);
    match to_faer(&h).self_adjoint_eigen(faer::Side::Lower) {
        Ok(e) => {
            let vals = (0..n).map(|k| e.S()[k].re).collect();
            (vals, from_faer(e.U()))
        }
        Err(_) => {
            // faer occasionally stalls on matrices with exact zero rows.
            log::debug!("faer eigensolver failed on {n}x{n}, using nalgebra");
            let e = h.symmetric_eigen();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
            let vals = order.iter().map(|&k| e.eigenvalues[k]).collect();
            let vecs = CMatrix::from_fn(n, n, |i, k| e.eigenvectors[(i, order[k])]);
            (vals, vecs)
        }
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    to_faer(m)
        .singular_values()
        .expect("SVD did not converge")
        .into_iter()
        .fold(0.0_f64, f64::max)
}

/// Matrix exponential (Pade approximant with scaling and squaring).
pub fn expm(m: &CMatrix) -> CMatrix {
    m.clone().exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_diagonal() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 1.0), c(2.0, 0.0)]));
        let e = expm(&m);
        assert!((e[(0, 0)] - c(1.0_f64.cos(), 1.0_f64.sin())).norm() < 1e-14);
        assert!((e[(1, 1)] - c(2.0_f64.exp(), 0.0)).norm() < 1e-12);
        assert!(e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn block_diag_and_submatrix() {
        let a = CMatrix::from_element(1, 1, c(2.0, 0.0));
        let b = CMatrix::from_element(2, 2, c(0.0, 1.0));
        let d = block_diag(&a, &b);
        assert_eq!(d.shape(), (3, 3));
        assert_eq!(d[(0, 0)], c(2.0, 0.0));
        assert_eq!(d[(0, 1)], ZERO);
        assert_eq!(d[(2, 1)], c(0.0, 1.0));
        let s = submatrix(&d, &[2, 0]);
        assert_eq!(s[(0, 0)], c(0.0, 1.0));
        assert_eq!(s[(1, 1)], c(2.0, 0.0));
        assert_eq!(s[(0, 1)], ZERO);
    }

    #[test]
    fn svd_of_rank_one_product() {
        let n = 41;
        let g = |k: usize| (-0.5 * ((k as f64 - 20.0) / 5.0).powi(2)).exp();
        let m = CMatrix::from_fn(n, n, |i, j| c(g(i) * g(j), 0.0));
        let m = m.scale(0.5 / m.norm());
        let d = svd(&m);
        assert!((d.s[0] - 0.5).abs() < 1e-14);
        assert!(d.s[1] < 1e-14);
        let mut us = d.u.clone();
        for l in 0..n {
            us.column_mut(l).scale_mut(d.s[l]);
        }
        assert!(max_abs_diff(&(us * d.v.adjoint()), &m) < 1e-14);
    }

    #[test]
    fn eigen_of_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let (vals, vecs) = hermitian_eigen(&m);
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals.iter().map(|&x| c(x, 0.0)).collect()));
        assert!(max_abs_diff(&(&vecs * d * vecs.adjoint()), &m) < 1e-14);
    }

    #[test]
    fn identity_is_symplectic() {
        assert_eq!(symplectic_residual(&CMatrix::identity(6, 6)), 0.0);
    }
}
