use crate::error::{Error, Result};
use crate::layout::ModeLayout;
use crate::linalg::{
    block_diag, determinant, hermitize, hermiticity_residual, local_congruence, max_abs,
    submatrix, CMatrix, C64, ZERO,
};
use crate::transform::{Transform, TransformKind, SYMPLECTIC_TOL};

/// Relative Hermiticity tolerance accepted for incoming covariance matrices.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Zero-displacement Gaussian state described by its `2N x 2N` covariance
/// matrix in the doubled basis, normalized so that the vacuum is the identity.
///
/// Entries are symmetrized second moments, `sigma_jk = <{A_j, A_k^dag}>`, so the
/// annihilation block is `A = 1 + 2 <a_k^dag a_j>` and the off-diagonal block
/// is `C = 2 <a_j a_k>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    layout: ModeLayout,
    sigma: CMatrix,
}

impl CovarianceState {
    pub fn vacuum(layout: ModeLayout) -> Self {
        Self {
            layout,
            sigma: CMatrix::identity(layout.dim(), layout.dim()),
        }
    }

    pub fn from_matrix(layout: ModeLayout, sigma: CMatrix) -> Result<Self> {
        let dim = layout.dim();
        if sigma.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: sigma.nrows(),
            });
        }
        let scale = max_abs(&sigma).max(1.0);
        let res = hermiticity_residual(&sigma);
        if res > HERMITIAN_TOL * scale {
            return Err(Error::Unphysical(format!(
                "covariance matrix not Hermitian (residual {res:e})"
            )));
        }
        Ok(Self {
            layout,
            sigma: hermitize(&sigma),
        })
    }

    pub fn layout(&self) -> ModeLayout {
        self.layout
    }

    pub fn sigma(&self) -> &CMatrix {
        &self.sigma
    }

    /// `sigma - 1`.
    pub fn sigma_tilde(&self) -> CMatrix {
        let dim = self.layout.dim();
        &self.sigma - CMatrix::identity(dim, dim)
    }

    /// Annihilation-annihilation block `A`.
    pub fn block_a(&self) -> CMatrix {
        let n = self.layout.n_modes();
        self.sigma.view((0, 0), (n, n)).into_owned()
    }

    /// Annihilation-creation block `C`.
    pub fn block_c(&self) -> CMatrix {
        let n = self.layout.n_modes();
        self.sigma.view((0, n), (n, n)).into_owned()
    }

    pub fn determinant(&self) -> C64 {
        determinant(&self.sigma)
    }

    /// Mean photon number summed over the spectral bins of one spatial mode.
    pub fn mean_photon_number(&self, spatial: usize) -> f64 {
        self.layout
            .spatial_range(spatial)
            .map(|i| (self.sigma[(i, i)].re - 1.0) / 2.0)
            .sum()
    }

    /// `max |sigma - sigma^dag|`.
    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.sigma)
    }

    /// Applies any transform, dispatching on its kind.
    pub fn apply(&self, t: &Transform) -> Result<Self> {
        match t.kind() {
            TransformKind::Symplectic(_) => self.apply_symplectic(t),
            TransformKind::Passive(_) => self.apply_passive_channel(t),
        }
    }

    /// `sigma -> M sigma M^dag`.
    pub fn apply_symplectic(&self, t: &Transform) -> Result<Self> {
        if t.layout() != self.layout {
            return Err(Error::LayoutMismatch);
        }
        let m = match t.kind() {
            TransformKind::Symplectic(m) => m,
            TransformKind::Passive(_) => {
                return Err(Error::param("transform", "expected a symplectic transform"))
            }
        };
        let residual = t.symplectic_residual().unwrap_or(0.0);
        if !(residual < SYMPLECTIC_TOL) {
            return Err(Error::NotSymplectic { residual });
        }
        let out = local_congruence(m, &self.sigma);
        Ok(Self {
            layout: self.layout,
            sigma: hermitize(&out),
        })
    }

    /// `sigma -> UU (sigma - 1) UU^dag + 1` with `UU = diag(U, U^*)`.
    pub fn apply_passive_channel(&self, t: &Transform) -> Result<Self> {
        if t.layout() != self.layout {
            return Err(Error::LayoutMismatch);
        }
        let u = match t.kind() {
            TransformKind::Passive(u) => u,
            TransformKind::Symplectic(_) => {
                return Err(Error::param("transform", "expected a passive channel"))
            }
        };
        let n = self.layout.n_modes();
        let mut st = self.sigma_tilde();
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || u[(i, j)] == ZERO));
        if diagonal {
            let g: Vec<C64> = (0..n).map(|i| u[(i, i)]).chain((0..n).map(|i| u[(i, i)].conj())).collect();
            for j in 0..2 * n {
                for i in 0..2 * n {
                    st[(i, j)] *= g[i] * g[j].conj();
                }
            }
        } else {
            st = local_congruence(&block_diag(u, &u.conjugate()), &st);
        }
        for i in 0..2 * n {
            st[(i, i)] += C64::new(1.0, 0.0);
        }
        Ok(Self {
            layout: self.layout,
            sigma: hermitize(&st),
        })
    }

    /// Places `sub` into this state on the mode indices `map` (annihilation
    /// index of `sub` -> annihilation index here); the result is the product
    /// state. The target modes must be in vacuum and uncorrelated.
    pub fn insert_subsystem(&self, sub: &CovarianceState, map: &[usize]) -> Result<Self> {
        let k = sub.layout.n_modes();
        let n = self.layout.n_modes();
        if map.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: map.len(),
            });
        }
        let mut seen = vec![false; n];
        for &m in map {
            if m >= n || std::mem::replace(&mut seen[m], true) {
                return Err(Error::InvalidModes(format!("bad or repeated target mode {m}")));
            }
        }
        let idx: Vec<usize> = map.iter().copied().chain(map.iter().map(|&m| m + n)).collect();
        let st = self.sigma_tilde();
        for &i in &idx {
            if (0..2 * n).any(|j| st[(i, j)] != ZERO) {
                return Err(Error::param("map", "target modes are not in vacuum"));
            }
        }
        let mut sigma = self.sigma.clone();
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                sigma[(i, j)] = sub.sigma[(a, b)];
            }
        }
        Ok(Self {
            layout: self.layout,
            sigma,
        })
    }

    /// Reduced state on a list of spatial modes, keeping their order.
    pub fn reduce(&self, spatial_modes: &[usize]) -> Result<Self> {
        self.layout.check_spatial_modes(spatial_modes)?;
        let idx = self.layout.doubled_indices(spatial_modes);
        let layout = ModeLayout::new(spatial_modes.len(), self.layout.n_spectral())?;
        Ok(Self {
            layout,
            sigma: submatrix(&self.sigma, &idx),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_diff};

    fn layout(ns: usize, nf: usize) -> ModeLayout {
        ModeLayout::new(ns, nf).unwrap()
    }

    #[test]
    fn vacuum_is_identity() {
        let v = CovarianceState::vacuum(layout(1, 1));
        assert_eq!(v.sigma(), &CMatrix::identity(2, 2));
        assert_eq!(v.determinant(), c(1.0, 0.0));
        assert_eq!(v.mean_photon_number(0), 0.0);
    }

    #[test]
    fn identity_transform_leaves_state() {
        let l = layout(2, 2);
        let v = CovarianceState::vacuum(l);
        let out = v.apply(&Transform::identity(l)).unwrap();
        assert_eq!(out, v);
    }

    #[test]
    fn passive_identity_and_full_loss() {
        let l = layout(1, 2);
        // a thermal-like diagonal state
        let mut s = CMatrix::identity(4, 4);
        s[(0, 0)] = c(3.0, 0.0);
        s[(2, 2)] = c(3.0, 0.0);
        let st = CovarianceState::from_matrix(l, s).unwrap();
        let id = Transform::passive(l, CMatrix::identity(2, 2)).unwrap();
        assert!(max_abs_diff(st.apply(&id).unwrap().sigma(), st.sigma()) < 1e-15);
        let dead = Transform::passive(l, CMatrix::zeros(2, 2)).unwrap();
        assert_eq!(st.apply(&dead).unwrap(), CovarianceState::vacuum(l));
    }

    #[test]
    fn thermal_mean_scales_with_transmission() {
        let l = layout(1, 1);
        let nbar = 0.8;
        let s = CMatrix::identity(2, 2).scale(1.0 + 2.0 * nbar);
        let st = CovarianceState::from_matrix(l, s).unwrap();
        let eps = 0.35;
        let u = CMatrix::identity(1, 1).scale((1.0_f64 - eps).sqrt());
        let out = st.apply(&Transform::passive(l, u).unwrap()).unwrap();
        assert!((out.mean_photon_number(0) - (1.0 - eps) * nbar).abs() < 1e-14);
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let l = layout(1, 1);
        let v = CovarianceState::vacuum(l);
        let p = Transform::passive(l, CMatrix::identity(1, 1)).unwrap();
        assert!(v.apply_symplectic(&p).is_err());
        assert!(v.apply_passive_channel(&Transform::identity(l)).is_err());
        assert!(v.apply(&Transform::identity(layout(2, 1))).is_err());
    }

    #[test]
    fn reduce_picks_blocks() {
        let l = layout(3, 1);
        let mut s = CMatrix::identity(6, 6);
        s[(2, 2)] = c(5.0, 0.0);
        s[(5, 5)] = c(5.0, 0.0);
        let st = CovarianceState::from_matrix(l, s).unwrap();
        let r = st.reduce(&[2]).unwrap();
        assert_eq!(r.sigma(), &CMatrix::identity(2, 2).scale(5.0));
        assert_eq!(st.reduce(&[0, 1, 2]).unwrap(), st);
        assert!(st.reduce(&[]).is_err());
        assert!(st.reduce(&[3]).is_err());
        let v = CovarianceState::vacuum(layout(2, 3));
        assert_eq!(v.reduce(&[1]).unwrap().sigma(), &CMatrix::identity(6, 6));
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut s = CMatrix::identity(2, 2);
        s[(0, 1)] = c(0.5, 0.0);
        assert!(CovarianceState::from_matrix(layout(1, 1), s).is_err());
    }
}
