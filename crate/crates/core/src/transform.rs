//! Linear mode transformations: symplectic (lossless) maps and passive
//! contractive channels.

use crate::error::{Error, Result};
use crate::layout::ModeLayout;
use crate::linalg::{block_diag, expm, spectral_norm, symplectic_residual, CMatrix, C64, ZERO};

/// Tolerance on `max |M K M^dag - K|` for symplectic transforms.
pub const SYMPLECTIC_TOL: f64 = 1e-12;

/// Tolerance on the largest singular value of a passive map exceeding one.
pub const CONTRACTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum TransformKind {
    /// `2N x 2N` matrix `M` acting as `sigma -> M sigma M^dag`.
    Symplectic(CMatrix),
    /// `N x N` contraction `U` acting on the annihilation block; the creation
    /// block sees `U^*`. Applied as `sigma -> UU (sigma - 1) UU^dag + 1`.
    Passive(CMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transform {
    layout: ModeLayout,
    kind: TransformKind,
    /// `max |M K M^dag - K|` measured when the map was built.
    residual: Option<f64>,
}

impl Transform {
    /// Wraps a symplectic matrix after checking `M K M^dag = K`.
    pub fn symplectic(layout: ModeLayout, m: CMatrix) -> Result<Self> {
        let dim = layout.dim();
        if m.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: m.nrows(),
            });
        }
        let residual = symplectic_residual(&m);
        if !(residual < SYMPLECTIC_TOL) {
            return Err(Error::NotSymplectic { residual });
        }
        Ok(Self {
            layout,
            kind: TransformKind::Symplectic(m),
            residual: Some(residual),
        })
    }

    /// Lossless passive unitary `a -> alpha a`, i.e. `M = diag(alpha, alpha^*)`.
    pub fn unitary(layout: ModeLayout, alpha: &CMatrix) -> Result<Self> {
        let n = layout.n_modes();
        if alpha.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: alpha.nrows(),
            });
        }
        Self::symplectic(layout, block_diag(alpha, &alpha.conjugate()))
    }

    /// Passive channel described by the contraction `u` on the annihilation block.
    pub fn passive(layout: ModeLayout, u: CMatrix) -> Result<Self> {
        let n = layout.n_modes();
        if u.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: u.nrows(),
            });
        }
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || u[(i, j)] == ZERO));
        let max_singular_value = if diagonal {
            (0..n).map(|i| u[(i, i)].norm()).fold(0.0, f64::max)
        } else {
            spectral_norm(&u)
        };
        if max_singular_value > 1.0 + CONTRACTION_TOL {
            return Err(Error::NotContractive { max_singular_value });
        }
        Ok(Self {
            layout,
            kind: TransformKind::Passive(u),
            residual: None,
        })
    }

    pub fn identity(layout: ModeLayout) -> Self {
        Self {
            layout,
            kind: TransformKind::Symplectic(CMatrix::identity(layout.dim(), layout.dim())),
            residual: Some(0.0),
        }
    }

    /// `M = exp(-2i K H)` for a Hermitian quadratic Hamiltonian `H = A^dag HH A`.
    ///
    /// Only used where no closed form exists; every element in this crate
    /// builds its matrix directly.
    pub fn from_hamiltonian(layout: ModeLayout, hamiltonian: &CMatrix) -> Result<Self> {
        let dim = layout.dim();
        if hamiltonian.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: hamiltonian.nrows(),
            });
        }
        let n = layout.n_modes();
        let mut gen = hamiltonian.scale(2.0) * C64::new(0.0, -1.0);
        for i in n..dim {
            for j in 0..dim {
                gen[(i, j)] = -gen[(i, j)];
            }
        }
        Self::symplectic(layout, expm(&gen))
    }

    pub fn layout(&self) -> ModeLayout {
        self.layout
    }

    pub fn kind(&self) -> &TransformKind {
        &self.kind
    }

    pub fn is_symplectic(&self) -> bool {
        matches!(self.kind, TransformKind::Symplectic(_))
    }

    pub fn matrix(&self) -> &CMatrix {
        match &self.kind {
            TransformKind::Symplectic(m) | TransformKind::Passive(m) => m,
        }
    }

    /// `max |M K M^dag - K|` as checked at construction; `None` for passive
    /// channels. Embedding copies blocks verbatim and keeps the value.
    pub fn symplectic_residual(&self) -> Option<f64> {
        self.residual
    }

    /// Recomputes the residual from the stored matrix.
    pub fn recompute_symplectic_residual(&self) -> Option<f64> {
        match &self.kind {
            TransformKind::Symplectic(m) => Some(symplectic_residual(m)),
            TransformKind::Passive(_) => None,
        }
    }

    /// `self` after `first`, i.e. `M_self * M_first`. Both must be symplectic.
    pub fn after(&self, first: &Transform) -> Result<Transform> {
        if self.layout != first.layout {
            return Err(Error::LayoutMismatch);
        }
        match (&self.kind, &first.kind) {
            (TransformKind::Symplectic(a), TransformKind::Symplectic(b)) => {
                Transform::symplectic(self.layout, a * b)
            }
            (TransformKind::Passive(a), TransformKind::Passive(b)) => Ok(Transform {
                layout: self.layout,
                kind: TransformKind::Passive(a * b),
                residual: None,
            }),
            _ => Err(Error::param(
                "transform",
                "cannot compose a symplectic map with a passive channel",
            )),
        }
    }

    /// Places this element on `acting_modes` of a larger `layout`.
    ///
    /// Spatial mode `j` of the element lands on `acting_modes[j]`; every other
    /// mode is left untouched.
    pub fn embed(&self, acting_modes: &[usize], layout: ModeLayout) -> Result<Transform> {
        let nf = self.layout.n_spectral();
        if layout.n_spectral() != nf {
            return Err(Error::InvalidLayout(format!(
                "element has {nf} spectral bins, target layout has {}",
                layout.n_spectral()
            )));
        }
        if acting_modes.len() != self.layout.n_spatial() {
            return Err(Error::InvalidModes(format!(
                "element acts on {} spatial modes but {} were assigned",
                self.layout.n_spatial(),
                acting_modes.len()
            )));
        }
        layout.check_spatial_modes(acting_modes)?;

        let k_modes = self.layout.n_modes();
        let n = layout.n_modes();
        let target = |e: usize| -> usize {
            let (block, e) = if e < k_modes { (0, e) } else { (n, e - k_modes) };
            block + layout.index(acting_modes[e / nf], e % nf)
        };

        let embed_into = |src: &CMatrix, mut out: CMatrix, size: usize| -> CMatrix {
            let idx: Vec<usize> = (0..size).map(target).collect();
            for &i in &idx {
                for j in 0..out.ncols() {
                    out[(i, j)] = ZERO;
                    out[(j, i)] = ZERO;
                }
            }
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    out[(i, j)] = src[(a, b)];
                }
            }
            out
        };

        let kind = match &self.kind {
            TransformKind::Symplectic(m) => TransformKind::Symplectic(embed_into(
                m,
                CMatrix::identity(2 * n, 2 * n),
                2 * k_modes,
            )),
            TransformKind::Passive(u) => {
                TransformKind::Passive(embed_into(u, CMatrix::identity(n, n), k_modes))
            }
        };
        Ok(Transform {
            layout,
            kind,
            residual: self.residual,
        })
    }
}
