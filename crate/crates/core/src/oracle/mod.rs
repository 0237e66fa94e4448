//! Brute-force Fock-basis simulator for small systems.
//!
//! A state is a sparse polynomial in creation operators acting on vacuum,
//! `|psi> = sum_m c_m prod_k (a_k^dag)^{m_k} |0>`, keyed by the occupation
//! tuple `m`. The Fock amplitude of `|m>` is `c_m sqrt(prod_k m_k!)`.
//! Passive optics substitute the creation operators linearly; lossy optics
//! first dilate to an isometry onto fresh ancilla modes, which detection
//! traces out.
//!
//! Nothing here touches covariance matrices, so it checks the Gaussian
//! pipeline independently.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::BuildHasherDefault;

use crate::detection::{DetectionPattern, Outcome};
use crate::elements::JsaMatrix;
use crate::error::{Error, Result};
use crate::layout::ModeLayout;
use crate::linalg::{hermitian_eigen, svd, CMatrix, C64};

type Key = u128;
type Poly = HashMap<Key, C64, BuildHasherDefault<DefaultHasher>>;

const BITS: u32 = 8;
const MASK: Key = 0xff;
/// System plus ancilla modes that fit in one key.
pub const MAX_MODES: usize = 16;
/// Per-mode occupation limit of the key encoding.
const MAX_OCCUPATION: usize = 255;

fn occ(key: Key, k: usize) -> usize {
    ((key >> (BITS * k as u32)) & MASK) as usize
}

fn unit(k: usize) -> Key {
    1 << (BITS * k as u32)
}

fn encode(occupation: &[usize]) -> Result<Key> {
    if occupation.len() > MAX_MODES {
        return Err(Error::LimitExceeded {
            what: "oracle modes",
            requested: occupation.len(),
            limit: MAX_MODES,
        });
    }
    let mut key = 0;
    for (k, &n) in occupation.iter().enumerate() {
        if n > MAX_OCCUPATION {
            return Err(Error::LimitExceeded {
                what: "oracle occupation per mode",
                requested: n,
                limit: MAX_OCCUPATION,
            });
        }
        key |= (n as Key) << (BITS * k as u32);
    }
    Ok(key)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `prod_k m_k!` for the first `n_modes` modes of a key.
fn factorial_weight(key: Key, n_modes: usize) -> f64 {
    (0..n_modes).map(|k| factorial(occ(key, k))).product()
}

fn binomials(n: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0]];
    for i in 1..=n {
        let prev = &rows[i - 1];
        let mut row = vec![1.0; i + 1];
        for j in 1..i {
            row[j] = prev[j - 1] + prev[j];
        }
        rows.push(row);
    }
    rows
}

/// Pure state of `layout.n_modes()` system modes plus ancillas.
#[derive(Debug, Clone)]
pub struct FockState {
    layout: ModeLayout,
    ancillas: usize,
    /// Largest total photon number kept.
    cutoff: usize,
    terms: Poly,
}

impl FockState {
    pub fn vacuum(layout: ModeLayout, cutoff: usize) -> Result<Self> {
        if layout.n_modes() > MAX_MODES {
            return Err(Error::LimitExceeded {
                what: "oracle modes",
                requested: layout.n_modes(),
                limit: MAX_MODES,
            });
        }
        let mut terms = Poly::default();
        terms.insert(0, C64::new(1.0, 0.0));
        Ok(Self {
            layout,
            ancillas: 0,
            cutoff,
            terms,
        })
    }

    /// A single occupation-number basis state on the system modes.
    pub fn basis(layout: ModeLayout, occupation: &[usize]) -> Result<Self> {
        if occupation.len() != layout.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: layout.n_modes(),
                found: occupation.len(),
            });
        }
        let key = encode(occupation)?;
        let n: usize = occupation.iter().sum();
        let mut s = Self::vacuum(layout, n)?;
        s.terms.clear();
        s.terms
            .insert(key, C64::new(1.0 / factorial_weight(key, occupation.len()).sqrt(), 0.0));
        Ok(s)
    }

    pub fn layout(&self) -> ModeLayout {
        self.layout
    }

    pub fn ancillas(&self) -> usize {
        self.ancillas
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of stored occupation tuples.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn n_all(&self) -> usize {
        self.layout.n_modes() + self.ancillas
    }

    /// Fock amplitude of a system occupation tuple with empty ancillas.
    pub fn amplitude(&self, occupation: &[usize]) -> Result<C64> {
        if occupation.len() != self.layout.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.n_modes(),
                found: occupation.len(),
            });
        }
        let key = encode(occupation)?;
        Ok(self
            .terms
            .get(&key)
            .map_or(C64::new(0.0, 0.0), |c| c * factorial_weight(key, occupation.len()).sqrt()))
    }

    pub fn norm_sqr(&self) -> f64 {
        let n = self.n_all();
        let mut keys: Vec<&Key> = self.terms.keys().collect();
        keys.sort_unstable();
        keys.iter()
            .map(|k| self.terms[*k].norm_sqr() * factorial_weight(**k, n))
            .sum()
    }

    /// `1 - <psi|psi>`: the weight lost to the photon-number cutoff. Every
    /// detection probability of the truncated state is low by at most this.
    pub fn norm_deficit(&self) -> f64 {
        1.0 - self.norm_sqr()
    }

    /// Places the system modes of `self` on `spatial_map[s]` of a larger
    /// layout with the same number of bins.
    pub fn embed(&self, layout: ModeLayout, spatial_map: &[usize]) -> Result<Self> {
        if self.ancillas != 0 {
            return Err(Error::InvalidModes("cannot embed a state with ancillas".into()));
        }
        let nf = self.layout.n_spectral();
        if layout.n_spectral() != nf || spatial_map.len() != self.layout.n_spatial() {
            return Err(Error::LayoutMismatch);
        }
        layout.check_spatial_modes(spatial_map)?;
        let mut out = Self::vacuum(layout, self.cutoff)?;
        out.terms.clear();
        for (&key, &c) in &self.terms {
            let mut occupation = vec![0; layout.n_modes()];
            for (s, &target) in spatial_map.iter().enumerate() {
                for w in 0..nf {
                    occupation[layout.index(target, w)] = occ(key, self.layout.index(s, w));
                }
            }
            out.terms.insert(encode(&occupation)?, c);
        }
        Ok(out)
    }

    /// Tensor product of two states on disjoint system modes of one layout.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        if self.ancillas != 0 || other.ancillas != 0 {
            return Err(Error::InvalidModes("cannot multiply states with ancillas".into()));
        }
        let n = self.layout.n_modes();
        let used = |s: &Self| -> Vec<bool> { (0..n).map(|k| s.terms.keys().any(|&key| occ(key, k) > 0)).collect() };
        let (ua, ub) = (used(self), used(other));
        if (0..n).any(|k| ua[k] && ub[k]) {
            return Err(Error::InvalidModes("product of states sharing a mode".into()));
        }
        let cutoff = self.cutoff + other.cutoff;
        let mut terms = Poly::default();
        for (&ka, &ca) in &self.terms {
            for (&kb, &cb) in &other.terms {
                terms.insert(ka + kb, ca * cb);
            }
        }
        Ok(Self {
            layout: self.layout,
            ancillas: 0,
            cutoff,
            terms,
        })
    }

    /// Applies the passive map `a -> alpha a` on the system modes. A
    /// contractive `alpha` is dilated onto fresh ancilla modes, one per
    /// nonzero eigenvalue of `1 - alpha^dag alpha`.
    pub fn apply_passive(&self, alpha: &CMatrix) -> Result<Self> {
        let n = self.layout.n_modes();
        if alpha.nrows() != n || alpha.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: alpha.nrows(),
            });
        }
        // Isometry [alpha; Y] with Y^dag Y = 1 - alpha^dag alpha.
        let defect = CMatrix::identity(n, n) - alpha.adjoint() * alpha;
        let (vals, vecs) = hermitian_eigen(&defect);
        if vals.iter().any(|&v| v < -1e-10) {
            return Err(Error::NotContractive {
                max_singular_value: (1.0 - vals[0]).sqrt(),
            });
        }
        let keep: Vec<usize> = (0..n).filter(|&k| vals[k] > 1e-14).collect();
        let r = keep.len();
        let first_ancilla = n + self.ancillas;
        if first_ancilla + r > MAX_MODES {
            return Err(Error::LimitExceeded {
                what: "oracle modes",
                requested: first_ancilla + r,
                limit: MAX_MODES,
            });
        }
        let rows = n + r;
        let mut iso = CMatrix::zeros(rows, n);
        iso.view_mut((0, 0), (n, n)).copy_from(alpha);
        for (a, &k) in keep.iter().enumerate() {
            let s = vals[k].sqrt();
            for j in 0..n {
                iso[(n + a, j)] = vecs[(j, k)].conj() * s;
            }
        }
        // Row index of the isometry -> mode index in the key.
        let slot = |i: usize| if i < n { i } else { first_ancilla + (i - n) };

        // Givens reduction: R_k ... R_1 iso = [D; 0].
        let mut rotations: Vec<(usize, usize, [C64; 4])> = Vec::new();
        let mut work = iso;
        for j in 0..n {
            for i in (j + 1)..rows {
                let b = work[(i, j)];
                if b.norm() == 0.0 {
                    continue;
                }
                let a = work[(j, j)];
                let rr = (a.norm_sqr() + b.norm_sqr()).sqrt();
                let g = [a.conj() / rr, b.conj() / rr, -b / rr, a / rr];
                for col in 0..n {
                    let (x, y) = (work[(j, col)], work[(i, col)]);
                    work[(j, col)] = g[0] * x + g[1] * y;
                    work[(i, col)] = g[2] * x + g[3] * y;
                }
                rotations.push((j, i, g));
            }
        }
        let mut terms = self.terms.clone();
        let binom = binomials(self.cutoff);
        // x_j -> d_j x_j first, then the inverse rotations in reverse order.
        let diag: Vec<C64> = (0..n).map(|j| work[(j, j)]).collect();
        terms = terms
            .into_iter()
            .map(|(key, c)| {
                let phase = (0..n).fold(C64::new(1.0, 0.0), |acc, j| acc * diag[j].powu(occ(key, j) as u32));
                (key, c * phase)
            })
            .collect();
        for &(p, q, g) in rotations.iter().rev() {
            // R^dag = [[conj g0, conj g2], [conj g1, conj g3]].
            let w = [g[0].conj(), g[2].conj(), g[1].conj(), g[3].conj()];
            terms = substitute_pair(&terms, slot(p), slot(q), w, &binom);
        }
        Ok(Self {
            layout: self.layout,
            ancillas: self.ancillas + r,
            cutoff: self.cutoff,
            terms,
        })
    }

    /// Photon-count distribution over spatial modes (summed over bins and
    /// ancillas).
    pub fn count_distribution(&self) -> CountDistribution {
        let ns = self.layout.n_spatial();
        let nf = self.layout.n_spectral();
        let n_all = self.n_all();
        let mut probs: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        let mut keys: Vec<&Key> = self.terms.keys().collect();
        keys.sort_unstable();
        for key in keys {
            let p = self.terms[key].norm_sqr() * factorial_weight(*key, n_all);
            let counts: Vec<usize> = (0..ns)
                .map(|s| (0..nf).map(|w| occ(*key, self.layout.index(s, w))).sum())
                .collect();
            *probs.entry(counts).or_insert(0.0) += p;
        }
        CountDistribution { probs }
    }

    /// Mean photon number in one spatial mode.
    pub fn mean_photon_number(&self, spatial: usize) -> f64 {
        self.count_distribution()
            .probs
            .iter()
            .map(|(c, p)| c[spatial] as f64 * p)
            .sum()
    }
}

/// `x_p -> w0 x_p + w2 x_q`, `x_q -> w1 x_p + w3 x_q` (columns of the 2x2
/// block `[[w0, w1], [w2, w3]]`).
fn substitute_pair(terms: &Poly, p: usize, q: usize, w: [C64; 4], binom: &[Vec<f64>]) -> Poly {
    let mut out = Poly::default();
    out.reserve(terms.len());
    let (up, uq) = (unit(p), unit(q));
    for (&key, &c) in terms {
        let (a, b) = (occ(key, p), occ(key, q));
        if a == 0 && b == 0 {
            *out.entry(key).or_default() += c;
            continue;
        }
        let base = key - a as Key * up - b as Key * uq;
        // (w0 x_p + w2 x_q)^a = sum_i C(a,i) w0^i w2^(a-i) x_p^i x_q^(a-i)
        let fa: Vec<C64> = (0..=a)
            .map(|i| w[0].powu(i as u32) * w[2].powu((a - i) as u32) * binom[a][i])
            .collect();
        let fb: Vec<C64> = (0..=b)
            .map(|j| w[1].powu(j as u32) * w[3].powu((b - j) as u32) * binom[b][j])
            .collect();
        for (i, &x) in fa.iter().enumerate() {
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, &y) in fb.iter().enumerate() {
                if y == C64::new(0.0, 0.0) {
                    continue;
                }
                let np = (i + j) as Key;
                let nq = (a + b - i - j) as Key;
                *out.entry(base + np * up + nq * uq).or_default() += c * x * y;
            }
        }
    }
    out
}

/// Two-mode squeezed state of one source on layout `(2, N_f)`: spatial
/// mode 0 is the signal, 1 the idler, with at most `cutoff` pairs.
///
/// `|psi> = prod_l sech(lambda_l) exp(G) |0>` with the pair generator
/// `G = -i sum T[w, w'] a_w^dag b_w'^dag` and `T = U tanh(Lambda) V^dag`.
/// In the Schmidt basis this is `c(n) = prod_l sech(lambda_l) (-i tanh lambda_l)^n_l`.
pub fn fock_from_jsa(j: &JsaMatrix, cutoff: usize) -> Result<FockState> {
    if cutoff < 1 {
        return Err(Error::param("cutoff", "need at least one pair"));
    }
    let nf = j.n_bins();
    let layout = ModeLayout::new(2, nf)?;
    let mut state = FockState::vacuum(layout, 2 * cutoff)?;
    let d = svd(j.matrix());
    let lambdas: Vec<f64> = d.s.iter().copied().filter(|&l| l > 1e-8).collect();
    let norm: f64 = lambdas.iter().map(|l| 1.0 / l.cosh()).product();
    let mut ut = d.u.clone();
    for l in 0..nf {
        let t = if d.s[l] > 1e-8 { d.s[l].tanh() } else { 0.0 };
        ut.column_mut(l).scale_mut(t);
    }
    let t = ut * d.v.adjoint();
    let mi = C64::new(0.0, -1.0);
    let pairs: Vec<(Key, C64)> = (0..nf)
        .flat_map(|w| (0..nf).map(move |v| (w, v)))
        .filter(|&(w, v)| t[(w, v)].norm() > 0.0)
        .map(|(w, v)| (unit(layout.index(0, w)) + unit(layout.index(1, v)), mi * t[(w, v)]))
        .collect();

    let mut power = Poly::default();
    power.insert(0, C64::new(norm, 0.0));
    let mut terms = power.clone();
    for k in 1..=cutoff {
        let mut next = Poly::default();
        for (&key, &c) in &power {
            for &(inc, g) in &pairs {
                *next.entry(key + inc).or_default() += c * g / k as f64;
            }
        }
        for (&key, &c) in &next {
            *terms.entry(key).or_default() += c;
        }
        power = next;
    }
    state.terms = terms;
    Ok(state)
}

/// `P(total pairs > max_pairs)` for independent two-mode squeezers with
/// Schmidt coefficients `lambdas`: the exact norm deficit of a
/// pair-truncated product of sources.
pub fn pair_tail_bound(lambdas: &[f64], max_pairs: usize) -> f64 {
    let mut dist = vec![0.0; max_pairs + 1];
    dist[0] = 1.0;
    for &l in lambdas {
        let (s2, t2) = (1.0 / l.cosh().powi(2), l.tanh().powi(2));
        let geo: Vec<f64> = (0..=max_pairs).map(|n| s2 * t2.powi(n as i32)).collect();
        let mut next = vec![0.0; max_pairs + 1];
        for (a, &pa) in dist.iter().enumerate() {
            for (b, &pb) in geo.iter().enumerate().take(max_pairs + 1 - a) {
                next[a + b] += pa * pb;
            }
        }
        dist = next;
    }
    (1.0 - dist.iter().sum::<f64>()).max(0.0)
}

/// Smallest pair cutoff whose tail is at most `tol`.
pub fn pairs_for_tolerance(lambdas: &[f64], tol: f64) -> usize {
    let mut k = 1;
    while pair_tail_bound(lambdas, k) > tol && k < MAX_OCCUPATION {
        k += 1;
    }
    k
}

/// Joint photon-count distribution over spatial modes.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    probs: BTreeMap<Vec<usize>, f64>,
}

impl CountDistribution {
    pub fn iter(&self) -> impl Iterator<Item = (&Vec<usize>, &f64)> {
        self.probs.iter()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    /// Each spatial mode `s` passes a photon with probability `eta[s]`:
    /// loss placed after every other element.
    pub fn thinned(&self, eta: &[f64]) -> Result<Self> {
        let mut out: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (counts, &p) in &self.probs {
            if counts.len() != eta.len() {
                return Err(Error::DimensionMismatch {
                    expected: counts.len(),
                    found: eta.len(),
                });
            }
            let mut partial: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), p)];
            for (s, &n) in counts.iter().enumerate() {
                let e = eta[s];
                let binom = binomials(n);
                let mut next = Vec::with_capacity(partial.len() * (n + 1));
                for (prefix, q) in &partial {
                    for k in 0..=n {
                        let w = binom[n][k] * e.powi(k as i32) * (1.0 - e).powi((n - k) as i32);
                        if w == 0.0 {
                            continue;
                        }
                        let mut c = prefix.clone();
                        c.push(k);
                        next.push((c, q * w));
                    }
                }
                partial = next;
            }
            for (c, q) in partial {
                *out.entry(c).or_insert(0.0) += q;
            }
        }
        Ok(Self { probs: out })
    }

    /// Born-rule probability of a detection pattern; unlisted modes are
    /// traced out.
    pub fn probability(&self, pattern: &DetectionPattern) -> f64 {
        self.probs
            .iter()
            .filter(|(counts, _)| {
                pattern.modes().iter().zip(pattern.outcomes()).all(|(&m, o)| match o {
                    Outcome::Count(n) => counts[m] == *n,
                    Outcome::On => counts[m] > 0,
                    Outcome::Off => counts[m] == 0,
                })
            })
            .map(|(_, p)| p)
            .sum()
    }

    pub fn p_vacuum(&self, spatial_modes: &[usize]) -> f64 {
        self.probs
            .iter()
            .filter(|(c, _)| spatial_modes.iter().all(|&m| c[m] == 0))
            .map(|(_, p)| p)
            .sum()
    }
}

/// Detection probability of a pattern on a Fock state.
pub fn fock_detection(state: &FockState, pattern: &DetectionPattern) -> Result<f64> {
    state.layout.check_spatial_modes(pattern.modes())?;
    Ok(state.count_distribution().probability(pattern))
}

/// Purity of the state of spatial mode `idler` conditioned on exactly one
/// photon in spatial mode `herald`; every other mode is traced out.
pub fn heralded_purity(state: &FockState, herald: usize, idler: usize) -> Result<f64> {
    let layout = state.layout;
    layout.check_spatial_modes(&[herald, idler])?;
    if herald == idler {
        return Err(Error::InvalidModes("herald and idler coincide".into()));
    }
    let nf = layout.n_spectral();
    let n_all = state.n_all();
    let idler_modes: Vec<usize> = (0..nf).map(|w| layout.index(idler, w)).collect();
    // Environment key -> (idler key -> amplitude).
    let mut groups: BTreeMap<Key, BTreeMap<Key, C64>> = BTreeMap::new();
    for (&key, &c) in &state.terms {
        let herald_count: usize = (0..nf).map(|w| occ(key, layout.index(herald, w))).sum();
        if herald_count != 1 {
            continue;
        }
        let idler_part: Key = idler_modes.iter().map(|&m| occ(key, m) as Key * unit(m)).sum();
        let amp = c * factorial_weight(key, n_all).sqrt();
        *groups.entry(key - idler_part).or_default().entry(idler_part).or_default() += amp;
    }
    let vecs: Vec<&BTreeMap<Key, C64>> = groups.values().collect();
    let trace: f64 = vecs.iter().flat_map(|v| v.values()).map(|a| a.norm_sqr()).sum();
    if !(trace > 0.0) {
        return Err(Error::param("state", "herald never fires"));
    }
    let mut tr2 = 0.0;
    for a in &vecs {
        for b in &vecs {
            let inner: C64 = a
                .iter()
                .filter_map(|(k, x)| b.get(k).map(|y| x.conj() * y))
                .sum();
            tr2 += inner.norm_sqr();
        }
    }
    Ok(tr2 / (trace * trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::FrequencyGrid;
    use crate::linalg::c;

    fn grid(n: usize) -> FrequencyGrid {
        FrequencyGrid::new(1e15, 1e11, n).unwrap()
    }

    fn single_mode_tms(lambda: f64, cutoff: usize) -> FockState {
        let j = JsaMatrix::from_matrix(CMatrix::from_element(1, 1, c(lambda, 0.0)), grid(1), grid(1)).unwrap();
        fock_from_jsa(&j, cutoff).unwrap()
    }

    #[test]
    fn zero_squeezing_is_vacuum() {
        let j = JsaMatrix::from_matrix(CMatrix::zeros(2, 2), grid(2), grid(2)).unwrap();
        let s = fock_from_jsa(&j, 3).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.amplitude(&[0, 0, 0, 0]).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn tms_amplitudes() {
        let l: f64 = 0.7;
        let s = single_mode_tms(l, 6);
        for n in 0..=6 {
            let want = c(0.0, -l.tanh()).powu(n as u32) / l.cosh();
            assert!((s.amplitude(&[n, n]).unwrap() - want).norm() < 1e-14);
        }
        assert_eq!(s.amplitude(&[1, 0]).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn cutoff_deficit_is_the_geometric_tail() {
        let l: f64 = 0.5;
        let s = single_mode_tms(l, 8);
        let tail = l.tanh().powi(18);
        assert!((s.norm_deficit() - tail).abs() < 1e-14);
        assert!(s.norm_deficit() < 3e-6);
        assert!((pair_tail_bound(&[l], 8) - tail).abs() < 1e-14);
        assert_eq!(pairs_for_tolerance(&[l], tail * 1.0001), 8);
    }

    #[test]
    fn tms_coincidence() {
        let l: f64 = 0.5;
        let s = single_mode_tms(l, 10);
        let p = fock_detection(&s, &DetectionPattern::pnr(&[0, 1], &[1, 1]).unwrap()).unwrap();
        assert!((p - (l.tanh() / l.cosh()).powi(2)).abs() < 1e-14);
        assert!((p - 0.16794).abs() < 1e-5);
        let vac = fock_detection(&FockState::vacuum(s.layout(), 2).unwrap(), &DetectionPattern::pnr(&[0], &[1]).unwrap())
            .unwrap();
        assert_eq!(vac, 0.0);
    }

    #[test]
    fn identity_leaves_state_alone() {
        let s = single_mode_tms(0.4, 5);
        let t = s.apply_passive(&CMatrix::identity(2, 2)).unwrap();
        assert_eq!(t.ancillas(), 0);
        for n in 0..=5 {
            assert!((t.amplitude(&[n, n]).unwrap() - s.amplitude(&[n, n]).unwrap()).norm() < 1e-15);
        }
    }

    #[test]
    fn hong_ou_mandel() {
        let layout = ModeLayout::new(2, 1).unwrap();
        let s = FockState::basis(layout, &[1, 1]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bs = CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(-h, 0.0), c(h, 0.0), c(h, 0.0)]);
        let out = s.apply_passive(&bs).unwrap();
        assert!(out.amplitude(&[1, 1]).unwrap().norm() < 1e-15);
        assert!((out.amplitude(&[2, 0]).unwrap().norm() - h).abs() < 1e-15);
        assert!((out.amplitude(&[0, 2]).unwrap().norm() - h).abs() < 1e-15);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn loss_on_a_single_photon() {
        let layout = ModeLayout::new(1, 1).unwrap();
        let s = FockState::basis(layout, &[1]).unwrap();
        let eps: f64 = 0.3;
        let out = s
            .apply_passive(&CMatrix::from_element(1, 1, c((1.0 - eps).sqrt(), 0.0)))
            .unwrap();
        assert_eq!(out.ancillas(), 1);
        let d = out.count_distribution();
        assert!((d.probability(&DetectionPattern::pnr(&[0], &[1]).unwrap()) - (1.0 - eps)).abs() < 1e-14);
        assert!((d.p_vacuum(&[0]) - eps).abs() < 1e-14);
    }

    #[test]
    fn loss_scales_mean_photon_number() {
        let (l, eps): (f64, f64) = (0.5, 0.3);
        let s = single_mode_tms(l, 14);
        let a = CMatrix::identity(2, 2).scale((1.0 - eps).sqrt());
        let out = s.apply_passive(&a).unwrap();
        for mode in 0..2 {
            assert!((out.mean_photon_number(mode) - (1.0 - eps) * l.sinh().powi(2)).abs() < 1e-7);
        }
        // Thinning after the fact agrees with the dilation.
        let thin = s.count_distribution().thinned(&[1.0 - eps, 1.0 - eps]).unwrap();
        let direct = out.count_distribution();
        for (counts, p) in direct.iter() {
            let q = thin.probability(&DetectionPattern::pnr(&[0, 1], counts).unwrap());
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn unitary_preserves_norm() {
        let j = JsaMatrix::from_matrix(
            CMatrix::from_row_slice(2, 2, &[c(0.2, 0.1), c(-0.1, 0.05), c(0.0, 0.2), c(0.15, -0.1)]),
            grid(2),
            grid(2),
        )
        .unwrap();
        let s = fock_from_jsa(&j, 4).unwrap();
        let (ct, st) = (0.3_f64.cos(), 0.3_f64.sin());
        let mut u = CMatrix::identity(4, 4);
        u[(0, 0)] = c(ct, 0.0);
        u[(0, 2)] = c(0.0, st);
        u[(2, 0)] = c(0.0, st);
        u[(2, 2)] = c(ct, 0.0);
        u[(3, 3)] = c(0.0, 1.0);
        let out = s.apply_passive(&u).unwrap();
        assert!((out.norm_sqr() - s.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn heralded_purity_matches_schmidt_weights() {
        let lambdas = [0.3, 0.2];
        let f = CMatrix::from_row_slice(2, 2, &[c(lambdas[0], 0.0), c(0.0, 0.0), c(0.0, 0.0), c(lambdas[1], 0.0)]);
        let j = JsaMatrix::from_matrix(f, grid(2), grid(2)).unwrap();
        let s = fock_from_jsa(&j, 6).unwrap();
        let t2: Vec<f64> = lambdas.iter().map(|l: &f64| l.tanh().powi(2)).collect();
        let want = t2.iter().map(|t| t * t).sum::<f64>() / t2.iter().sum::<f64>().powi(2);
        assert!((heralded_purity(&s, 0, 1).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn embed_and_product() {
        let a = single_mode_tms(0.3, 3);
        let layout = ModeLayout::new(4, 1).unwrap();
        let ea = a.embed(layout, &[0, 1]).unwrap();
        let eb = a.embed(layout, &[3, 2]).unwrap();
        let p = ea.product(&eb).unwrap();
        let want = a.amplitude(&[1, 1]).unwrap() * a.amplitude(&[2, 2]).unwrap();
        assert!((p.amplitude(&[1, 1, 2, 2]).unwrap() - want).norm() < 1e-15);
        assert!(ea.product(&ea).is_err());
    }
}
