//! Self-checks: randomized equivalence between the Gaussian pipeline and the
//! Fock oracle, and the invariant suite.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detection::{Detector, FactoredState};
use crate::elements::{
    beam_splitter, build_jsa, delay, loss, phase_shifter, schmidt_decompose, squeezer,
    squeezer_conjugated_convention, JsaMatrix, JsaSpec,
};
use crate::error::Result;
use crate::experiments::{
    heralding_efficiency, hhom_probabilities, sweep, DetectorKind, HhomCircuit, HhomConfig,
    SweepAxis,
};
use crate::layout::{FrequencyGrid, ModeLayout};
use crate::linalg::{c, CMatrix, C64};
use crate::oracle::{fock_from_jsa, pairs_for_tolerance, FockState};
use crate::state::CovarianceState;
use crate::transform::Transform;

/// Absolute agreement required between pipeline and oracle.
pub const EQUIVALENCE_TOL: f64 = 1e-6;
/// Norm deficit allowed per source in the oracle expansion.
const SOURCE_TAIL: f64 = 1e-7;
const CENTER: f64 = 1.2e15;
const STEP: f64 = 1.0e12;

/// Which squeezer the Gaussian side uses. `Conjugated` is a deliberate bug.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqueezerConvention {
    Standard,
    Conjugated,
}

#[derive(Debug, Clone, PartialEq)]
enum Element {
    BeamSplitter { theta: f64, modes: (usize, usize) },
    Phase { phi: f64, mode: usize },
    Delay { tau: f64, mode: usize },
    Loss { eps: f64, mode: usize },
}

/// One random circuit: sources on disjoint spatial pairs, a few passive
/// elements, then loss on every spatial mode.
#[derive(Debug, Clone)]
pub struct RandomCircuit {
    layout: ModeLayout,
    grid: FrequencyGrid,
    sources: Vec<(JsaMatrix, usize, usize)>,
    elements: Vec<Element>,
    final_loss: Vec<f64>,
}

impl RandomCircuit {
    /// `N_s <= 4`, `N_f <= 2`, `xi <= 0.4` per source.
    pub fn sample(rng: &mut ChaCha8Rng) -> Result<Self> {
        let ns = rng.random_range(2..=4usize);
        let nf = rng.random_range(1..=2usize);
        let layout = ModeLayout::new(ns, nf)?;
        let grid = FrequencyGrid::new(CENTER, STEP, nf)?;
        let mut sources = Vec::new();
        let mut pairs = vec![(0, 1)];
        if ns == 4 && rng.random_bool(0.75) {
            pairs.push((3, 2));
        }
        for (s, i) in pairs {
            let xi = rng.random_range(0.05..=0.4);
            let f = CMatrix::from_fn(nf, nf, |_, _| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let f = f.scale(xi / f.norm());
            sources.push((JsaMatrix::from_matrix(f, grid, grid)?, s, i));
        }
        let mut elements = Vec::new();
        let n_elements = rng.random_range(2..=4);
        let small = layout.n_modes() <= 4;
        for _ in 0..n_elements {
            let kind = rng.random_range(0..if small { 4 } else { 3 });
            let mode = rng.random_range(0..ns);
            elements.push(match kind {
                0 => {
                    let mut other = rng.random_range(0..ns - 1);
                    if other >= mode {
                        other += 1;
                    }
                    Element::BeamSplitter {
                        theta: rng.random_range(-TAU / 2.0..TAU / 2.0),
                        modes: (mode, other),
                    }
                }
                1 => Element::Phase {
                    phi: rng.random_range(0.0..TAU),
                    mode,
                },
                2 => Element::Delay {
                    tau: rng.random_range(-5e-12..5e-12),
                    mode,
                },
                _ => Element::Loss {
                    eps: rng.random_range(0.0..0.6),
                    mode,
                },
            });
        }
        // Always mix the idlers of the first source with something.
        elements.push(Element::BeamSplitter {
            theta: rng.random_range(0.0..TAU / 2.0),
            modes: (1, if ns > 2 { 2 } else { 0 }),
        });
        let final_loss = (0..ns)
            .map(|_| if rng.random_bool(0.5) { rng.random_range(0.0..0.5) } else { 0.0 })
            .collect();
        Ok(Self {
            layout,
            grid,
            sources,
            elements,
            final_loss,
        })
    }

    pub fn layout(&self) -> ModeLayout {
        self.layout
    }

    /// Gaussian pipeline, loss included.
    pub fn gaussian(&self, convention: SqueezerConvention) -> Result<CovarianceState> {
        let mut s = CovarianceState::vacuum(self.layout);
        for (j, sig, idl) in &self.sources {
            let t = match convention {
                SqueezerConvention::Standard => squeezer(j, *sig, *idl, self.layout)?,
                SqueezerConvention::Conjugated => {
                    squeezer_conjugated_convention(j, *sig, *idl, self.layout)?
                }
            };
            s = s.apply(&t)?;
        }
        for e in &self.elements {
            let t = match *e {
                Element::BeamSplitter { theta, modes } => beam_splitter(theta, modes, self.layout)?,
                Element::Phase { phi, mode } => phase_shifter(phi, mode, self.layout)?,
                Element::Delay { tau, mode } => delay(tau, mode, &self.grid, self.layout)?,
                Element::Loss { eps, mode } => loss(eps, &[mode], self.layout)?,
            };
            s = s.apply(&t)?;
        }
        for (mode, &eps) in self.final_loss.iter().enumerate() {
            if eps > 0.0 {
                s = s.apply(&loss(eps, &[mode], self.layout)?)?;
            }
        }
        Ok(s)
    }

    /// `a -> alpha a` of one element, written out directly.
    fn alpha(&self, e: &Element) -> CMatrix {
        let n = self.layout.n_modes();
        let nf = self.layout.n_spectral();
        let mut a = CMatrix::identity(n, n);
        match *e {
            Element::BeamSplitter { theta, modes: (p, q) } => {
                let (ct, st) = (theta.cos(), theta.sin());
                for w in 0..nf {
                    let (i, j) = (self.layout.index(p, w), self.layout.index(q, w));
                    a[(i, i)] = c(ct, 0.0);
                    a[(i, j)] = c(-st, 0.0);
                    a[(j, i)] = c(st, 0.0);
                    a[(j, j)] = c(ct, 0.0);
                }
            }
            Element::Phase { phi, mode } => {
                for w in 0..nf {
                    let i = self.layout.index(mode, w);
                    a[(i, i)] = C64::from_polar(1.0, phi);
                }
            }
            Element::Delay { tau, mode } => {
                for w in 0..nf {
                    let i = self.layout.index(mode, w);
                    a[(i, i)] = C64::from_polar(1.0, self.grid.offset(w) * tau);
                }
            }
            Element::Loss { eps, mode } => {
                for w in 0..nf {
                    let i = self.layout.index(mode, w);
                    a[(i, i)] = c((1.0 - eps).sqrt(), 0.0);
                }
            }
        }
        a
    }

    /// Fock oracle state before the final loss, which is applied later by
    /// thinning the count distribution.
    pub fn fock(&self) -> Result<FockState> {
        let mut state: Option<FockState> = None;
        for (j, sig, idl) in &self.sources {
            let lambdas: Vec<f64> = schmidt_decompose(j).singular_values;
            let pairs = pairs_for_tolerance(&lambdas, SOURCE_TAIL);
            let s = fock_from_jsa(j, pairs)?.embed(self.layout, &[*sig, *idl])?;
            state = Some(match state {
                None => s,
                Some(prev) => prev.product(&s)?,
            });
        }
        let mut state = state.expect("at least one source");
        for e in &self.elements {
            state = state.apply_passive(&self.alpha(e))?;
        }
        Ok(state)
    }

    pub fn efficiencies(&self) -> Vec<f64> {
        self.final_loss.iter().map(|e| 1.0 - e).collect()
    }
}

/// Outcome of one equivalence run.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub configs: usize,
    pub comparisons: usize,
    pub max_deviation: f64,
    /// Index of the configuration with the largest deviation.
    pub worst_config: usize,
    /// Largest oracle truncation deficit seen.
    pub max_deficit: f64,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.max_deviation < EQUIVALENCE_TOL
    }
}

fn subsets(n: usize) -> Vec<Vec<usize>> {
    (1..(1u32 << n))
        .map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect())
        .collect()
}

/// Count vectors of length `k` with total at most `max_total`.
fn count_patterns(k: usize, max_total: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                let used: usize = p.iter().sum();
                (0..=max_total - used).map(move |n| {
                    let mut q = p.clone();
                    q.push(n);
                    q
                })
            })
            .collect();
    }
    out
}

/// Largest deviation between pipeline and oracle over vacuum, threshold and
/// PNR (total count <= 4) queries on every subset of spatial modes.
pub fn compare_circuit(circuit: &RandomCircuit, convention: SqueezerConvention) -> Result<(f64, usize, f64)> {
    let ns = circuit.layout.n_spatial();
    let gauss = circuit.gaussian(convention)?;
    let fock = circuit.fock()?;
    let deficit = fock.norm_deficit();
    let dist = fock.count_distribution().thinned(&circuit.efficiencies())?;
    let all: Vec<usize> = (0..ns).collect();
    let limits = Detector {
        pnr_cutoff: 4 * ns,
        ..Detector::default()
    };
    let f = FactoredState::new(&gauss, &all, limits.rank_tol)?;
    let mut worst = 0.0_f64;
    let mut n = 0;
    let mut check = |a: f64, b: f64| {
        worst = worst.max((a - b).abs());
        n += 1;
    };
    for modes in subsets(ns) {
        check(f.p_vacuum(&modes)?, dist.p_vacuum(&modes));
        // Every on/off split of this subset.
        for mask in 0..(1u32 << modes.len()) {
            let on: Vec<usize> = modes.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &m)| m).collect();
            let off: Vec<usize> = modes.iter().enumerate().filter(|(i, _)| mask & (1 << i) == 0).map(|(_, &m)| m).collect();
            let pattern = crate::detection::DetectionPattern::threshold(
                &modes,
                &modes.iter().map(|m| on.contains(m)).collect::<Vec<_>>(),
            )?;
            check(f.p_threshold(&on, &off, &limits)?, dist.probability(&pattern));
        }
        let table = f.pnr_table(&modes, &vec![4; modes.len()], &limits)?;
        for counts in count_patterns(modes.len(), 4) {
            let pattern = crate::detection::DetectionPattern::pnr(&modes, &counts)?;
            check(table.get(&counts).expect("inside the box"), dist.probability(&pattern));
        }
    }
    Ok((worst, n, deficit))
}

/// Runs `n_configs` seeded random circuits through both simulators.
pub fn oracle_equivalence(n_configs: usize, seed: u64, convention: SqueezerConvention) -> Result<EquivalenceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = EquivalenceReport {
        configs: n_configs,
        comparisons: 0,
        max_deviation: 0.0,
        worst_config: 0,
        max_deficit: 0.0,
    };
    for k in 0..n_configs {
        let circuit = RandomCircuit::sample(&mut rng)?;
        let (dev, n, deficit) = compare_circuit(&circuit, convention)?;
        log::debug!("config {k}: {:?}, deviation {dev:e}, deficit {deficit:e}", circuit.layout());
        report.comparisons += n;
        report.max_deficit = report.max_deficit.max(deficit);
        if dev > report.max_deviation {
            report.max_deviation = dev;
            report.worst_config = k;
        }
    }
    Ok(report)
}

/// One named check of the invariant suite.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, tol: f64) -> CheckResult {
    CheckResult {
        name,
        passed: value.is_finite() && value < tol,
        detail: format!("{value:.3e} < {tol:.0e}"),
    }
}

const THZ: f64 = TAU * 1e12;
const NU: f64 = 193.1 * THZ;

fn waveguide(xi: f64) -> JsaSpec {
    JsaSpec::waveguide(xi, 0.1 * THZ, 29e-12, NU)
}

fn small_grid() -> Result<FrequencyGrid> {
    FrequencyGrid::spanning(NU, 2.5 * 0.1 * THZ, 21)
}

/// Symplectic residuals, determinant, `P^SPS` angle independence, pattern
/// sums and CSV reproducibility.
pub fn invariant_suite() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let grid = small_grid()?;
    let nf = grid.n_bins();
    let layout = ModeLayout::new(4, nf)?;
    let j = build_jsa(&waveguide(0.8), &grid, &grid)?;

    let elements: Vec<Transform> = vec![
        squeezer(&j, 0, 1, layout)?,
        squeezer(&j, 3, 2, layout)?,
        beam_splitter(0.37, (1, 2), layout)?,
        phase_shifter(1.1, 2, layout)?,
        delay(3e-12, 1, &grid, layout)?,
    ];
    let residual = elements
        .iter()
        .filter_map(|t| t.recompute_symplectic_residual())
        .fold(0.0, f64::max);
    out.push(check("symplectic residual of every element", residual, 1e-12));

    let mut s = CovarianceState::vacuum(layout);
    for t in &elements {
        s = s.apply(t)?;
    }
    out.push(check("det sigma = 1 on a pure path", (s.determinant() - c(1.0, 0.0)).norm(), 1e-8));
    let lossy = s.apply(&loss(0.4, &[0, 1, 2, 3], layout)?)?;
    out.push(check(
        "det sigma >= 1 after loss",
        (1.0 - lossy.determinant().re).max(0.0),
        1e-8,
    ));

    let mut worst = 0.0_f64;
    for kind in [DetectorKind::Pnr, DetectorKind::Threshold] {
        let cfg = HhomConfig::symmetric(waveguide(0.9))?
            .with_grid(grid)
            .with_detector(kind)
            .with_uniform_loss(0.2);
        let eta = heralding_efficiency(&HhomCircuit::new(&cfg)?)?;
        worst = worst.max((eta.sps_no_bs - eta.sps_balanced).abs() / eta.sps_no_bs);
    }
    out.push(check("P^SPS independent of the beam-splitter angle", worst, 1e-8));

    let all = [0, 1, 2, 3];
    let f = FactoredState::new(&lossy, &all, Detector::default().rank_tol)?;
    let mut sum = 0.0;
    for mask in 0..16u32 {
        let on: Vec<usize> = all.iter().copied().filter(|&m| mask & (1 << m) != 0).collect();
        let off: Vec<usize> = all.iter().copied().filter(|&m| mask & (1 << m) == 0).collect();
        sum += f.p_threshold(&on, &off, &Detector::default())?;
    }
    out.push(check("threshold patterns sum to 1", (sum - 1.0).abs(), 1e-8));

    let weak = HhomConfig::symmetric(waveguide(0.05))?.with_grid(grid);
    let state = HhomCircuit::new(&weak)?.output()?;
    let table = FactoredState::new(&state, &all, weak.limits.rank_tol)?.pnr_table(&all, &[3, 3, 3, 3], &weak.limits)?;
    out.push(check("PNR patterns sum to 1", (table.total() - 1.0).abs(), 1e-8));

    let p = hhom_probabilities(&state, DetectorKind::Pnr, &weak.limits)?;
    out.push(check("probabilities are finite and ordered", if p.four_fold <= p.herald { 0.0 } else { 1.0 }, 0.5));

    let taus = [0.0, 1e-12, 3e-12];
    let a = sweep(&weak, SweepAxis::Delay, &taus)?.to_csv();
    let b = sweep(&weak, SweepAxis::Delay, &taus)?.to_csv();
    out.push(CheckResult {
        name: "byte-identical CSV across runs",
        passed: a == b,
        detail: format!("{} bytes", a.len()),
    });
    Ok(out)
}

/// Symplectic residual of the deliberately wrong squeezer: the symplectic
/// checks alone cannot see this bug.
pub fn mutation_keeps_symplectic() -> Result<f64> {
    let grid = FrequencyGrid::new(CENTER, STEP, 2)?;
    let layout = ModeLayout::new(2, 2)?;
    let f = CMatrix::from_row_slice(2, 2, &[c(0.1, 0.2), c(-0.05, 0.1), c(0.15, -0.1), c(0.0, 0.2)]);
    let j = JsaMatrix::from_matrix(f, grid, grid)?;
    let t = squeezer_conjugated_convention(&j, 0, 1, layout)?;
    Ok(t.recompute_symplectic_residual().unwrap_or(f64::INFINITY))
}
