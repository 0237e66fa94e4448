//! Heralded Hong-Ou-Mandel circuit: two pair sources, heralds on the outer
//! spatial modes, idlers meeting on a beam splitter.
//!
//! Spatial modes (zero-based): 0 = herald A, 1 = idler A, 2 = idler B,
//! 3 = herald B.

use std::f64::consts::FRAC_PI_4;

use log::debug;

use crate::detection::{Detector, FactoredState};
use crate::elements::{bandpass_filter, beam_splitter, build_jsa, delay, loss, squeezer, JsaSpec};
use crate::error::{Error, Result};
use crate::layout::{FrequencyGrid, ModeLayout};
use crate::linalg::CMatrix;
use crate::state::CovarianceState;
use crate::transform::Transform;

pub const HERALD_A: usize = 0;
pub const IDLER_A: usize = 1;
pub const IDLER_B: usize = 2;
pub const HERALD_B: usize = 3;

/// Relative tolerance on the beam-splitter independence of `P^SPS`.
pub const SPS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    Threshold,
    Pnr,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Threshold => "threshold",
            DetectorKind::Pnr => "pnr",
        }
    }
}

/// Ideal bandpass filter on a subset of the four spatial modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub center: f64,
    pub half_width: f64,
    pub modes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HhomConfig {
    pub source_a: JsaSpec,
    pub source_b: JsaSpec,
    pub grid: FrequencyGrid,
    /// Delay on idler A (s).
    pub delay: f64,
    pub bs_angle: f64,
    /// Loss per spatial mode.
    pub loss: [f64; 4],
    pub filter: Option<FilterSpec>,
    pub detector: DetectorKind,
    pub limits: Detector,
}

/// Default grid for a set of sources: at least 41 bins spanning the widest
/// JSA support, refined until the step is at most a quarter of the
/// narrowest bandwidth. The bin count is odd so the center is a bin.
pub fn default_grid(sources: &[JsaSpec]) -> Result<FrequencyGrid> {
    let first = sources
        .first()
        .ok_or_else(|| Error::param("sources", "need at least one source"))?;
    for s in sources {
        s.validate()?;
    }
    let center = first.signal_center;
    let half = sources
        .iter()
        .map(|s| {
            s.support_half_width()
                + (s.signal_center - center).abs().max((s.idler_center - center).abs())
        })
        .fold(0.0, f64::max);
    let min_bw = sources.iter().map(|s| s.bandwidth).fold(f64::INFINITY, f64::min);
    let needed = (2.0 * half / (min_bw / 4.0)).ceil() as usize + 1;
    let mut n = needed.max(41);
    if n % 2 == 0 {
        n += 1;
    }
    FrequencyGrid::spanning(center, half, n)
}

impl HhomConfig {
    /// Heralded HOM at `tau = 0`, `theta = pi/4`, no loss, no filter, PNR.
    pub fn new(source_a: JsaSpec, source_b: JsaSpec) -> Result<Self> {
        let grid = default_grid(&[source_a, source_b])?;
        Ok(Self {
            source_a,
            source_b,
            grid,
            delay: 0.0,
            bs_angle: FRAC_PI_4,
            loss: [0.0; 4],
            filter: None,
            detector: DetectorKind::Pnr,
            limits: Detector::default(),
        })
    }

    /// Both sources identical.
    pub fn symmetric(source: JsaSpec) -> Result<Self> {
        Self::new(source, source)
    }

    pub fn with_grid(mut self, grid: FrequencyGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_detector(mut self, detector: DetectorKind) -> Self {
        self.detector = detector;
        self
    }

    pub fn with_delay(mut self, tau: f64) -> Self {
        self.delay = tau;
        self
    }

    pub fn with_bs_angle(mut self, theta: f64) -> Self {
        self.bs_angle = theta;
        self
    }

    pub fn with_uniform_loss(mut self, epsilon: f64) -> Self {
        self.loss = [epsilon; 4];
        self
    }

    pub fn with_filter(mut self, filter: Option<FilterSpec>) -> Self {
        self.filter = filter;
        self
    }

    /// Same squeezing on both sources.
    pub fn with_squeezing(mut self, xi: f64) -> Self {
        self.source_a = self.source_a.with_squeezing(xi);
        self.source_b = self.source_b.with_squeezing(xi);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.source_a.validate()?;
        self.source_b.validate()?;
        if !self.delay.is_finite() {
            return Err(Error::param("delay", "must be finite"));
        }
        if !self.bs_angle.is_finite() {
            return Err(Error::param("bs_angle", "must be finite"));
        }
        for &e in &self.loss {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::param("loss", format!("{e} outside [0, 1]")));
            }
        }
        if let Some(f) = &self.filter {
            if f.modes.is_empty() || f.modes.iter().any(|&m| m > 3) {
                return Err(Error::param("filter", "modes must be a nonempty subset of 0..=3"));
            }
        }
        Ok(())
    }
}

/// How the two sources relate spectrally at the beam splitter.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Overlap {
    /// Both sources live on the same spectral bins.
    Shared,
    /// Each source gets its own copy of the grid, so the idlers can never
    /// interfere: the exact infinite-delay limit.
    Disjoint,
}

/// State after the sources, filter and loss; delay and beam splitter are
/// applied per query. Delay, filter and loss are all diagonal in the bin
/// basis, so this ordering equals the physical one.
#[derive(Debug, Clone)]
pub struct HhomCircuit {
    config: HhomConfig,
    overlap: Overlap,
    grid: FrequencyGrid,
    pre_interference: CovarianceState,
}

impl HhomCircuit {
    pub fn new(config: &HhomConfig) -> Result<Self> {
        Self::build(config, Overlap::Shared)
    }

    /// Circuit whose idlers are perfectly distinguishable (`tau -> infinity`).
    pub fn distinguishable(config: &HhomConfig) -> Result<Self> {
        Self::build(config, Overlap::Disjoint)
    }

    fn build(config: &HhomConfig, overlap: Overlap) -> Result<Self> {
        config.validate()?;
        let grid = config.grid;
        let nf = grid.n_bins();
        let pair = ModeLayout::new(2, nf)?;
        let source = |spec: &JsaSpec| -> Result<CovarianceState> {
            let j = build_jsa(spec, &grid, &grid)?;
            CovarianceState::vacuum(pair).apply(&squeezer(&j, 0, 1, pair)?)
        };
        let (sa, sb) = (source(&config.source_a)?, source(&config.source_b)?);
        // Disjoint: source B lives on a second copy of the grid.
        let (bins, b_offset) = match overlap {
            Overlap::Shared => (nf, 0),
            Overlap::Disjoint => (2 * nf, nf),
        };
        let layout = ModeLayout::new(4, bins)?;
        let map = |signal: usize, idler: usize, offset: usize| -> Vec<usize> {
            (0..nf)
                .map(|k| layout.index(signal, k + offset))
                .chain((0..nf).map(|k| layout.index(idler, k + offset)))
                .collect()
        };
        let mut state = CovarianceState::vacuum(layout)
            .insert_subsystem(&sa, &map(HERALD_A, IDLER_A, 0))?
            .insert_subsystem(&sb, &map(HERALD_B, IDLER_B, b_offset))?;

        if let Some(f) = &config.filter {
            // Same pass band on every copy of the grid.
            let single = bandpass_filter(f.center, f.half_width, &[0], &grid, ModeLayout::new(1, nf)?)?;
            let pass = single.matrix();
            let mut u = CMatrix::identity(layout.n_modes(), layout.n_modes());
            for &m in &f.modes {
                for k in 0..bins {
                    let i = layout.index(m, k);
                    u[(i, i)] = pass[(k % nf, k % nf)];
                }
            }
            state = state.apply(&Transform::passive(layout, u)?)?;
        }
        for (mode, &eps) in config.loss.iter().enumerate() {
            if eps > 0.0 {
                state = state.apply(&loss(eps, &[mode], layout)?)?;
            }
        }
        Ok(Self {
            config: config.clone(),
            overlap,
            grid,
            pre_interference: state,
        })
    }

    pub fn config(&self) -> &HhomConfig {
        &self.config
    }

    /// State before the delay and beam splitter.
    pub fn pre_interference(&self) -> &CovarianceState {
        &self.pre_interference
    }

    /// Output state for a given delay and beam-splitter angle.
    pub fn state(&self, tau: f64, theta: f64) -> Result<CovarianceState> {
        let layout = self.pre_interference.layout();
        let mut s = self.pre_interference.clone();
        if tau != 0.0 {
            if self.overlap == Overlap::Disjoint {
                return Err(Error::param("delay", "the distinguishable circuit has no delay"));
            }
            s = s.apply(&delay(tau, IDLER_A, &self.grid, layout)?)?;
        }
        if theta != 0.0 {
            s = s.apply(&beam_splitter(theta, (IDLER_A, IDLER_B), layout)?)?;
        }
        Ok(s)
    }

    /// Output state at the configured delay and angle.
    pub fn output(&self) -> Result<CovarianceState> {
        let tau = if self.overlap == Overlap::Disjoint { 0.0 } else { self.config.delay };
        self.state(tau, self.config.bs_angle)
    }
}

/// Full state for a configuration (variable-delay circuit).
pub fn build_hhom(config: &HhomConfig) -> Result<CovarianceState> {
    HhomCircuit::new(config)?.output()
}

/// Four-fold, bunching and herald probabilities of one output state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HhomProbabilities {
    pub four_fold: f64,
    pub bunching: f64,
    pub herald: f64,
}

impl HhomProbabilities {
    /// `P^SPS = P^4 + P^bunch`.
    pub fn sps(&self) -> f64 {
        self.four_fold + self.bunching
    }
}

const ALL: [usize; 4] = [HERALD_A, IDLER_A, IDLER_B, HERALD_B];

fn factor(state: &CovarianceState, limits: &Detector) -> Result<FactoredState> {
    FactoredState::new(state, &ALL, limits.rank_tol)
}

fn four_fold_of(f: &FactoredState, kind: DetectorKind, limits: &Detector) -> Result<f64> {
    match kind {
        DetectorKind::Pnr => Ok(f.pnr_table(&ALL, &[1, 1, 1, 1], limits)?.get(&[1, 1, 1, 1]).unwrap()),
        DetectorKind::Threshold => f.p_threshold(&ALL, &[], limits),
    }
}

fn bunching_of(f: &FactoredState, kind: DetectorKind, limits: &Detector) -> Result<f64> {
    match kind {
        DetectorKind::Pnr => {
            let t = f.pnr_table(&ALL, &[1, 2, 2, 1], limits)?;
            Ok(t.get(&[1, 0, 2, 1]).unwrap() + t.get(&[1, 2, 0, 1]).unwrap())
        }
        DetectorKind::Threshold => Ok(f.p_threshold(&[HERALD_A, IDLER_B, HERALD_B], &[IDLER_A], limits)?
            + f.p_threshold(&[HERALD_A, IDLER_A, HERALD_B], &[IDLER_B], limits)?),
    }
}

fn herald_of(f: &FactoredState, kind: DetectorKind, limits: &Detector) -> Result<f64> {
    match kind {
        DetectorKind::Pnr => Ok(f.pnr_table(&[HERALD_A, HERALD_B], &[1, 1], limits)?.get(&[1, 1]).unwrap()),
        DetectorKind::Threshold => f.p_threshold(&[HERALD_A, HERALD_B], &[], limits),
    }
}

/// `P^4`: PNR pattern (1,1,1,1) or all four threshold detectors clicking.
pub fn four_fold(state: &CovarianceState, kind: DetectorKind, limits: &Detector) -> Result<f64> {
    four_fold_of(&factor(state, limits)?, kind, limits)
}

/// `P^bunch`: PNR (1,0,2,1) + (1,2,0,1), or threshold on/off/on/on + on/on/off/on.
pub fn bunching(state: &CovarianceState, kind: DetectorKind, limits: &Detector) -> Result<f64> {
    bunching_of(&factor(state, limits)?, kind, limits)
}

/// Both heralds fire: PNR (1,1) or threshold on/on on modes 0 and 3.
pub fn heralding_rate(state: &CovarianceState, kind: DetectorKind, limits: &Detector) -> Result<f64> {
    let f = FactoredState::new(state, &[HERALD_A, HERALD_B], limits.rank_tol)?;
    herald_of(&f, kind, limits)
}

/// All three heralded-HOM probabilities from one factorization of the state.
pub fn hhom_probabilities(
    state: &CovarianceState,
    kind: DetectorKind,
    limits: &Detector,
) -> Result<HhomProbabilities> {
    let f = factor(state, limits)?;
    let (four_fold, bunching) = match kind {
        DetectorKind::Pnr => {
            let t = f.pnr_table(&ALL, &[1, 2, 2, 1], limits)?;
            (
                t.get(&[1, 1, 1, 1]).unwrap(),
                t.get(&[1, 0, 2, 1]).unwrap() + t.get(&[1, 2, 0, 1]).unwrap(),
            )
        }
        DetectorKind::Threshold => (four_fold_of(&f, kind, limits)?, bunching_of(&f, kind, limits)?),
    };
    Ok(HhomProbabilities {
        four_fold,
        bunching,
        herald: herald_of(&f, kind, limits)?,
    })
}

/// `V^HOM = 1 - P4(tau = 0) / P4(tau = inf)`.
pub fn visibility_hom(p4_zero: f64, p4_inf: f64) -> Result<f64> {
    if !(p4_inf > 0.0) {
        return Err(Error::param("p4_inf", format!("plateau must be positive, got {p4_inf:e}")));
    }
    Ok(1.0 - p4_zero / p4_inf)
}

/// `V^MZI = (max - min) / (max + min)`.
pub fn visibility_mzi(p4_max: f64, p4_min: f64) -> Result<f64> {
    let sum = p4_max + p4_min;
    if !(sum > 0.0) {
        return Err(Error::param("p4", "max + min must be positive"));
    }
    Ok((p4_max - p4_min) / sum)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeraldingEfficiency {
    pub eta: f64,
    pub herald: f64,
    /// `P^SPS` without the beam splitter.
    pub sps_no_bs: f64,
    /// `P^SPS` recomputed at `theta = pi/4`.
    pub sps_balanced: f64,
}

/// `eta = P^SPS / P^Herald`, evaluated without the beam splitter at the
/// configured delay; `P^SPS` is re-evaluated at `theta = pi/4` and must agree.
pub fn heralding_efficiency(circuit: &HhomCircuit) -> Result<HeraldingEfficiency> {
    let cfg = circuit.config();
    let kind = cfg.detector;
    let s0 = circuit.state(cfg.delay, 0.0)?;
    let s1 = circuit.state(cfg.delay, FRAC_PI_4)?;
    let p0 = hhom_probabilities(&s0, kind, &cfg.limits)?;
    let p1 = hhom_probabilities(&s1, kind, &cfg.limits)?;
    let (a, b) = (p0.sps(), p1.sps());
    if (a - b).abs() > SPS_TOL * a.abs().max(1e-300) && (a - b).abs() > 1e-15 {
        return Err(Error::Consistency(format!(
            "P^SPS depends on the beam-splitter angle: {a:e} at 0, {b:e} at pi/4"
        )));
    }
    if !(p0.herald > 0.0) {
        return Err(Error::param("herald", "heralding rate is zero"));
    }
    Ok(HeraldingEfficiency {
        eta: a / p0.herald,
        herald: p0.herald,
        sps_no_bs: a,
        sps_balanced: b,
    })
}

/// Four-fold probabilities at the two reference settings and their ratio in
/// both orders: `max_over_inf = P4(theta = 0) / P4(tau = inf)` and its inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioR {
    pub p4_max: f64,
    pub p4_inf: f64,
    pub max_over_inf: f64,
    pub inf_over_max: f64,
}

/// `P4` at `tau -> infinity` (balanced splitter).
pub fn four_fold_infinite_delay(config: &HhomConfig) -> Result<f64> {
    let c = HhomCircuit::distinguishable(config)?;
    four_fold(&c.state(0.0, config.bs_angle)?, config.detector, &config.limits)
}

pub fn ratio_r(config: &HhomConfig) -> Result<RatioR> {
    let circuit = HhomCircuit::new(config)?;
    let p4_max = four_fold(&circuit.state(0.0, 0.0)?, config.detector, &config.limits)?;
    let p4_inf = four_fold_infinite_delay(config)?;
    if !(p4_max > 0.0 && p4_inf > 0.0) {
        return Err(Error::param("p4", "four-fold probabilities must be positive"));
    }
    Ok(RatioR {
        p4_max,
        p4_inf,
        max_over_inf: p4_max / p4_inf,
        inf_over_max: p4_inf / p4_max,
    })
}

/// Purity of the heralded photon from the Schmidt coefficients,
/// `sum tanh^4 / (sum tanh^2)^2`.
pub fn analytic_heralded_purity(lambdas: &[f64]) -> Result<f64> {
    let t2: Vec<f64> = lambdas.iter().map(|l| l.tanh().powi(2)).collect();
    let s2: f64 = t2.iter().sum();
    if !(s2 > 0.0) {
        return Err(Error::param("lambdas", "need at least one nonzero Schmidt coefficient"));
    }
    Ok(t2.iter().map(|t| t * t).sum::<f64>() / (s2 * s2))
}

/// Squeezing in dB, `20 xi / ln 10`.
pub fn squeezing_db(xi: f64) -> f64 {
    20.0 * xi / std::f64::consts::LN_10
}

/// Figures of merit of one configuration at `tau = 0`, `theta = pi/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiguresOfMerit {
    pub probabilities: HhomProbabilities,
    pub p4_inf: f64,
    pub p4_no_bs: f64,
    pub eta_herald: f64,
    pub v_hom: f64,
    pub v_mzi: f64,
}

pub fn figures_of_merit(config: &HhomConfig) -> Result<FiguresOfMerit> {
    let cfg = config.clone().with_delay(0.0).with_bs_angle(FRAC_PI_4);
    let circuit = HhomCircuit::new(&cfg)?;
    let kind = cfg.detector;
    let balanced = hhom_probabilities(&circuit.state(0.0, FRAC_PI_4)?, kind, &cfg.limits)?;
    let no_bs = hhom_probabilities(&circuit.state(0.0, 0.0)?, kind, &cfg.limits)?;
    let p4_inf = four_fold_infinite_delay(&cfg)?;
    let (a, b) = (no_bs.sps(), balanced.sps());
    if (a - b).abs() > SPS_TOL * a.abs().max(1e-300) && (a - b).abs() > 1e-15 {
        return Err(Error::Consistency(format!(
            "P^SPS depends on the beam-splitter angle: {a:e} at 0, {b:e} at pi/4"
        )));
    }
    let eta = if no_bs.herald > 0.0 { a / no_bs.herald } else { f64::NAN };
    let v_hom = if p4_inf > 0.0 { 1.0 - balanced.four_fold / p4_inf } else { f64::NAN };
    let sum = no_bs.four_fold + balanced.four_fold;
    let v_mzi = if sum > 0.0 { (no_bs.four_fold - balanced.four_fold) / sum } else { f64::NAN };
    debug!("figures of merit: {balanced:?}, p4_inf {p4_inf:e}, eta {eta}, v_hom {v_hom}, v_mzi {v_mzi}");
    Ok(FiguresOfMerit {
        probabilities: balanced,
        p4_inf,
        p4_no_bs: no_bs.four_fold,
        eta_herald: eta,
        v_hom,
        v_mzi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::LobeSign;
    use std::f64::consts::TAU;

    const THZ: f64 = TAU * 1e12;
    const NU: f64 = 193.1 * THZ;

    fn small(a: JsaSpec, b: JsaSpec, n: usize) -> HhomConfig {
        // Coarse on purpose: 2.5 bandwidths at the finest allowed step.
        let half = 2.5 * a.bandwidth.max(b.bandwidth);
        HhomConfig::new(a, b)
            .unwrap()
            .with_grid(FrequencyGrid::spanning(NU, half, n).unwrap())
    }

    fn gauss(xi: f64) -> JsaSpec {
        JsaSpec::gaussian(xi, 0.1 * THZ, NU)
    }

    #[test]
    fn no_squeezing_no_clicks() {
        let cfg = small(gauss(0.0), gauss(0.0), 21);
        let s = build_hhom(&cfg).unwrap();
        for kind in [DetectorKind::Pnr, DetectorKind::Threshold] {
            let p = hhom_probabilities(&s, kind, &cfg.limits).unwrap();
            assert_eq!((p.four_fold, p.bunching, p.herald), (0.0, 0.0, 0.0));
        }
        assert!(heralding_efficiency(&HhomCircuit::new(&cfg).unwrap()).is_err());
    }

    #[test]
    fn identical_pure_sources_fully_bunch() {
        let cfg = small(gauss(0.3), gauss(0.3), 21);
        let fom = figures_of_merit(&cfg).unwrap();
        assert!(fom.probabilities.four_fold < 1e-14);
        assert!((fom.v_hom - 1.0).abs() < 1e-10);
        assert!((fom.v_mzi - 1.0).abs() < 1e-10);
        assert!((fom.eta_herald - 1.0).abs() < 1e-10);
        // P4 at infinite delay: each idler routes independently.
        let p = hhom_probabilities(&HhomCircuit::new(&cfg).unwrap().state(0.0, 0.0).unwrap(), DetectorKind::Pnr, &cfg.limits)
            .unwrap();
        assert!((fom.p4_inf - p.four_fold / 2.0).abs() < 1e-12);
    }

    #[test]
    fn swapping_sources_changes_nothing() {
        let wg = JsaSpec::waveguide(0.4, 0.1 * THZ, 29e-12, NU);
        let g = gauss(0.5);
        for kind in [DetectorKind::Pnr, DetectorKind::Threshold] {
            let ab = small(wg, g, 21).with_detector(kind);
            let ba = small(g, wg, 21).with_detector(kind);
            let pab = hhom_probabilities(&build_hhom(&ab).unwrap(), kind, &ab.limits).unwrap();
            let pba = hhom_probabilities(&build_hhom(&ba).unwrap(), kind, &ba.limits).unwrap();
            assert!((pab.four_fold - pba.four_fold).abs() < 1e-12);
            assert!((pab.bunching - pba.bunching).abs() < 1e-12);
            assert!((pab.herald - pba.herald).abs() < 1e-12);
        }
    }

    #[test]
    fn lossless_pnr_heralds_perfectly() {
        let wg = JsaSpec::waveguide(0.6, 0.1 * THZ, 29e-12, NU);
        let cfg = small(wg, wg, 21);
        let eta = heralding_efficiency(&HhomCircuit::new(&cfg).unwrap()).unwrap();
        assert!((eta.eta - 1.0).abs() < 1e-9);
        assert!((eta.sps_no_bs - eta.sps_balanced).abs() < 1e-12);
    }

    #[test]
    fn dark_idlers_give_zero_efficiency() {
        let mut cfg = small(gauss(0.5), gauss(0.5), 21);
        cfg.loss = [0.0, 1.0, 1.0, 0.0];
        for kind in [DetectorKind::Pnr, DetectorKind::Threshold] {
            let eta = heralding_efficiency(&HhomCircuit::new(&cfg.clone().with_detector(kind)).unwrap()).unwrap();
            assert!(eta.herald > 0.0);
            assert!(eta.eta.abs() < 1e-12);
        }
    }

    #[test]
    fn filter_commutes_with_delay() {
        let wg = JsaSpec::waveguide(0.4, 0.1 * THZ, 29e-12, NU);
        let filter = FilterSpec {
            center: NU,
            half_width: 0.15 * THZ,
            modes: vec![0, 1, 2, 3],
        };
        let cfg = small(wg, wg, 21).with_filter(Some(filter.clone()));
        let tau = 2e-12;
        let fast = HhomCircuit::new(&cfg).unwrap().state(tau, 0.0).unwrap();

        // Physical order: sources, delay, filter.
        let bare = HhomCircuit::new(&cfg.clone().with_filter(None)).unwrap();
        let layout = bare.pre_interference().layout();
        let delayed = bare
            .pre_interference()
            .apply(&delay(tau, IDLER_A, &cfg.grid, layout).unwrap())
            .unwrap();
        let slow = delayed
            .apply(&bandpass_filter(NU, filter.half_width, &filter.modes, &cfg.grid, layout).unwrap())
            .unwrap();
        assert!(crate::linalg::max_abs_diff(fast.sigma(), slow.sigma()) < 1e-12);
    }

    #[test]
    fn distinguishable_circuit_has_no_delay() {
        let cfg = small(gauss(0.3), gauss(0.3), 21);
        let c = HhomCircuit::distinguishable(&cfg).unwrap();
        assert!(c.state(1e-12, FRAC_PI_4).is_err());
        assert_eq!(c.pre_interference().layout().n_spectral(), 42);
    }

    #[test]
    fn orthogonal_lobes_do_not_interfere() {
        let zeta = 0.03 * THZ;
        let plus = JsaSpec::double_lobe(0.3, zeta, 1.0e12, LobeSign::Plus, NU);
        let minus = JsaSpec::double_lobe(0.3, zeta, 1.0e12, LobeSign::Minus, NU);
        let cfg = HhomConfig::new(plus, minus).unwrap();
        let fom = figures_of_merit(&cfg).unwrap();
        assert!(fom.v_hom.abs() < 1e-6, "{}", fom.v_hom);
    }

    #[test]
    fn visibility_edges() {
        assert!(visibility_hom(0.1, 0.0).is_err());
        assert_eq!(visibility_hom(0.0, 0.5).unwrap(), 1.0);
        assert_eq!(visibility_mzi(0.3, 0.3).unwrap(), 0.0);
        assert_eq!(visibility_mzi(0.3, 0.0).unwrap(), 1.0);
        assert!(visibility_mzi(0.0, 0.0).is_err());
    }

    #[test]
    fn decibels_and_purity() {
        let xi = (1.0 / 2.0_f64.sqrt()).atanh();
        assert!((squeezing_db(xi) - 7.655).abs() < 1e-3);
        assert!((analytic_heralded_purity(&[0.7]).unwrap() - 1.0).abs() < 1e-15);
        assert!((analytic_heralded_purity(&[0.5, 0.5]).unwrap() - 0.5).abs() < 1e-15);
        assert!(analytic_heralded_purity(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn default_grid_is_odd_and_fine_enough() {
        let lobe = JsaSpec::double_lobe(0.4, 0.03 * THZ, 1.05e12, LobeSign::Minus, NU);
        let g = default_grid(&[gauss(0.4), lobe]).unwrap();
        assert_eq!(g.n_bins() % 2, 1);
        assert!(g.step() <= 0.03 * THZ / 4.0 + 1e-3);
        assert!(default_grid(&[]).is_err());
    }
}
