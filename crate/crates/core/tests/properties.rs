//! Property tests for invariants that hold over whole parameter ranges.

use std::f64::consts::{FRAC_PI_4, TAU};

use proptest::prelude::*;

use mmgauss::detection::{p_threshold, pnr_table, Detector, SeriesShape, TruncatedSeries};
use mmgauss::elements::{beam_splitter, loss, phase_shifter, squeezer, JsaMatrix, JsaSpec};
use mmgauss::experiments::{
    analytic_heralded_purity, hhom_probabilities, DetectorKind, HhomCircuit, HhomConfig, SweepAxis, SweepResult,
    SweepRow,
};
use mmgauss::{CMatrix, CovarianceState, FrequencyGrid, ModeLayout, C64};

const NU: f64 = 193.1 * TAU * 1e12;

fn jsa_entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n)
}

fn random_jsa(entries: &[(f64, f64)], n: usize, xi: f64) -> JsaMatrix {
    let grid = FrequencyGrid::new(NU, 1e11, n).unwrap();
    let mut m = CMatrix::from_fn(n, n, |i, j| {
        let (re, im) = entries[i * n + j];
        C64::new(re, im)
    });
    let norm = m.norm().max(1e-3);
    m.scale_mut(xi / norm);
    JsaMatrix::from_matrix(m, grid, grid).unwrap()
}

/// Two sources on a 4 x 2 lattice, a beam splitter and a phase.
fn two_source_state(a: &[(f64, f64)], b: &[(f64, f64)], xi: f64, theta: f64, phi: f64) -> CovarianceState {
    let layout = ModeLayout::new(4, 2).unwrap();
    let mut s = CovarianceState::vacuum(layout);
    s = s.apply(&squeezer(&random_jsa(a, 2, xi), 0, 1, layout).unwrap()).unwrap();
    s = s.apply(&squeezer(&random_jsa(b, 2, xi), 3, 2, layout).unwrap()).unwrap();
    s = s.apply(&phase_shifter(phi, 2, layout).unwrap()).unwrap();
    s.apply(&beam_splitter(theta, (1, 2), layout).unwrap()).unwrap()
}

fn small_hhom(xi: f64, eps: f64, theta: f64, tau: f64, kind: DetectorKind) -> HhomConfig {
    let zeta = 0.1 * TAU * 1e12;
    let grid = FrequencyGrid::spanning(NU, 2.5 * zeta, 21).unwrap();
    HhomConfig::symmetric(JsaSpec::waveguide(xi, zeta, 29e-12, NU))
        .unwrap()
        .with_grid(grid)
        .with_uniform_loss(eps)
        .with_bs_angle(theta)
        .with_delay(tau)
        .with_detector(kind)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pure_circuits_keep_unit_determinant(
        a in jsa_entries(2), b in jsa_entries(2), xi in 0.05..1.2f64,
        theta in 0.0..TAU, phi in 0.0..TAU,
    ) {
        let s = two_source_state(&a, &b, xi, theta, phi);
        let det = s.determinant();
        prop_assert!((det.re - 1.0).abs() < 1e-8 && det.im.abs() < 1e-8, "det = {det}");
        prop_assert!(s.hermiticity_residual() < 1e-12);
    }

    #[test]
    fn elements_are_symplectic(
        a in jsa_entries(2), xi in 0.0..1.5f64, theta in 0.0..TAU, phi in 0.0..TAU,
    ) {
        let layout = ModeLayout::new(4, 2).unwrap();
        for t in [
            squeezer(&random_jsa(&a, 2, xi), 0, 1, layout).unwrap(),
            beam_splitter(theta, (1, 2), layout).unwrap(),
            phase_shifter(phi, 3, layout).unwrap(),
        ] {
            prop_assert!(t.recompute_symplectic_residual().unwrap() < 1e-12);
        }
    }

    #[test]
    fn threshold_patterns_sum_to_one(
        a in jsa_entries(2), b in jsa_entries(2), xi in 0.05..0.8f64,
        theta in 0.0..TAU, eps in 0.0..1.0f64,
    ) {
        let layout = ModeLayout::new(4, 2).unwrap();
        let s = two_source_state(&a, &b, xi, theta, 0.3)
            .apply(&loss(eps, &[1, 2], layout).unwrap())
            .unwrap();
        let det = Detector::default();
        let mut total = 0.0;
        for mask in 0u32..16 {
            let on: Vec<usize> = (0..4).filter(|i| mask >> i & 1 == 1).collect();
            let off: Vec<usize> = (0..4).filter(|i| mask >> i & 1 == 0).collect();
            let p = p_threshold(&s, &on, &off, &det).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            total += p;
        }
        prop_assert!((total - 1.0).abs() < 1e-10, "sum = {total}");
    }

    #[test]
    fn pnr_box_is_a_sub_distribution(
        a in jsa_entries(2), b in jsa_entries(2), xi in 0.05..0.6f64, theta in 0.0..TAU,
    ) {
        let s = two_source_state(&a, &b, xi, theta, 1.1);
        let t = pnr_table(&s, &[0, 1, 2, 3], &[2, 2, 2, 2], &Detector::default()).unwrap();
        let total = t.total();
        prop_assert!(total <= 1.0 + 1e-10 && total > 0.0);
        for (n, p) in t.iter() {
            prop_assert!((0.0..=1.0).contains(&p), "P({n:?}) = {p}");
        }
        // Photon pairs: odd total counts never occur without loss.
        for (n, p) in t.iter() {
            if n.iter().sum::<usize>() % 2 == 1 {
                prop_assert!(p < 1e-12, "P({n:?}) = {p}");
            }
        }
    }

    #[test]
    fn loss_scales_photon_number(
        a in jsa_entries(2), xi in 0.05..1.0f64, eps in 0.0..1.0f64,
    ) {
        let layout = ModeLayout::new(2, 2).unwrap();
        let s = CovarianceState::vacuum(layout)
            .apply(&squeezer(&random_jsa(&a, 2, xi), 0, 1, layout).unwrap())
            .unwrap();
        let lossy = s.apply(&loss(eps, &[1], layout).unwrap()).unwrap();
        let (n0, n1) = (s.mean_photon_number(1), lossy.mean_photon_number(1));
        prop_assert!((n1 - (1.0 - eps) * n0).abs() < 1e-10 * n0.max(1.0));
        prop_assert!((lossy.mean_photon_number(0) - s.mean_photon_number(0)).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn single_photon_count_is_angle_independent(
        xi in 0.05..1.0f64, eps in 0.0..0.6f64, theta in 0.0..TAU, tau in -5e-12..5e-12f64,
        threshold in any::<bool>(),
    ) {
        let kind = if threshold { DetectorKind::Threshold } else { DetectorKind::Pnr };
        let cfg = small_hhom(xi, eps, theta, tau, kind);
        let circuit = HhomCircuit::new(&cfg).unwrap();
        let p0 = hhom_probabilities(&circuit.state(tau, 0.0).unwrap(), kind, &cfg.limits).unwrap();
        let p1 = hhom_probabilities(&circuit.state(tau, theta).unwrap(), kind, &cfg.limits).unwrap();
        prop_assert!((p0.sps() - p1.sps()).abs() < 1e-8 * p0.sps().max(1e-12));
        prop_assert!((p0.herald - p1.herald).abs() < 1e-12);
    }

    #[test]
    fn threshold_visibility_never_beats_pnr(xi in 0.1..1.4f64, eps in 0.0..0.8f64) {
        let v = |kind| {
            let cfg = small_hhom(xi, eps, FRAC_PI_4, 0.0, kind);
            mmgauss::experiments::figures_of_merit(&cfg).unwrap().v_hom
        };
        let (vp, vt) = (v(DetectorKind::Pnr), v(DetectorKind::Threshold));
        prop_assert!(vt <= vp + 1e-12, "threshold {vt} > pnr {vp}");
    }
}

proptest! {
    #[test]
    fn purity_is_bounded(lambdas in prop::collection::vec(0.01..2.0f64, 1..8)) {
        let p = analytic_heralded_purity(&lambdas).unwrap();
        prop_assert!(p <= 1.0 + 1e-12 && p >= 1.0 / lambdas.len() as f64 - 1e-12);
    }

    #[test]
    fn series_log_and_exp_invert(
        c0 in (0.2..2.0f64, -1.0..1.0f64),
        rest in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 35),
    ) {
        let shape = SeriesShape::new(&[2, 1, 2]);
        let mut coeffs: Vec<C64> = rest.iter().take(shape.len()).map(|&(r, i)| C64::new(r, i)).collect();
        coeffs[0] = C64::new(c0.0, c0.1);
        let x = TruncatedSeries::from_coeffs(&shape, coeffs).unwrap();
        let back = x.ln().unwrap().exp();
        let one = x.mul(&x.inv().unwrap());
        for k in 0..shape.len() {
            prop_assert!((back.coeffs()[k] - x.coeffs()[k]).norm() < 1e-9);
            let want = if k == 0 { 1.0 } else { 0.0 };
            prop_assert!((one.coeffs()[k] - C64::new(want, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn csv_round_trips(
        rows in prop::collection::vec(
            (any::<f64>(), prop::option::of(any::<f64>()), prop::option::of(-1e-30..1.0f64), prop::option::of(0.5..4.0f64)),
            0..12,
        ),
        hash in any::<u64>(),
    ) {
        let finite = |v: f64| if v.is_finite() { v } else { 0.5 };
        let r = SweepResult {
            axis: SweepAxis::Delay,
            detector: DetectorKind::Threshold,
            config_hash: hash,
            rows: rows
                .iter()
                .enumerate()
                .map(|(i, &(v, p4, vh, ratio))| SweepRow {
                    value: finite(v) + i as f64 * 1e300,
                    p4: p4.map(finite),
                    p_bunch: None,
                    p_herald: vh,
                    eta_herald: None,
                    v_hom: vh,
                    v_mzi: p4.map(finite),
                    ratio_max_over_inf: ratio,
                })
                .collect(),
        };
        let text = r.to_csv();
        let back = SweepResult::from_csv(&text).unwrap();
        prop_assert_eq!(&back, &r);
        prop_assert_eq!(back.to_csv(), text);
    }
}
