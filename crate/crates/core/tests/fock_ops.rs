use num_complex::Complex64;
use proptest::prelude::*;

use pdc_visibility::fock::{FockState, Mode, ModeSet, TwoModeUnitary, DEFAULT_EXPANSION_BUDGET};

fn two_modes() -> ModeSet {
    ModeSet::new(vec![Mode::A_H, Mode::A_V]).unwrap()
}

prop_compose! {
    fn small_state()(comps in prop::collection::vec(((0u16..5, 0u16..5), -1.0f64..1.0, -1.0f64..1.0), 1..8)) -> FockState {
        let comps = comps.into_iter().map(|((n1, n2), re, im)| (vec![n1, n2], Complex64::new(re, im)));
        let s = FockState::from_components(two_modes(), 10, comps).unwrap();
        let norm = s.norm();
        if norm == 0.0 { FockState::vacuum(two_modes(), 10) } else { s.scale(Complex64::new(1.0 / norm, 0.0)) }
    }
}

fn photon_distribution(s: &FockState) -> Vec<f64> {
    let mut dist = vec![0.0; 21];
    for (occ, a) in s.iter() {
        dist[occ.total() as usize] += a.norm_sqr();
    }
    dist
}

proptest! {
    #[test]
    fn canonical_commutator(s in small_state()) {
        let aad = s.create(Mode::A_H).unwrap().annihilate(Mode::A_H).unwrap();
        let ada = s.annihilate(Mode::A_H).unwrap().create(Mode::A_H).unwrap();
        // a a^dag - a^dag a = 1
        let diff = aad.add_scaled(&ada, Complex64::new(-1.0, 0.0)).unwrap();
        prop_assert!(diff.max_amplitude_difference(&s).unwrap() < 1e-12);
    }

    #[test]
    fn rotation_conserves_photon_number_and_norm(
        s in small_state(),
        theta in 0.0f64..std::f64::consts::PI,
        p1 in -3.0f64..3.0,
        p2 in -3.0f64..3.0,
    ) {
        let alpha = Complex64::from_polar(theta.cos(), p1);
        let beta = Complex64::from_polar(theta.sin(), p2);
        let u = TwoModeUnitary::su2(alpha, beta).unwrap();
        let r = s.mode_pair_rotation(Mode::A_H, Mode::A_V, &u).unwrap();
        prop_assert!((r.norm_sqr() - s.norm_sqr()).abs() < 1e-12);
        for (a, b) in photon_distribution(&r).iter().zip(photon_distribution(&s)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let back = r.mode_pair_rotation(Mode::A_H, Mode::A_V, &u.adjoint()).unwrap();
        prop_assert!(back.max_amplitude_difference(&s).unwrap() < 1e-12);
    }

    #[test]
    fn herald_outcomes_are_complete(s in small_state()) {
        let total: f64 = (0..=20u16)
            .map(|n| s.project_pattern(&[Mode::A_V], &[n]).unwrap().1)
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let (kept, p) = s.project_vacuum(&[Mode::A_V]).unwrap();
        if p > 0.0 {
            prop_assert!((kept.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn balanced_split_conserves_norm(s in small_state(), phase in -3.0f64..3.0) {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let outputs = [
            (Mode::A_H.with_port(1), Complex64::new(r, 0.0)),
            (Mode::A_H.with_port(2), Complex64::from_polar(r, phase)),
        ];
        let split = s.split_mode(Mode::A_H, &outputs, DEFAULT_EXPANSION_BUDGET).unwrap();
        prop_assert!((split.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert_eq!(split.modes().len(), 3);
    }
}

#[test]
fn number_expectation_of_fock_state() {
    let s = FockState::from_components(two_modes(), 5, [(vec![3, 1], Complex64::new(1.0, 0.0))]).unwrap();
    assert!((s.number_expectation(Mode::A_H).unwrap() - 3.0).abs() < 1e-14);
    assert!((s.normal_ordered_pair_correlation(Mode::A_H, Mode::A_V).unwrap() - 3.0).abs() < 1e-14);
}

#[test]
fn hong_ou_mandel_dip() {
    // |1,1> through a balanced beam splitter leaves no coincidences.
    let s = FockState::from_components(two_modes(), 1, [(vec![1, 1], Complex64::new(1.0, 0.0))]).unwrap();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let bs = TwoModeUnitary::su2(Complex64::new(r, 0.0), Complex64::new(r, 0.0)).unwrap();
    let out = s.mode_pair_rotation(Mode::A_H, Mode::A_V, &bs).unwrap();
    assert!(out.amplitude(&[1, 1]).norm() < 1e-15);
    assert!((out.amplitude(&[2, 0]).norm_sqr() - 0.5).abs() < 1e-14);
}
