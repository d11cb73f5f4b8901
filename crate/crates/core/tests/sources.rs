#![allow(clippy::excessive_precision)]

use num_complex::Complex64;
use proptest::prelude::*;

use pdc_visibility::closed_form::{critical_gain, vacuum_plus_amplitude, GainScheme};
use pdc_visibility::fock::{Mode, TwoModeUnitary};
use pdc_visibility::optics::to_analyzer_basis;
use pdc_visibility::source::*;
use pdc_visibility::Error;

#[test]
fn layers_are_orthonormal() {
    let layers: Vec<_> = (0..7).map(|n| singlet_layer(n).unwrap().state.truncate_pairs(6)).collect();
    for (i, a) in layers.iter().enumerate() {
        for (j, b) in layers.iter().enumerate() {
            let ip = a.inner_product(b).unwrap();
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((ip - Complex64::new(expected, 0.0)).norm() < 1e-14);
        }
    }
}

#[test]
fn frozen_pdc_amplitudes() {
    let s = build_pdc_state(Gain::new(0.5).unwrap(), Cutoff::Auto).unwrap();
    let a = 0.36343099069179364;
    assert!((s.amplitude(&[1, 0, 0, 1]).re - a).abs() < 1e-15);
    assert!((s.amplitude(&[0, 1, 1, 0]).re + a).abs() < 1e-15);
    assert!((s.amplitude(&[0, 0, 0, 0]).re - 1.0 / 0.5f64.cosh().powi(2)).abs() < 1e-15);
    assert!(s.amplitude(&[1, 0, 1, 0]).norm() == 0.0);
    assert!((s.norm_sqr() + s.truncation_loss() - 1.0).abs() < 1e-12);
    assert!(s.truncation_loss() < TAIL_TOLERANCE);
}

#[test]
fn product_form_equals_layer_form() {
    for &k in &[0.0, 0.4, 1.1] {
        let g = Gain::new(k).unwrap();
        let a = build_pdc_state(g, Cutoff::Override(15)).unwrap();
        let b = build_product_form(g, Cutoff::Override(15)).unwrap();
        assert!(a.max_amplitude_difference(&b).unwrap() < 1e-13);
    }
}

#[test]
fn binomial_expansion_matches_rotation() {
    let g = Gain::new(0.6).unwrap();
    let pdc = build_pdc_state(g, Cutoff::Override(12)).unwrap();
    for &(pa, pb) in &[(0.0, 0.0), (1.3, 0.2), (-0.7, 2.9), (std::f64::consts::PI, 0.0)] {
        let direct = pm_basis_expansion(g, pa, pb, Cutoff::Override(12)).unwrap();
        let rotated = to_analyzer_basis(&pdc, pa, pb).unwrap();
        assert!(direct.max_amplitude_difference(&rotated).unwrap() < 1e-10);
    }
}

#[test]
fn doubly_empty_plus_outputs() {
    let (k, d) = (0.7, 2.1);
    let s = pm_basis_expansion(Gain::new(k).unwrap(), d, 0.0, Cutoff::Auto).unwrap();
    for j in 0..6u16 {
        let amp = s.amplitude(&[0, j, 0, j]).norm();
        assert!((amp - vacuum_plus_amplitude(k, d, u32::from(j))).abs() < 1e-13);
    }
}

#[test]
fn exact_expansion_limit() {
    let g = Gain::new(0.6).unwrap();
    assert!(matches!(
        pm_basis_expansion(g, 0.0, 0.0, Cutoff::Override(MAX_EXACT_CUTOFF + 1)),
        Err(Error::Config(_))
    ));
}

#[test]
fn conditioned_state_is_a_thinner_pdc_state() {
    // tau tanh K = tanh K' defines an equivalent unconditioned gain.
    let (k, tau) = (0.9_f64, 0.4);
    let kp = (tau * k.tanh()).atanh();
    let a = build_conditioned_state(Gain::new(k).unwrap(), Conditioning::tap(tau).unwrap(), Cutoff::Override(20)).unwrap();
    let b = build_pdc_state(Gain::new(kp).unwrap(), Cutoff::Override(20)).unwrap();
    assert!(a.max_amplitude_difference(&b).unwrap() < 1e-14);
}

#[test]
fn gain_limits() {
    assert!(matches!(Gain::new(-0.1), Err(Error::Usage(_))));
    assert!(matches!(Gain::new(3.5), Err(Error::Config(_))));
    assert!(Gain::with_limit(3.5, 4.0).is_ok());
    assert!(matches!(Cutoff::Checked(3).resolve(0.5), Err(Error::Config(_))));
}

#[test]
fn one_pair_probability_readings() {
    let k = critical_gain(GainScheme::Linear).value;
    let p = one_pair_probability(k);
    assert!((p.layer_weight - 0.26040764008565396).abs() < 1e-12);
    assert!((p.single_term - 0.13020382004282698).abs() < 1e-12);
    assert_eq!(format!("{:.2}", p.single_term), "0.13");
}

proptest! {
    #[test]
    fn singlet_layers_are_rotation_invariant(
        n in 0usize..6,
        theta in 0.0f64..std::f64::consts::PI,
        p1 in -3.0f64..3.0,
        p2 in -3.0f64..3.0,
    ) {
        let u = TwoModeUnitary::su2(Complex64::from_polar(theta.cos(), p1), Complex64::from_polar(theta.sin(), p2)).unwrap();
        let layer = singlet_layer(n).unwrap().state;
        let r = layer
            .mode_pair_rotation(Mode::A_H, Mode::A_V, &u).unwrap()
            .mode_pair_rotation(Mode::B_H, Mode::B_V, &u).unwrap();
        prop_assert!(r.max_amplitude_difference(&layer).unwrap() < 1e-11);
    }

    #[test]
    fn observables_depend_on_phase_difference_only(
        delta in 0.0f64..std::f64::consts::TAU,
        shift in -3.0f64..3.0,
    ) {
        let pdc = build_pdc_state(Gain::new(0.4).unwrap(), Cutoff::Auto).unwrap();
        let a = to_analyzer_basis(&pdc, delta, 0.0).unwrap();
        let b = to_analyzer_basis(&pdc, delta + shift, shift).unwrap();
        let g_a = a.normal_ordered_pair_correlation(Mode::A_PLUS, Mode::B_PLUS).unwrap();
        let g_b = b.normal_ordered_pair_correlation(Mode::A_PLUS, Mode::B_PLUS).unwrap();
        prop_assert!((g_a - g_b).abs() < 1e-12);
    }

    #[test]
    fn tail_bound_is_exact_for_the_layer_series(k in 0.05f64..1.2, n_max in 0usize..15) {
        let s = build_pdc_state(Gain::new(k).unwrap(), Cutoff::Override(n_max)).unwrap();
        prop_assert!((s.norm_sqr() + pair_tail_bound(k.tanh().powi(2), n_max) - 1.0).abs() < 1e-12);
    }
}
