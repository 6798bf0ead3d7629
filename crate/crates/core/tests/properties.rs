use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use proptest::prelude::*;
use stirap_core::drive::{GaussianDrive, MixingState};
use stirap_core::linalg::ComplexMatrix;
use stirap_core::propagator::{
    basis_state, propagate_backward, propagate_state, PropagationConfig, SystemModel,
};
use stirap_core::scheme::{LevelScheme, SchemeTag};
use stirap_core::shortcut::{
    numeric_full_shortcut, shortcut_type_ii, shortcut_type_iii, ShortcutScheme, ShortcutType,
};

fn ms(theta: f64, theta_dot: f64) -> MixingState {
    MixingState {
        t: 0.0,
        theta,
        theta_dot,
        rms: 1.0,
    }
}

fn m_chain() -> impl Strategy<Value = LevelScheme> {
    prop_oneof![Just(LevelScheme::m21()), Just(LevelScheme::m22())]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn full_shortcut_is_gauge_invariant(
        s in m_chain(),
        theta in 0.02..1.55_f64,
        phases in proptest::collection::vec(-3.0..3.0_f64, 5),
    ) {
        let (frame, dw) = s.unit_frame(theta).unwrap();
        let a = numeric_full_shortcut(&frame.vectors, &dw).unwrap();
        let mut g = ComplexMatrix::zeros(5, 5);
        for (k, &p) in phases.iter().enumerate() {
            g[(k, k)] = Complex64::from_polar(1.0, p);
        }
        let b = numeric_full_shortcut(&(&frame.vectors * &g), &(dw * &g)).unwrap();
        prop_assert!((a.matrix() - b.matrix()).camax() < 1e-12);
    }

    #[test]
    fn type_ii_and_iii_mirror_under_reflection(s in m_chain(), theta in 0.0..FRAC_PI_2, rate in -3.0..3.0_f64) {
        let a = shortcut_type_ii(&s, &ms(theta, rate)).unwrap();
        let b = shortcut_type_ii(&s, &ms(FRAC_PI_2 - theta, rate)).unwrap();
        prop_assert!((a.get((0, 2)) - b.get((2, 4))).abs() < 1e-12);
        let a = shortcut_type_iii(&s, &ms(theta, rate)).unwrap();
        let b = shortcut_type_iii(&s, &ms(FRAC_PI_2 - theta, rate)).unwrap();
        prop_assert!((a.get((0, 2)) - b.get((0, 2))).abs() < 1e-12);
        prop_assert!((a.get((0, 4)) - b.get((0, 4))).abs() < 1e-12);
    }

    #[test]
    fn shortcut_fields_are_linear_in_rate(s in m_chain(), theta in 0.0..FRAC_PI_2, rate in -3.0..3.0_f64) {
        let unit = shortcut_type_ii(&s, &ms(theta, 1.0)).unwrap();
        let f = shortcut_type_ii(&s, &ms(theta, rate)).unwrap();
        for c in &unit.couplings {
            prop_assert!((f.get(c.link) - rate * c.amplitude).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn perturbed_runs_conserve_norm_and_reverse(
        tag in prop_oneof![Just(SchemeTag::M21), Just(SchemeTag::M22), Just(SchemeTag::SigmaPi22)],
        phase in 0.0..3.2_f64,
        xi in 0.0..2.0_f64,
        beta in 0.0..2.0_f64,
        area in 3.0..60.0_f64,
    ) {
        let s = LevelScheme::from_tag(tag).unwrap();
        let kind = if tag == SchemeTag::SigmaPi22 { ShortcutType::TypeII } else { ShortcutType::TypeIII };
        let sc = ShortcutScheme::new(kind).with_phase(phase).with_amplitude_scale(xi).with_stokes_scale(beta);
        let m = SystemModel::new(s, GaussianDrive::from_area(area, 1.0).unwrap(), sc).unwrap();
        let cfg = PropagationConfig { steps: 512, ..Default::default() };
        let c0 = basis_state(5, 0);
        let c1 = propagate_state(&m, &cfg, &c0).unwrap();
        prop_assert!((c1.norm() - 1.0).abs() < 1e-10);
        let back = propagate_backward(&m, &cfg, &c1).unwrap();
        prop_assert!((back - c0).norm() < 1e-8);
    }
}
