mod common;

use pfkit_core::decomposition::{decompose, Branch, DecompError, DEFAULT_TOL};
use pfkit_core::mat2::{c, Mat2, C64};
use pfkit_core::symmetry::{
    apply_pt, check_pt, classify_phase, commutant, detect_pt_scale, involutive_symmetry, Phase,
    SymmetryError, DEFAULT_PHASE_TOL,
};
use proptest::prelude::*;
use rand::Rng;

/// `[[a + ib, m], [conj(m)/x², a − ib]]` with |m| chosen so that the phase is
/// the requested one.
fn pt_matrix(rng: &mut impl Rng, phase: Phase) -> (Mat2, f64) {
    let x = rng.gen_range(0.3..3.0);
    let a = rng.gen_range(-2.0..2.0);
    let b: f64 = rng.gen_range(0.2..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let edge = x * b.abs();
    let modulus = match phase {
        Phase::Unbroken => edge * rng.gen_range(1.2..3.0),
        Phase::Broken => edge * rng.gen_range(0.1..0.8),
        Phase::ExceptionalPoint => edge,
    };
    let m = C64::from_polar(modulus, rng.gen_range(0.0..std::f64::consts::TAU));
    let h = Mat2::new(c(a, b), m, m.conj() / (x * x), c(a, -b));
    (h, x)
}

fn check_phase_sample(rng: &mut impl Rng, phase: Phase) {
    let (h, x) = pt_matrix(rng, phase);
    let report = check_pt(&h, x, DEFAULT_PHASE_TOL).unwrap();
    assert_eq!(report.phase, phase, "{h} x={x}");
    let witness = classify_phase(&h, DEFAULT_PHASE_TOL).unwrap();
    assert_eq!(witness.phase, phase, "{h}");
    let found = witness.x_param.expect("PT form detected");
    assert!((found - x).abs() <= 1e-10 * x);
    assert!((witness.q.unwrap() - report.q).abs() <= 1e-10 * (1.0 + report.q.abs()));

    let [e0, e1] = witness.eigenvalues;
    let scale = 1.0 + h.max_abs();
    // At a coalescence the roots are only accurate to about √ε.
    let eig_tol = if phase == Phase::ExceptionalPoint {
        1e-6
    } else {
        1e-10
    } * scale;
    assert!(common::same_pair(
        (e0, e1),
        (report.eps_plus, report.eps_minus),
        eig_tol
    ));

    match phase {
        Phase::Unbroken => {
            assert!(e0.im.abs() <= 1e-10 * scale && e1.im.abs() <= 1e-10 * scale);
            for (v, l) in [
                (report.vec_plus, report.lambda_plus),
                (report.vec_minus, report.lambda_minus),
            ] {
                assert!((l.norm() - 1.0).abs() <= 1e-10);
                assert!((apply_pt(x, &v) - v.scale(l)).max_abs() <= 1e-10);
            }
            for branch in [Branch::Plus, Branch::Minus] {
                let d = decompose(&h, branch, DEFAULT_TOL).unwrap();
                assert!(
                    (d.alpha.norm() - 1.0 / x).abs() <= 1e-8,
                    "|α| = {} x = {x}",
                    d.alpha.norm()
                );
                assert!((d.beta.norm() - 1.0 / x).abs() <= 1e-8);
            }
        }
        Phase::Broken => {
            assert!((e0 - e1.conj()).norm() <= 1e-10 * scale);
            let lp = report.lambda_plus;
            let lm = report.lambda_minus;
            assert!((lp.norm() - 1.0).abs() <= 1e-10 && (lm.norm() - 1.0).abs() <= 1e-10);
            assert!(
                (apply_pt(x, &report.vec_plus) - report.vec_minus.scale(lp)).max_abs() <= 1e-10
            );
            assert!(
                (apply_pt(x, &report.vec_minus) - report.vec_plus.scale(lm)).max_abs() <= 1e-10
            );
            for branch in [Branch::Plus, Branch::Minus] {
                let d = decompose(&h, branch, DEFAULT_TOL).unwrap();
                let prod = d.alpha.conj() * d.beta;
                assert!(
                    (prod - c(1.0 / (x * x), 0.0)).norm() <= 1e-8 * scale,
                    "{prod}"
                );
                // ρ and ρ + ω are a conjugate pair.
                assert!((d.omega - c(0.0, -2.0 * d.rho.im)).norm() <= 1e-8 * scale);
            }
        }
        Phase::ExceptionalPoint => {
            assert!(matches!(
                decompose(&h, Branch::Plus, DEFAULT_TOL),
                Err(DecompError::ExceptionalPoint { .. })
            ));
        }
    }
}

#[test]
fn pt_phases_agree_with_eigenvalues() {
    let mut rng = common::rng(51);
    for phase in [Phase::Unbroken, Phase::Broken, Phase::ExceptionalPoint] {
        for _ in 0..500 {
            check_phase_sample(&mut rng, phase);
        }
    }
}

#[test]
fn broken_with_imaginary_diagonal_has_imaginary_rho() {
    let mut rng = common::rng(52);
    for _ in 0..200 {
        let b: f64 = rng.gen_range(0.5..2.0);
        let m = C64::from_polar(b * rng.gen_range(0.1..0.9), rng.gen_range(0.0..6.0));
        let h = Mat2::new(c(0.0, b), m, m.conj(), c(0.0, -b));
        let d = decompose(&h, Branch::Plus, DEFAULT_TOL).unwrap();
        assert!(d.rho.re.abs() <= 1e-12);
        assert!((d.alpha.conj() * d.beta - c(1.0, 0.0)).norm() <= 1e-10);
    }
}

#[test]
fn non_pt_form_is_reported() {
    let h = Mat2::new(c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0));
    assert!(matches!(
        check_pt(&h, 1.0, DEFAULT_PHASE_TOL),
        Err(SymmetryError::NotInPTForm { .. })
    ));
    assert_eq!(detect_pt_scale(&h, DEFAULT_PHASE_TOL), None);
    let w = classify_phase(&h, DEFAULT_PHASE_TOL).unwrap();
    assert_eq!(w.phase, Phase::Unbroken);
    assert!(w.q.is_none());
    assert_eq!(
        check_pt(&h, 0.0, DEFAULT_PHASE_TOL),
        Err(SymmetryError::InvalidScale)
    );
}

#[test]
fn commutant_and_involution_on_random_matrices() {
    let mut rng = common::rng(53);
    for _ in 0..1000 {
        let h = common::random_matrix(&mut rng, 2.0);
        let d = decompose(&h, Branch::Plus, DEFAULT_TOL).unwrap();
        let scale = h.max_abs().max(1.0);
        let x = commutant(
            &d,
            common::complex_in(&mut rng, 2.0),
            common::complex_in(&mut rng, 2.0),
        )
        .unwrap();
        assert!(x.commutator(&h).max_abs() <= 1e-10 * scale * x.max_abs().max(1.0));
        let (inv, neg) = involutive_symmetry(&d).unwrap();
        let iscale = inv.max_abs().max(1.0);
        assert!((inv * inv).max_diff(&Mat2::identity()) <= 1e-10 * iscale * iscale);
        assert!(inv.commutator(&h).max_abs() <= 1e-10 * scale * iscale);
        assert_eq!(neg, -inv);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn classification_is_consistent(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let phase = [Phase::Unbroken, Phase::Broken, Phase::ExceptionalPoint][rng.gen_range(0..3)];
        let (h, x) = pt_matrix(&mut rng, phase);
        let report = check_pt(&h, x, DEFAULT_PHASE_TOL).unwrap();
        let witness = classify_phase(&h, DEFAULT_PHASE_TOL).unwrap();
        prop_assert_eq!(report.phase, witness.phase);
    }
}
