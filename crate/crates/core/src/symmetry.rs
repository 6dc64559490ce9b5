//! Matrices commuting with H, PT-type antilinear symmetry and the
//! unbroken / broken / exceptional-point classification.

use std::fmt;

use thiserror::Error;

use crate::decomposition::Decomposition;
pub use crate::mat2::coalescence_threshold;
use crate::mat2::{c, eigenvalues, Mat2, Vec2, C64, ONE};

/// Default band for phase decisions.
pub const DEFAULT_PHASE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Unbroken,
    Broken,
    ExceptionalPoint,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Unbroken => "unbroken",
            Phase::Broken => "broken",
            Phase::ExceptionalPoint => "ep",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymmetryError {
    #[error("ω = 0 or γ = 0: every matrix commutes with H")]
    TrivialCommutant,
    #[error("degenerate parameters: α = β")]
    DegenerateParameters,
    #[error("x must be real, finite and nonzero")]
    InvalidScale,
    #[error(
        "not in PT form: |H10 − conj(H01)/x²| = {off_diagonal:e}, |H11 − conj(H00)| = {diagonal:e}"
    )]
    NotInPTForm { off_diagonal: f64, diagonal: f64 },
    #[error("eigenvalues {0} and {1} are complex but not mutually conjugate")]
    Unclassifiable(C64, C64),
    #[error("Q-based phase {q_phase} disagrees with eigenvalue phase {eigen_phase}")]
    Inconsistent { q_phase: Phase, eigen_phase: Phase },
}

/// `X = [[x11, x12], [−x12·αβ, x11 − x12(α+β)]]`, the general matrix commuting
/// with H.
pub fn commutant(dec: &Decomposition, x11: C64, x12: C64) -> Result<Mat2, SymmetryError> {
    if dec.omega.norm() == 0.0 || dec.gamma.norm() == 0.0 {
        return Err(SymmetryError::TrivialCommutant);
    }
    let (alpha, beta) = (dec.alpha, dec.beta);
    Ok(Mat2::new(
        x11,
        x12,
        -x12 * alpha * beta,
        x11 - x12 * (alpha + beta),
    ))
}

/// The commuting involutions X and −X (X² = 1). X equals 2N − 1.
pub fn involutive_symmetry(dec: &Decomposition) -> Result<(Mat2, Mat2), SymmetryError> {
    let (alpha, beta) = (dec.alpha, dec.beta);
    let d = alpha - beta;
    if d.norm() == 0.0 {
        return Err(SymmetryError::DegenerateParameters);
    }
    let x11 = (alpha + beta) / d;
    let x = Mat2::new(x11, c(2.0, 0.0) / d, -alpha * beta * 2.0 / d, -x11);
    Ok((x, -x))
}

/// The parity-like matrix `[[0, x], [1/x, 0]]`.
pub fn parity(x: f64) -> Mat2 {
    Mat2::real(0.0, x, 1.0 / x, 0.0)
}

/// Applies P̃T: `v ↦ P̃ conj(v)`.
pub fn apply_pt(x: f64, v: &Vec2) -> Vec2 {
    parity(x) * v.conj()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PTReport {
    pub pt_symmetric: bool,
    pub x_param: f64,
    /// `Q_x = x²|μ|² − x⁴(Im H00)²` with μ = H01.
    pub q: f64,
    pub phase: Phase,
    /// `Re H00 ± x⁻²√Q_x`
    pub eps_plus: C64,
    pub eps_minus: C64,
    /// Eigenvectors of the form (v, 1), rescaled to unit length in the norm
    /// `|w0|² + x²|w1|²` that P̃ preserves.
    pub vec_plus: Vec2,
    pub vec_minus: Vec2,
    /// Unbroken: `P̃T|ε±⟩ = λ±|ε±⟩`. Broken: `P̃T|ε±⟩ = λ̃±|ε∓⟩`.
    pub lambda_plus: C64,
    pub lambda_minus: C64,
}

fn check_scale(x: f64) -> Result<(), SymmetryError> {
    if x.is_finite() && x != 0.0 {
        Ok(())
    } else {
        Err(SymmetryError::InvalidScale)
    }
}

/// Residuals of the two P̃T conditions: `H10 = conj(H01)/x²` and
/// `H11 = conj(H00)`.
pub fn pt_condition_residuals(h: &Mat2, x: f64) -> (f64, f64) {
    let off = (h.m10 - h.m01.conj() / (x * x)).norm();
    let diag = (h.m11 - h.m00.conj()).norm();
    (off, diag)
}

/// The positive x for which `h` has P̃T form, if any.
pub fn detect_pt_scale(h: &Mat2, tol: f64) -> Option<f64> {
    let scale = tol * (1.0 + h.max_abs());
    if (h.m11 - h.m00.conj()).norm() > scale || h.m01.norm() <= scale || h.m10.norm() <= scale {
        return None;
    }
    // conj(H01)/H10 = x² must be real and positive.
    let x2 = h.m01.conj() / h.m10;
    if x2.re <= 0.0 || x2.im.abs() > tol * (1.0 + x2.re) {
        return None;
    }
    Some(x2.re.sqrt())
}

/// `Q_x` and the eigen-gap it implies, `|ε₊ − ε₋| = 2x⁻²√|Q_x|`.
fn q_and_gap(h: &Mat2, x: f64) -> (f64, f64) {
    let x2 = x * x;
    let im = h.m00.im;
    let q = x2 * h.m01.norm_sqr() - x2 * x2 * im * im;
    (q, 2.0 * q.abs().sqrt() / x2)
}

fn classify_q(q: f64, gap: f64, threshold: f64) -> Phase {
    if gap < threshold {
        Phase::ExceptionalPoint
    } else if q > 0.0 {
        Phase::Unbroken
    } else {
        Phase::Broken
    }
}

pub fn check_pt(h: &Mat2, x: f64, tol: f64) -> Result<PTReport, SymmetryError> {
    check_scale(x)?;
    let (off_diagonal, diagonal) = pt_condition_residuals(h, x);
    let scale = tol * (1.0 + h.max_abs());
    if off_diagonal > scale || diagonal > scale {
        return Err(SymmetryError::NotInPTForm {
            off_diagonal,
            diagonal,
        });
    }
    let (q, gap) = q_and_gap(h, x);
    let phase = classify_q(q, gap, coalescence_threshold(h, tol));
    let x2 = x * x;
    let mu_bar = h.m01.conj();
    let root = c(q, 0.0).sqrt();
    let re = c(h.m00.re, 0.0);
    let eps_plus = re + root / x2;
    let eps_minus = re - root / x2;
    let lead = c(0.0, x2 * h.m00.im);
    let v_plus = (lead + root) / mu_bar;
    let v_minus = (lead - root) / mu_bar;
    let weight = |v: C64| (v.norm_sqr() + x2).sqrt();
    let vec_plus = Vec2::new(v_plus, ONE).scale(c(1.0 / weight(v_plus), 0.0));
    let vec_minus = Vec2::new(v_minus, ONE).scale(c(1.0 / weight(v_minus), 0.0));
    // P̃T(v, 1) = (x, conj(v)/x) = (conj(v)/x)·(x²/conj(v), 1); in the unbroken
    // phase x²/conj(v) = v, in the broken phase it is the partner component.
    let lambda = |from: C64, to: C64| from.conj() / x * (weight(to) / weight(from));
    let (lambda_plus, lambda_minus) = match phase {
        Phase::Broken => (lambda(v_plus, v_minus), lambda(v_minus, v_plus)),
        _ => (lambda(v_plus, v_plus), lambda(v_minus, v_minus)),
    };
    Ok(PTReport {
        pt_symmetric: true,
        x_param: x,
        q,
        phase,
        eps_plus,
        eps_minus,
        vec_plus,
        vec_minus,
        lambda_plus,
        lambda_minus,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseWitness {
    pub phase: Phase,
    pub eigenvalues: [C64; 2],
    pub gap: f64,
    pub threshold: f64,
    /// Present when H has P̃T form for some x > 0.
    pub q: Option<f64>,
    pub x_param: Option<f64>,
}

fn is_real(z: C64, tol: f64) -> bool {
    z.im.abs() <= tol * (1.0 + z.re.abs())
}

/// Phase from eigenvalue geometry, cross-checked against Q when H has P̃T form.
///
/// Coalescence within [`coalescence_threshold`] is an exceptional point; two
/// real eigenvalues are unbroken; a conjugate pair is broken.
pub fn classify_phase(h: &Mat2, tol: f64) -> Result<PhaseWitness, SymmetryError> {
    let vals = eigenvalues(h);
    let gap = (vals[1] - vals[0]).norm();
    let threshold = coalescence_threshold(h, tol);
    let size = 1.0 + vals[0].norm().max(vals[1].norm());
    let eigen_phase = if gap < threshold {
        Phase::ExceptionalPoint
    } else if is_real(vals[0], tol) && is_real(vals[1], tol) {
        Phase::Unbroken
    } else if (vals[0] - vals[1].conj()).norm() <= tol * size {
        Phase::Broken
    } else {
        return Err(SymmetryError::Unclassifiable(vals[0], vals[1]));
    };
    let x_param = detect_pt_scale(h, tol);
    let q = x_param.map(|x| q_and_gap(h, x));
    if let Some((qv, qgap)) = q {
        let q_phase = classify_q(qv, qgap, threshold);
        // Both sides measure the same gap; only a disagreement away from the
        // coalescence band is a genuine inconsistency.
        let near_band = (gap - threshold).abs() <= 1e-6 * threshold.max(gap)
            || (qgap - threshold).abs() <= 1e-6 * threshold.max(qgap);
        if q_phase != eigen_phase && !near_band {
            return Err(SymmetryError::Inconsistent {
                q_phase,
                eigen_phase,
            });
        }
    }
    Ok(PhaseWitness {
        phase: eigen_phase,
        eigenvalues: vals,
        gap,
        threshold,
        q: q.map(|t| t.0),
        x_param,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{decompose, Branch, DEFAULT_TOL};
    use crate::mat2::{I, ZERO};

    fn pauli_x() -> Mat2 {
        Mat2::real(0.0, 1.0, 1.0, 0.0)
    }

    #[test]
    fn commutant_examples() {
        let d = decompose(&pauli_x(), Branch::Minus, DEFAULT_TOL).unwrap();
        assert_eq!(commutant(&d, ONE, ZERO).unwrap(), Mat2::identity());
        let x = commutant(&d, ZERO, ONE).unwrap();
        assert!(x.max_diff(&pauli_x()) < 1e-15);
        assert!(x.commutator(&pauli_x()).max_abs() < 1e-15);
    }

    #[test]
    fn trivial_commutant() {
        let mut d = decompose(&pauli_x(), Branch::Minus, DEFAULT_TOL).unwrap();
        d.omega = ZERO;
        assert_eq!(
            commutant(&d, ONE, ONE),
            Err(SymmetryError::TrivialCommutant)
        );
    }

    #[test]
    fn involution_examples() {
        let d = decompose(&pauli_x(), Branch::Minus, DEFAULT_TOL).unwrap();
        let (x, y) = involutive_symmetry(&d).unwrap();
        assert!(x.max_diff(&pauli_x()) < 1e-15);
        assert_eq!(y, -x);

        let mut d0 = d;
        d0.alpha = ZERO;
        d0.beta = c(0.5, 0.5);
        let (x, _) = involutive_symmetry(&d0).unwrap();
        let expect = Mat2::new(-ONE, -c(2.0, 0.0) / d0.beta, ZERO, ONE);
        assert!(x.max_diff(&expect) < 1e-15);
        assert!((x * x).max_diff(&Mat2::identity()) < 1e-15);
    }

    #[test]
    fn involution_is_twice_number_minus_one() {
        let h = Mat2::new(c(0.3, 0.2), c(1.0, -0.5), c(0.1, 0.7), c(-0.4, 0.0));
        let d = decompose(&h, Branch::Plus, DEFAULT_TOL).unwrap();
        let (x, _) = involutive_symmetry(&d).unwrap();
        let (n, _) = crate::pf::number_operators(&d.pair());
        assert!(x.max_diff(&(n.scale(c(2.0, 0.0)) - Mat2::identity())) < 1e-12);
    }

    #[test]
    fn pt_exceptional_point() {
        let h = Mat2::new(I, ONE, ONE, -I);
        let r = check_pt(&h, 1.0, DEFAULT_PHASE_TOL).unwrap();
        assert_eq!(r.phase, Phase::ExceptionalPoint);
        assert!(r.q.abs() < 1e-15);
        assert!(r.eps_plus.norm() < 1e-15 && r.eps_minus.norm() < 1e-15);
        assert_eq!(
            classify_phase(&h, DEFAULT_PHASE_TOL).unwrap().phase,
            Phase::ExceptionalPoint
        );
    }

    #[test]
    fn pt_unbroken() {
        let r = check_pt(&pauli_x(), 1.0, DEFAULT_PHASE_TOL).unwrap();
        assert_eq!(r.phase, Phase::Unbroken);
        assert!((r.q - 1.0).abs() < 1e-15);
        assert!((r.lambda_plus.norm() - 1.0).abs() < 1e-12);
        assert!((r.lambda_minus.norm() - 1.0).abs() < 1e-12);
        let pt = apply_pt(1.0, &r.vec_plus);
        assert!((pt - r.vec_plus.scale(r.lambda_plus)).max_abs() < 1e-12);
    }

    #[test]
    fn pt_broken() {
        let h = Mat2::new(I * 2.0, ONE, ONE, -I * 2.0);
        let r = check_pt(&h, 1.0, DEFAULT_PHASE_TOL).unwrap();
        assert_eq!(r.phase, Phase::Broken);
        let s3 = 3f64.sqrt();
        assert!((r.eps_plus - c(0.0, s3)).norm() < 1e-12);
        assert!((r.eps_minus - c(0.0, -s3)).norm() < 1e-12);
        assert!((r.lambda_plus.norm() - 1.0).abs() < 1e-12);
        let pt = apply_pt(1.0, &r.vec_plus);
        assert!((pt - r.vec_minus.scale(r.lambda_plus)).max_abs() < 1e-12);
    }

    #[test]
    fn generalized_parity_scale() {
        // H10 = conj(H01)/x² with x = 2.
        let x = 2.0;
        let mu = c(1.0, 2.0);
        let h = Mat2::new(c(0.5, 0.1), mu, mu.conj() / (x * x), c(0.5, -0.1));
        assert!((detect_pt_scale(&h, 1e-12).unwrap() - x).abs() < 1e-12);
        let r = check_pt(&h, x, DEFAULT_PHASE_TOL).unwrap();
        assert_eq!(r.phase, Phase::Unbroken);
        for (v, l) in [(r.vec_plus, r.lambda_plus), (r.vec_minus, r.lambda_minus)] {
            assert!((apply_pt(x, &v) - v.scale(l)).max_abs() < 1e-12);
            assert!((l.norm() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(
            check_pt(&h, 1.0, 1e-9),
            Err(SymmetryError::NotInPTForm { .. })
        ));
        assert_eq!(check_pt(&h, 0.0, 1e-9), Err(SymmetryError::InvalidScale));
    }

    #[test]
    fn classify_simple_cases() {
        let w = classify_phase(&Mat2::diag(ONE, c(2.0, 0.0)), DEFAULT_PHASE_TOL).unwrap();
        assert_eq!(w.phase, Phase::Unbroken);
        assert!(w.q.is_none());
        let broken = Mat2::new(ZERO, ONE, -ONE, ZERO);
        assert_eq!(
            classify_phase(&broken, DEFAULT_PHASE_TOL).unwrap().phase,
            Phase::Broken
        );
        let odd = Mat2::diag(I, c(1.0, 2.0));
        assert!(matches!(
            classify_phase(&odd, DEFAULT_PHASE_TOL),
            Err(SymmetryError::Unclassifiable(..))
        ));
    }
}
