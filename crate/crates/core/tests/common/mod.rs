#![allow(dead_code)]

use pfkit_core::mat2::{c, Mat2, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_in<R: Rng>(rng: &mut R, scale: f64) -> C64 {
    c(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

pub fn random_matrix<R: Rng>(rng: &mut R, scale: f64) -> Mat2 {
    Mat2::new(
        complex_in(rng, scale),
        complex_in(rng, scale),
        complex_in(rng, scale),
        complex_in(rng, scale),
    )
}

/// Hermitian positive-definite matrix with eigenvalues `lo`, `hi` in a random
/// unitary frame.
pub fn hpd_with_spectrum<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Mat2 {
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let phase = C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
    let (cs, sn) = (theta.cos(), theta.sin());
    // Columns (cos, e^{iφ} sin) and (−e^{−iφ} sin, cos) are orthonormal.
    let u = Mat2::new(c(cs, 0.0), -phase.conj() * sn, phase * sn, c(cs, 0.0));
    u * Mat2::diag(c(lo, 0.0), c(hi, 0.0)) * u.adjoint()
}

/// Denman–Beavers iteration for the principal square root. Independent of the
/// spectral formula used by the library.
pub fn sqrt_denman_beavers(a: &Mat2) -> Mat2 {
    let half = c(0.5, 0.0);
    let mut y = *a;
    let mut z = Mat2::identity();
    for _ in 0..100 {
        let yi = y.inverse().expect("invertible iterate");
        let zi = z.inverse().expect("invertible iterate");
        let y_next = (y + zi).scale(half);
        let z_next = (z + yi).scale(half);
        let done = y_next.max_diff(&y) <= 1e-15 * y_next.max_abs();
        y = y_next;
        z = z_next;
        if done {
            break;
        }
    }
    y
}

/// Roots of λ² − tλ + d by the textbook quadratic formula.
pub fn quadratic_roots(t: C64, d: C64) -> (C64, C64) {
    let disc = (t * t - d * 4.0).sqrt();
    ((t + disc) * 0.5, (t - disc) * 0.5)
}

pub fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

/// Same multiset of two values within `tol`.
pub fn same_pair(a: (C64, C64), b: (C64, C64), tol: f64) -> bool {
    (close(a.0, b.0, tol) && close(a.1, b.1, tol)) || (close(a.0, b.1, tol) && close(a.1, b.0, tol))
}
