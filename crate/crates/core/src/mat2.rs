//! Fixed-shape 2×2 complex linear algebra.
//!
//! Everything downstream (operator pairs, Hamiltonians, metrics) is a [`Mat2`]
//! or a [`Vec2`]. The eigen-solver works on the quadratic characteristic
//! polynomial directly and reports coalescing eigenvalues as
//! [`LinalgError::DegenerateSpectrum`] instead of returning a defective basis.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Relative gap below which two eigenvalues are treated as coalescent.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("eigenvalues coalesce (gap {gap:e} < threshold {threshold:e})")]
    DegenerateSpectrum { gap: f64, threshold: f64 },
    #[error("matrix is not Hermitian (residual {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("non-finite matrix or vector entry")]
    NonFinite,
}

/// Shorthand for `C64::new(re, im)`.
#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub(crate) fn is_finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

// f64::max ignores NaN; residuals must not.
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Lexicographic order on (re, im).
pub fn lex_cmp(a: &C64, b: &C64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub c0: C64,
    pub c1: C64,
}

impl Vec2 {
    pub const fn new(c0: C64, c1: C64) -> Self {
        Self { c0, c1 }
    }

    pub fn try_new(c0: C64, c1: C64) -> Result<Self, LinalgError> {
        if is_finite(c0) && is_finite(c1) {
            Ok(Self { c0, c1 })
        } else {
            Err(LinalgError::NonFinite)
        }
    }

    pub fn real(c0: f64, c1: f64) -> Self {
        Self::new(c(c0, 0.0), c(c1, 0.0))
    }

    pub fn zero() -> Self {
        Self::new(ZERO, ZERO)
    }

    /// ⟨self, other⟩, antilinear in `self`.
    pub fn inner(&self, other: &Vec2) -> C64 {
        self.c0.conj() * other.c0 + self.c1.conj() * other.c1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        nan_max(self.c0.norm(), self.c1.norm())
    }

    pub fn conj(&self) -> Vec2 {
        Vec2::new(self.c0.conj(), self.c1.conj())
    }

    pub fn scale(&self, z: C64) -> Vec2 {
        Vec2::new(self.c0 * z, self.c1 * z)
    }

    pub fn is_finite(&self) -> bool {
        is_finite(self.c0) && is_finite(self.c1)
    }

    /// |self⟩⟨other|
    pub fn outer(&self, other: &Vec2) -> Mat2 {
        Mat2::new(
            self.c0 * other.c0.conj(),
            self.c0 * other.c1.conj(),
            self.c1 * other.c0.conj(),
            self.c1 * other.c1.conj(),
        )
    }

    /// Unit vector with its largest component real and positive.
    pub fn normalized_canonical(&self) -> Vec2 {
        let pivot = if self.c0.norm() >= self.c1.norm() {
            self.c0
        } else {
            self.c1
        };
        let phase = pivot.conj() / pivot.norm();
        self.scale(phase / self.norm())
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.c0 + o.c0, self.c1 + o.c1)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.c0 - o.c0, self.c1 - o.c1)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.c0, -self.c1)
    }
}

impl Mul<C64> for Vec2 {
    type Output = Vec2;
    fn mul(self, z: C64) -> Vec2 {
        self.scale(z)
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.c0, self.c1)
    }
}

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m00: C64,
    pub m01: C64,
    pub m10: C64,
    pub m11: C64,
}

impl Mat2 {
    pub const fn new(m00: C64, m01: C64, m10: C64, m11: C64) -> Self {
        Self { m00, m01, m10, m11 }
    }

    pub fn try_new(m00: C64, m01: C64, m10: C64, m11: C64) -> Result<Self, LinalgError> {
        let m = Self::new(m00, m01, m10, m11);
        if m.is_finite() {
            Ok(m)
        } else {
            Err(LinalgError::NonFinite)
        }
    }

    pub fn real(m00: f64, m01: f64, m10: f64, m11: f64) -> Self {
        Self::new(c(m00, 0.0), c(m01, 0.0), c(m10, 0.0), c(m11, 0.0))
    }

    pub fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn diag(d0: C64, d1: C64) -> Self {
        Self::new(d0, ZERO, ZERO, d1)
    }

    pub fn scalar(z: C64) -> Self {
        Self::diag(z, z)
    }

    pub fn entries(&self) -> [C64; 4] {
        [self.m00, self.m01, self.m10, self.m11]
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| is_finite(*z))
    }

    pub fn adjoint(&self) -> Mat2 {
        Mat2::new(
            self.m00.conj(),
            self.m10.conj(),
            self.m01.conj(),
            self.m11.conj(),
        )
    }

    pub fn conj(&self) -> Mat2 {
        Mat2::new(
            self.m00.conj(),
            self.m01.conj(),
            self.m10.conj(),
            self.m11.conj(),
        )
    }

    pub fn trace(&self) -> C64 {
        self.m00 + self.m11
    }

    pub fn det(&self) -> C64 {
        self.m00 * self.m11 - self.m01 * self.m10
    }

    pub fn scale(&self, z: C64) -> Mat2 {
        Mat2::new(self.m00 * z, self.m01 * z, self.m10 * z, self.m11 * z)
    }

    pub fn mul_vec(&self, v: &Vec2) -> Vec2 {
        Vec2::new(
            self.m00 * v.c0 + self.m01 * v.c1,
            self.m10 * v.c0 + self.m11 * v.c1,
        )
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d.norm() == 0.0 {
            return None;
        }
        let inv = Mat2::new(self.m11, -self.m01, -self.m10, self.m00).scale(d.inv());
        inv.is_finite().then_some(inv)
    }

    /// [A, B] = AB − BA
    pub fn commutator(&self, other: &Mat2) -> Mat2 {
        *self * *other - *other * *self
    }

    /// {A, B} = AB + BA
    pub fn anticommutator(&self, other: &Mat2) -> Mat2 {
        *self * *other + *other * *self
    }

    /// Largest entry modulus; NaN if any entry is NaN.
    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|z| z.norm()).fold(0.0, nan_max)
    }

    pub fn frobenius(&self) -> f64 {
        self.entries()
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Spectral norm (largest singular value).
    pub fn op_norm(&self) -> f64 {
        let f2 = self.entries().iter().map(|z| z.norm_sqr()).sum::<f64>();
        let d = self.det().norm();
        let disc = (f2 * f2 - 4.0 * d * d).max(0.0);
        ((f2 + disc.sqrt()) / 2.0).sqrt()
    }

    /// max |M − M†|
    pub fn hermitian_residual(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }

    pub fn max_diff(&self, other: &Mat2) -> f64 {
        (*self - *other).max_abs()
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m00 + o.m00,
            self.m01 + o.m01,
            self.m10 + o.m10,
            self.m11 + o.m11,
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m00 - o.m00,
            self.m01 - o.m01,
            self.m10 - o.m10,
            self.m11 - o.m11,
        )
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-ONE)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m00 * o.m00 + self.m01 * o.m10,
            self.m00 * o.m01 + self.m01 * o.m11,
            self.m10 * o.m00 + self.m11 * o.m10,
            self.m10 * o.m01 + self.m11 * o.m11,
        )
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        self.mul_vec(&v)
    }
}

impl Mul<C64> for Mat2 {
    type Output = Mat2;
    fn mul(self, z: C64) -> Mat2 {
        self.scale(z)
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.m00, self.m01, self.m10, self.m11
        )
    }
}

/// Componentwise AB + BA.
pub fn anticommutator(a: &Mat2, b: &Mat2) -> Mat2 {
    a.anticommutator(b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub value: C64,
    /// Unit norm, largest component real and positive.
    pub vector: Vec2,
}

/// Both eigenvalues, sorted lexicographically by (re, im). Never fails; use
/// [`eigenpairs`] when coalescence must be detected.
pub fn eigenvalues(m: &Mat2) -> [C64; 2] {
    let half_tr = (m.m00 + m.m11) * 0.5;
    let half_diff = (m.m00 - m.m11) * 0.5;
    let root = (half_diff * half_diff + m.m01 * m.m10).sqrt();
    let mut vals = [half_tr - root, half_tr + root];
    vals.sort_by(lex_cmp);
    vals
}

/// Coalescence threshold `tol·(1 + |tr M|)` used by [`eigenpairs`].
pub fn degeneracy_threshold(m: &Mat2, tol: f64) -> f64 {
    tol * (1.0 + m.trace().norm())
}

/// Coalescence band for the eigen-gap. Near an exceptional point the gap
/// scales like the square root of the perturbation, so the band is √tol.
pub fn coalescence_threshold(h: &Mat2, tol: f64) -> f64 {
    tol.sqrt() * (1.0 + h.trace().norm())
}

/// Eigenpairs ordered by (re, im) of the eigenvalue.
///
/// Returns `DegenerateSpectrum` when `|λ₊ − λ₋| < tol·(1 + |tr M|)`, which
/// covers both scalar matrices and Jordan blocks.
pub fn eigenpairs(m: &Mat2, tol: f64) -> Result<[EigenPair; 2], LinalgError> {
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let vals = eigenvalues(m);
    let gap = (vals[1] - vals[0]).norm();
    let threshold = degeneracy_threshold(m, tol);
    if gap < threshold {
        return Err(LinalgError::DegenerateSpectrum { gap, threshold });
    }
    Ok(vals.map(|value| EigenPair {
        value,
        vector: eigenvector_for(m, value),
    }))
}

// Two candidate null vectors of (M − λ): one from each row. The larger one is
// well conditioned whenever the eigenvalues are distinct.
fn eigenvector_for(m: &Mat2, lambda: C64) -> Vec2 {
    let from_row0 = Vec2::new(m.m01, lambda - m.m00);
    let from_row1 = Vec2::new(lambda - m.m11, m.m10);
    let v = if from_row0.norm_sqr() >= from_row1.norm_sqr() {
        from_row0
    } else {
        from_row1
    };
    v.normalized_canonical()
}

/// Nonzero vector spanning the kernel of a rank-one matrix.
pub fn null_vector(m: &Mat2) -> Option<Vec2> {
    let row0 = Vec2::new(m.m01, -m.m00);
    let row1 = Vec2::new(m.m11, -m.m10);
    let v = if row0.norm_sqr() >= row1.norm_sqr() {
        row0
    } else {
        row1
    };
    (v.norm_sqr() > 0.0).then(|| v.normalized_canonical())
}

fn check_hermitian(m: &Mat2, tol: f64) -> Result<(), LinalgError> {
    let residual = m.hermitian_residual();
    if residual > tol * (1.0 + m.max_abs()) {
        Err(LinalgError::NotHermitian(residual))
    } else {
        Ok(())
    }
}

// Real eigenvalues (low, high) of a Hermitian matrix.
fn hermitian_eigenvalues(m: &Mat2) -> (f64, f64) {
    let a = m.m00.re;
    let d = m.m11.re;
    let mean = 0.5 * (a + d);
    let radius = (0.5 * (a - d)).hypot(m.m01.norm());
    let high = mean + radius;
    // det/high avoids cancellation in mean − radius for ill-conditioned input.
    let det = a * d - m.m01.norm_sqr();
    let low = if high > 0.0 {
        det / high
    } else {
        mean - radius
    };
    (low, high)
}

/// Sylvester's criterion: `m00 > tol` and `det M > tol`.
pub fn is_positive_definite(m: &Mat2, tol: f64) -> Result<bool, LinalgError> {
    check_hermitian(m, tol)?;
    Ok(m.m00.re > tol && m.det().re > tol)
}

/// Unique Hermitian positive-definite square root.
///
/// Uses the spectral calculus for 2×2 matrices: with eigenvalues λ₋ ≤ λ₊,
/// `√M = (√(λ₊λ₋)·1 + M) / (√λ₊ + √λ₋)`. This form has no division by the
/// eigenvalue gap, so it stays accurate for nearly scalar input.
pub fn hermitian_sqrt_oracle(m: &Mat2, tol: f64) -> Result<Mat2, LinalgError> {
    check_hermitian(m, tol)?;
    let h = hermitian_part(m);
    let (low, high) = hermitian_eigenvalues(&h);
    if !(low > 0.0 && high > 0.0) {
        return Err(LinalgError::NotPositiveDefinite);
    }
    let (sl, sh) = (low.sqrt(), high.sqrt());
    let denom = sl + sh;
    let root = (Mat2::scalar(c(sl * sh, 0.0)) + h).scale(c(1.0 / denom, 0.0));
    Ok(hermitian_part(&root))
}

/// (M + M†)/2
pub fn hermitian_part(m: &Mat2) -> Mat2 {
    (*m + m.adjoint()).scale(c(0.5, 0.0))
}
