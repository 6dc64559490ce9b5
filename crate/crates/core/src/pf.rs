//! Pseudo-fermion operator pairs.
//!
//! A pair (a, b) obeys `{a, b} = 1`, `a² = b² = 0` without requiring
//! `b = a†`. Every non-trivial pair on a two-dimensional space falls into one
//! of the families in [`FamilyKind`]; the general family is parameterized by
//! [`PFParameters`].

use rand::Rng;
use thiserror::Error;

use crate::mat2::{c, is_finite, null_vector, Mat2, Vec2, C64, ONE, ZERO};

/// Tolerance on the scaled constraint residual and on the pair rules.
pub const CONSTRAINT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PfError {
    #[error("parameter {0} must be nonzero")]
    ZeroParameter(&'static str),
    #[error(
        "constraint 2·a11·b11 − a11²·b12/a12 − b11²·a12/b12 = 1 violated (residual {residual:e})"
    )]
    ConstraintViolated { residual: f64 },
    #[error("anti-commutation rules violated (residual {residual:e})")]
    RulesViolated { residual: f64 },
    #[error("non-finite parameter")]
    NonFinite,
    #[error("invalid limit sequence: {0}")]
    InvalidSequence(&'static str),
}

/// The four complex parameters (α₁₁, α₁₂, β₁₁, β₁₂) of the general family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PFParameters {
    a11: C64,
    a12: C64,
    b11: C64,
    b12: C64,
}

/// Scaled residual of the constraint. The three terms can be large while
/// their combination is 1, so the deviation is measured against their size.
pub fn constraint_residual(a11: C64, a12: C64, b11: C64, b12: C64) -> f64 {
    let t1 = a11 * b11 * 2.0;
    let t2 = a11 * a11 * b12 / a12;
    let t3 = b11 * b11 * a12 / b12;
    let dev = (t1 - t2 - t3 - ONE).norm();
    dev / (t1.norm() + t2.norm() + t3.norm()).max(1.0)
}

impl PFParameters {
    pub fn new(a11: C64, a12: C64, b11: C64, b12: C64) -> Result<Self, PfError> {
        if ![a11, a12, b11, b12].iter().all(|z| is_finite(*z)) {
            return Err(PfError::NonFinite);
        }
        if a12.norm() == 0.0 {
            return Err(PfError::ZeroParameter("a12"));
        }
        if b12.norm() == 0.0 {
            return Err(PfError::ZeroParameter("b12"));
        }
        let residual = constraint_residual(a11, a12, b11, b12);
        if residual.is_nan() || residual > CONSTRAINT_TOL {
            return Err(PfError::ConstraintViolated { residual });
        }
        Ok(Self { a11, a12, b11, b12 })
    }

    pub fn a11(&self) -> C64 {
        self.a11
    }

    pub fn a12(&self) -> C64 {
        self.a12
    }

    pub fn b11(&self) -> C64 {
        self.b11
    }

    pub fn b12(&self) -> C64 {
        self.b12
    }

    /// α = α₁₁/α₁₂
    pub fn alpha(&self) -> C64 {
        self.a11 / self.a12
    }

    /// β = β₁₁/β₁₂
    pub fn beta(&self) -> C64 {
        self.b11 / self.b12
    }

    /// γ = α₁₂β₁₁ − α₁₁β₁₂; the constraint is equivalent to (α − β)γ = 1.
    pub fn gamma(&self) -> C64 {
        self.a12 * self.b11 - self.a11 * self.b12
    }

    pub fn constraint_residual(&self) -> f64 {
        constraint_residual(self.a11, self.a12, self.b11, self.b12)
    }

    /// Random valid parameters.
    ///
    /// α₁₁, α₁₂ and β₁₂ are uniform on the annulus 0.2 ≤ |z| ≤ 2; β₁₁ is the
    /// root of the (quadratic) constraint farther from α₁₁.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let a11 = sample_annulus(rng, 0.2, 2.0);
            let a12 = sample_annulus(rng, 0.2, 2.0);
            let b12 = sample_annulus(rng, 0.2, 2.0);
            // β₁₁ = β₁₂(α₁₁ ∓ √(−α₁₂/β₁₂))/α₁₂
            let s = (-a12 / b12).sqrt();
            let r1 = b12 * (a11 - s) / a12;
            let r2 = b12 * (a11 + s) / a12;
            let b11 = if (r1 - a11).norm() >= (r2 - a11).norm() {
                r1
            } else {
                r2
            };
            if let Ok(p) = Self::new(a11, a12, b11, b12) {
                return p;
            }
        }
    }
}

/// Uniform (in area) sample from the annulus `r_min ≤ |z| ≤ r_max`.
pub fn sample_annulus<R: Rng + ?Sized>(rng: &mut R, r_min: f64, r_max: f64) -> C64 {
    let u: f64 = rng.gen();
    let r = (r_min * r_min + u * (r_max * r_max - r_min * r_min)).sqrt();
    let theta = rng.gen::<f64>() * std::f64::consts::TAU;
    C64::from_polar(r, theta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyKind {
    /// a = [[0,1],[0,0]], b = [[β,−β²],[1,−β]]
    FamilyOne(C64),
    /// a = [[α,1],[−α²,−α]], b = [[0,0],[1,0]]
    FamilyTwo(C64),
    General(PFParameters),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PFPair {
    pub a: Mat2,
    pub b: Mat2,
    /// `None` for pairs outside the general family (family two, which is
    /// only its x → 0 limit, and standard fermions).
    pub params: Option<PFParameters>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleResiduals {
    /// max |{a, b} − 1|
    pub anticommutator: f64,
    pub a_squared: f64,
    pub b_squared: f64,
}

impl RuleResiduals {
    pub fn max(&self) -> f64 {
        self.anticommutator.max(self.a_squared).max(self.b_squared)
    }
}

// a(3), b(3) without validation.
fn general_matrices(a11: C64, a12: C64, b11: C64, b12: C64) -> (Mat2, Mat2) {
    let a = Mat2::new(a11, a12, -a11 * a11 / a12, -a11);
    let b = Mat2::new(b11, b12, -b11 * b11 / b12, -b11);
    (a, b)
}

fn pair_rules(a: &Mat2, b: &Mat2) -> RuleResiduals {
    RuleResiduals {
        anticommutator: (a.anticommutator(b) - Mat2::identity()).max_abs(),
        a_squared: (*a * *a).max_abs(),
        b_squared: (*b * *b).max_abs(),
    }
}

impl PFPair {
    /// c = [[0,1],[0,0]] with b = c†.
    pub fn standard_fermion() -> Self {
        Self {
            a: Mat2::real(0.0, 1.0, 0.0, 0.0),
            b: Mat2::real(0.0, 0.0, 1.0, 0.0),
            params: None,
        }
    }

    pub fn rule_residuals(&self) -> RuleResiduals {
        pair_rules(&self.a, &self.b)
    }

    /// Rule residual relative to the operator scale ‖a‖‖b‖.
    pub fn scaled_rule_residual(&self) -> f64 {
        self.rule_residuals().max() / (self.a.max_abs() * self.b.max_abs()).max(1.0)
    }

    pub fn number_operators(&self) -> (Mat2, Mat2) {
        number_operators(self)
    }
}

pub fn build(kind: FamilyKind) -> Result<PFPair, PfError> {
    let pair = match kind {
        FamilyKind::FamilyOne(beta) => {
            if beta.norm() == 0.0 {
                return Err(PfError::ZeroParameter("beta"));
            }
            let params = PFParameters::new(ZERO, ONE, beta, -beta * beta)?;
            let a = Mat2::real(0.0, 1.0, 0.0, 0.0);
            let b = Mat2::new(beta, -beta * beta, ONE, -beta);
            PFPair {
                a,
                b,
                params: Some(params),
            }
        }
        FamilyKind::FamilyTwo(alpha) => {
            if alpha.norm() == 0.0 {
                return Err(PfError::ZeroParameter("alpha"));
            }
            let a = Mat2::new(alpha, ONE, -alpha * alpha, -alpha);
            let b = Mat2::real(0.0, 0.0, 1.0, 0.0);
            PFPair { a, b, params: None }
        }
        FamilyKind::General(p) => {
            let (a, b) = general_matrices(p.a11, p.a12, p.b11, p.b12);
            PFPair {
                a,
                b,
                params: Some(p),
            }
        }
    };
    let residual = pair.scaled_rule_residual();
    if residual > CONSTRAINT_TOL {
        return Err(PfError::RulesViolated { residual });
    }
    Ok(pair)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitStep {
    pub x: f64,
    /// max |a(x) − a(2)|
    pub a_residual: f64,
    /// max |b(x) − b(2)|
    pub b_residual: f64,
    /// Scaled constraint residual of (α, 1, x, −x²); only vanishes as x → 0.
    pub constraint_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub steps: Vec<LimitStep>,
    /// Both residual sequences are non-increasing.
    pub monotone: bool,
}

impl LimitReport {
    pub fn final_residual(&self) -> f64 {
        self.steps
            .last()
            .map_or(f64::INFINITY, |s| s.a_residual.max(s.b_residual))
    }
}

/// Follows (α₁₁, α₁₂, β₁₁, β₁₂) = (α, 1, x, −x²) toward x = 0 and measures the
/// distance to family two. These intermediate points do not satisfy the
/// constraint, so matrices are formed without validation.
pub fn family_two_limit(alpha: C64, xs: &[f64]) -> Result<LimitReport, PfError> {
    if alpha.norm() == 0.0 {
        return Err(PfError::ZeroParameter("alpha"));
    }
    if xs.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(PfError::InvalidSequence(
            "entries must be positive and finite",
        ));
    }
    if xs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(PfError::InvalidSequence(
            "sequence must be strictly decreasing",
        ));
    }
    let target = build(FamilyKind::FamilyTwo(alpha))?;
    let steps: Vec<LimitStep> = xs
        .iter()
        .map(|&x| {
            let (b11, b12) = (c(x, 0.0), c(-x * x, 0.0));
            let (a, b) = general_matrices(alpha, ONE, b11, b12);
            LimitStep {
                x,
                a_residual: a.max_diff(&target.a),
                b_residual: b.max_diff(&target.b),
                constraint_residual: constraint_residual(alpha, ONE, b11, b12),
            }
        })
        .collect();
    let monotone = steps
        .windows(2)
        .all(|w| w[1].a_residual <= w[0].a_residual && w[1].b_residual <= w[0].b_residual);
    Ok(LimitReport { steps, monotone })
}

/// Vacua φ₀ (a φ₀ = 0) and Ψ₀ (b† Ψ₀ = 0) with ⟨Ψ₀, φ₀⟩ = 1.
///
/// For the general family the closed forms φ₀ = N_φ(1, −α) and
/// Ψ₀ = N_Ψ(1, 1/β̄) are used with N_φ = 1 and N_Ψ = conj(α₁₂β₁₁/γ). When
/// β = 0, or outside the general family, both are computed as kernels.
pub fn vacuum_states(pair: &PFPair) -> (Vec2, Vec2) {
    if let Some(p) = pair.params {
        if p.b11.norm() > 1e-150 {
            let phi0 = Vec2::new(ONE, -p.alpha());
            let npsi = (p.a12 * p.b11 / p.gamma()).conj();
            let psi0 = Vec2::new(npsi, npsi / p.beta().conj());
            if phi0.is_finite() && psi0.is_finite() {
                return (phi0, psi0);
            }
        }
    }
    kernel_vacua(pair)
}

fn kernel_vacua(pair: &PFPair) -> (Vec2, Vec2) {
    // a and b† are nilpotent and nonzero, hence rank one.
    let phi0 = null_vector(&pair.a).expect("a is nilpotent and nonzero");
    let phi0 = if phi0.c0.norm() > 1e-12 {
        phi0.scale(phi0.c0.inv())
    } else {
        phi0
    };
    let psi0 = null_vector(&pair.b.adjoint()).expect("b is nilpotent and nonzero");
    let overlap = psi0.inner(&phi0);
    (phi0, psi0.scale(overlap.conj().inv()))
}

/// φ₁ = b φ₀ and Ψ₁ = a† Ψ₀.
pub fn excited_states(pair: &PFPair, phi0: &Vec2, psi0: &Vec2) -> (Vec2, Vec2) {
    (pair.b * *phi0, pair.a.adjoint() * *psi0)
}

/// N = ba and N† = a†b†.
pub fn number_operators(pair: &PFPair) -> (Mat2, Mat2) {
    let n = pair.b * pair.a;
    let ndag = pair.a.adjoint() * pair.b.adjoint();
    (n, ndag)
}
