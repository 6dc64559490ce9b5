//! Writing a Hamiltonian as `H = ωN + ρ1` with `N = ba` a pseudo-fermionic
//! number operator, and everything derived from that form: biorthogonal
//! eigenvectors, metric operators with closed-form square roots, and the
//! Hermitian counterpart.

use thiserror::Error;

use crate::mat2::{
    c, coalescence_threshold, eigenvalues, hermitian_sqrt_oracle, is_finite, is_positive_definite,
    LinalgError, Mat2, Vec2, C64, ONE,
};
use crate::pf::{self, FamilyKind, PFPair, PFParameters, PfError};

/// Relative agreement required between a closed-form root and the oracle
/// before the oracle value replaces it.
pub const CLOSED_FORM_ACCEPT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompError {
    #[error("eigenvalues coalesce at {value} (gap {gap:e} < {threshold:e}); no pseudo-fermions")]
    ExceptionalPoint {
        value: C64,
        gap: f64,
        threshold: f64,
    },
    #[error("H(0,1) = 0: the matrix is outside the ωN + ρ form")]
    UnsupportedShape,
    #[error("eigenvectors cannot be scaled to (1, −α)")]
    EigenvectorDegenerate,
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(&'static str),
    #[error("metric is not positive definite")]
    NotPositiveDefinite,
    #[error("non-finite input")]
    NonFinite,
    #[error(transparent)]
    Parameters(#[from] PfError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn other(self) -> Branch {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }
}

/// The map H → (α₁₁, α₁₂, β₁₁, β₁₂) leaves one complex scale free. A gauge
/// fixes it through either α₁₂ or α₁₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gauge {
    Alpha12(C64),
    /// Requires α ≠ 0.
    Alpha11(C64),
}

impl Default for Gauge {
    fn default() -> Self {
        Gauge::Alpha12(ONE)
    }
}

impl Gauge {
    /// Parameters for given α and β, with γ = 1/(α − β).
    pub fn parameters(self, alpha: C64, beta: C64) -> Result<PFParameters, DecompError> {
        let gamma = (alpha - beta).inv();
        let a12 = match self {
            Gauge::Alpha12(v) => v,
            Gauge::Alpha11(v) => {
                if alpha.norm() == 0.0 {
                    return Err(DecompError::DegenerateParameters(
                        "alpha11 gauge needs alpha != 0",
                    ));
                }
                v / alpha
            }
        };
        if a12.norm() == 0.0 || !is_finite(a12) {
            return Err(DecompError::DegenerateParameters(
                "alpha12 must be finite and nonzero",
            ));
        }
        let b12 = -gamma * gamma / a12;
        Ok(PFParameters::new(alpha * a12, a12, beta * b12, b12)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub omega: C64,
    pub rho: C64,
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    /// ωγ, the (0,1) entry of H.
    pub mu: C64,
    pub branch: Branch,
    pub params: PFParameters,
}

impl Decomposition {
    /// Builds the decomposition for known parameters, ω and ρ.
    pub fn from_params(params: PFParameters, omega: C64, rho: C64, branch: Branch) -> Self {
        let gamma = params.gamma();
        Self {
            omega,
            rho,
            alpha: params.alpha(),
            beta: params.beta(),
            gamma,
            mu: omega * gamma,
            branch,
            params,
        }
    }

    /// ε₀ = ρ
    pub fn eps0(&self) -> C64 {
        self.rho
    }

    /// ε₁ = ρ + ω
    pub fn eps1(&self) -> C64 {
        self.rho + self.omega
    }

    pub fn hamiltonian(&self) -> Mat2 {
        assemble(&self.params, self.omega, self.rho)
    }

    pub fn pair(&self) -> PFPair {
        pf::build(FamilyKind::General(self.params)).expect("validated parameters")
    }

    /// max |assemble(self) − h|
    pub fn reconstruction_residual(&self, h: &Mat2) -> f64 {
        self.hamiltonian().max_diff(h)
    }

    /// |(α − β)γ − 1|
    pub fn constraint_residual(&self) -> f64 {
        ((self.alpha - self.beta) * self.gamma - ONE).norm()
    }
}

/// `[[ωγα+ρ, ωγ], [−ωγαβ, −ωγβ+ρ]]`
pub fn assemble(params: &PFParameters, omega: C64, rho: C64) -> Mat2 {
    let (alpha, beta) = (params.alpha(), params.beta());
    let mu = omega * params.gamma();
    Mat2::new(mu * alpha + rho, mu, -mu * alpha * beta, -mu * beta + rho)
}

/// Decomposition in the default gauge α₁₂ = 1.
///
/// `Branch::Minus` assigns ρ to the eigenvalue that is smaller in the (re, im)
/// order, `Branch::Plus` to the larger one.
pub fn decompose(h: &Mat2, branch: Branch, tol: f64) -> Result<Decomposition, DecompError> {
    decompose_in_gauge(h, branch, tol, Gauge::default())
}

pub fn decompose_in_gauge(
    h: &Mat2,
    branch: Branch,
    tol: f64,
    gauge: Gauge,
) -> Result<Decomposition, DecompError> {
    if !h.is_finite() {
        return Err(DecompError::NonFinite);
    }
    let [lo, hi] = eigenvalues(h);
    let gap = (hi - lo).norm();
    let threshold = coalescence_threshold(h, tol);
    if gap < threshold {
        return Err(DecompError::ExceptionalPoint {
            value: (lo + hi) * 0.5,
            gap,
            threshold,
        });
    }
    if h.m01.norm() <= tol * h.max_abs() {
        return Err(DecompError::UnsupportedShape);
    }
    let (rho, other) = match branch {
        Branch::Minus => (lo, hi),
        Branch::Plus => (hi, lo),
    };
    // H(1, −α) = ρ(1, −α) reads H00 − H01·α = ρ on the first row.
    let alpha = (h.m00 - rho) / h.m01;
    let beta = (h.m00 - other) / h.m01;
    if !(is_finite(alpha) && is_finite(beta)) || alpha == beta {
        return Err(DecompError::EigenvectorDegenerate);
    }
    let params = gauge.parameters(alpha, beta)?;
    let mut dec = Decomposition::from_params(params, other - rho, rho, branch);
    // Keep the directly computed ratios; the parameter route only re-derives them.
    dec.alpha = alpha;
    dec.beta = beta;
    Ok(dec)
}

/// Eigenvectors of H (φ) and of H† (Ψ), biorthonormal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiorthogonalSystem {
    pub phi0: Vec2,
    pub phi1: Vec2,
    pub psi0: Vec2,
    pub psi1: Vec2,
    pub nphi: C64,
    pub npsi: C64,
}

impl BiorthogonalSystem {
    pub fn phi(&self) -> [Vec2; 2] {
        [self.phi0, self.phi1]
    }

    pub fn psi(&self) -> [Vec2; 2] {
        [self.psi0, self.psi1]
    }

    /// P_j f = ⟨Ψ_j, f⟩ φ_j
    pub fn projectors(&self) -> [Mat2; 2] {
        [self.phi0.outer(&self.psi0), self.phi1.outer(&self.psi1)]
    }

    /// max_{k,n} |⟨Ψ_k, φ_n⟩ − δ_kn|
    pub fn biorthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, psi) in self.psi().iter().enumerate() {
            for (n, phi) in self.phi().iter().enumerate() {
                let expect = if k == n { 1.0 } else { 0.0 };
                worst = worst.max((psi.inner(phi) - c(expect, 0.0)).norm());
            }
        }
        worst
    }

    /// max |P₀ + P₁ − 1|
    pub fn resolution_residual(&self) -> f64 {
        let [p0, p1] = self.projectors();
        (p0 + p1 - Mat2::identity()).max_abs()
    }
}

/// With N_φ = 1 and N_Ψ = conj(α₁₂β₁₁/γ):
/// φ₀ = (1, −α), φ₁ = (γ/α₁₂)(1, −β), Ψ₀ = N_Ψ(1, 1/β̄),
/// Ψ₁ = (γ̄N_Ψ/β̄₁₁)(ᾱ, 1). For β₁₁ = 0 the Ψ vectors come from kernels.
pub fn biorthogonal_system(dec: &Decomposition) -> BiorthogonalSystem {
    let p = &dec.params;
    let (alpha, beta, gamma) = (p.alpha(), p.beta(), p.gamma());
    let nphi = ONE;
    let phi0 = Vec2::new(ONE, -alpha).scale(nphi);
    let phi1 = Vec2::new(ONE, -beta).scale(gamma * nphi / p.a12());
    let closed = (p.b11().norm() > 1e-150).then(|| {
        let npsi = (p.a12() * p.b11() / gamma).conj();
        let psi0 = Vec2::new(ONE, beta.conj().inv()).scale(npsi);
        let psi1 = Vec2::new(alpha.conj(), ONE).scale(gamma.conj() * npsi / p.b11().conj());
        (npsi, psi0, psi1)
    });
    let (npsi, psi0, psi1) = match closed {
        Some(t) if t.1.is_finite() && t.2.is_finite() => t,
        _ => {
            let pair = dec.pair();
            let (_, psi0) = pf::vacuum_states(&pair);
            let psi1 = pair.a.adjoint() * psi0;
            (psi0.c0, psi0, psi1)
        }
    };
    BiorthogonalSystem {
        phi0,
        phi1,
        psi0,
        psi1,
        nphi,
        npsi,
    }
}

/// Coefficients of the closed-form S_φ^{1/2}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PCoefficients {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    pub p5: f64,
    pub p: C64,
}

/// Coefficients of the closed-form S_Ψ^{1/2}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QCoefficients {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub q5: f64,
    pub q: C64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Phi,
    Psi,
}

/// The closed-form square root disagreed with the spectral oracle and was
/// replaced by it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormDiscrepancy {
    pub metric: MetricKind,
    /// Relative max-entry deviation from the oracle (NaN if the closed form
    /// was undefined, e.g. for a scalar metric).
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricPair {
    pub s_phi: Mat2,
    pub s_psi: Mat2,
    pub s_phi_sqrt: Mat2,
    pub s_psi_sqrt: Mat2,
    /// |γ/α₁₂|²
    pub t_ratio: f64,
    pub pcoef: PCoefficients,
    pub qcoef: QCoefficients,
    /// Relative deviation of each closed-form root from the oracle.
    pub closed_form_deviation: [f64; 2],
    pub diagnostics: Vec<ClosedFormDiscrepancy>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricOptions {
    /// Mutation canary: flips the sign of the off-diagonal entries of S_φ.
    #[doc(hidden)]
    pub fault_flip_phi_sign: bool,
}

/// `S_φ = |N_φ|² [[1+t, −ᾱ−β̄t], [−α−βt, |α|²+t|β|²]]` with `t = |γ/α₁₂|²`.
///
/// Evaluated as written for any inputs; under the pseudo-fermion constraint
/// γ = 1/(α − β).
pub fn phi_metric_formula(alpha: C64, beta: C64, gamma: C64, a12: C64, nphi: C64) -> Mat2 {
    let t = (gamma / a12).norm_sqr();
    let off = -alpha - beta * t;
    Mat2::new(
        c(1.0 + t, 0.0),
        off.conj(),
        off,
        c(alpha.norm_sqr() + t * beta.norm_sqr(), 0.0),
    )
    .scale(c(nphi.norm_sqr(), 0.0))
}

/// `S_Ψ = (|γ|²/|N_φ|²) [[|β|²+|α|²u, conj(β+αu)], [β+αu, 1+u]]` with
/// `u = |α₁₂/γ|²`; the inverse of [`phi_metric_formula`] under the constraint.
pub fn psi_metric_formula(alpha: C64, beta: C64, gamma: C64, a12: C64, nphi: C64) -> Mat2 {
    let u = (a12 / gamma).norm_sqr();
    let off = beta + alpha * u;
    Mat2::new(
        c(beta.norm_sqr() + alpha.norm_sqr() * u, 0.0),
        off.conj(),
        off,
        c(1.0 + u, 0.0),
    )
    .scale(c(gamma.norm_sqr() / nphi.norm_sqr(), 0.0))
}

fn p_coefficients(alpha: C64, beta: C64, t: f64) -> PCoefficients {
    let (a2, b2) = (alpha.norm_sqr(), beta.norm_sqr());
    let w = alpha + beta * t;
    let diff = 1.0 + t - a2 - t * b2;
    let p1 = diff * diff + 4.0 * w.norm_sqr();
    let r = p1.sqrt();
    let p2 = 1.0 - r + t + a2 + t * b2;
    let p3 = 1.0 + r + t + a2 + t * b2;
    let p4 = 1.0 - r + t - a2 - t * b2;
    let p5 = 1.0 + r + t - a2 - t * b2;
    let p = w * (p2.max(0.0).sqrt() - p3.sqrt());
    PCoefficients {
        p1,
        p2,
        p3,
        p4,
        p5,
        p,
    }
}

fn q_coefficients(alpha: C64, beta: C64, u: f64) -> QCoefficients {
    let (a2, b2) = (alpha.norm_sqr(), beta.norm_sqr());
    let w = beta + alpha * u;
    let diff = b2 + a2 * u - 1.0 - u;
    let q1 = diff * diff + 4.0 * w.norm_sqr();
    let r = q1.sqrt();
    let q2 = 1.0 - r + u + a2 * u + b2;
    let q3 = 1.0 + r + u + a2 * u + b2;
    let q4 = 1.0 - r + u - a2 * u - b2;
    let q5 = 1.0 + r + u - a2 * u - b2;
    let q = w * (q3.sqrt() - q2.max(0.0).sqrt());
    QCoefficients {
        q1,
        q2,
        q3,
        q4,
        q5,
        q,
    }
}

fn p_sqrt(k: &PCoefficients, nphi: C64) -> Mat2 {
    let (s2, s3) = (k.p2.max(0.0).sqrt(), k.p3.sqrt());
    let pre = nphi.norm() / (2.0 * k.p1).sqrt();
    Mat2::new(
        c((s3 * k.p5 - s2 * k.p4) / 2.0, 0.0),
        k.p.conj(),
        k.p,
        c((s2 * k.p5 - s3 * k.p4) / 2.0, 0.0),
    )
    .scale(c(pre, 0.0))
}

fn q_sqrt(k: &QCoefficients, gamma: C64, nphi: C64) -> Mat2 {
    let (s2, s3) = (k.q2.max(0.0).sqrt(), k.q3.sqrt());
    let pre = gamma.norm() / (nphi.norm() * (2.0 * k.q1).sqrt());
    Mat2::new(
        c((s2 * k.q5 - s3 * k.q4) / 2.0, 0.0),
        k.q.conj(),
        k.q,
        c((s3 * k.q5 - s2 * k.q4) / 2.0, 0.0),
    )
    .scale(c(pre, 0.0))
}

fn arbitrate(
    metric: MetricKind,
    closed: Mat2,
    target: &Mat2,
    diagnostics: &mut Vec<ClosedFormDiscrepancy>,
) -> Result<(Mat2, f64), DecompError> {
    let oracle = hermitian_sqrt_oracle(target, 1e-9).map_err(|e| match e {
        LinalgError::NonFinite => DecompError::NonFinite,
        _ => DecompError::NotPositiveDefinite,
    })?;
    let deviation = closed.max_diff(&oracle) / oracle.max_abs().max(1.0);
    if deviation.is_finite() && deviation <= CLOSED_FORM_ACCEPT_TOL {
        Ok((closed, deviation))
    } else {
        let deviation = if deviation.is_finite() {
            deviation
        } else {
            f64::NAN
        };
        diagnostics.push(ClosedFormDiscrepancy { metric, deviation });
        Ok((oracle, deviation))
    }
}

pub fn metrics(dec: &Decomposition) -> Result<MetricPair, DecompError> {
    metrics_with(dec, MetricOptions::default())
}

pub fn metrics_with(
    dec: &Decomposition,
    options: MetricOptions,
) -> Result<MetricPair, DecompError> {
    let p = &dec.params;
    let (alpha, beta, gamma, a12) = (p.alpha(), p.beta(), p.gamma(), p.a12());
    if alpha == beta {
        return Err(DecompError::DegenerateParameters("alpha == beta"));
    }
    let nphi = ONE;
    let mut s_phi = phi_metric_formula(alpha, beta, gamma, a12, nphi);
    if options.fault_flip_phi_sign {
        s_phi.m01 = -s_phi.m01;
        s_phi.m10 = -s_phi.m10;
    }
    let s_psi = psi_metric_formula(alpha, beta, gamma, a12, nphi);
    for s in [&s_phi, &s_psi] {
        match is_positive_definite(s, 1e-12 * s.max_abs()) {
            Ok(true) => {}
            _ => return Err(DecompError::NotPositiveDefinite),
        }
    }
    let t_ratio = (gamma / a12).norm_sqr();
    let pcoef = p_coefficients(alpha, beta, t_ratio);
    let qcoef = q_coefficients(alpha, beta, t_ratio.recip());
    let mut diagnostics = Vec::new();
    let (s_phi_sqrt, dev_phi) = arbitrate(
        MetricKind::Phi,
        p_sqrt(&pcoef, nphi),
        &s_phi,
        &mut diagnostics,
    )?;
    let (s_psi_sqrt, dev_psi) = arbitrate(
        MetricKind::Psi,
        q_sqrt(&qcoef, gamma, nphi),
        &s_psi,
        &mut diagnostics,
    )?;
    Ok(MetricPair {
        s_phi,
        s_psi,
        s_phi_sqrt,
        s_psi_sqrt,
        t_ratio,
        pcoef,
        qcoef,
        closed_form_deviation: [dev_phi, dev_psi],
        diagnostics,
    })
}

impl MetricPair {
    /// max |S_φ S_Ψ − 1|
    pub fn duality_residual(&self) -> f64 {
        (self.s_phi * self.s_psi - Mat2::identity()).max_abs()
    }

    /// Relative residual of each root squaring back to its metric.
    pub fn sqrt_residuals(&self) -> [f64; 2] {
        let rel = |r: &Mat2, s: &Mat2| (*r * *r).max_diff(s) / s.max_abs().max(1.0);
        [
            rel(&self.s_phi_sqrt, &self.s_phi),
            rel(&self.s_psi_sqrt, &self.s_psi),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FermionicPicture {
    pub c: Mat2,
    pub cdag: Mat2,
    pub n0: Mat2,
    pub h: Mat2,
    pub e0: Vec2,
    pub e1: Vec2,
    /// max |S_Ψ^{1/2} b S_φ^{1/2} − c†|
    pub cdag_residual: f64,
}

impl FermionicPicture {
    /// max |{c, c†} − 1|
    pub fn car_residual(&self) -> f64 {
        (self.c.anticommutator(&self.cdag) - Mat2::identity()).max_abs()
    }

    pub fn c_squared_residual(&self) -> f64 {
        (self.c * self.c).max_abs()
    }

    /// max_{i,j} |⟨e_i, e_j⟩ − δ_ij|
    pub fn orthonormality_residual(&self) -> f64 {
        let e = [self.e0, self.e1];
        let mut worst: f64 = 0.0;
        for (i, ei) in e.iter().enumerate() {
            for (j, ej) in e.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ei.inner(ej) - c(expect, 0.0)).norm());
            }
        }
        worst
    }
}

/// c = S_Ψ^{1/2} a S_φ^{1/2}, h = S_Ψ^{1/2} H S_φ^{1/2}, e_j = S_Ψ^{1/2} φ_j.
pub fn fermionize(dec: &Decomposition, pair: &PFPair, m: &MetricPair) -> FermionicPicture {
    let (l, r) = (m.s_psi_sqrt, m.s_phi_sqrt);
    let cm = l * pair.a * r;
    let cdag = cm.adjoint();
    let bio = biorthogonal_system(dec);
    FermionicPicture {
        c: cm,
        cdag,
        n0: cdag * cm,
        h: l * dec.hamiltonian() * r,
        e0: l * bio.phi0,
        e1: l * bio.phi1,
        cdag_residual: (l * pair.b * r).max_diff(&cdag),
    }
}

/// Residuals of the intertwining relations, scaled by the size of the
/// operators involved, plus the norm bounds ‖S‖ ≤ Σ‖v_n‖².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntertwiningReport {
    /// S_Ψ N − N† S_Ψ
    pub psi_number: f64,
    /// S_φ N† − N S_φ
    pub phi_number: f64,
    /// max_n |S_φ Ψ_n − φ_n|
    pub phi_maps_psi: f64,
    /// max_n |S_Ψ φ_n − Ψ_n|
    pub psi_maps_phi: f64,
    pub phi_norm: f64,
    pub phi_bound: f64,
    pub psi_norm: f64,
    pub psi_bound: f64,
}

impl IntertwiningReport {
    pub fn max_residual(&self) -> f64 {
        self.psi_number
            .max(self.phi_number)
            .max(self.phi_maps_psi)
            .max(self.psi_maps_phi)
    }

    pub fn bounds_hold(&self) -> bool {
        let slack = 1e-12 * (1.0 + self.phi_bound.max(self.psi_bound));
        self.phi_norm <= self.phi_bound + slack && self.psi_norm <= self.psi_bound + slack
    }
}

pub fn intertwining_check(dec: &Decomposition, m: &MetricPair) -> IntertwiningReport {
    let bio = biorthogonal_system(dec);
    let (n, ndag) = pf::number_operators(&dec.pair());
    let scale = |s: &Mat2| (s.max_abs() * n.max_abs()).max(1.0);
    let psi_number = (m.s_psi * n - ndag * m.s_psi).max_abs() / scale(&m.s_psi);
    let phi_number = (m.s_phi * ndag - n * m.s_phi).max_abs() / scale(&m.s_phi);
    let mut phi_maps_psi: f64 = 0.0;
    let mut psi_maps_phi: f64 = 0.0;
    for (phi, psi) in bio.phi().iter().zip(bio.psi().iter()) {
        let s1 = (m.s_phi.max_abs() * psi.max_abs()).max(1.0);
        let s2 = (m.s_psi.max_abs() * phi.max_abs()).max(1.0);
        phi_maps_psi = phi_maps_psi.max((m.s_phi * *psi - *phi).max_abs() / s1);
        psi_maps_phi = psi_maps_phi.max((m.s_psi * *phi - *psi).max_abs() / s2);
    }
    IntertwiningReport {
        psi_number,
        phi_number,
        phi_maps_psi,
        psi_maps_phi,
        phi_norm: m.s_phi.op_norm(),
        phi_bound: bio.phi0.norm_sqr() + bio.phi1.norm_sqr(),
        psi_norm: m.s_psi.op_norm(),
        psi_bound: bio.psi0.norm_sqr() + bio.psi1.norm_sqr(),
    }
}

/// Default tolerance for [`decompose`]; equal to the default phase band so the
/// two agree on which spectra are exceptional points.
pub const DEFAULT_TOL: f64 = 1e-9;
