//! Literature models, their pseudo-fermionic identifications, exceptional
//! point predicates and phase maps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::{self, Branch, DecompError, Decomposition, Gauge, MetricPair};
use crate::mat2::{c, hermitian_sqrt_oracle, is_finite, Mat2, C64, I, ONE, ZERO};
use crate::symmetry::{self, coalescence_threshold, Phase, PhaseWitness, SymmetryError};

/// Relative reconstruction tolerance for identifications.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

/// Complex numbers as `[re, im]`; plain numbers are accepted as reals.
pub mod complex_json {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::mat2::C64;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Real(f64),
        Pair(Vec<f64>),
    }

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Real(re) => Ok(C64::new(re, 0.0)),
            Repr::Pair(v) if v.len() == 2 => Ok(C64::new(v[0], v[1])),
            Repr::Pair(v) => Err(D::Error::custom(format!(
                "complex number must be [re, im], got {} components",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", deny_unknown_fields)]
pub enum ModelSpec {
    /// `[[r e^{iθ}, s e^{iφ}], [t_c e^{−iφ}, r e^{−iθ}]]`
    DG {
        r: f64,
        s: f64,
        t_c: f64,
        theta: f64,
        phi: f64,
    },
    /// DG with φ = 0 and t_c = s.
    Part { r: f64, s: f64, theta: f64 },
    /// `[[e1 − i g1, ν0], [ν0, e2 − i g2]]`
    GMM {
        e1: f64,
        e2: f64,
        g1: f64,
        g2: f64,
        #[serde(with = "complex_json")]
        nu0: C64,
    },
    /// `E [[cos θ, e^{−iφ} sin θ], [e^{iφ} sin θ, −cos θ]]`
    MO {
        #[serde(rename = "E", with = "complex_json")]
        e: C64,
        #[serde(with = "complex_json")]
        theta: C64,
        #[serde(with = "complex_json")]
        phi: C64,
    },
    /// `[[mc², c·px + v], [c·px − v, −mc²]]`
    Rel { m: f64, c: f64, px: f64, v: f64 },
    /// `[[a, i b], [i b, −a]]`
    JSM { a_r: f64, b_r: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("invalid model parameters: {0}")]
    InvalidSpec(String),
    #[error("exceptional point: eigenvalues coalesce at {value}")]
    ExceptionalPoint { value: C64 },
    #[error("no pseudo-fermions: {0}")]
    NoPseudoFermions(String),
    #[error("not reducible: {0}")]
    NotReducible(String),
    #[error("operation needs a {expected} model")]
    WrongModel { expected: &'static str },
    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),
    #[error("{branch:?} identification reconstructs H only to {residual:e}")]
    ReconstructionFailed { branch: Branch, residual: f64 },
    #[error(transparent)]
    Decomposition(#[from] DecompError),
}

/// Which part of a parameter a sweep axis drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// Real parameter, or the whole value of a complex one (imaginary part
    /// cleared).
    Value,
    Re,
    Im,
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::DG { .. } => "DG",
            ModelSpec::Part { .. } => "Part",
            ModelSpec::GMM { .. } => "GMM",
            ModelSpec::MO { .. } => "MO",
            ModelSpec::Rel { .. } => "Rel",
            ModelSpec::JSM { .. } => "JSM",
        }
    }

    /// Domain restrictions. Zero DG couplings and zero GMM widths are allowed.
    pub fn validate(&self) -> Result<(), CatalogError> {
        let bad = |msg: &str| Err(CatalogError::InvalidSpec(msg.to_string()));
        let finite = match *self {
            ModelSpec::DG {
                r,
                s,
                t_c,
                theta,
                phi,
            } => [r, s, t_c, theta, phi].iter().all(|x| x.is_finite()),
            ModelSpec::Part { r, s, theta } => [r, s, theta].iter().all(|x| x.is_finite()),
            ModelSpec::GMM {
                e1,
                e2,
                g1,
                g2,
                nu0,
            } => [e1, e2, g1, g2].iter().all(|x| x.is_finite()) && is_finite(nu0),
            ModelSpec::MO { e, theta, phi } => [e, theta, phi].iter().all(|z| is_finite(*z)),
            ModelSpec::Rel { m, c, px, v } => [m, c, px, v].iter().all(|x| x.is_finite()),
            ModelSpec::JSM { a_r, b_r } => a_r.is_finite() && b_r.is_finite(),
        };
        if !finite {
            return bad("parameters must be finite");
        }
        match *self {
            ModelSpec::GMM { g1, g2, .. } if g1 < 0.0 || g2 < 0.0 => bad("widths must be >= 0"),
            ModelSpec::MO { e, theta, phi } => {
                if e.norm() == 0.0 {
                    bad("E must be nonzero")
                } else if theta.norm() == 0.0 {
                    bad("theta must be nonzero")
                } else if !(0.0..std::f64::consts::PI).contains(&theta.re) {
                    bad("Re(theta) must lie in [0, pi)")
                } else if !(0.0..std::f64::consts::PI).contains(&phi.re) {
                    bad("Re(phi) must lie in [0, pi)")
                } else {
                    Ok(())
                }
            }
            ModelSpec::JSM { b_r: 0.0, .. } => bad("b must be nonzero"),
            _ => Ok(()),
        }
    }

    /// Sets one parameter by its JSON name.
    pub fn set_param(
        &mut self,
        name: &str,
        part: Component,
        value: f64,
    ) -> Result<(), CatalogError> {
        fn set_real(
            slot: &mut f64,
            part: Component,
            value: f64,
            name: &str,
        ) -> Result<(), CatalogError> {
            match part {
                Component::Value | Component::Re => {
                    *slot = value;
                    Ok(())
                }
                Component::Im => Err(CatalogError::InvalidSpec(format!("'{name}' is real"))),
            }
        }
        fn set_complex(slot: &mut C64, part: Component, value: f64) -> Result<(), CatalogError> {
            match part {
                Component::Value => *slot = c(value, 0.0),
                Component::Re => slot.re = value,
                Component::Im => slot.im = value,
            }
            Ok(())
        }
        let unknown = || Err(CatalogError::UnknownParameter(name.to_string()));
        match self {
            ModelSpec::DG {
                r,
                s,
                t_c,
                theta,
                phi,
            } => match name {
                "r" => set_real(r, part, value, name),
                "s" => set_real(s, part, value, name),
                "t_c" => set_real(t_c, part, value, name),
                "theta" => set_real(theta, part, value, name),
                "phi" => set_real(phi, part, value, name),
                _ => unknown(),
            },
            ModelSpec::Part { r, s, theta } => match name {
                "r" => set_real(r, part, value, name),
                "s" => set_real(s, part, value, name),
                "theta" => set_real(theta, part, value, name),
                _ => unknown(),
            },
            ModelSpec::GMM {
                e1,
                e2,
                g1,
                g2,
                nu0,
            } => match name {
                "e1" => set_real(e1, part, value, name),
                "e2" => set_real(e2, part, value, name),
                "g1" => set_real(g1, part, value, name),
                "g2" => set_real(g2, part, value, name),
                "nu0" => set_complex(nu0, part, value),
                _ => unknown(),
            },
            ModelSpec::MO { e, theta, phi } => match name {
                "E" => set_complex(e, part, value),
                "theta" => set_complex(theta, part, value),
                "phi" => set_complex(phi, part, value),
                _ => unknown(),
            },
            ModelSpec::Rel { m, c, px, v } => match name {
                "m" => set_real(m, part, value, name),
                "c" => set_real(c, part, value, name),
                "px" => set_real(px, part, value, name),
                "v" => set_real(v, part, value, name),
                _ => unknown(),
            },
            ModelSpec::JSM { a_r, b_r } => match name {
                "a_r" => set_real(a_r, part, value, name),
                "b_r" => set_real(b_r, part, value, name),
                _ => unknown(),
            },
        }
    }
}

pub fn to_matrix(spec: &ModelSpec) -> Mat2 {
    match *spec {
        ModelSpec::DG {
            r,
            s,
            t_c,
            theta,
            phi,
        } => Mat2::new(
            C64::from_polar(r, theta),
            C64::from_polar(s, phi),
            C64::from_polar(t_c, -phi),
            C64::from_polar(r, -theta),
        ),
        ModelSpec::Part { r, s, theta } => to_matrix(&ModelSpec::DG {
            r,
            s,
            t_c: s,
            theta,
            phi: 0.0,
        }),
        ModelSpec::GMM {
            e1,
            e2,
            g1,
            g2,
            nu0,
        } => Mat2::new(c(e1, -g1), nu0, nu0, c(e2, -g2)),
        ModelSpec::MO { e, theta, phi } => {
            let (cs, sn) = (theta.cos(), theta.sin());
            let ph = (I * phi).exp();
            Mat2::new(e * cs, e * sn / ph, e * sn * ph, -e * cs)
        }
        ModelSpec::Rel { m, c: cl, px, v } => {
            let mc2 = m * cl * cl;
            Mat2::real(mc2, cl * px + v, cl * px - v, -mc2)
        }
        ModelSpec::JSM { a_r, b_r } => {
            Mat2::new(c(a_r, 0.0), c(0.0, b_r), c(0.0, b_r), c(-a_r, 0.0))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EpStatus {
    None,
    AtEP(C64),
    NoPF(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpCondition {
    pub status: EpStatus,
    /// Signed analytic margin vanishing on the model's EP set (Rel: on the
    /// no-PF line c·px + v = 0; MO: +∞).
    pub margin: f64,
}

/// Eigen-gap implied by an analytic discriminant d with eigenvalues
/// `center ± √d`.
fn gap_from_half_disc(d: C64) -> f64 {
    2.0 * d.norm().sqrt()
}

/// Analytic EP / no-PF test. The coalescence band matches
/// [`symmetry::classify_phase`] for the same `tol`.
pub fn ep_condition(spec: &ModelSpec, tol: f64) -> EpCondition {
    let h = to_matrix(spec);
    let band = coalescence_threshold(&h, tol);
    let rel_zero = |x: f64, scale: f64| x.abs() <= tol * (1.0 + scale);
    let (status, margin) = match *spec {
        ModelSpec::DG {
            r, s, t_c, theta, ..
        } => {
            let margin = (r * theta.sin()).powi(2) - s * t_c;
            let status = if gap_from_half_disc(c(margin, 0.0)) < band {
                EpStatus::AtEP(c(r * theta.cos(), 0.0))
            } else if rel_zero(s, r.abs() + t_c.abs()) {
                EpStatus::NoPF("s = 0".into())
            } else {
                EpStatus::None
            };
            (status, margin)
        }
        ModelSpec::Part { r, s, theta } => {
            return ep_condition(
                &ModelSpec::DG {
                    r,
                    s,
                    t_c: s,
                    theta,
                    phi: 0.0,
                },
                tol,
            )
        }
        ModelSpec::GMM {
            e1,
            e2,
            g1,
            g2,
            nu0,
        } => {
            let z = c(-(e2 - e1), g2 - g1);
            let margin = (z * z + nu0 * nu0 * 4.0).norm();
            let status = if margin.sqrt() < band {
                EpStatus::AtEP(c(e1 + e2, -(g1 + g2)) * 0.5)
            } else if rel_zero(nu0.norm(), h.max_abs()) {
                EpStatus::NoPF("nu0 = 0".into())
            } else {
                EpStatus::None
            };
            (status, margin)
        }
        ModelSpec::MO { .. } => (EpStatus::None, f64::INFINITY),
        ModelSpec::Rel { m, c: cl, px, v } => {
            let mc2 = m * cl * cl;
            let cp = cl * px;
            let disc = mc2 * mc2 + cp * cp - v * v;
            let margin = cp + v;
            let status = if gap_from_half_disc(c(disc, 0.0)) < band {
                EpStatus::AtEP(ZERO)
            } else if rel_zero(margin, cp.abs() + v.abs()) {
                EpStatus::NoPF("c*px = -v".into())
            } else {
                EpStatus::None
            };
            (status, margin)
        }
        ModelSpec::JSM { a_r, b_r } => {
            let margin = a_r * a_r - b_r * b_r;
            let status = if gap_from_half_disc(c(margin, 0.0)) < band {
                EpStatus::AtEP(ZERO)
            } else {
                EpStatus::None
            };
            (status, margin)
        }
    };
    EpCondition { status, margin }
}

/// Model-specific quantities of the DG identification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgAux {
    /// (r sin θ/s)² − t_c/s
    pub x_r: f64,
    /// Principal root, +i√|x_r| for negative x_r.
    pub sqrt_x_r: C64,
    /// r sin θ/s − √x_r
    pub x_rr_plus: C64,
    /// r sin θ/s + √x_r
    pub x_rr_minus: C64,
    pub alpha12_plus: C64,
    pub alpha12_minus: C64,
    /// s t_c / (4(s t_c − r² sin² θ) α₁₁), common to both branches.
    pub beta11: C64,
}

impl DgAux {
    pub fn x_rr(&self, branch: Branch) -> C64 {
        match branch {
            Branch::Plus => self.x_rr_plus,
            Branch::Minus => self.x_rr_minus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub dec_plus: Decomposition,
    pub dec_minus: Decomposition,
    pub dg: Option<DgAux>,
}

impl Identification {
    pub fn branch(&self, b: Branch) -> &Decomposition {
        match b {
            Branch::Plus => &self.dec_plus,
            Branch::Minus => &self.dec_minus,
        }
    }
}

/// Raw branch data (α, β, ρ, μ) before a gauge is chosen.
#[derive(Debug, Clone, Copy)]
struct BranchData {
    alpha: C64,
    beta: C64,
    rho: C64,
    mu: C64,
}

fn branch_data(spec: &ModelSpec, branch: Branch) -> Result<BranchData, CatalogError> {
    let sign = match branch {
        Branch::Plus => 1.0,
        Branch::Minus => -1.0,
    };
    match *spec {
        ModelSpec::DG {
            r,
            s,
            t_c,
            theta,
            phi,
        } => {
            let k = r * theta.sin() / s;
            let root = c(k * k - t_c / s, 0.0).sqrt();
            let pre = I * C64::from_polar(1.0, -phi);
            Ok(BranchData {
                alpha: pre * (k - root * sign),
                beta: pre * (k + root * sign),
                rho: C64::from_polar(r, -theta) + I * s * (k + root * sign),
                mu: C64::from_polar(s, phi),
            })
        }
        ModelSpec::GMM {
            e1,
            e2,
            g1,
            g2,
            nu0,
        } => {
            let z = c(-(e2 - e1), g2 - g1);
            let root = (z * z + nu0 * nu0 * 4.0).sqrt();
            let two_nu = nu0 * 2.0;
            Ok(BranchData {
                alpha: (z - root * sign) / two_nu,
                beta: (z + root * sign) / two_nu,
                rho: (c(e1 + e2, -(g1 + g2)) + root * sign) * 0.5,
                mu: nu0,
            })
        }
        ModelSpec::MO { e, theta, phi } => {
            let (cs, sn) = (theta.cos(), theta.sin());
            let ph = (I * phi).exp();
            // The (0,1) slot of the matrix carries e^{−iφ}.
            Ok(BranchData {
                alpha: ph * (cs - sign) / sn,
                beta: ph * (cs + sign) / sn,
                rho: e * sign,
                mu: e * sn / ph,
            })
        }
        ModelSpec::Rel { m, c: cl, px, v } => {
            let mc2 = c(m * cl * cl, 0.0);
            let vv = c(v, 0.0);
            let (alpha, beta, rho) = match branch {
                Branch::Plus => (ZERO, mc2 / vv, mc2),
                Branch::Minus => (mc2 / vv, ZERO, -mc2),
            };
            debug_assert!((cl * px - v).abs() <= 1e-12 * (1.0 + v.abs()));
            Ok(BranchData {
                alpha,
                beta,
                rho,
                mu: vv * 2.0,
            })
        }
        ModelSpec::Part { .. } | ModelSpec::JSM { .. } => {
            unreachable!("reduced before identification")
        }
    }
}

fn gauge_for(alpha: C64, alpha11: C64) -> Gauge {
    if alpha.norm() > 0.0 {
        Gauge::Alpha11(alpha11)
    } else {
        Gauge::Alpha12(ONE)
    }
}

/// Identification in the gauge α₁₁ = 1 (α₁₂ = 1 where α = 0).
pub fn identify(spec: &ModelSpec) -> Result<Identification, CatalogError> {
    identify_with(spec, ONE, symmetry::DEFAULT_PHASE_TOL)
}

/// Both branches with the model's own ± labels, each validated by
/// reconstruction. `tol` is the coalescence band passed to [`ep_condition`].
pub fn identify_with(
    spec: &ModelSpec,
    alpha11: C64,
    tol: f64,
) -> Result<Identification, CatalogError> {
    spec.validate()?;
    match ep_condition(spec, tol).status {
        EpStatus::AtEP(value) => return Err(CatalogError::ExceptionalPoint { value }),
        EpStatus::NoPF(reason) => return Err(CatalogError::NoPseudoFermions(reason)),
        EpStatus::None => {}
    }
    let target = to_matrix(spec);
    let direct = match *spec {
        ModelSpec::Part { .. } | ModelSpec::JSM { .. } => None,
        ModelSpec::Rel { c: cl, px, v, .. } if (cl * px - v).abs() <= 1e-12 * (1.0 + v.abs()) => {
            Some(*spec)
        }
        ModelSpec::Rel { .. } => None,
        _ => Some(*spec),
    };
    let Some(source) = direct else {
        let reduced = reduce(spec)?;
        let inner = identify_with(&reduced, alpha11, tol)?;
        check_reconstruction(&inner, &target)?;
        return Ok(Identification { dg: None, ..inner });
    };
    let build = |branch: Branch| -> Result<Decomposition, CatalogError> {
        let d = branch_data(&source, branch)?;
        let params = gauge_for(d.alpha, alpha11).parameters(d.alpha, d.beta)?;
        let omega = d.mu / params.gamma();
        Ok(Decomposition::from_params(params, omega, d.rho, branch))
    };
    let ident = Identification {
        dec_plus: build(Branch::Plus)?,
        dec_minus: build(Branch::Minus)?,
        dg: match *spec {
            ModelSpec::DG {
                r,
                s,
                t_c,
                theta,
                phi,
            } => Some(dg_aux(r, s, t_c, theta, phi, alpha11)),
            _ => None,
        },
    };
    check_reconstruction(&ident, &target)?;
    Ok(ident)
}

fn dg_aux(r: f64, s: f64, t_c: f64, theta: f64, phi: f64, alpha11: C64) -> DgAux {
    let k = r * theta.sin() / s;
    let x_r = k * k - t_c / s;
    let sqrt_x_r = c(x_r, 0.0).sqrt();
    let x_rr_plus = k - sqrt_x_r;
    let x_rr_minus = k + sqrt_x_r;
    let st = s * t_c;
    // α = i e^{−iφ} x_rr, so α₁₂ = α₁₁ e^{iφ}/(i x_rr).
    let alpha12 = |x_rr: C64| alpha11 * C64::from_polar(1.0, phi) / (I * x_rr);
    DgAux {
        x_r,
        sqrt_x_r,
        x_rr_plus,
        x_rr_minus,
        alpha12_plus: alpha12(x_rr_plus),
        alpha12_minus: alpha12(x_rr_minus),
        beta11: c(st, 0.0) / (alpha11 * 4.0 * (st - (r * theta.sin()).powi(2))),
    }
}

fn check_reconstruction(ident: &Identification, target: &Mat2) -> Result<(), CatalogError> {
    for d in [&ident.dec_plus, &ident.dec_minus] {
        let residual = d.reconstruction_residual(target) / target.max_abs().max(1.0);
        if residual.is_nan() || residual > RECONSTRUCTION_TOL {
            return Err(CatalogError::ReconstructionFailed {
                branch: d.branch,
                residual,
            });
        }
    }
    Ok(())
}

/// Phase of a model together with model-level witnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPhase {
    /// `None` when the spectrum is outside the unbroken/broken/EP taxonomy.
    pub phase: Option<Phase>,
    pub witness: Result<PhaseWitness, SymmetryError>,
    /// (ω₊, ω₋) when an identification exists.
    pub omegas: Option<(C64, C64)>,
}

impl ModelPhase {
    /// In the broken phase ω₊ and ω₋ should be mutual conjugates.
    pub fn omegas_conjugate(&self, tol: f64) -> Option<bool> {
        self.omegas
            .map(|(p, m)| (p - m.conj()).norm() <= tol * (1.0 + p.norm()))
    }
}

pub fn phase_of(spec: &ModelSpec, tol: f64) -> ModelPhase {
    let witness = symmetry::classify_phase(&to_matrix(spec), tol);
    let phase = witness.as_ref().ok().map(|w| w.phase);
    let omegas = identify_with(spec, ONE, tol)
        .ok()
        .map(|id| (id.dec_plus.omega, id.dec_minus.omega));
    ModelPhase {
        phase,
        witness,
        omegas,
    }
}

/// Metrics from the DG-specialized formulas next to the generic route.
#[derive(Debug, Clone, PartialEq)]
pub struct DgMetrics {
    pub s_phi: Mat2,
    pub s_psi: Mat2,
    pub s_phi_sqrt: Mat2,
    pub s_psi_sqrt: Mat2,
    /// Generic metrics for the same identification.
    pub generic: MetricPair,
    /// Largest relative difference between the two routes over all four
    /// matrices.
    pub route_deviation: f64,
}

/// Evaluates the DG metric formulas in terms of x_r and x_rr, with N_φ = 1.
///
/// With x_a = x_rr of the branch, x_b = x_rr of the other branch and
/// τ = |x_a|²/(4|α₁₁|²|x_r|):
/// `S_φ = [[1+τ, i e^{iφ} conj(x_a + τ x_b)], [−i e^{−iφ}(x_a + τ x_b), |x_a|² + τ|x_b|²]]`.
/// With κ = 4|s α₁₁ √x_r / t_c|² and |N_Ψ|² = |x_b|²/(4|x_r|):
/// `S_Ψ = |N_Ψ|² [[1+|x_a|²κ, −i e^{iφ}(1/x_b + conj(x_a)κ)], [c.c., 1/|x_b|² + κ]]`.
pub fn dg_metrics(
    spec: &ModelSpec,
    branch: Branch,
    alpha11: C64,
) -> Result<DgMetrics, CatalogError> {
    let dg = match *spec {
        ModelSpec::Part { r, s, theta } => ModelSpec::DG {
            r,
            s,
            t_c: s,
            theta,
            phi: 0.0,
        },
        ModelSpec::DG { .. } => *spec,
        _ => return Err(CatalogError::WrongModel { expected: "DG" }),
    };
    let ModelSpec::DG { s, t_c, phi, .. } = dg else {
        unreachable!()
    };
    let ident = identify_with(&dg, alpha11, symmetry::DEFAULT_PHASE_TOL)?;
    let aux = ident.dg.expect("DG identification carries aux data");
    let generic = decomposition::metrics(ident.branch(branch))?;

    let x_a = aux.x_rr(branch);
    let x_b = aux.x_rr(branch.other());
    let abs_xr = aux.x_r.abs();
    let ph = C64::from_polar(1.0, phi);

    let tau = x_a.norm_sqr() / (4.0 * alpha11.norm_sqr() * abs_xr);
    let w = x_a + x_b * tau;
    let off = -I * w / ph;
    let s_phi = Mat2::new(
        c(1.0 + tau, 0.0),
        off.conj(),
        off,
        c(x_a.norm_sqr() + tau * x_b.norm_sqr(), 0.0),
    );

    let kappa = 4.0 * (alpha11 * s * aux.sqrt_x_r / t_c).norm_sqr();
    let npsi2 = x_b.norm_sqr() / (4.0 * abs_xr);
    let upper = -I * ph * (x_b.inv() + x_a.conj() * kappa);
    let s_psi = Mat2::new(
        c(1.0 + x_a.norm_sqr() * kappa, 0.0),
        upper,
        upper.conj(),
        c(x_b.norm_sqr().recip() + kappa, 0.0),
    )
    .scale(c(npsi2, 0.0));

    let to_catalog = |e| {
        CatalogError::Decomposition(match e {
            crate::mat2::LinalgError::NonFinite => DecompError::NonFinite,
            _ => DecompError::NotPositiveDefinite,
        })
    };
    let s_phi_sqrt = hermitian_sqrt_oracle(&s_phi, 1e-9).map_err(to_catalog)?;
    let s_psi_sqrt = hermitian_sqrt_oracle(&s_psi, 1e-9).map_err(to_catalog)?;
    let rel = |a: &Mat2, b: &Mat2| a.max_diff(b) / b.max_abs().max(1.0);
    let route_deviation = rel(&s_phi, &generic.s_phi)
        .max(rel(&s_psi, &generic.s_psi))
        .max(rel(&s_phi_sqrt, &generic.s_phi_sqrt))
        .max(rel(&s_psi_sqrt, &generic.s_psi_sqrt));
    Ok(DgMetrics {
        s_phi,
        s_psi,
        s_phi_sqrt,
        s_psi_sqrt,
        generic,
        route_deviation,
    })
}

/// Writes a traceless `[[A, B], [C, −A]]` (BC ≠ 0, A² + BC ≠ 0) as MO
/// parameters with Re θ, Re φ ∈ [0, π).
fn traceless_to_mo(a: C64, b: C64, cc: C64) -> Option<ModelSpec> {
    let e2 = a * a + b * cc;
    let s2 = b * cc;
    if e2.norm() == 0.0 || s2.norm() == 0.0 {
        return None;
    }
    let in_upper = |z: C64| {
        let arg = z.arg();
        (0.0..std::f64::consts::PI).contains(&arg)
    };
    // S = E sin θ; e^{iφ} = C/S.
    let mut s = s2.sqrt();
    if !in_upper(cc / s) {
        s = -s;
    }
    let phi = -I * (cc / s).ln();
    // e^{iθ} = (A + iS)/E.
    let mut e = e2.sqrt();
    if !in_upper((a + I * s) / e) {
        e = -e;
    }
    let theta = -I * ((a + I * s) / e).ln();
    let spec = ModelSpec::MO {
        e,
        theta: c(theta.re.max(0.0), theta.im),
        phi: c(phi.re.max(0.0), phi.im),
    };
    spec.validate().ok().map(|_| spec)
}

/// Rewrites a model as a special case of another: Part → DG, Rel → MO and
/// JSM → MO.
pub fn reduce(spec: &ModelSpec) -> Result<ModelSpec, CatalogError> {
    match *spec {
        ModelSpec::Part { r, s, theta } => Ok(ModelSpec::DG {
            r,
            s,
            t_c: s,
            theta,
            phi: 0.0,
        }),
        ModelSpec::Rel { m, c: cl, px, v } => {
            let cp = cl * px;
            if cp * cp == v * v {
                return Err(CatalogError::NotReducible(
                    "c^2 px^2 = v^2: only one off-diagonal entry can vanish".into(),
                ));
            }
            let mc2 = m * cl * cl;
            traceless_to_mo(c(mc2, 0.0), c(cp + v, 0.0), c(cp - v, 0.0)).ok_or_else(|| {
                CatalogError::NotReducible("exceptional point: MO requires E != 0".into())
            })
        }
        ModelSpec::JSM { a_r, b_r } => traceless_to_mo(c(a_r, 0.0), c(0.0, b_r), c(0.0, b_r))
            .ok_or_else(|| {
                CatalogError::NotReducible("a^2 = b^2 is an exceptional point; MO has none".into())
            }),
        _ => Err(CatalogError::NotReducible(format!(
            "no reduction defined for {}",
            spec.name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

    const TOL: f64 = symmetry::DEFAULT_PHASE_TOL;

    fn dg_worked() -> ModelSpec {
        ModelSpec::DG {
            r: 1.0,
            s: 0.5,
            t_c: 1.0,
            theta: FRAC_PI_6,
            phi: FRAC_PI_6,
        }
    }

    #[test]
    fn dg_worked_matrix() {
        let s3 = 3f64.sqrt();
        let expect = Mat2::new(
            c(s3 / 2.0, 0.5),
            c(s3 / 4.0, 0.25),
            c(s3 / 2.0, -0.5),
            c(s3 / 2.0, -0.5),
        );
        assert!(to_matrix(&dg_worked()).max_diff(&expect) < 1e-15);
    }

    #[test]
    fn dg_trivial_and_jsm_matrices() {
        let dg = ModelSpec::DG {
            r: 0.0,
            s: 1.0,
            t_c: 1.0,
            theta: 0.0,
            phi: 0.0,
        };
        assert_eq!(to_matrix(&dg), Mat2::real(0.0, 1.0, 1.0, 0.0));
        let jsm = ModelSpec::JSM { a_r: 1.0, b_r: 1.0 };
        assert_eq!(to_matrix(&jsm), Mat2::new(ONE, I, I, -ONE));
    }

    #[test]
    fn dg_minus_branch() {
        let id = identify(&dg_worked()).unwrap();
        let d = id.dec_minus;
        assert!((d.rho - c(1.366, 0.0)).norm() < 1e-3);
        assert!((d.omega + ONE).norm() < 1e-12);
        assert!((d.params.a11() - ONE).norm() < 1e-14);
        let aux = id.dg.unwrap();
        assert!((aux.x_r + 1.0).abs() < 1e-14);
        assert!((aux.sqrt_x_r - I).norm() < 1e-14);
        assert!((aux.beta11 - d.params.b11()).norm() < 1e-12);
        // α₁₂ = α₁₁/α with α = i e^{−iφ} x_rr.
        assert!((aux.alpha12_minus - d.params.a12()).norm() < 1e-12);
    }

    #[test]
    fn dg_gamma_matches_closed_form() {
        let id = identify(&dg_worked()).unwrap();
        let aux = id.dg.unwrap();
        let ph = C64::from_polar(1.0, FRAC_PI_6);
        let g_plus = I * ph / (aux.sqrt_x_r * 2.0);
        assert!((id.dec_plus.gamma - g_plus).norm() < 1e-12);
        assert!((id.dec_minus.gamma + g_plus).norm() < 1e-12);
    }

    #[test]
    fn gmm_hermitian_limit() {
        let spec = ModelSpec::GMM {
            e1: 0.0,
            e2: 0.0,
            g1: 0.0,
            g2: 0.0,
            nu0: ONE,
        };
        let id = identify(&spec).unwrap();
        assert!((id.dec_plus.rho - ONE).norm() < 1e-14);
        assert!((id.dec_minus.rho + ONE).norm() < 1e-14);
        assert!((id.dec_plus.alpha + ONE).norm() < 1e-14);
        assert!((id.dec_plus.beta - ONE).norm() < 1e-14);
        assert!((id.dec_minus.alpha - ONE).norm() < 1e-14);
    }

    #[test]
    fn mo_minus_branch() {
        let spec = ModelSpec::MO {
            e: ONE,
            theta: c(PI / 3.0, 0.5),
            phi: c(PI / 4.0, -1.0),
        };
        let id = identify(&spec).unwrap();
        let d = id.dec_minus;
        assert!((d.eps0() + ONE).norm() < 1e-12);
        assert!((d.eps1() - ONE).norm() < 1e-12);
        assert!((d.omega - c(2.0, 0.0)).norm() < 1e-12);
        let ModelSpec::MO { theta, phi, .. } = spec else {
            unreachable!()
        };
        let g = theta.sin() * (-I * phi).exp() * 0.5;
        assert!((d.gamma - g).norm() < 1e-12);
    }

    #[test]
    fn ep_conditions() {
        let dg = ModelSpec::DG {
            r: 1.0,
            s: 1.0,
            t_c: 1.0,
            theta: FRAC_PI_2,
            phi: 0.0,
        };
        assert!(matches!(ep_condition(&dg, TOL).status, EpStatus::AtEP(v) if v.norm() < 1e-15));
        let mo = ModelSpec::MO {
            e: ONE,
            theta: c(1.0, 0.0),
            phi: ZERO,
        };
        assert_eq!(ep_condition(&mo, TOL).status, EpStatus::None);
        let rel = ModelSpec::Rel {
            m: 1.0,
            c: 1.0,
            px: -1.0,
            v: 1.0,
        };
        assert!(matches!(ep_condition(&rel, TOL).status, EpStatus::NoPF(_)));
        assert!(matches!(
            identify(&rel),
            Err(CatalogError::NoPseudoFermions(_))
        ));
        assert!(matches!(
            identify(&dg),
            Err(CatalogError::ExceptionalPoint { .. })
        ));
    }

    #[test]
    fn gmm_ep_value() {
        // ν₀ = 1, Δε = 0: EP at ΔΓ = 2.
        let spec = ModelSpec::GMM {
            e1: 0.3,
            e2: 0.3,
            g1: 0.5,
            g2: 2.5,
            nu0: ONE,
        };
        match ep_condition(&spec, TOL).status {
            EpStatus::AtEP(v) => assert!((v - c(0.3, -1.5)).norm() < 1e-12),
            other => panic!("expected EP, got {other:?}"),
        }
        let w = symmetry::classify_phase(&to_matrix(&spec), TOL).unwrap();
        assert_eq!(w.phase, Phase::ExceptionalPoint);
    }

    #[test]
    fn phases() {
        let p = phase_of(&dg_worked(), TOL);
        assert_eq!(p.phase, Some(Phase::Unbroken));
        let (wp, wm) = p.omegas.unwrap();
        assert!(wp.im.abs() < 1e-12 && wm.im.abs() < 1e-12);

        let broken = ModelSpec::DG {
            r: 1.0,
            s: 1.0,
            t_c: 0.1,
            theta: FRAC_PI_2,
            phi: 0.0,
        };
        let p = phase_of(&broken, TOL);
        assert_eq!(p.phase, Some(Phase::Broken));
        assert_eq!(p.omegas_conjugate(1e-10), Some(true));
        let (wp, _) = p.omegas.unwrap();
        assert!(wp.re.abs() < 1e-12);

        let part = ModelSpec::Part {
            r: 1.0,
            s: 1.0,
            theta: FRAC_PI_2,
        };
        assert_eq!(phase_of(&part, TOL).phase, Some(Phase::ExceptionalPoint));
    }

    #[test]
    fn dg_metric_routes_agree() {
        for branch in [Branch::Plus, Branch::Minus] {
            let m = dg_metrics(&dg_worked(), branch, ONE).unwrap();
            assert!(
                m.route_deviation < 1e-9,
                "{branch:?}: {}",
                m.route_deviation
            );
        }
        let ep = ModelSpec::DG {
            r: 1.0,
            s: 1.0,
            t_c: 1.0,
            theta: FRAC_PI_2,
            phi: 0.0,
        };
        assert!(matches!(
            dg_metrics(&ep, Branch::Minus, ONE),
            Err(CatalogError::ExceptionalPoint { .. })
        ));
    }

    #[test]
    fn reductions() {
        let part = ModelSpec::Part {
            r: 0.7,
            s: 1.3,
            theta: 0.4,
        };
        let dg = reduce(&part).unwrap();
        assert_eq!(to_matrix(&dg), to_matrix(&part));

        for spec in [
            ModelSpec::JSM { a_r: 2.0, b_r: 1.0 },
            ModelSpec::JSM {
                a_r: 0.5,
                b_r: -1.5,
            },
        ] {
            let mo = reduce(&spec).unwrap();
            assert!(to_matrix(&mo).max_diff(&to_matrix(&spec)) < 1e-12, "{mo:?}");
        }
        assert!(matches!(
            reduce(&ModelSpec::JSM { a_r: 1.0, b_r: 1.0 }),
            Err(CatalogError::NotReducible(_))
        ));

        let rel = ModelSpec::Rel {
            m: 1.0,
            c: 1.0,
            px: 2.0,
            v: 0.5,
        };
        let mo = reduce(&rel).unwrap();
        assert!(to_matrix(&mo).max_diff(&to_matrix(&rel)) < 1e-12);

        let rel_eq = ModelSpec::Rel {
            m: 1.0,
            c: 1.0,
            px: 1.0,
            v: 1.0,
        };
        assert!(matches!(
            reduce(&rel_eq),
            Err(CatalogError::NotReducible(_))
        ));
        let id = identify(&rel_eq).unwrap();
        assert!(id.dec_plus.alpha.norm() < 1e-15);
        assert!((id.dec_plus.beta - ONE).norm() < 1e-15);
        assert!((id.dec_minus.rho + ONE).norm() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let spec = ModelSpec::MO {
            e: ONE,
            theta: c(1.0, 0.5),
            phi: c(0.2, -1.0),
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            text,
            r#"{"model":"MO","params":{"E":[1.0,0.0],"theta":[1.0,0.5],"phi":[0.2,-1.0]}}"#
        );
        assert_eq!(serde_json::from_str::<ModelSpec>(&text).unwrap(), spec);
        let real: ModelSpec = serde_json::from_str(
            r#"{"model":"GMM","params":{"e1":0,"e2":1,"g1":0,"g2":0.5,"nu0":2}}"#,
        )
        .unwrap();
        assert_eq!(
            real,
            ModelSpec::GMM {
                e1: 0.0,
                e2: 1.0,
                g1: 0.0,
                g2: 0.5,
                nu0: c(2.0, 0.0)
            }
        );
        assert!(
            serde_json::from_str::<ModelSpec>(r#"{"model":"JSM","params":{"a_r":1}}"#).is_err()
        );
    }

    #[test]
    fn set_param_by_name() {
        let mut spec = ModelSpec::MO {
            e: ONE,
            theta: c(1.0, 0.5),
            phi: ZERO,
        };
        spec.set_param("theta", Component::Re, 2.0).unwrap();
        assert_eq!(
            spec,
            ModelSpec::MO {
                e: ONE,
                theta: c(2.0, 0.5),
                phi: ZERO
            }
        );
        assert!(spec.set_param("r", Component::Value, 1.0).is_err());
        let mut dg = dg_worked();
        assert!(dg.set_param("theta", Component::Im, 1.0).is_err());
    }

    #[test]
    fn mo_validation() {
        let bad = ModelSpec::MO {
            e: ZERO,
            theta: ONE,
            phi: ZERO,
        };
        assert!(matches!(bad.validate(), Err(CatalogError::InvalidSpec(_))));
        let bad = ModelSpec::MO {
            e: ONE,
            theta: c(PI, 0.0),
            phi: ZERO,
        };
        assert!(bad.validate().is_err());
    }
}
