//! Single-shot analysis of one Hamiltonian.

use pfkit_core::catalog::{self, to_matrix, EpStatus, ModelSpec};
use pfkit_core::decomposition::{
    biorthogonal_system, decompose, fermionize, intertwining_check, metrics, Branch, Decomposition,
    MetricKind,
};
use pfkit_core::mat2::{Mat2, ONE};
use pfkit_core::pf::number_operators;
use pfkit_core::symmetry::{check_pt, classify_phase, detect_pt_scale, involutive_symmetry};
use serde_json::{json, Map, Value};

use crate::report::{cx, mat, num, vec2};

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Matrix(Mat2),
    Model(ModelSpec),
}

impl Input {
    pub fn matrix(&self) -> Mat2 {
        match self {
            Input::Matrix(m) => *m,
            Input::Model(spec) => to_matrix(spec),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub report: Value,
    /// False when no pseudo-fermion pair could be built (EP, no-PF shape).
    pub pf_exists: bool,
}

impl Analysis {
    /// 0 on success, 2 when pseudo-fermions do not exist.
    pub fn exit_code(&self) -> i32 {
        if self.pf_exists {
            0
        } else {
            2
        }
    }
}

fn ep_json(spec: &ModelSpec, tol: f64) -> Value {
    let cond = catalog::ep_condition(spec, tol);
    let (status, extra) = match cond.status {
        EpStatus::None => ("none", Value::Null),
        EpStatus::AtEP(v) => ("ep", cx(v)),
        EpStatus::NoPF(reason) => ("no_pf", json!(reason)),
    };
    json!({ "status": status, "detail": extra, "margin": num(cond.margin) })
}

fn phase_json(h: &Mat2, tol: f64) -> Value {
    match classify_phase(h, tol) {
        Ok(w) => json!({
            "phase": w.phase.as_str(),
            "eigenvalues": [cx(w.eigenvalues[0]), cx(w.eigenvalues[1])],
            "gap": num(w.gap),
            "threshold": num(w.threshold),
            "q": w.q.map(num),
            "x": w.x_param.map(num),
        }),
        Err(e) => json!({ "phase": "unclassifiable", "error": e.to_string() }),
    }
}

fn pt_json(h: &Mat2, tol: f64) -> Value {
    let Some(x) = detect_pt_scale(h, tol) else {
        return Value::Null;
    };
    match check_pt(h, x, tol) {
        Ok(r) => json!({
            "x": num(r.x_param),
            "q": num(r.q),
            "phase": r.phase.as_str(),
            "eps_plus": cx(r.eps_plus),
            "eps_minus": cx(r.eps_minus),
            "vec_plus": vec2(&r.vec_plus),
            "vec_minus": vec2(&r.vec_minus),
            "lambda_plus": cx(r.lambda_plus),
            "lambda_minus": cx(r.lambda_minus),
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn decomposition_json(d: &Decomposition) -> Value {
    let p = &d.params;
    json!({
        "branch": d.branch.as_str(),
        "omega": cx(d.omega),
        "rho": cx(d.rho),
        "alpha": cx(d.alpha),
        "beta": cx(d.beta),
        "gamma": cx(d.gamma),
        "mu": cx(d.mu),
        "eps0": cx(d.eps0()),
        "eps1": cx(d.eps1()),
        "params": {
            "alpha11": cx(p.a11()),
            "alpha12": cx(p.a12()),
            "beta11": cx(p.b11()),
            "beta12": cx(p.b12()),
        },
    })
}

/// Fills in everything that follows from a successful decomposition.
fn pf_sections(
    out: &mut Map<String, Value>,
    h: &Mat2,
    d: &Decomposition,
    spec: Option<&ModelSpec>,
) {
    let mut residuals = Map::new();
    let scale = h.max_abs().max(1.0);
    residuals.insert(
        "reconstruction".into(),
        num(d.reconstruction_residual(h) / scale),
    );
    residuals.insert("constraint".into(), num(d.constraint_residual()));

    out.insert("decomposition".into(), decomposition_json(d));
    let pair = d.pair();
    let (n, _) = number_operators(&pair);
    out.insert(
        "pair".into(),
        json!({ "a": mat(&pair.a), "b": mat(&pair.b), "n": mat(&n) }),
    );
    residuals.insert("rules".into(), num(pair.scaled_rule_residual()));

    let bio = biorthogonal_system(d);
    out.insert(
        "biorthogonal".into(),
        json!({
            "phi0": vec2(&bio.phi0),
            "phi1": vec2(&bio.phi1),
            "psi0": vec2(&bio.psi0),
            "psi1": vec2(&bio.psi1),
            "n_phi": cx(bio.nphi),
            "n_psi": cx(bio.npsi),
        }),
    );
    residuals.insert(
        "biorthonormality".into(),
        num(bio.biorthonormality_residual()),
    );
    residuals.insert("resolution".into(), num(bio.resolution_residual()));

    match involutive_symmetry(d) {
        Ok((x, _)) => {
            let comm = x.commutator(h).max_abs() / (scale * x.max_abs().max(1.0));
            let square = (x * x).max_diff(&Mat2::identity());
            out.insert("involution".into(), mat(&x));
            residuals.insert("involution_commutator".into(), num(comm));
            residuals.insert("involution_square".into(), num(square));
        }
        Err(e) => {
            out.insert("involution".into(), json!({ "error": e.to_string() }));
        }
    }

    match metrics(d) {
        Ok(m) => {
            let diagnostics: Vec<Value> = m
                .diagnostics
                .iter()
                .map(|dg| {
                    let which = match dg.metric {
                        MetricKind::Phi => "phi",
                        MetricKind::Psi => "psi",
                    };
                    json!({ "metric": which, "deviation": num(dg.deviation) })
                })
                .collect();
            out.insert(
                "metrics".into(),
                json!({
                    "s_phi": mat(&m.s_phi),
                    "s_psi": mat(&m.s_psi),
                    "s_phi_sqrt": mat(&m.s_phi_sqrt),
                    "s_psi_sqrt": mat(&m.s_psi_sqrt),
                    "closed_form_deviation": [num(m.closed_form_deviation[0]), num(m.closed_form_deviation[1])],
                    "diagnostics": diagnostics,
                }),
            );
            residuals.insert("duality".into(), num(m.duality_residual()));
            let [sp, ss] = m.sqrt_residuals();
            residuals.insert("sqrt_phi".into(), num(sp));
            residuals.insert("sqrt_psi".into(), num(ss));
            let inter = intertwining_check(d, &m);
            residuals.insert("intertwining".into(), num(inter.max_residual()));
            residuals.insert("norm_bounds_hold".into(), json!(inter.bounds_hold()));

            let f = fermionize(d, &pair, &m);
            out.insert(
                "fermionic".into(),
                json!({
                    "c": mat(&f.c),
                    "c_dag": mat(&f.cdag),
                    "n0": mat(&f.n0),
                    "h": mat(&f.h),
                    "e0": vec2(&f.e0),
                    "e1": vec2(&f.e1),
                }),
            );
            residuals.insert("car".into(), num(f.car_residual()));
            residuals.insert("c_squared".into(), num(f.c_squared_residual()));
            residuals.insert("c_dag".into(), num(f.cdag_residual));
            residuals.insert("orthonormality".into(), num(f.orthonormality_residual()));
            residuals.insert(
                "h_hermitian".into(),
                num(f.h.hermitian_residual() / f.h.max_abs().max(1.0)),
            );
        }
        Err(e) => {
            out.insert("metrics".into(), json!({ "error": e.to_string() }));
        }
    }

    if let Some(spec @ (ModelSpec::DG { .. } | ModelSpec::Part { .. })) = spec {
        let dev = catalog::dg_metrics(spec, d.branch, ONE).map(|m| m.route_deviation);
        match dev {
            Ok(v) => residuals.insert("dg_route_deviation".into(), num(v)),
            Err(e) => residuals.insert("dg_route_deviation".into(), json!(e.to_string())),
        };
    }
    out.insert("residuals".into(), Value::Object(residuals));
}

/// Runs the full pipeline. Matrices use the gauge α₁₂ = 1 and the
/// lexicographic branch rule; models use α₁₁ = 1 and their own labels.
pub fn analyze(input: &Input, branch: Branch, tol: f64) -> Analysis {
    let h = input.matrix();
    let mut out = Map::new();
    let mut source = Map::new();
    source.insert("matrix".into(), mat(&h));
    if let Input::Model(spec) = input {
        source.insert(
            "model".into(),
            serde_json::to_value(spec).expect("specs serialize"),
        );
    }
    out.insert("input".into(), Value::Object(source));
    out.insert("tol".into(), num(tol));
    out.insert("branch".into(), json!(branch.as_str()));
    out.insert("phase".into(), phase_json(&h, tol));
    out.insert("pt".into(), pt_json(&h, tol));

    let dec = match input {
        Input::Matrix(m) => decompose(m, branch, tol).map_err(|e| e.to_string()),
        Input::Model(spec) => {
            out.insert("ep_condition".into(), ep_json(spec, tol));
            catalog::identify_with(spec, ONE, tol)
                .map(|id| *id.branch(branch))
                .map_err(|e| e.to_string())
        }
    };
    let pf_exists = match dec {
        Ok(d) => {
            pf_sections(
                &mut out,
                &h,
                &d,
                match input {
                    Input::Model(spec) => Some(spec),
                    Input::Matrix(_) => None,
                },
            );
            true
        }
        Err(e) => {
            out.insert("error".into(), json!(e));
            false
        }
    };
    out.insert("pf_exists".into(), json!(pf_exists));
    Analysis {
        report: Value::Object(out),
        pf_exists,
    }
}
