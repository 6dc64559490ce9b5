//! Parameter grids over catalog models, evaluated in parallel and emitted in
//! grid order.

use std::io::{self, Write};

use pfkit_core::catalog::{ep_condition, to_matrix, CatalogError, Component, ModelSpec};
use pfkit_core::decomposition::{decompose, Branch, DecompError};
use pfkit_core::mat2::{eigenvalues, C64};
use pfkit_core::symmetry::{classify_phase, DEFAULT_PHASE_TOL};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::report::{num, sci};

pub const CSV_HEADER: &str =
    "p1,p2,re_e0,im_e0,re_e1,im_e1,abs_gamma,discriminant,ep_margin,phase,pf_exists";

pub const MAX_STEPS: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("config: {0}")]
    Config(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid model at grid point ({p1}, {p2:?}): {source}")]
    InvalidPoint {
        p1: f64,
        p2: Option<f64>,
        source: CatalogError,
    },
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl Grid {
    pub fn validate(&self) -> Result<(), SweepError> {
        if !(self.from.is_finite() && self.to.is_finite()) {
            return Err(SweepError::InvalidGrid("endpoints must be finite".into()));
        }
        if self.steps == 0 || self.steps > MAX_STEPS {
            return Err(SweepError::InvalidGrid(format!(
                "steps must be in 1..={MAX_STEPS}, got {}",
                self.steps
            )));
        }
        Ok(())
    }

    /// Evenly spaced, both endpoints included; a single step sits at `from`.
    pub fn value(&self, k: usize) -> f64 {
        if self.steps == 1 {
            return self.from;
        }
        if k + 1 == self.steps {
            return self.to;
        }
        self.from + (self.to - self.from) * (k as f64 / (self.steps - 1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub component: Component,
    pub grid: Grid,
}

impl Axis {
    /// `name=from:to:steps`, where `name` may end in `.re` or `.im`.
    pub fn parse(text: &str) -> Result<Self, SweepError> {
        let bad = || {
            SweepError::Config(format!(
                "axis '{text}': expected name[.re|.im]=from:to:steps"
            ))
        };
        let (lhs, rhs) = text.split_once('=').ok_or_else(bad)?;
        let (name, component) = match lhs.rsplit_once('.') {
            Some((n, "re")) => (n, Component::Re),
            Some((n, "im")) => (n, Component::Im),
            _ => (lhs, Component::Value),
        };
        let parts: Vec<&str> = rhs.split(':').collect();
        let [from, to, steps] = parts[..] else {
            return Err(bad());
        };
        let grid = Grid {
            from: from.trim().parse().map_err(|_| bad())?,
            to: to.trim().parse().map_err(|_| bad())?,
            steps: steps.trim().parse().map_err(|_| bad())?,
        };
        Ok(Self {
            name: name.trim().to_string(),
            component,
            grid,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchChoice {
    Plus,
    Minus,
    Both,
}

impl BranchChoice {
    pub fn parse(text: &str) -> Result<Self, SweepError> {
        match text {
            "plus" => Ok(Self::Plus),
            "minus" => Ok(Self::Minus),
            "both" => Ok(Self::Both),
            _ => Err(SweepError::Config(format!(
                "branch must be plus, minus or both, got '{text}'"
            ))),
        }
    }

    /// |γ| = 1/|α − β| is the same on both branches, so either one serves.
    fn decomposition_branch(self) -> Branch {
        match self {
            Self::Minus => Branch::Minus,
            Self::Plus | Self::Both => Branch::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(text: &str) -> Result<Self, SweepError> {
        match text {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(SweepError::Config(format!(
                "output must be csv or json, got '{text}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Model with every swept slot set to its grid's `from` value.
    pub template: ModelSpec,
    /// One or two axes; the first varies slowest.
    pub axes: Vec<Axis>,
    pub tol: f64,
    pub branch: BranchChoice,
    pub output: OutputFormat,
    pub seed: u64,
    /// Worker count; `None` uses the global pool.
    pub threads: Option<usize>,
}

fn as_grid(v: &Value) -> Option<Result<Grid, SweepError>> {
    let obj = v.as_object()?;
    if !obj.contains_key("steps") {
        return None;
    }
    Some(
        serde_json::from_value(v.clone())
            .map_err(|e| SweepError::Config(format!("grid descriptor: {e}"))),
    )
}

impl SweepConfig {
    /// Reads `{"model": .., "params": {..}, "tol"?, "branch"?, "output"?,
    /// "seed"?, "threads"?}`. Any parameter, or either slot of a complex
    /// `[re, im]` parameter, may be a grid descriptor `{from, to, steps}`.
    pub fn from_json(text: &str) -> Result<Self, SweepError> {
        let cfg = Self::parse_unchecked(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// As [`SweepConfig::from_json`] but without [`SweepConfig::validate`],
    /// so that command-line overrides can be applied first.
    pub fn parse_unchecked(text: &str) -> Result<Self, SweepError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| SweepError::Config(e.to_string()))?;
        let Value::Object(mut top) = value else {
            return Err(SweepError::Config("expected a JSON object".into()));
        };
        let mut cfg_tol = DEFAULT_PHASE_TOL;
        let mut branch = BranchChoice::Both;
        let mut output = OutputFormat::Csv;
        let mut seed = 0;
        let mut threads = None;
        let field = |k: &str| SweepError::Config(format!("bad value for '{k}'"));
        if let Some(v) = top.remove("tol") {
            cfg_tol = v.as_f64().ok_or_else(|| field("tol"))?;
        }
        if let Some(v) = top.remove("branch") {
            branch = BranchChoice::parse(v.as_str().ok_or_else(|| field("branch"))?)?;
        }
        if let Some(v) = top.remove("output") {
            output = OutputFormat::parse(v.as_str().ok_or_else(|| field("output"))?)?;
        }
        if let Some(v) = top.remove("seed") {
            seed = v.as_u64().ok_or_else(|| field("seed"))?;
        }
        if let Some(v) = top.remove("threads") {
            threads = Some(v.as_u64().ok_or_else(|| field("threads"))? as usize);
        }
        let model = top
            .remove("model")
            .ok_or_else(|| SweepError::Config("missing 'model'".into()))?;
        let Some(Value::Object(params)) = top.remove("params") else {
            return Err(SweepError::Config("missing 'params' object".into()));
        };
        if let Some(k) = top.keys().next() {
            return Err(SweepError::Config(format!("unknown key '{k}'")));
        }

        let mut axes = Vec::new();
        let mut fixed = Map::new();
        for (name, v) in params {
            if let Some(grid) = as_grid(&v) {
                let grid = grid?;
                fixed.insert(name.clone(), json!(grid.from));
                axes.push(Axis {
                    name,
                    component: Component::Value,
                    grid,
                });
                continue;
            }
            if let Value::Array(parts) = &v {
                if parts.len() == 2 {
                    let mut slots = parts.clone();
                    for (slot, component) in [Component::Re, Component::Im].into_iter().enumerate()
                    {
                        if let Some(grid) = as_grid(&parts[slot]) {
                            let grid = grid?;
                            slots[slot] = json!(grid.from);
                            axes.push(Axis {
                                name: name.clone(),
                                component,
                                grid,
                            });
                        }
                    }
                    fixed.insert(name, Value::Array(slots));
                    continue;
                }
            }
            fixed.insert(name, v);
        }
        let template: ModelSpec =
            serde_json::from_value(json!({ "model": model, "params": fixed }))
                .map_err(|e| SweepError::Config(format!("model: {e}")))?;
        Ok(Self {
            template,
            axes,
            tol: cfg_tol,
            branch,
            output,
            seed,
            threads,
        })
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(SweepError::InvalidGrid(format!(
                "need one or two axes, got {}",
                self.axes.len()
            )));
        }
        for axis in &self.axes {
            axis.grid.validate()?;
            let mut probe = self.template;
            probe
                .set_param(&axis.name, axis.component, axis.grid.from)
                .map_err(|e| SweepError::Config(e.to_string()))?;
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(SweepError::Config("tol must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(SweepError::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.grid.steps).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub p1: f64,
    pub p2: Option<f64>,
    pub e0: C64,
    pub e1: C64,
    /// `inf` at an exceptional point, 0 where H₀₁ = 0.
    pub abs_gamma: f64,
    /// |ε₁ − ε₀|²
    pub discriminant: f64,
    pub ep_margin: f64,
    pub phase: &'static str,
    pub pf_exists: bool,
}

/// One grid point. Pure, so rows can be computed in any order.
pub fn evaluate(spec: &ModelSpec, tol: f64, branch: BranchChoice) -> SweepRow {
    let h = to_matrix(spec);
    let [e0, e1] = eigenvalues(&h);
    let phase = match classify_phase(&h, tol) {
        Ok(w) => w.phase.as_str(),
        Err(_) => "unclassifiable",
    };
    let (abs_gamma, pf_exists) = match decompose(&h, branch.decomposition_branch(), tol) {
        Ok(d) => (d.gamma.norm(), true),
        Err(DecompError::ExceptionalPoint { .. }) => (f64::INFINITY, false),
        Err(DecompError::UnsupportedShape) => (0.0, false),
        Err(_) => (f64::NAN, false),
    };
    SweepRow {
        p1: f64::NAN,
        p2: None,
        e0,
        e1,
        abs_gamma,
        discriminant: (e1 - e0).norm_sqr(),
        ep_margin: ep_condition(spec, tol).margin,
        phase,
        pf_exists,
    }
}

fn point(cfg: &SweepConfig, index: usize) -> (f64, Option<f64>, ModelSpec) {
    let mut spec = cfg.template;
    let (k1, k2) = match cfg.axes.len() {
        1 => (index, 0),
        _ => (
            index / cfg.axes[1].grid.steps,
            index % cfg.axes[1].grid.steps,
        ),
    };
    let p1 = cfg.axes[0].grid.value(k1);
    // Axes were checked against the template in `validate`.
    let _ = spec.set_param(&cfg.axes[0].name, cfg.axes[0].component, p1);
    let p2 = cfg.axes.get(1).map(|a| {
        let v = a.grid.value(k2);
        let _ = spec.set_param(&a.name, a.component, v);
        v
    });
    (p1, p2, spec)
}

/// All rows in grid order (first axis slowest). The output does not depend
/// on the worker count.
pub fn run(cfg: &SweepConfig) -> Result<Vec<SweepRow>, SweepError> {
    cfg.validate()?;
    let total = cfg.len();
    let compute = || -> Vec<Result<SweepRow, SweepError>> {
        (0..total)
            .into_par_iter()
            .map(|i| {
                let (p1, p2, spec) = point(cfg, i);
                spec.validate()
                    .map_err(|source| SweepError::InvalidPoint { p1, p2, source })?;
                Ok(SweepRow {
                    p1,
                    p2,
                    ..evaluate(&spec, cfg.tol, cfg.branch)
                })
            })
            .collect()
    };
    let results = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SweepError::ThreadPool(e.to_string()))?
            .install(compute),
        None => compute(),
    };
    results.into_iter().collect()
}

pub fn write_csv(rows: &[SweepRow], out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            sci(r.p1),
            r.p2.map(sci).unwrap_or_default(),
            sci(r.e0.re),
            sci(r.e0.im),
            sci(r.e1.re),
            sci(r.e1.im),
            sci(r.abs_gamma),
            sci(r.discriminant),
            sci(r.ep_margin),
            r.phase,
            r.pf_exists,
        )?;
    }
    Ok(())
}

pub fn write_json(rows: &[SweepRow], out: &mut impl Write) -> io::Result<()> {
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "p1": num(r.p1),
                "p2": r.p2.map(num),
                "re_e0": num(r.e0.re),
                "im_e0": num(r.e0.im),
                "re_e1": num(r.e1.re),
                "im_e1": num(r.e1.im),
                "abs_gamma": num(r.abs_gamma),
                "discriminant": num(r.discriminant),
                "ep_margin": num(r.ep_margin),
                "phase": r.phase,
                "pf_exists": r.pf_exists,
            })
        })
        .collect();
    serde_json::to_writer_pretty(&mut *out, &rows)?;
    writeln!(out)
}

pub fn write(cfg: &SweepConfig, rows: &[SweepRow], out: &mut impl Write) -> io::Result<()> {
    match cfg.output {
        OutputFormat::Csv => write_csv(rows, out),
        OutputFormat::Json => write_json(rows, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DG: &str = r#"{"model": "DG", "params": {"r": 1, "s": 1, "t_c": 1,
        "theta": {"from": 0, "to": 3.141592653589793, "steps": 1001}, "phi": 0}}"#;

    #[test]
    fn grid_values() {
        let g = Grid {
            from: 0.0,
            to: 1.0,
            steps: 5,
        };
        let v: Vec<f64> = (0..5).map(|k| g.value(k)).collect();
        assert_eq!(v, [0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(
            Grid {
                from: 2.0,
                to: 3.0,
                steps: 1
            }
            .value(0),
            2.0
        );
        assert!(Grid {
            from: 0.0,
            to: 1.0,
            steps: 0
        }
        .validate()
        .is_err());
        assert!(Grid {
            from: 0.0,
            to: f64::NAN,
            steps: 3
        }
        .validate()
        .is_err());
    }

    #[test]
    fn dg_phase_sequence() {
        let cfg = SweepConfig::from_json(DG).unwrap();
        let rows = run(&cfg).unwrap();
        assert_eq!(rows.len(), 1001);
        let mut seq: Vec<&str> = Vec::new();
        for r in &rows {
            if seq.last() != Some(&r.phase) {
                seq.push(r.phase);
            }
        }
        // sin θ = 1 only at θ = π/2, where the spectrum coalesces.
        assert_eq!(seq, ["unbroken", "ep", "unbroken"]);
        let ep: Vec<&SweepRow> = rows.iter().filter(|r| r.phase == "ep").collect();
        assert_eq!(ep.len(), 1);
        assert!((ep[0].p1 - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(ep[0].abs_gamma.is_infinite() && !ep[0].pf_exists);
    }

    #[test]
    fn complex_slot_axes() {
        let text = r#"{"model": "GMM", "params": {"e1": 0, "e2": 0, "g1": 0,
            "g2": {"from": 0, "to": 4, "steps": 3},
            "nu0": [{"from": 0.5, "to": 1.5, "steps": 3}, 0]}, "output": "json"}"#;
        let cfg = SweepConfig::from_json(text).unwrap();
        assert_eq!(cfg.axes.len(), 2);
        assert_eq!(cfg.axes[1].component, Component::Re);
        assert_eq!(cfg.output, OutputFormat::Json);
        let rows = run(&cfg).unwrap();
        let coords: Vec<(f64, f64)> = rows.iter().map(|r| (r.p1, r.p2.unwrap())).collect();
        assert_eq!(coords.len(), 9);
        assert_eq!(
            coords[..4],
            [(0.0, 0.5), (0.0, 1.0), (0.0, 1.5), (2.0, 0.5)]
        );
        // ν₀ = 1 puts the exceptional point at ΔΓ = 2.
        let ep: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.phase == "ep")
            .map(|r| (r.p1, r.p2.unwrap()))
            .collect();
        assert_eq!(ep, [(2.0, 1.0)]);
        // Widths differ and the spectrum is neither real nor a conjugate pair.
        assert_eq!(rows[5].phase, "unclassifiable");
    }

    #[test]
    fn rel_no_pf_rows() {
        let text = r#"{"model": "Rel", "params": {"m": 1, "c": 1, "px": -1,
            "v": {"from": 0.5, "to": 1.5, "steps": 3}}}"#;
        let rows = run(&SweepConfig::from_json(text).unwrap()).unwrap();
        assert_eq!(rows[1].phase, "unbroken");
        assert!(!rows[1].pf_exists);
        assert_eq!(rows[1].abs_gamma, 0.0);
        assert!(rows[0].pf_exists && rows[2].pf_exists);
    }

    #[test]
    fn config_errors() {
        assert!(SweepConfig::from_json(r#"{"model": "DG", "params": {"r": 1}}"#).is_err());
        let no_axis = r#"{"model": "JSM", "params": {"a_r": 1, "b_r": 2}}"#;
        assert!(matches!(
            SweepConfig::from_json(no_axis),
            Err(SweepError::InvalidGrid(_))
        ));
        let bad_axis =
            r#"{"model": "JSM", "params": {"a_r": 1, "b_r": {"from": 1, "to": 2, "steps": 0}}}"#;
        assert!(matches!(
            SweepConfig::from_json(bad_axis),
            Err(SweepError::InvalidGrid(_))
        ));
        let extra = r#"{"model": "JSM", "params": {"a_r": 1, "b_r": {"from": 1, "to": 2, "steps": 2}}, "x": 1}"#;
        assert!(SweepConfig::from_json(extra).is_err());
    }

    #[test]
    fn invalid_points_are_reported() {
        let text =
            r#"{"model": "JSM", "params": {"a_r": 1, "b_r": {"from": -1, "to": 1, "steps": 3}}}"#;
        let cfg = SweepConfig::from_json(text).unwrap();
        assert!(matches!(run(&cfg), Err(SweepError::InvalidPoint { .. })));
    }

    #[test]
    fn axis_flags() {
        let a = Axis::parse("nu0.im=0:2:5").unwrap();
        assert_eq!(a.name, "nu0");
        assert_eq!(a.component, Component::Im);
        assert_eq!(
            a.grid,
            Grid {
                from: 0.0,
                to: 2.0,
                steps: 5
            }
        );
        assert!(Axis::parse("theta=0:1").is_err());
    }
}
