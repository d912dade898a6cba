//! Case definitions: the TOML document format, presets and validation.
//!
//! A document has four sections, `[case]`, `[scheme]`, `[boundaries]` and
//! `[output]`, whose keys are the field names of the section structs below.
//! A top-level `preset = "<name>"` key starts from a built-in case; keys in
//! the document then replace preset values one by one.
//!
//! ```toml
//! preset = "stefan1d"
//!
//! [scheme]
//! method = "eebm"
//!
//! [output]
//! dir = "out"
//! trace = true
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

use crate::analytic::{solve_lambda, AnalyticError, AnalyticSolution, StefanCaseParams};
use crate::boundary::{BoundaryCondition, BoundarySpec, CornerPolicy};
use crate::lattice::{Grid, LatticeKind};
use crate::schemes::{
    tau_from_timestep, timestep_from_tau, Method, SchemeConfig, DEFAULT_INNER_MAX_ITER,
    DEFAULT_INNER_TOL, DEFAULT_NEWTON_MAX_ITER, DEFAULT_NEWTON_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaseError {
    #[error("syntax error in case document: {0}")]
    Syntax(String),
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("unknown preset `{0}` (available: stefan1d, freeze2d)")]
    UnknownPreset(String),
    #[error("override `{0}` must look like section.key=value")]
    MalformedOverride(String),
}

impl CaseError {
    fn field(path: &str, message: impl Into<String>) -> Self {
        CaseError::Field {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    /// Exact one-dimensional solution at the time its front sits at
    /// `front_position`.
    ExactStefan,
    Uniform,
    /// Node values listed in `initial_table`.
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterfaceDefinition {
    /// Linear interpolation of the `theta = 0` crossing.
    #[default]
    ZeroCrossing,
    /// Crossing of liquid fraction one half.
    LiquidFraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSection {
    pub dimension: usize,
    pub lattice: LatticeKind,
    /// Nodes per axis, walls included.
    pub n: usize,
    /// Domain side length.
    pub side: f64,
    pub ste: f64,
    /// Far-field solid temperature of the exact solution.
    pub theta0: f64,
    pub initial: InitialKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_table: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub front_position: Option<f64>,
    /// Defaults to the front time for `exact-stefan`, zero otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_start: Option<f64>,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: u32,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    #[serde(default = "default_inner_max_iter")]
    pub inner_max_iter: u32,
}

fn default_delta() -> f64 {
    0.005
}
fn default_newton_tol() -> f64 {
    DEFAULT_NEWTON_TOL
}
fn default_newton_max_iter() -> u32 {
    DEFAULT_NEWTON_MAX_ITER
}
fn default_inner_tol() -> f64 {
    DEFAULT_INNER_TOL
}
fn default_inner_max_iter() -> u32 {
    DEFAULT_INNER_MAX_ITER
}

/// Face conditions as text: `dirichlet:<value>`, `neumann`, `bounce-back`
/// or `periodic`. One-dimensional cases use `left` and `right` only.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bottom: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Directory for CSV files; nothing is written when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Steps between interface samples; about 500 samples per run if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_every: Option<u64>,
    /// Interface position against time (1D).
    #[serde(default)]
    pub trace: bool,
    /// Final temperature field.
    #[serde(default)]
    pub profile: bool,
    /// Times of 1D profile or 2D diagonal snapshots.
    #[serde(default)]
    pub profile_times: Vec<f64>,
    /// Temperature levels extracted from the final 2D field.
    #[serde(default)]
    pub isolines: Vec<f64>,
    #[serde(default)]
    pub interface: InterfaceDefinition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    pub case: CaseSection,
    pub scheme: SchemeSection,
    #[serde(default)]
    pub boundaries: BoundarySection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Parsed face condition before it is matched to a scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceSetting {
    Dirichlet(f64),
    Neumann,
    BounceBack,
    Periodic,
}

impl std::str::FromStr for FaceSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(v) = s.strip_prefix("dirichlet:") {
            return v
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(FaceSetting::Dirichlet)
                .ok_or_else(|| format!("invalid Dirichlet value `{v}`"));
        }
        match s {
            "neumann" => Ok(FaceSetting::Neumann),
            "bounce-back" => Ok(FaceSetting::BounceBack),
            "periodic" => Ok(FaceSetting::Periodic),
            other => Err(format!(
                "unknown condition `{other}` (dirichlet:<value>, neumann, bounce-back, periodic)"
            )),
        }
    }
}

impl FaceSetting {
    /// Dirichlet and Neumann walls act on the post-stream moment for the
    /// implicit regularized scheme; the other schemes close the moment of
    /// `f` for Dirichlet walls and use bounce-back for zero-flux walls.
    pub fn condition(self, method: Method) -> BoundaryCondition {
        match (self, method) {
            (FaceSetting::Dirichlet(v), Method::Irebm) => BoundaryCondition::DirichletOnQ(v),
            (FaceSetting::Dirichlet(v), _) => BoundaryCondition::DirichletEquilibrium(v),
            (FaceSetting::Neumann, Method::Irebm) => BoundaryCondition::NeumannOnQ,
            (FaceSetting::Neumann, _) | (FaceSetting::BounceBack, _) => {
                BoundaryCondition::BounceBack
            }
            (FaceSetting::Periodic, _) => BoundaryCondition::Periodic,
        }
    }
}

pub const PRESETS: [&str; 2] = ["stefan1d", "freeze2d"];

/// Hours to nondimensional time for the 2D preset.
pub fn freeze2d_time(hours: f64) -> f64 {
    let alpha = 1.26e-6;
    let length: f64 = 1.0;
    hours * 3600.0 * alpha / (length * length)
}

/// Built-in case as a TOML table, nondimensionalized from physical data.
pub fn preset_table(name: &str) -> Result<Table, CaseError> {
    let text = match name {
        "stefan1d" => {
            let (c, latent, alpha, length) = (1.0, 350.0, 8e-5, 1.0);
            let (t_f, t_h, t_c) = (500.0, 600.0, 450.0);
            let reference = t_h - t_f;
            let ste = c * reference / latent;
            let theta_c = (t_c - t_f) / reference;
            let t_end = 160.0 * alpha / (length * length);
            format!(
                r#"
[case]
dimension = 1
lattice = "D1Q3"
n = 801
side = {length:?}
ste = {ste:?}
theta0 = {theta_c:?}
initial = "exact-stefan"
front_position = 0.01
t_end = {t_end:?}

[scheme]
method = "irebm"
tau = 0.62
delta = 0.005

[boundaries]
left = "dirichlet:1"
right = "dirichlet:{theta_c:?}"

[output]
trace = true
profile = true
"#
            )
        }
        "freeze2d" => {
            let (c, latent) = (1.762, 338.0);
            let (t_f, t_i, t_wall) = (0.0, 10.0, -20.0);
            let reference = t_i - t_f;
            let ste = c * reference / latent;
            let theta_wall = (t_wall - t_f) / reference;
            let theta_i = (t_i - t_f) / reference;
            let t_end = freeze2d_time(20.0);
            let p5 = freeze2d_time(5.0);
            let levels: Vec<f64> = [-5.0, 0.0, 5.0]
                .iter()
                .map(|t| (t - t_f) / reference)
                .collect();
            format!(
                r#"
[case]
dimension = 2
lattice = "D2Q5"
n = 201
side = 4.0
ste = {ste:?}
theta0 = {theta_wall:?}
initial = "uniform"
initial_value = {theta_i:?}
t_end = {t_end:?}

[scheme]
method = "irebm"
tau = 0.84
delta = 0.02

[boundaries]
left = "dirichlet:{theta_wall:?}"
bottom = "dirichlet:{theta_wall:?}"
right = "neumann"
top = "neumann"

[output]
profile = true
profile_times = [{p5:?}, {t_end:?}]
isolines = [{:?}, {:?}, {:?}]
"#,
                levels[0], levels[1], levels[2]
            )
        }
        other => return Err(CaseError::UnknownPreset(other.to_string())),
    };
    text.parse::<Table>()
        .map_err(|e| CaseError::Syntax(e.to_string()))
}

/// Recursively copies `overlay` into `base`; tables merge, other values
/// replace.
fn merge(base: &mut Table, overlay: Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Parses an override value as a TOML value, falling back to a string.
fn override_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Applies `section.key=value` overrides to a document table.
pub fn apply_overrides(table: &mut Table, overrides: &[String]) -> Result<(), CaseError> {
    for item in overrides {
        let (path, raw) = item
            .split_once('=')
            .ok_or_else(|| CaseError::MalformedOverride(item.clone()))?;
        let keys: Vec<&str> = path.trim().split('.').collect();
        if keys.iter().any(|k| k.is_empty()) {
            return Err(CaseError::MalformedOverride(item.clone()));
        }
        let mut cursor = &mut *table;
        for k in &keys[..keys.len() - 1] {
            let entry = cursor
                .entry(k.to_string())
                .or_insert_with(|| Value::Table(Table::new()));
            cursor = match entry {
                Value::Table(t) => t,
                _ => return Err(CaseError::MalformedOverride(item.clone())),
            };
        }
        cursor.insert(keys[keys.len() - 1].to_string(), override_value(raw.trim()));
    }
    Ok(())
}

/// Parses and validates a case document.
pub fn parse_case(text: &str) -> Result<CaseSpec, CaseError> {
    parse_case_with_overrides(text, &[])
}

pub fn parse_case_with_overrides(text: &str, overrides: &[String]) -> Result<CaseSpec, CaseError> {
    let mut doc = text
        .parse::<Table>()
        .map_err(|e| CaseError::Syntax(e.to_string()))?;
    let mut table = match doc.remove("preset") {
        Some(Value::String(name)) => preset_table(&name)?,
        Some(other) => {
            return Err(CaseError::field(
                "preset",
                format!("expected a preset name, found {}", other.type_str()),
            ))
        }
        None => Table::new(),
    };
    merge(&mut table, doc);
    apply_overrides(&mut table, overrides)?;
    from_table(table)
}

/// Case for a named preset with overrides applied.
pub fn preset(name: &str, overrides: &[String]) -> Result<CaseSpec, CaseError> {
    let mut table = preset_table(name)?;
    apply_overrides(&mut table, overrides)?;
    from_table(table)
}

fn from_table(table: Table) -> Result<CaseSpec, CaseError> {
    let spec: CaseSpec =
        serde_path_to_error::deserialize(Value::Table(table)).map_err(|e| CaseError::Field {
            path: e.path().to_string(),
            message: e.into_inner().to_string(),
        })?;
    spec.validate()?;
    Ok(spec)
}

impl CaseSpec {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("case spec serializes")
    }

    /// Stable 64-bit FNV-1a hash of the serialized case.
    pub fn hash(&self) -> u64 {
        self.to_toml().bytes().fold(0xcbf29ce484222325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x100000001b3)
        })
    }

    pub fn validate(&self) -> Result<(), CaseError> {
        let c = &self.case;
        let s = &self.scheme;
        if c.dimension != 1 && c.dimension != 2 {
            return Err(CaseError::field("case.dimension", "must be 1 or 2"));
        }
        if c.lattice.dimension() != c.dimension {
            return Err(CaseError::field(
                "case.lattice",
                format!("{} does not match dimension {}", c.lattice, c.dimension),
            ));
        }
        if c.n < 8 {
            return Err(CaseError::field(
                "case.n",
                format!("must be at least 8, got {}", c.n),
            ));
        }
        positive("case.side", c.side)?;
        positive("case.ste", c.ste)?;
        if !c.theta0.is_finite() {
            return Err(CaseError::field("case.theta0", "must be finite"));
        }
        match c.initial {
            InitialKind::ExactStefan => {
                if c.dimension != 1 {
                    return Err(CaseError::field(
                        "case.initial",
                        "exact-stefan needs a 1D case",
                    ));
                }
                let front = c.front_position.ok_or_else(|| {
                    CaseError::field("case.front_position", "required by exact-stefan")
                })?;
                positive("case.front_position", front)?;
                if front >= c.side {
                    return Err(CaseError::field(
                        "case.front_position",
                        "must lie inside the domain",
                    ));
                }
                self.oracle()
                    .map_err(|e| CaseError::field("case.theta0", e.to_string()))?;
            }
            InitialKind::Uniform => {
                let v = c.initial_value.ok_or_else(|| {
                    CaseError::field("case.initial_value", "required by uniform initial data")
                })?;
                if !v.is_finite() {
                    return Err(CaseError::field("case.initial_value", "must be finite"));
                }
            }
            InitialKind::Table => {
                let table = c.initial_table.as_ref().ok_or_else(|| {
                    CaseError::field("case.initial_table", "required by table initial data")
                })?;
                let nodes = self.grid().len();
                if table.len() != nodes {
                    return Err(CaseError::field(
                        "case.initial_table",
                        format!("has {} values, grid has {nodes} nodes", table.len()),
                    ));
                }
                if table.iter().any(|v| !v.is_finite()) {
                    return Err(CaseError::field(
                        "case.initial_table",
                        "values must be finite",
                    ));
                }
            }
        }
        let t_start = self.t_start();
        if !t_start.is_finite() || t_start < 0.0 {
            return Err(CaseError::field(
                "case.t_start",
                "must be a non-negative time",
            ));
        }
        if !(c.t_end > t_start) {
            return Err(CaseError::field(
                "case.t_end",
                format!("must exceed the start time {t_start}"),
            ));
        }

        match (s.tau, s.dt) {
            (Some(_), Some(_)) => {
                return Err(CaseError::field(
                    "scheme.tau",
                    "give either tau or dt, not both",
                ))
            }
            (None, None) => return Err(CaseError::field("scheme.tau", "tau or dt is required")),
            (Some(tau), None) if !(tau > 0.5 && tau.is_finite()) => {
                return Err(CaseError::field(
                    "scheme.tau",
                    format!("must exceed 1/2, got {tau}"),
                ))
            }
            (None, Some(dt)) => positive("scheme.dt", dt)?,
            _ => {}
        }
        self.scheme_config()
            .validate()
            .map_err(|e| CaseError::field("scheme", e.to_string()))?;

        let spec = self.boundary_spec()?;
        spec.validate(s.method, c.dimension)
            .map_err(|e| CaseError::field("boundaries", e.to_string()))?;

        let o = &self.output;
        if o.sample_every == Some(0) {
            return Err(CaseError::field("output.sample_every", "must be positive"));
        }
        if o.trace && c.dimension != 1 {
            return Err(CaseError::field(
                "output.trace",
                "interface traces are 1D only",
            ));
        }
        for &t in &o.profile_times {
            if !(t >= t_start && t <= c.t_end) {
                return Err(CaseError::field(
                    "output.profile_times",
                    format!("{t} is outside [{t_start}, {}]", c.t_end),
                ));
            }
        }
        if !o.isolines.is_empty() && c.dimension != 2 {
            return Err(CaseError::field(
                "output.isolines",
                "isolines need a 2D case",
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        let c = &self.case;
        let periodic = self.boundary_spec().map(|b| b.periodic_axes(c.dimension));
        let cells = |axis: usize| match &periodic {
            Ok(p) if p[axis] => c.n,
            _ => c.n - 1,
        };
        let dx = c.side / cells(0) as f64;
        if c.dimension == 1 {
            Grid::line(c.n, dx)
        } else {
            Grid::square(c.n, dx)
        }
    }

    pub fn dx(&self) -> f64 {
        self.grid().dx
    }

    pub fn tau(&self) -> f64 {
        match (self.scheme.tau, self.scheme.dt) {
            (Some(tau), _) => tau,
            (None, Some(dt)) => tau_from_timestep(dt, self.dx()).unwrap_or(f64::NAN),
            (None, None) => f64::NAN,
        }
    }

    pub fn dt(&self) -> f64 {
        match (self.scheme.tau, self.scheme.dt) {
            (_, Some(dt)) => dt,
            (Some(tau), None) => timestep_from_tau(tau, self.dx()).unwrap_or(f64::NAN),
            (None, None) => f64::NAN,
        }
    }

    pub fn t_start(&self) -> f64 {
        let c = &self.case;
        match (c.t_start, c.initial) {
            (Some(t), _) => t,
            (None, InitialKind::ExactStefan) => self
                .oracle()
                .ok()
                .zip(c.front_position)
                .and_then(|(o, x)| o.initial_time_for_front(x).ok())
                .unwrap_or(f64::NAN),
            (None, _) => 0.0,
        }
    }

    /// `round((t_end - t_start) / dt)`.
    pub fn steps(&self) -> u64 {
        ((self.case.t_end - self.t_start()) / self.dt()).round() as u64
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        let s = &self.scheme;
        SchemeConfig {
            method: s.method,
            tau: self.tau(),
            ste: self.case.ste,
            delta: s.delta,
            newton_tol: s.newton_tol,
            newton_max_iter: s.newton_max_iter,
            inner_tol: s.inner_tol,
            inner_max_iter: s.inner_max_iter,
        }
    }

    pub fn boundary_spec(&self) -> Result<BoundarySpec, CaseError> {
        let b = &self.boundaries;
        let method = self.scheme.method;
        let face = |name: &str,
                    value: &Option<String>,
                    needed: bool|
         -> Result<BoundaryCondition, CaseError> {
            let path = format!("boundaries.{name}");
            match value {
                Some(text) => text
                    .parse::<FaceSetting>()
                    .map(|f| f.condition(method))
                    .map_err(|m| CaseError::field(&path, m)),
                None if needed => Err(CaseError::field(&path, "missing face condition")),
                None => Ok(BoundaryCondition::Periodic),
            }
        };
        let two_d = self.case.dimension == 2;
        Ok(BoundarySpec {
            left: face("left", &b.left, true)?,
            right: face("right", &b.right, true)?,
            bottom: face("bottom", &b.bottom, two_d)?,
            top: face("top", &b.top, two_d)?,
            corners: CornerPolicy::default(),
        })
    }

    /// Exact solution for the case parameters (equal phase properties).
    pub fn oracle(&self) -> Result<AnalyticSolution, AnalyticError> {
        solve_lambda(StefanCaseParams::symmetric(self.case.ste, self.case.theta0))
    }

    /// Initial temperature at every node.
    pub fn initial_theta(&self) -> Result<Vec<f64>, CaseError> {
        let grid = self.grid();
        let c = &self.case;
        match c.initial {
            InitialKind::Uniform => Ok(vec![c.initial_value.unwrap_or(0.0); grid.len()]),
            InitialKind::Table => Ok(c.initial_table.clone().unwrap_or_default()),
            InitialKind::ExactStefan => {
                let oracle = self
                    .oracle()
                    .map_err(|e| CaseError::field("case.theta0", e.to_string()))?;
                let t0 = self.t_start();
                (0..grid.len())
                    .map(|n| {
                        oracle
                            .exact_theta(grid.position(n)[0], t0)
                            .map_err(|e| CaseError::field("case.t_start", e.to_string()))
                    })
                    .collect()
            }
        }
    }

    /// Steps between interface samples.
    pub fn sample_every(&self) -> u64 {
        self.output
            .sample_every
            .unwrap_or_else(|| (self.steps() / 500).max(1))
    }
}

fn positive(path: &str, v: f64) -> Result<(), CaseError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CaseError::field(path, format!("must be positive, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stefan1d_preset_values() {
        let spec = preset("stefan1d", &[]).unwrap();
        assert_eq!(spec.scheme.method, Method::Irebm);
        assert_eq!(spec.case.n, 801);
        assert!((spec.case.ste - 0.2857).abs() < 1e-4);
        assert_eq!(spec.case.theta0, -0.5);
        assert!((spec.case.t_end - 1.28e-2).abs() < 1e-15);
        assert_eq!(spec.scheme.delta, 0.005);
        let dx = 1.0 / 800.0;
        assert!((spec.dx() - dx).abs() < 1e-18);
        assert!((spec.dt() - 0.12 * dx * dx / 3.0).abs() < 1e-22);
        let theta = spec.initial_theta().unwrap();
        assert_eq!(theta[0], 1.0);
        assert!((theta[800] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn freeze2d_preset_values() {
        let spec = preset("freeze2d", &["scheme.delta=2e-2".into()]).unwrap();
        assert_eq!(spec.case.n, 201);
        assert!((spec.case.ste - 0.0521).abs() < 1e-4);
        assert!((spec.case.t_end - 9.072e-2).abs() < 1e-12);
        assert_eq!(spec.case.side, 4.0);
        assert!((spec.dx() - 0.02).abs() < 1e-15);
        let b = spec.boundary_spec().unwrap();
        assert_eq!(b.left, BoundaryCondition::DirichletOnQ(-2.0));
        assert_eq!(b.top, BoundaryCondition::NeumannOnQ);
        assert_eq!(spec.output.isolines, vec![-0.5, 0.0, 0.5]);
    }

    #[test]
    fn neumann_maps_to_bounce_back_for_explicit_scheme() {
        let spec = preset("freeze2d", &["scheme.method=\"eebm\"".into()]).unwrap();
        let b = spec.boundary_spec().unwrap();
        assert_eq!(b.right, BoundaryCondition::BounceBack);
        assert_eq!(b.left, BoundaryCondition::DirichletEquilibrium(-2.0));
    }

    #[test]
    fn bare_override_strings_are_accepted() {
        let spec = preset(
            "stefan1d",
            &["scheme.method=ilfbm".into(), "case.n=201".into()],
        )
        .unwrap();
        assert_eq!(spec.scheme.method, Method::Ilfbm);
        assert_eq!(spec.case.n, 201);
    }

    #[test]
    fn document_overrides_preset_keys() {
        let spec = parse_case("preset = \"stefan1d\"\n[scheme]\nmethod = \"eebm\"\n").unwrap();
        assert_eq!(spec.scheme.method, Method::Eebm);
        assert_eq!(spec.scheme.tau, Some(0.62));
    }

    #[test]
    fn errors_carry_key_paths() {
        let err = parse_case("preset = \"stefan1d\"\n[scheme]\nmethd = \"eebm\"\n").unwrap_err();
        assert!(err.to_string().contains("scheme"), "{err}");
        assert!(err.to_string().contains("methd"), "{err}");

        let err = preset("stefan1d", &["scheme.dt=1e-7".into()]).unwrap_err();
        assert!(matches!(err, CaseError::Field { ref path, .. } if path == "scheme.tau"));

        let err = preset("stefan1d", &["scheme.tau=0.4".into()]).unwrap_err();
        assert!(err.to_string().starts_with("scheme.tau"), "{err}");

        let err = preset("stefan1d", &["case.n=4".into()]).unwrap_err();
        assert!(err.to_string().starts_with("case.n"), "{err}");

        let err = preset("stefan1d", &["case.t_end=1e-5".into()]).unwrap_err();
        assert!(err.to_string().starts_with("case.t_end"), "{err}");

        let err = parse_case("[case]\ndimension = 1\n").unwrap_err();
        assert!(err.to_string().contains("case"), "{err}");

        assert_eq!(
            preset("nope", &[]).unwrap_err(),
            CaseError::UnknownPreset("nope".into())
        );
        assert!(matches!(
            preset("stefan1d", &["novalue".into()]),
            Err(CaseError::MalformedOverride(_))
        ));
        let err = preset("stefan1d", &["boundaries.left=hot".into()]).unwrap_err();
        assert!(err.to_string().starts_with("boundaries.left"), "{err}");
    }

    #[test]
    fn dt_given_derives_tau() {
        let dx: f64 = 1.0 / 800.0;
        let dt = 0.12 * dx * dx / 3.0;
        let spec = preset("stefan1d", &["scheme.tau=0.62".into()]).unwrap();
        let mut table = toml::Table::try_from(&spec).unwrap();
        let scheme = table.get_mut("scheme").unwrap().as_table_mut().unwrap();
        scheme.remove("tau");
        scheme.insert("dt".into(), Value::Float(dt));
        let spec = from_table(table).unwrap();
        assert!((spec.tau() - 0.62).abs() < 1e-12);
    }

    #[test]
    fn step_count_rounds_duration() {
        let spec = preset("stefan1d", &["case.n=201".into()]).unwrap();
        let expected = ((spec.case.t_end - spec.t_start()) / spec.dt()).round() as u64;
        assert_eq!(spec.steps(), expected);
        assert!(spec.steps() > 0);
    }

    #[test]
    fn preset_round_trips() {
        for name in PRESETS {
            let spec = preset(name, &[]).unwrap();
            assert_eq!(parse_case(&spec.to_toml()).unwrap(), spec);
            assert_eq!(spec.hash(), parse_case(&spec.to_toml()).unwrap().hash());
        }
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(
            n in 8usize..2000,
            tau in 0.51f64..2.0,
            delta in 1e-4f64..0.1,
            method in prop::sample::select(Method::ALL.to_vec()),
            front in 0.001f64..0.05,
            sample in prop::option::of(1u64..1000),
            trace: bool,
        ) {
            let mut spec = preset("stefan1d", &[]).unwrap();
            spec.case.n = n;
            spec.case.front_position = Some(front);
            spec.scheme.tau = Some(tau);
            spec.scheme.delta = delta;
            spec.scheme.method = method;
            spec.output.sample_every = sample;
            spec.output.trace = trace;
            prop_assume!(spec.validate().is_ok());
            let back = parse_case(&spec.to_toml()).unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}
