//! Scenario files.
//!
//! A scenario is a TOML document with one table per pipeline stage:
//!
//! ```toml
//! [domain]
//! kind = "interval"          # or "rectangle" with lx, ly
//! length = "pi"              # a number, or "pi", "2pi", "pi/2", "0.5*pi"
//! n = 400                    # interior nodes per axis (nx, ny for rectangles)
//!
//! [nonlinearity]
//! kind = "power"             # power | power_plus_linear | exp_minus_one | polynomial
//! p = 2.0
//!
//! [initial]
//! profile = "sine"           # eigenfunction | sine | plateau
//! amplitude = 10.0
//!
//! [params]
//! mode = "search"            # or "explicit" with alpha, beta, gamma
//!
//! [solver]
//! dt0 = 1e-4
//! ```
//!
//! `[params]`, `[solver]`, `[condition]`, `[compare]` and `[output]` may be
//! omitted. Unknown keys are errors everywhere.

use std::f64::consts::PI;
use std::path::Path;

use blowup_core::nonlinearity::SearchGrid;
use blowup_core::{ConditionParams, Domain, Eigenpair, Field, Grid, Nonlinearity, Sampling, SolverConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Validation(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Validation(msg.into()))
}

/// A length given as a number or as a multiple of π.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(try_from = "LengthRepr", into = "f64")]
pub struct Length(pub f64);

#[derive(Deserialize)]
#[serde(untagged)]
enum LengthRepr {
    Number(f64),
    Integer(i64),
    Text(String),
}

impl TryFrom<LengthRepr> for Length {
    type Error = String;

    fn try_from(repr: LengthRepr) -> Result<Self, String> {
        match repr {
            LengthRepr::Number(x) => Ok(Length(x)),
            LengthRepr::Integer(x) => Ok(Length(x as f64)),
            LengthRepr::Text(s) => parse_length(&s).map(Length),
        }
    }
}

impl From<Length> for f64 {
    fn from(l: Length) -> f64 {
        l.0
    }
}

/// Parses `"pi"`, `"2pi"`, `"2*pi"`, `"pi/2"`, `"3*pi/4"` or a plain number.
pub fn parse_length(text: &str) -> Result<f64, String> {
    let bad = || format!("cannot read length {text:?}; use a number or an expression like \"pi\", \"2pi\", \"pi/2\"");
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.to_string(), d.parse::<f64>().map_err(|_| bad())?),
        None => (s.clone(), 1.0),
    };
    let value = if let Some(coef) = num.strip_suffix("pi") {
        let coef = coef.strip_suffix('*').unwrap_or(coef);
        let c = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().map_err(|_| bad())? };
        c * PI
    } else {
        num.parse::<f64>().map_err(|_| bad())?
    };
    Ok(value / den)
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Interval {
        length: Length,
        n: usize,
    },
    Rectangle {
        lx: Length,
        ly: Length,
        n: Option<usize>,
        nx: Option<usize>,
        ny: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    Power { p: f64 },
    PowerPlusLinear { p: f64, a: f64 },
    ExpMinusOne,
    Polynomial { coeffs: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Principal eigenfunction scaled to unit peak.
    Eigenfunction,
    /// `Π sin(kπx/L)` over the axes.
    Sine,
    /// Rises linearly over `ramp` from the boundary, then flat at 1.
    Plateau,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub profile: Profile,
    pub amplitude: f64,
    /// Sine mode `k`, default 1.
    pub mode: Option<u32>,
    /// Plateau ramp width, default a tenth of the shortest side.
    pub ramp: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamsMode {
    #[default]
    Search,
    Explicit,
}

/// Which `λ₀` the β-constraint is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSource {
    #[default]
    Discrete,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSpec {
    pub mode: ParamsMode,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda0: LambdaSource,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub dt0: f64,
    pub t_max: f64,
    pub blowup_threshold: f64,
    pub dt_min: f64,
    pub safety: f64,
    pub record_every: usize,
    pub error_tol: f64,
    pub eig_tol: f64,
    pub eig_max_iter: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let c = SolverConfig::new(1e-4, 5.0);
        SolverSpec {
            dt0: c.dt0,
            t_max: c.t_max,
            blowup_threshold: c.blowup_threshold,
            dt_min: c.dt_min,
            safety: c.safety,
            record_every: c.record_every,
            error_tol: c.error_tol,
            eig_tol: 1e-10,
            eig_max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionSpec {
    pub u_max: f64,
    pub n_samples: usize,
    pub decades: f64,
}

impl Default for ConditionSpec {
    fn default() -> Self {
        let s = Sampling::default();
        ConditionSpec {
            u_max: s.u_max,
            n_samples: s.n_samples,
            decades: s.decades,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSpec {
    pub epsilons: Vec<f64>,
    pub cs: Vec<f64>,
}

impl Default for CompareSpec {
    fn default() -> Self {
        CompareSpec {
            epsilons: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 1.5, 2.0],
            cs: vec![0.1, 1.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for CSV output; `--out` takes precedence.
    pub dir: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub domain: DomainSpec,
    pub nonlinearity: NonlinearitySpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub params: ParamsSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub condition: ConditionSpec,
    #[serde(default)]
    pub compare: CompareSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl Scenario {
    /// Reads and validates a scenario file, applying `KEY=VALUE` overrides.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Scenario::from_toml(&text, overrides)
    }

    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Scenario, ScenarioError> {
        let scenario: Scenario = if overrides.is_empty() {
            toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?
        } else {
            let mut table: toml::Table = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
            for o in overrides {
                apply_override(&mut table, o)?;
            }
            let merged = toml::to_string(&table).map_err(|e| ScenarioError::Parse(e.to_string()))?;
            toml::from_str(&merged).map_err(|e| ScenarioError::Parse(format!("after --set overrides: {e}")))?
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.grid()?;
        self.nonlinearity()?;
        let init = &self.initial;
        if !(init.amplitude.is_finite() && init.amplitude >= 0.0) {
            return invalid(format!("initial.amplitude must be a finite number >= 0, got {}", init.amplitude));
        }
        match (init.profile, init.mode, init.ramp) {
            (Profile::Sine, Some(0), _) => return invalid("initial.mode must be at least 1"),
            (p, Some(_), _) if p != Profile::Sine => return invalid("initial.mode only applies to profile = \"sine\""),
            (p, _, Some(_)) if p != Profile::Plateau => return invalid("initial.ramp only applies to profile = \"plateau\""),
            (_, _, Some(r)) if !(r.is_finite() && r > 0.0) => return invalid("initial.ramp must be positive"),
            _ => {}
        }
        if self.params.mode == ParamsMode::Explicit {
            self.explicit_params()?;
        } else if self.params.alpha.is_some() || self.params.beta.is_some() || self.params.gamma.is_some() {
            return invalid("params.alpha/beta/gamma require params.mode = \"explicit\"");
        }
        self.solver_config().validate().map_err(|e| ScenarioError::Validation(e.to_string()))?;
        if !(self.solver.eig_tol > 0.0) || self.solver.eig_max_iter == 0 {
            return invalid("solver.eig_tol must be positive and solver.eig_max_iter at least 1");
        }
        self.sampling().validate().map_err(|e| ScenarioError::Validation(e.to_string()))?;
        if self.compare.epsilons.is_empty() {
            return invalid("compare.epsilons must not be empty");
        }
        if self.compare.cs.is_empty() {
            return invalid("compare.cs must not be empty");
        }
        if self.compare.epsilons.iter().chain(&self.compare.cs).any(|v| !(v.is_finite() && *v > 0.0)) {
            return invalid("compare.epsilons and compare.cs must be positive");
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, ScenarioError> {
        let err = |e: blowup_core::GridError| ScenarioError::Validation(format!("domain: {e}"));
        match &self.domain {
            DomainSpec::Interval { length, n } => Grid::new(Domain::interval(length.0).map_err(err)?, *n).map_err(err),
            DomainSpec::Rectangle { lx, ly, n, nx, ny } => {
                let d = Domain::rectangle(lx.0, ly.0).map_err(err)?;
                let (nx, ny) = match (n, nx, ny) {
                    (Some(n), None, None) => (*n, *n),
                    (None, Some(x), Some(y)) => (*x, *y),
                    _ => return invalid("domain: give either n or both nx and ny for a rectangle"),
                };
                Grid::with_counts(d, nx, ny).map_err(err)
            }
        }
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity, ScenarioError> {
        let nl = match &self.nonlinearity {
            NonlinearitySpec::Power { p } => Nonlinearity::power(*p),
            NonlinearitySpec::PowerPlusLinear { p, a } => Nonlinearity::power_plus_linear(*p, *a),
            NonlinearitySpec::ExpMinusOne => Ok(Nonlinearity::exp_minus_one()),
            NonlinearitySpec::Polynomial { coeffs } => Nonlinearity::polynomial(coeffs.clone()),
        };
        nl.map_err(|e| ScenarioError::Validation(format!("nonlinearity: {e}")))
    }

    /// `(α, β, γ)` from the `[params]` table when `mode = "explicit"`.
    pub fn explicit_params(&self) -> Result<ConditionParams, ScenarioError> {
        let p = &self.params;
        match (p.alpha, p.beta, p.gamma) {
            (Some(a), Some(b), Some(g)) => {
                ConditionParams::new(a, b, g).map_err(|e| ScenarioError::Validation(format!("params: {e}")))
            }
            _ => invalid("params.mode = \"explicit\" needs alpha, beta and gamma"),
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            blowup_threshold: s.blowup_threshold,
            dt_min: s.dt_min,
            safety: s.safety,
            record_every: s.record_every,
            error_tol: s.error_tol,
            ..SolverConfig::new(s.dt0, s.t_max)
        }
    }

    pub fn sampling(&self) -> Sampling {
        Sampling {
            u_max: self.condition.u_max,
            n_samples: self.condition.n_samples,
            decades: self.condition.decades,
        }
    }

    pub fn search_grid(&self) -> SearchGrid {
        SearchGrid::default()
    }

    /// Samples `amplitude × profile` on `grid`. The eigenfunction profile
    /// needs the principal eigenpair.
    pub fn initial_field(&self, grid: &Grid, eigen: Option<&Eigenpair>) -> Result<Field, ScenarioError> {
        let a = self.initial.amplitude;
        let err = |e: blowup_core::GridError| ScenarioError::Validation(format!("initial data: {e}"));
        let (lx, ly) = match grid.domain() {
            Domain::Interval { length } => (length, None),
            Domain::Rectangle { lx, ly } => (lx, Some(ly)),
        };
        match self.initial.profile {
            Profile::Eigenfunction => {
                let phi = &eigen.expect("eigenfunction profile needs the eigenpair").phi0;
                let peak = phi.sup_norm();
                phi.scaled(a / peak).map_err(err)
            }
            Profile::Sine => {
                let k = self.initial.mode.unwrap_or(1) as f64;
                grid.sample(|x| {
                    let sx = (k * PI * x[0] / lx).sin();
                    a * ly.map_or(sx, |ly| sx * (k * PI * x[1] / ly).sin())
                })
                .map_err(err)
            }
            Profile::Plateau => {
                let ramp = self.initial.ramp.unwrap_or(0.1 * ly.map_or(lx, |ly| lx.min(ly)));
                grid.sample(|x| {
                    let mut d = x[0].min(lx - x[0]);
                    if let Some(ly) = ly {
                        d = d.min(x[1]).min(ly - x[1]);
                    }
                    a * (d / ramp).min(1.0)
                })
                .map_err(err)
            }
        }
    }

    /// Whether the pipeline needs the discrete eigenpair.
    pub fn needs_eigenpair(&self) -> bool {
        self.params.lambda0 == LambdaSource::Discrete || self.initial.profile == Profile::Eigenfunction
    }
}

/// Applies `section.key=value` to a parsed document. The value is read as a
/// TOML value when possible (numbers, booleans, arrays, quoted strings) and
/// as a bare string otherwise.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ScenarioError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ScenarioError::Parse(format!("override {assignment:?} is not KEY=VALUE")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(ScenarioError::Parse(format!("override key {key:?} is malformed")));
    }
    let value = parse_value(raw.trim());
    let mut current = table;
    for segment in &path[..path.len() - 1] {
        let entry = current
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = entry
            .as_table_mut()
            .ok_or_else(|| ScenarioError::Parse(format!("override key {key:?}: {segment} is not a table")))?;
    }
    current.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[domain]
kind = "interval"
length = "pi"
n = 400

[nonlinearity]
kind = "power"
p = 2

[initial]
profile = "sine"
amplitude = 10

[params]
mode = "search"

[solver]
dt0 = 1e-4
"#;

    #[test]
    fn minimal_file_round_trips() {
        let s = Scenario::from_toml(MINIMAL, &[]).unwrap();
        assert_eq!(s.grid().unwrap().nx(), 400);
        assert_eq!(s.nonlinearity().unwrap(), Nonlinearity::power(2.0).unwrap());
        assert_eq!(s.solver.dt0, 1e-4);
        assert_eq!(s.params.mode, ParamsMode::Search);
        let text = toml::to_string(&s).unwrap();
        assert_eq!(Scenario::from_toml(&text, &[]).unwrap(), s);
    }

    #[test]
    fn lengths() {
        assert_eq!(parse_length("pi").unwrap(), PI);
        assert_eq!(parse_length("2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_length("2 * pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_length("pi/2").unwrap(), PI / 2.0);
        assert_eq!(parse_length("3*PI/4").unwrap(), 0.75 * PI);
        assert_eq!(parse_length("1.5").unwrap(), 1.5);
        assert!(parse_length("tau").is_err());
    }

    #[test]
    fn unknown_key_is_named() {
        let text = MINIMAL.replace("mode = \"search\"", "mode = \"explicit\"\nbete = 0.5");
        let err = Scenario::from_toml(&text, &[]).unwrap_err();
        assert!(matches!(err, ScenarioError::Parse(_)));
        assert!(err.to_string().contains("bete"), "{err}");
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn negative_amplitude_is_a_validation_error() {
        let err = Scenario::from_toml(MINIMAL, &["initial.amplitude=-1".into()]).unwrap_err();
        assert!(matches!(err, ScenarioError::Validation(_)), "{err}");
    }

    #[test]
    fn empty_epsilon_grid_is_a_validation_error() {
        let err = Scenario::from_toml(MINIMAL, &["compare.epsilons=[]".into()]).unwrap_err();
        assert!(matches!(err, ScenarioError::Validation(_)), "{err}");
    }

    #[test]
    fn overrides_create_tables_and_parse_values() {
        let s = Scenario::from_toml(
            MINIMAL,
            &[
                "params.mode=explicit".into(),
                "params.alpha=3".into(),
                "params.beta=0.5".into(),
                "params.gamma=1".into(),
                "params.lambda0=analytic".into(),
                "output.dir=\"runs/a\"".into(),
            ],
        )
        .unwrap();
        assert_eq!(s.explicit_params().unwrap(), ConditionParams::new(3.0, 0.5, 1.0).unwrap());
        assert_eq!(s.params.lambda0, LambdaSource::Analytic);
        assert_eq!(s.output.dir, "runs/a");
        assert!(Scenario::from_toml(MINIMAL, &["solver.dt0".into()]).is_err());
        assert!(Scenario::from_toml(MINIMAL, &["solver.typo=1".into()]).is_err());
    }

    #[test]
    fn explicit_mode_needs_all_three() {
        let err = Scenario::from_toml(MINIMAL, &["params.mode=explicit".into(), "params.alpha=3".into()]).unwrap_err();
        assert!(matches!(err, ScenarioError::Validation(_)));
    }

    #[test]
    fn profiles() {
        let s = Scenario::from_toml(MINIMAL, &["domain.n=9".into(), "initial.profile=plateau".into(), "initial.ramp=0.5".into()])
            .unwrap();
        let grid = s.grid().unwrap();
        let u = s.initial_field(&grid, None).unwrap();
        assert_eq!(u.sup_norm(), 10.0);
        assert!(u.values()[0] < 10.0);
        let s = Scenario::from_toml(MINIMAL, &["initial.mode=2".into()]).unwrap();
        assert!(s.initial_field(&s.grid().unwrap(), None).unwrap().min_value() < 0.0);
        assert!(Scenario::from_toml(MINIMAL, &["initial.profile=plateau".into(), "initial.mode=2".into()]).is_err());
    }

    #[test]
    fn rectangle_counts() {
        let text = MINIMAL.replace("kind = \"interval\"\nlength = \"pi\"\nn = 400", "kind = \"rectangle\"\nlx = 1\nly = \"pi\"\nnx = 5\nny = 7");
        let s = Scenario::from_toml(&text, &[]).unwrap();
        let g = s.grid().unwrap();
        assert_eq!((g.nx(), g.ny()), (5, 7));
        let both = text.replace("nx = 5", "n = 4\nnx = 5");
        assert!(matches!(Scenario::from_toml(&both, &[]), Err(ScenarioError::Validation(_))));
    }
}
