//! Experiment configuration, read from JSON.
//!
//! Units: time in seconds, rates in rad/s, torques in N·m. Spacecraft
//! attitude angles (state entries 3..6) are given in `initial_state.unit`,
//! `"rad"` by default; all other entries are in SI units regardless.
//!
//! ```json
//! {
//!   "problem": "spacecraft",
//!   "sspc": { "ell": 2 },
//!   "sim": { "steps": 200 },
//!   "initial_state": { "values": [0, 0, 0, 15, 30, -20], "unit": "deg" },
//!   "out_dir": "out/ell2",
//!   "seed": 0
//! }
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sspc_core::{SimConfig, SspcConfig};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Spacecraft,
    TrackingQp,
    DoubleIntegrator,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Spacecraft => "spacecraft",
            ProblemKind::TrackingQp => "tracking_qp",
            ProblemKind::DoubleIntegrator => "double_integrator",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleUnit {
    #[default]
    Rad,
    Deg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub values: Vec<f64>,
    #[serde(default)]
    pub unit: AngleUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub ell: usize,
    pub use_predictor: bool,
    pub regularization_delta: f64,
    pub oracle_tol: f64,
    pub oracle_max_iter: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SspcConfig::default();
        SolverSection {
            ell: d.ell,
            use_predictor: d.use_predictor,
            regularization_delta: d.regularization_delta,
            oracle_tol: d.oracle_tol,
            oracle_max_iter: d.oracle_max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub steps: usize,
    pub record_suboptimality: bool,
    /// Additive input disturbance per sample; missing samples are zero.
    pub input_disturbance: Vec<Vec<f64>>,
    /// Fills `step_wall_s`; off by default so traces are reproducible.
    pub record_wall_time: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            steps: SimConfig::default().steps,
            record_suboptimality: false,
            input_disturbance: Vec::new(),
            record_wall_time: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    /// Prediction horizon; the problem's own default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub sspc: SolverSection,
    #[serde(default)]
    pub sim: SimSection,
    /// The problem's nominal initial state when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    #[serde(default = "default_sweep")]
    pub sweep_ell: Vec<usize>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Seeds the random points of `check-derivatives`.
    #[serde(default)]
    pub seed: u64,
}

fn default_sweep() -> Vec<usize> {
    vec![1, 2, 4]
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(problem: ProblemKind) -> Self {
        ExperimentConfig {
            problem,
            horizon: None,
            sspc: SolverSection::default(),
            sim: SimSection::default(),
            initial_state: None,
            sweep_ell: default_sweep(),
            out_dir: default_out_dir(),
            seed: 0,
        }
    }

    /// Parses and validates. Errors carry the line and field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            Error::Config {
                line: inner.line(),
                field,
                message: inner.to_string(),
            }
        })?;
        cfg.validate().map_err(|e| match e {
            Error::Config { field, message, .. } => Error::Config {
                line: locate(text, &field),
                field,
                message,
            },
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: &str| {
            Err(Error::Config {
                line: 0,
                field: field.to_string(),
                message: message.to_string(),
            })
        };
        if self.sim.steps == 0 {
            return bad("sim.steps", "must be at least 1");
        }
        if !(self.sspc.oracle_tol > 0.0) {
            return bad("sspc.oracle_tol", "must be positive");
        }
        if !(self.sspc.regularization_delta >= 0.0) {
            return bad("sspc.regularization_delta", "must be nonnegative");
        }
        if self.horizon == Some(0) {
            return bad("horizon", "must be at least 1");
        }
        if self.sweep_ell.is_empty() {
            return bad("sweep_ell", "must not be empty");
        }
        if let Some(x0) = &self.initial_state {
            if x0.values.iter().any(|v| !v.is_finite()) {
                return bad("initial_state.values", "must be finite");
            }
            if x0.unit == AngleUnit::Deg && self.problem != ProblemKind::Spacecraft {
                return bad("initial_state.unit", "degrees apply to spacecraft attitude angles only");
            }
        }
        Ok(())
    }

    pub fn solver(&self) -> SspcConfig {
        SspcConfig {
            ell: self.sspc.ell,
            use_predictor: self.sspc.use_predictor,
            regularization_delta: self.sspc.regularization_delta,
            oracle_tol: self.sspc.oracle_tol,
            oracle_max_iter: self.sspc.oracle_max_iter,
        }
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig {
            steps: self.sim.steps,
            record_suboptimality: self.sim.record_suboptimality,
            input_disturbance: self.sim.input_disturbance.clone(),
            keep_iterates: false,
        }
    }
}

/// Line of the first occurrence of the last path segment as a JSON key.
fn locate(text: &str, field: &str) -> usize {
    let key = format!("\"{}\"", field.rsplit('.').next().unwrap_or(field));
    text.lines().position(|l| l.contains(&key)).map_or(0, |i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_json(r#"{"problem": "spacecraft"}"#).unwrap();
        assert_eq!(cfg, ExperimentConfig::new(ProblemKind::Spacecraft));
        assert_eq!(cfg.solver(), SspcConfig::default());
        assert_eq!(cfg.sim().steps, 200);
    }

    #[test]
    fn zero_steps_names_line_and_field() {
        let text = "{\n  \"problem\": \"spacecraft\",\n  \"sim\": {\n    \"steps\": 0\n  }\n}";
        match ExperimentConfig::from_json(text) {
            Err(Error::Config { line, field, .. }) => {
                assert_eq!(line, 4);
                assert_eq!(field, "sim.steps");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn type_errors_name_line_and_field() {
        let text = "{\n  \"problem\": \"spacecraft\",\n  \"sspc\": {\"ell\": \"two\"}\n}";
        match ExperimentConfig::from_json(text) {
            Err(Error::Config { line, field, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(field, "sspc.ell");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_problem_and_fields_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"problem": "pendulum"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"problem": "spacecraft", "step": 3}"#).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = ExperimentConfig::new(ProblemKind::DoubleIntegrator);
        cfg.initial_state = Some(InitialState {
            values: vec![1.0, -0.5],
            unit: AngleUnit::Rad,
        });
        cfg.sspc.ell = 3;
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn degrees_only_for_spacecraft() {
        let text = r#"{"problem": "double_integrator", "initial_state": {"values": [1, 0], "unit": "deg"}}"#;
        assert!(matches!(ExperimentConfig::from_json(text), Err(Error::Config { .. })));
    }
}
