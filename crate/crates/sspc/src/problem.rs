//! Named problems selectable from a config.

use sspc_core::ocp::{transcribe, OptimalControlProblem, TranscribedNlp, VariableLayout};
use sspc_core::problems::LinearQuadraticOcp;
use sspc_core::sim::{self, PlantModel};
use sspc_core::spacecraft::{self, SpacecraftOcp, SpacecraftParams};

use crate::config::{AngleUnit, ExperimentConfig, ProblemKind};
use crate::{Error, Result};

pub const DOUBLE_INTEGRATOR_HORIZON: usize = 20;
/// Sampling period of the double integrator, seconds.
pub const DOUBLE_INTEGRATOR_DT: f64 = 0.1;
const DOUBLE_INTEGRATOR_X0: [f64; 2] = [1.0, 0.0];
const TRACKING_P0: f64 = 2.0;
/// Euler angles within the spacecraft state.
const ATTITUDE_ANGLES: std::ops::Range<usize> = 3..spacecraft::STATE_DIM;

/// A transcribed OCP with its plant.
pub struct ControlProblem<O: OptimalControlProblem> {
    pub nlp: TranscribedNlp<O>,
    pub layout: VariableLayout,
    pub plant: PlantModel,
}

pub enum Problem {
    Spacecraft(ControlProblem<SpacecraftOcp>),
    DoubleIntegrator(ControlProblem<LinearQuadraticOcp>),
    TrackingQp,
}

impl Problem {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(match cfg.problem {
            ProblemKind::Spacecraft => {
                let mut params = SpacecraftParams::default();
                if let Some(n) = cfg.horizon {
                    params.horizon = n;
                }
                let ocp = SpacecraftOcp::from_params(&params)?;
                let plant = sim::spacecraft_plant(&params)?;
                let (nlp, layout) = transcribe(ocp)?;
                Problem::Spacecraft(ControlProblem { nlp, layout, plant })
            }
            ProblemKind::DoubleIntegrator => {
                let ocp = LinearQuadraticOcp::double_integrator(cfg.horizon.unwrap_or(DOUBLE_INTEGRATOR_HORIZON))?;
                let model = ocp.clone();
                let plant = PlantModel::new(2, 1, move |x, u| Ok(model.dynamics(x, u)))?
                    .with_sampling_time(DOUBLE_INTEGRATOR_DT)?;
                let (nlp, layout) = transcribe(ocp)?;
                Problem::DoubleIntegrator(ControlProblem { nlp, layout, plant })
            }
            ProblemKind::TrackingQp => Problem::TrackingQp,
        })
    }

    pub fn kind(&self) -> ProblemKind {
        match self {
            Problem::Spacecraft(_) => ProblemKind::Spacecraft,
            Problem::DoubleIntegrator(_) => ProblemKind::DoubleIntegrator,
            Problem::TrackingQp => ProblemKind::TrackingQp,
        }
    }

    /// Initial state (or parameter) in internal units.
    pub fn initial_state(&self, cfg: &ExperimentConfig) -> Result<Vec<f64>> {
        let nominal = match self {
            Problem::Spacecraft(cp) => cp.nlp.ocp().params.x0.to_vec(),
            Problem::DoubleIntegrator(_) => DOUBLE_INTEGRATOR_X0.to_vec(),
            Problem::TrackingQp => vec![TRACKING_P0],
        };
        let Some(given) = &cfg.initial_state else {
            return Ok(nominal);
        };
        if given.values.len() != nominal.len() {
            return Err(Error::Config {
                line: 0,
                field: "initial_state.values".into(),
                message: format!("expected {} entries, found {}", nominal.len(), given.values.len()),
            });
        }
        let mut x = given.values.clone();
        if given.unit == AngleUnit::Deg {
            for a in &mut x[ATTITUDE_ANGLES] {
                *a = a.to_radians();
            }
        }
        Ok(x)
    }
}
