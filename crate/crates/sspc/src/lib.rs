//! Configuration, file formats and experiment drivers for `sspc-core`.
//!
//! Commands (see the `sspc` binary):
//!
//! - `simulate`: one closed loop, writes `trace.csv`, `summary.txt` and
//!   `config-echo.json`
//! - `sweep-ell`: one closed loop per corrector budget plus `metrics.csv`
//! - `check-derivatives`: finite-difference audit of every callback
//! - `solve`: one fully converged solve at the initial state

mod error;

pub mod config;
pub mod derivatives;
pub mod output;
pub mod problem;
pub mod run;

pub use config::{ExperimentConfig, ProblemKind};
pub use error::{Error, Result};
pub use sspc_core as core;
