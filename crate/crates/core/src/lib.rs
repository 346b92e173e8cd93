//! Semismooth predictor-corrector (SSPC) path following for parametric
//! nonlinear programs, and its use as a suboptimal MPC compensator.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! core: dense kernels, the Fischer-Burmeister KKT reformulation, the
//! predictor/corrector iteration, OCP transcription, the compensator, a
//! closed-loop simulator and the spacecraft attitude benchmark. File formats,
//! configuration and the command-line tool live in the `sspc` crate.
//!
//! ```text
//! F(z, p) = [ ∇w L(w, λ, v, p) ]      z = (w, λ, v)
//!           [ g(w, p)           ]
//!           [ ψ(-h(w, p), v)    ]      ψ(a, b) = a + b - sqrt(a² + b²)
//! ```
#![no_std]

extern crate alloc;

mod error;
mod math;

pub mod mpc;
pub mod nlp;
pub mod numerics;
pub mod ocp;
pub mod problems;
pub mod sim;
pub mod spacecraft;
pub mod sspc;

pub use error::{Error, Result};
pub use mpc::CompensatorState;
pub use nlp::{KktResidual, NlpDims, ParametricNlp, PrimalDualPoint};
pub use numerics::DenseMatrix;
pub use ocp::{OptimalControlProblem, TranscribedNlp, VariableLayout};
pub use sim::{PlantModel, SimConfig, SimRecord, SimTrace};
pub use sspc::{SspcConfig, StepDiagnostics};
