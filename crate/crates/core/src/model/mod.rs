//! Causal black-box system models.
//!
//! A model maps an input signal to an output signal on the same grid. Every model here is
//! causal: output sample `k` depends on input samples `0..=k` only. Input sample `k` drives the
//! integration step from `t_{k-1}` to `t_k` (zero-order hold over `(t_{k-1}, t_k]`), so input
//! sample 0 only reaches the output through direct feedthrough at time zero.

mod builtin;
mod continuation;
pub mod fixtures;
mod integrate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builtin::{
    builtin, builtin_names, AutoTransmission, FuelControl, MonotoneIntegrator, Powertrain, StatelessMap,
};
pub use continuation::{Continuation, ContinuationPath};
pub use integrate::{Dynamics, Simulated, StepInput};

use crate::signal::{Bounds, Signal};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown model '{0}'; available: {1}")]
    Unknown(String, String),
    #[error("unknown parameter '{param}' for model '{model}'")]
    UnknownParam { model: String, param: String },
    #[error("invalid parameter {param} = {value}: {reason}")]
    BadParam { param: String, value: f64, reason: String },
    #[error("input has {got} channels, model expects {expected}")]
    InputDim { got: usize, expected: usize },
    #[error("input sample {index} channel {channel} = {value} outside [{lo}, {hi}]")]
    OutOfBounds { index: usize, channel: usize, value: f64, lo: f64, hi: f64 },
    #[error("input step {got} does not match the state's step {expected}")]
    StepMismatch { got: f64, expected: f64 },
    #[error("simulation produced a non-finite output at sample {0}")]
    NonFinite(usize),
    #[error("model '{0}' does not support snapshots")]
    NoSnapshot(String),
    #[error(transparent)]
    Signal(#[from] crate::signal::SignalError),
}

/// Internal state of a model at a grid instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    /// Grid index of the instant, so time is `step · dt` exactly.
    pub step: u64,
    pub dt: f64,
    pub continuous: Vec<f64>,
    /// Discrete mode, e.g. the gear.
    pub mode: i64,
    /// Input applied over the last step; `None` at the very beginning.
    pub last_input: Option<Vec<f64>>,
}

impl ModelState {
    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }
}

pub trait SystemModel: Send + Sync {
    fn name(&self) -> &str;
    fn input_names(&self) -> Vec<String>;
    fn input_bounds(&self) -> Vec<Bounds>;
    fn output_names(&self) -> Vec<String>;

    fn input_dim(&self) -> usize {
        self.input_bounds().len()
    }

    fn output_dim(&self) -> usize {
        self.output_names().len()
    }

    /// Whether the model claims to be monotone in its first output.
    fn is_monotone(&self) -> bool {
        false
    }

    fn initial_state(&self, dt: f64) -> ModelState;

    /// Runs the model from `state` on `u`. Output sample 0 is the output at `state`; when the
    /// state carries a last input, `u`'s sample 0 is ignored (it is the junction with the prefix
    /// that produced the state).
    fn simulate_from(&self, state: &ModelState, u: &Signal) -> Result<(Signal, ModelState), ModelError>;

    fn simulate(&self, u: &Signal) -> Result<Signal, ModelError> {
        Ok(self.simulate_from(&self.initial_state(u.dt()), u)?.0)
    }

    fn supports_snapshot(&self) -> bool {
        true
    }
}

/// Checks dimension and bounds of an input signal.
pub fn check_input(model: &dyn SystemModel, u: &Signal) -> Result<(), ModelError> {
    let bounds = model.input_bounds();
    if u.dim() != bounds.len() {
        return Err(ModelError::InputDim { got: u.dim(), expected: bounds.len() });
    }
    for (index, s) in u.samples().enumerate() {
        for (channel, (&value, b)) in s.iter().zip(&bounds).enumerate() {
            if !b.contains(value) {
                return Err(ModelError::OutOfBounds { index, channel, value, lo: b.lo, hi: b.hi });
            }
        }
    }
    Ok(())
}
