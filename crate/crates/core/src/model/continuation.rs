use serde::{Deserialize, Serialize};

use super::{check_input, ModelError, ModelState, SystemModel};
use crate::signal::Signal;

/// How a continuation produces outputs after its prefix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuationPath {
    /// Simulate prefix and suffix together on every call.
    #[default]
    Resimulate,
    /// Simulate the prefix once and resume from its final state.
    Snapshot,
}

/// The model "after" an input prefix `u`: fed `u'`, it outputs `M(u·u')` from time `|u|` on.
pub struct Continuation<'m> {
    model: &'m dyn SystemModel,
    prefix: Option<Signal>,
    prefix_output: Option<Signal>,
    state: Option<ModelState>,
    path: ContinuationPath,
}

impl<'m> Continuation<'m> {
    /// `prefix = None` is the empty prefix; the continuation then behaves like the model itself.
    pub fn new(model: &'m dyn SystemModel, prefix: Option<&Signal>, path: ContinuationPath) -> Result<Self, ModelError> {
        if path == ContinuationPath::Snapshot && !model.supports_snapshot() {
            return Err(ModelError::NoSnapshot(model.name().into()));
        }
        let (prefix_output, state) = match prefix {
            None => (None, None),
            Some(u) => {
                check_input(model, u)?;
                let (y, s) = model.simulate_from(&model.initial_state(u.dt()), u)?;
                (Some(y), Some(s))
            }
        };
        Ok(Self { model, prefix: prefix.cloned(), prefix_output, state, path })
    }

    pub fn model(&self) -> &dyn SystemModel {
        self.model
    }

    pub fn prefix(&self) -> Option<&Signal> {
        self.prefix.as_ref()
    }

    pub fn prefix_output(&self) -> Option<&Signal> {
        self.prefix_output.as_ref()
    }

    pub fn path(&self) -> ContinuationPath {
        self.path
    }

    /// Output of the continuation on `u`, starting at the junction with the prefix.
    pub fn simulate(&self, u: &Signal) -> Result<Signal, ModelError> {
        match (&self.prefix, &self.state, self.path) {
            (None, _, _) => self.model.simulate(u),
            (Some(_), Some(state), ContinuationPath::Snapshot) => Ok(self.model.simulate_from(state, u)?.0),
            (Some(p), _, _) => {
                let full = self.model.simulate(&p.concatenate(u)?)?;
                Ok(full.shift(p.horizon())?)
            }
        }
    }

    /// Output of the whole input `prefix · u`.
    pub fn simulate_extended(&self, u: &Signal) -> Result<Signal, ModelError> {
        match (&self.prefix, &self.prefix_output, self.path) {
            (None, _, _) => self.model.simulate(u),
            (Some(_), Some(y), ContinuationPath::Snapshot) => Ok(y.concatenate(&self.simulate(u)?)?),
            (Some(p), _, _) => self.model.simulate(&p.concatenate(u)?),
        }
    }
}
