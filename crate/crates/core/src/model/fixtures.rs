//! Models used as test fixtures rather than benchmarks.

use super::integrate::{Dynamics, Simulated, StepInput};
use crate::signal::Bounds;

/// Damped second-order system `x'' = ω²(u − x) − 2ζω·x'` with output `x`.
///
/// Under a step input the output overshoots and then falls back, so it is not monotone in time.
/// `declared_monotone` lets tests mislabel it on purpose.
#[derive(Debug, Clone)]
pub struct Oscillator {
    pub omega: f64,
    pub zeta: f64,
    pub declared_monotone: bool,
}

impl Default for Oscillator {
    fn default() -> Self {
        Self { omega: 1.5, zeta: 0.1, declared_monotone: false }
    }
}

impl Dynamics for Oscillator {
    fn name(&self) -> &str {
        "oscillator"
    }
    fn input_names(&self) -> Vec<String> {
        vec!["u".into()]
    }
    fn input_bounds(&self) -> Vec<Bounds> {
        vec![Bounds { lo: 0.0, hi: 1.0 }]
    }
    fn output_names(&self) -> Vec<String> {
        vec!["x".into()]
    }
    fn initial(&self) -> (Vec<f64>, i64) {
        (vec![0.0, 0.0], 0)
    }
    fn rhs(&self, _t: f64, x: &[f64], _mode: i64, input: &StepInput, dx: &mut [f64]) {
        dx[0] = x[1];
        dx[1] = self.omega * self.omega * (input.current[0] - x[0]) - 2.0 * self.zeta * self.omega * x[1];
    }
    fn output(&self, _t: f64, x: &[f64], _mode: i64, _u: &[f64], y: &mut [f64]) {
        y[0] = x[0];
    }
    fn is_monotone(&self) -> bool {
        self.declared_monotone
    }
}

pub fn oscillator() -> Simulated<Oscillator> {
    Simulated(Oscillator::default())
}
