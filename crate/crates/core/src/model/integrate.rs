use super::{check_input, ModelError, ModelState, SystemModel};
use crate::signal::{Bounds, Signal};

/// Inputs seen by one integration step from `t_{k-1}` to `t_k`.
#[derive(Debug, Clone, Copy)]
pub struct StepInput<'a> {
    /// Sample `k`, held over the step.
    pub current: &'a [f64],
    /// Sample `k - 1`.
    pub previous: &'a [f64],
    pub dt: f64,
}

/// Continuous dynamics with an optional discrete mode, integrated by [`Simulated`].
pub trait Dynamics: Send + Sync {
    fn name(&self) -> &str;
    fn input_names(&self) -> Vec<String>;
    fn input_bounds(&self) -> Vec<Bounds>;
    fn output_names(&self) -> Vec<String>;
    fn initial(&self) -> (Vec<f64>, i64);
    fn rhs(&self, t: f64, x: &[f64], mode: i64, input: &StepInput, dx: &mut [f64]);

    /// Post-step hook for clamping and mode switches.
    fn after_step(&self, _x: &mut [f64], _mode: &mut i64) {}

    fn output(&self, t: f64, x: &[f64], mode: i64, u: &[f64], y: &mut [f64]);

    fn is_monotone(&self) -> bool {
        false
    }
}

/// Fixed-step RK4 simulation of [`Dynamics`] at the input's sample step.
#[derive(Debug, Clone)]
pub struct Simulated<D>(pub D);

impl<D: Dynamics> Simulated<D> {
    fn rk4(&self, t: f64, x: &mut [f64], mode: i64, input: &StepInput, scratch: &mut [Vec<f64>; 5]) {
        let n = x.len();
        if n == 0 {
            return;
        }
        let h = input.dt;
        let [k1, k2, k3, k4, tmp] = scratch;
        self.0.rhs(t, x, mode, input, k1);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        self.0.rhs(t + 0.5 * h, tmp, mode, input, k2);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        self.0.rhs(t + 0.5 * h, tmp, mode, input, k3);
        for i in 0..n {
            tmp[i] = x[i] + h * k3[i];
        }
        self.0.rhs(t + h, tmp, mode, input, k4);
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

impl<D: Dynamics> SystemModel for Simulated<D> {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn input_names(&self) -> Vec<String> {
        self.0.input_names()
    }

    fn input_bounds(&self) -> Vec<Bounds> {
        self.0.input_bounds()
    }

    fn output_names(&self) -> Vec<String> {
        self.0.output_names()
    }

    fn is_monotone(&self) -> bool {
        self.0.is_monotone()
    }

    fn initial_state(&self, dt: f64) -> ModelState {
        let (continuous, mode) = self.0.initial();
        ModelState { step: 0, dt, continuous, mode, last_input: None }
    }

    fn simulate_from(&self, state: &ModelState, u: &Signal) -> Result<(Signal, ModelState), ModelError> {
        check_input(self, u)?;
        if u.dt() != state.dt {
            return Err(ModelError::StepMismatch { got: u.dt(), expected: state.dt });
        }
        let dt = state.dt;
        let ny = self.0.output_names().len();
        let mut x = state.continuous.clone();
        let mut mode = state.mode;
        let first = state.last_input.clone().unwrap_or_else(|| u.sample(0).to_vec());
        let mut scratch: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; x.len()]);
        let mut out = Vec::with_capacity(u.len() * ny);
        let mut y = vec![0.0; ny];

        self.0.output(state.time(), &x, mode, &first, &mut y);
        out.extend_from_slice(&y);
        for k in 1..u.len() {
            let previous = if k == 1 { first.as_slice() } else { u.sample(k - 1) };
            let input = StepInput { current: u.sample(k), previous, dt };
            let t0 = (state.step + k as u64 - 1) as f64 * dt;
            self.rk4(t0, &mut x, mode, &input, &mut scratch);
            self.0.after_step(&mut x, &mut mode);
            let t1 = (state.step + k as u64) as f64 * dt;
            self.0.output(t1, &x, mode, u.sample(k), &mut y);
            out.extend_from_slice(&y);
        }
        if let Some(pos) = out.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite(pos / ny));
        }
        let last_input = if u.len() == 1 { first } else { u.last().to_vec() };
        let end = ModelState {
            step: state.step + u.len() as u64 - 1,
            dt,
            continuous: x,
            mode,
            last_input: Some(last_input),
        };
        Ok((Signal::from_flat(ny, dt, out)?, end))
    }
}
