//! Built-in surrogate benchmark models.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::integrate::{Dynamics, Simulated, StepInput};
use super::{ModelError, SystemModel};
use crate::signal::Bounds;

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn bounds(lo: f64, hi: f64) -> Bounds {
    Bounds { lo, hi }
}

/// Applies `params` to the named fields, rejecting unknown keys and non-finite values.
fn apply(model: &str, params: &BTreeMap<String, f64>, fields: &mut [(&str, &mut f64)]) -> Result<(), ModelError> {
    for (key, &value) in params {
        if !value.is_finite() {
            return Err(ModelError::BadParam { param: key.clone(), value, reason: "not finite".into() });
        }
        match fields.iter_mut().find(|(name, _)| name == key) {
            Some((_, slot)) => **slot = value,
            None => return Err(ModelError::UnknownParam { model: model.into(), param: key.clone() }),
        }
    }
    Ok(())
}

fn require_positive(params: &[(&str, f64)]) -> Result<(), ModelError> {
    for &(param, value) in params {
        if value <= 0.0 {
            return Err(ModelError::BadParam { param: param.into(), value, reason: "must be positive".into() });
        }
    }
    Ok(())
}

/// Throttle-driven vehicle speed: `dv/dt = k_a·u − k_d·v`, `v(0) = 0`.
#[derive(Debug, Clone)]
pub struct Powertrain {
    pub k_a: f64,
    pub k_d: f64,
}

impl Default for Powertrain {
    fn default() -> Self {
        Self { k_a: 0.5, k_d: 0.25 }
    }
}

impl Dynamics for Powertrain {
    fn name(&self) -> &str {
        "powertrain"
    }
    fn input_names(&self) -> Vec<String> {
        names(&["throttle"])
    }
    fn input_bounds(&self) -> Vec<Bounds> {
        vec![bounds(0.0, 100.0)]
    }
    fn output_names(&self) -> Vec<String> {
        names(&["v"])
    }
    fn initial(&self) -> (Vec<f64>, i64) {
        (vec![0.0], 0)
    }
    fn rhs(&self, _t: f64, x: &[f64], _mode: i64, input: &StepInput, dx: &mut [f64]) {
        dx[0] = self.k_a * input.current[0] - self.k_d * x[0];
    }
    fn output(&self, _t: f64, x: &[f64], _mode: i64, _u: &[f64], y: &mut [f64]) {
        y[0] = x[0];
    }
    fn is_monotone(&self) -> bool {
        true
    }
}

/// Four-gear vehicle with throttle and brake inputs and outputs speed `v`, engine speed `omega`
/// and gear `g`.
///
/// `dv/dt = (c_t·throttle·R(g) − c_b·brake − c_drag·v·|v|) / mass`, `omega = v·c_omega·R(g) + idle`.
/// After every step the speed is clamped at zero and the gear moves up when `omega > omega_up`
/// or down when `omega < omega_down`, at most one gear per step.
#[derive(Debug, Clone)]
pub struct AutoTransmission {
    pub mass: f64,
    pub c_t: f64,
    pub c_b: f64,
    pub c_drag: f64,
    pub c_omega: f64,
    pub idle: f64,
    pub omega_up: f64,
    pub omega_down: f64,
    pub ratios: [f64; 4],
}

impl Default for AutoTransmission {
    fn default() -> Self {
        Self {
            mass: 1500.0,
            c_t: 120.0,
            c_b: 20.0,
            c_drag: 0.5,
            c_omega: 30.0,
            idle: 600.0,
            omega_up: 4000.0,
            omega_down: 1800.0,
            ratios: [4.0, 2.5, 1.6, 1.0],
        }
    }
}

impl AutoTransmission {
    fn ratio(&self, gear: i64) -> f64 {
        self.ratios[(gear.clamp(1, 4) - 1) as usize]
    }

    fn omega(&self, v: f64, gear: i64) -> f64 {
        v * self.c_omega * self.ratio(gear) + self.idle
    }
}

impl Dynamics for AutoTransmission {
    fn name(&self) -> &str {
        "auto_transmission"
    }
    fn input_names(&self) -> Vec<String> {
        names(&["throttle", "brake"])
    }
    fn input_bounds(&self) -> Vec<Bounds> {
        vec![bounds(0.0, 100.0), bounds(0.0, 325.0)]
    }
    fn output_names(&self) -> Vec<String> {
        names(&["v", "omega", "g"])
    }
    fn initial(&self) -> (Vec<f64>, i64) {
        (vec![0.0], 1)
    }
    fn rhs(&self, _t: f64, x: &[f64], mode: i64, input: &StepInput, dx: &mut [f64]) {
        let v = x[0];
        let force = self.c_t * input.current[0] * self.ratio(mode) - self.c_b * input.current[1];
        dx[0] = (force - self.c_drag * v * v.abs()) / self.mass;
    }
    fn after_step(&self, x: &mut [f64], mode: &mut i64) {
        x[0] = x[0].max(0.0);
        let omega = self.omega(x[0], *mode);
        if omega > self.omega_up && *mode < 4 {
            *mode += 1;
        } else if omega < self.omega_down && *mode > 1 {
            *mode -= 1;
        }
    }
    fn output(&self, _t: f64, x: &[f64], mode: i64, _u: &[f64], y: &mut [f64]) {
        y[0] = x[0];
        y[1] = self.omega(x[0], mode);
        y[2] = mode as f64;
    }
}

/// Air-fuel ratio regulated towards `af_ref` by a first-order lag, disturbed by the rate of pedal
/// change: `dAF/dt = (af_ref − AF)/tau + k_p·d(pedal)/dt`. The engine-speed input is accepted
/// but does not enter the dynamics.
#[derive(Debug, Clone)]
pub struct FuelControl {
    pub tau: f64,
    pub k_p: f64,
    pub af_ref: f64,
}

impl Default for FuelControl {
    fn default() -> Self {
        Self { tau: 0.5, k_p: 0.05, af_ref: 14.7 }
    }
}

impl Dynamics for FuelControl {
    fn name(&self) -> &str {
        "fuel_control"
    }
    fn input_names(&self) -> Vec<String> {
        names(&["pedal", "engine_speed"])
    }
    fn input_bounds(&self) -> Vec<Bounds> {
        vec![bounds(0.0, 61.1), bounds(0.0, 1100.0)]
    }
    fn output_names(&self) -> Vec<String> {
        names(&["AF"])
    }
    fn initial(&self) -> (Vec<f64>, i64) {
        (vec![self.af_ref], 0)
    }
    fn rhs(&self, _t: f64, x: &[f64], _mode: i64, input: &StepInput, dx: &mut [f64]) {
        let pedal_rate = (input.current[0] - input.previous[0]) / input.dt;
        dx[0] = (self.af_ref - x[0]) / self.tau + self.k_p * pedal_rate;
    }
    fn output(&self, _t: f64, x: &[f64], _mode: i64, _u: &[f64], y: &mut [f64]) {
        y[0] = x[0];
    }
}

/// Memoryless map `y(t) = u(t) + amplitude·sin(omega0·t)`.
#[derive(Debug, Clone)]
pub struct StatelessMap {
    pub amplitude: f64,
    pub omega0: f64,
}

impl Default for StatelessMap {
    fn default() -> Self {
        Self { amplitude: 1.0, omega0: 0.5 }
    }
}

impl Dynamics for StatelessMap {
    fn name(&self) -> &str {
        "stateless_map"
    }
    fn input_names(&self) -> Vec<String> {
        names(&["u"])
    }
    fn input_bounds(&self) -> Vec<Bounds> {
        vec![bounds(0.0, 10.0)]
    }
    fn output_names(&self) -> Vec<String> {
        names(&["y"])
    }
    fn initial(&self) -> (Vec<f64>, i64) {
        (Vec::new(), 0)
    }
    fn rhs(&self, _t: f64, _x: &[f64], _mode: i64, _input: &StepInput, _dx: &mut [f64]) {}
    fn output(&self, t: f64, _x: &[f64], _mode: i64, u: &[f64], y: &mut [f64]) {
        y[0] = u[0] + self.amplitude * (self.omega0 * t).sin();
    }
}

/// Pure integrator `dx/dt = u`, `x(0) = 0`.
#[derive(Debug, Clone, Default)]
pub struct MonotoneIntegrator;

impl Dynamics for MonotoneIntegrator {
    fn name(&self) -> &str {
        "monotone_integrator"
    }
    fn input_names(&self) -> Vec<String> {
        names(&["u"])
    }
    fn input_bounds(&self) -> Vec<Bounds> {
        vec![bounds(-1.0, 1.0)]
    }
    fn output_names(&self) -> Vec<String> {
        names(&["x"])
    }
    fn initial(&self) -> (Vec<f64>, i64) {
        (vec![0.0], 0)
    }
    fn rhs(&self, _t: f64, _x: &[f64], _mode: i64, input: &StepInput, dx: &mut [f64]) {
        dx[0] = input.current[0];
    }
    fn output(&self, _t: f64, x: &[f64], _mode: i64, _u: &[f64], y: &mut [f64]) {
        y[0] = x[0];
    }
    fn is_monotone(&self) -> bool {
        true
    }
}

pub fn builtin_names() -> &'static [&'static str] {
    &["powertrain", "auto_transmission", "fuel_control", "stateless_map", "monotone_integrator"]
}

/// Instantiates a built-in model with parameter overrides.
pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<Arc<dyn SystemModel>, ModelError> {
    match name {
        "powertrain" => {
            let mut m = Powertrain::default();
            apply(name, params, &mut [("k_a", &mut m.k_a), ("k_d", &mut m.k_d)])?;
            Ok(Arc::new(Simulated(m)))
        }
        "auto_transmission" => {
            let mut m = AutoTransmission::default();
            let [r1, r2, r3, r4] = &mut m.ratios;
            apply(
                name,
                params,
                &mut [
                    ("mass", &mut m.mass),
                    ("c_t", &mut m.c_t),
                    ("c_b", &mut m.c_b),
                    ("c_drag", &mut m.c_drag),
                    ("c_omega", &mut m.c_omega),
                    ("idle", &mut m.idle),
                    ("omega_up", &mut m.omega_up),
                    ("omega_down", &mut m.omega_down),
                    ("r1", r1),
                    ("r2", r2),
                    ("r3", r3),
                    ("r4", r4),
                ],
            )?;
            require_positive(&[("mass", m.mass), ("c_omega", m.c_omega)])?;
            if m.omega_down >= m.omega_up {
                return Err(ModelError::BadParam {
                    param: "omega_down".into(),
                    value: m.omega_down,
                    reason: "must be below omega_up".into(),
                });
            }
            Ok(Arc::new(Simulated(m)))
        }
        "fuel_control" => {
            let mut m = FuelControl::default();
            apply(name, params, &mut [("tau", &mut m.tau), ("k_p", &mut m.k_p), ("af_ref", &mut m.af_ref)])?;
            require_positive(&[("tau", m.tau)])?;
            Ok(Arc::new(Simulated(m)))
        }
        "stateless_map" => {
            let mut m = StatelessMap::default();
            apply(name, params, &mut [("amplitude", &mut m.amplitude), ("omega0", &mut m.omega0)])?;
            Ok(Arc::new(Simulated(m)))
        }
        "monotone_integrator" => {
            apply(name, params, &mut [])?;
            Ok(Arc::new(Simulated(MonotoneIntegrator)))
        }
        other => Err(ModelError::Unknown(other.into(), builtin_names().join(", "))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Signal;

    fn none() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    #[test]
    fn powertrain_equilibrium_and_saturation() {
        let m = builtin("powertrain", &none()).unwrap();
        let zero = Signal::constant(&[0.0], 0.05, 30.0).unwrap();
        assert!(m.simulate(&zero).unwrap().channel(0).all(|v| v == 0.0));

        let full = Signal::constant(&[100.0], 0.05, 30.0).unwrap();
        let v = m.simulate(&full).unwrap();
        // Closed form v(t) = 200·(1 − e^{−t/4}).
        for (k, x) in v.channel(0).enumerate() {
            let t = k as f64 * 0.05;
            assert!((x - 200.0 * (1.0 - (-0.25 * t).exp())).abs() < 1e-6, "t={t}");
        }
        let vals: Vec<f64> = v.channel(0).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
        assert!(vals.iter().any(|&x| x >= 120.0));
    }

    #[test]
    fn transmission_shifts_up_under_full_throttle() {
        let m = builtin("auto_transmission", &none()).unwrap();
        let u = Signal::constant(&[100.0, 0.0], 0.05, 30.0).unwrap();
        let y = m.simulate(&u).unwrap();
        let gears: Vec<f64> = y.channel(2).collect();
        assert_eq!(gears[0], 1.0);
        assert_eq!(*gears.last().unwrap(), 4.0);
        assert!(gears.windows(2).all(|w| w[1] >= w[0]));
        let v: Vec<f64> = y.channel(0).collect();
        assert!(v.windows(2).all(|w| w[1] >= w[0]));
        // Below top gear the engine speed stays near the up-shift threshold.
        for (k, s) in y.samples().enumerate() {
            assert!(s[2] == 4.0 || s[1] <= 4000.0, "omega overshoot at {k}: {}", s[1]);
        }
    }

    #[test]
    fn transmission_brakes_to_standstill() {
        let m = builtin("auto_transmission", &none()).unwrap();
        let u = Signal::constant(&[0.0, 325.0], 0.05, 10.0).unwrap();
        assert!(m.simulate(&u).unwrap().channel(0).all(|v| v == 0.0));
    }

    #[test]
    fn fuel_control_reacts_to_pedal_steps_only() {
        let m = builtin("fuel_control", &none()).unwrap();
        let flat = Signal::constant(&[30.0, 500.0], 0.05, 5.0).unwrap();
        assert!(m.simulate(&flat).unwrap().channel(0).all(|v| v == 14.7));
        let mut s = vec![vec![0.0, 0.0]; 21];
        for x in s.iter_mut().skip(10) {
            x[0] = 61.1;
        }
        let y = m.simulate(&Signal::new(0.05, s).unwrap()).unwrap();
        let peak = y.channel(0).fold(f64::NEG_INFINITY, f64::max);
        assert!(peak > 14.7 * 1.1, "peak {peak}");
        assert_eq!(y.value(9, 0), 14.7);
    }

    #[test]
    fn stateless_map_is_pointwise() {
        let m = builtin("stateless_map", &none()).unwrap();
        let u = Signal::scalar(0.5, &[1.0, 2.0, 3.0]).unwrap();
        let y = m.simulate(&u).unwrap();
        for k in 0..3 {
            let t = k as f64 * 0.5;
            assert_eq!(y.value(k, 0), u.value(k, 0) + (0.5 * t).sin());
        }
    }

    #[test]
    fn integrator_integrates() {
        let m = builtin("monotone_integrator", &none()).unwrap();
        let u = Signal::constant(&[1.0], 0.25, 2.0).unwrap();
        let y = m.simulate(&u).unwrap();
        assert!((y.last()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn input_validation() {
        let m = builtin("powertrain", &none()).unwrap();
        let over = Signal::constant(&[170.0], 0.05, 1.0).unwrap();
        assert!(matches!(m.simulate(&over), Err(ModelError::OutOfBounds { .. })));
        let wide = Signal::constant(&[1.0, 1.0], 0.05, 1.0).unwrap();
        assert!(matches!(m.simulate(&wide), Err(ModelError::InputDim { got: 2, expected: 1 })));
    }

    #[test]
    fn parameters() {
        assert!(matches!(builtin("nope", &none()), Err(ModelError::Unknown(..))));
        let mut p = BTreeMap::new();
        p.insert("k_a".to_string(), 1.0);
        let m = builtin("powertrain", &p).unwrap();
        let y = m.simulate(&Signal::constant(&[100.0], 0.05, 40.0).unwrap()).unwrap();
        assert!(y.last()[0] > 390.0);
        p.insert("bogus".to_string(), 1.0);
        assert!(matches!(builtin("powertrain", &p), Err(ModelError::UnknownParam { .. })));
        let mut q = BTreeMap::new();
        q.insert("omega_down".to_string(), 5000.0);
        assert!(matches!(builtin("auto_transmission", &q), Err(ModelError::BadParam { .. })));
    }
}
