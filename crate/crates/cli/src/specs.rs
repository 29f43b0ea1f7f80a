//! Named benchmark specifications with the model and horizon they are meant for.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuiltinSpec {
    pub name: &'static str,
    pub text: &'static str,
    pub model: &'static str,
    pub horizon: f64,
    pub control_points: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("unknown spec '{name}'; available: {available}")]
pub struct UnknownSpec {
    pub name: String,
    pub available: String,
}

const fn spec(name: &'static str, text: &'static str, model: &'static str, horizon: f64, k: usize) -> BuiltinSpec {
    BuiltinSpec { name, text, model, horizon, control_points: k }
}

pub const BUILTIN_SPECS: &[BuiltinSpec] = &[
    spec("S1", "G[0,30] (v < 120)", "auto_transmission", 30.0, 5),
    spec("S2", "G[0,30] ((g > 2.5 & g <= 3.5) -> v >= 30)", "auto_transmission", 30.0, 5),
    spec("S3_easy", "F[10,30] (v <= 50 | v >= 60)", "auto_transmission", 30.0, 5),
    spec("S3_hard", "F[10,30] (v <= 53 | v >= 57)", "auto_transmission", 30.0, 5),
    spec("S4_easy", "G[0,10] (v < 80) | F[0,30] (omega > 4500)", "auto_transmission", 30.0, 5),
    spec("S4_mid", "G[0,10] (v < 50) | F[0,30] (omega > 2700)", "auto_transmission", 30.0, 5),
    spec("S4_hard", "G[0,10] (v < 50) | F[0,30] (omega > 2520)", "auto_transmission", 30.0, 5),
    spec("S_init", "!(F[0,6] G[0,3] (AF - 14.7 > 0.07 * 14.7))", "fuel_control", 9.0, 3),
    spec("S_stable", "!(F[6,26] G[0,4] (AF - 14.7 > 0.01 * 14.7))", "fuel_control", 30.0, 5),
    spec("powertrain_ceiling", "G[0,30] (v < 120)", "powertrain", 30.0, 5),
    spec("stateless_reach", "F[0,30] (y <= 3 | y >= 6)", "stateless_map", 30.0, 5),
];

pub fn builtin_spec(name: &str) -> Result<&'static BuiltinSpec, UnknownSpec> {
    BUILTIN_SPECS.iter().find(|s| s.name == name).ok_or_else(|| UnknownSpec {
        name: name.to_string(),
        available: BUILTIN_SPECS.iter().map(|s| s.name).collect::<Vec<_>>().join(", "),
    })
}
