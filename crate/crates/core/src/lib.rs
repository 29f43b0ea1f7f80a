//! Optimization-based falsification of signal temporal logic specifications, with time-staged
//! search driven by robustness of signal prefixes.
//!
//! The crate is organised bottom-up:
//! - [`signal`]: uniformly sampled signals, concatenation, piecewise-constant inputs;
//! - [`stl`]: formulas, parser, robust semantics and the prefix derivative;
//! - [`model`]: causal black-box system models and the built-in benchmarks;
//! - [`optim`]: derivative-free optimizers behind a budgeted evaluator;
//! - [`falsify`]: one falsification trial;
//! - [`staging`]: the time-staged driver;
//! - [`theory`]: executable checks of the assumptions under which staging is sound.

pub mod falsify;
pub mod model;
pub mod optim;
pub mod signal;
pub mod staging;
pub mod stl;
pub mod theory;

pub use signal::{Bounds, PiecewiseConstant, Signal, SignalError};
pub use stl::{Formula, Interval, Specification, StlError};

/// Serde helpers for extended reals: finite values as numbers, infinities as `"inf"`/`"-inf"`.
pub mod ext_real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not an extended real: {other}"))),
            },
        }
    }

    /// Same encoding for `Vec<f64>`.
    pub mod vec {
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        #[derive(Serialize, Deserialize)]
        struct W(#[serde(with = "super")] f64);

        pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(xs.iter().map(|&x| W(x)))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Ok(Vec::<W>::deserialize(d)?.into_iter().map(|w| w.0).collect())
        }
    }
}
