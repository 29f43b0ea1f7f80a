//! Signal temporal logic: syntax, robust semantics and the derivative by a signal prefix.

mod boolean;
mod derivative;
mod formula;
mod parse;
mod robustness;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use boolean::{satisfies, sign_refines_boolean, SignCheck};
pub use derivative::derivative;
pub use formula::{Affine, Formula, Interval, IntervalError};
pub use parse::parse;
pub use robustness::{robustness, robustness_trace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StlError {
    #[error("syntax error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown variable '{name}' at {pos}")]
    UnknownVariable { name: String, pos: usize },
    #[error("bad interval at {pos}: {msg}")]
    BadInterval { pos: usize, msg: String },
    #[error("formula references channel {channel} but the signal has {dim}")]
    UnmappedChannel { channel: usize, dim: usize },
    #[error("derivative requires a flat formula (no nested temporal operators)")]
    NotFlat,
}

/// A parsed formula together with its source text and variable table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Specification {
    pub name: String,
    pub text: String,
    pub vars: Vec<String>,
    pub formula: Formula,
}

impl Specification {
    pub fn parse(name: impl Into<String>, text: impl Into<String>, vars: &[String]) -> Result<Self, StlError> {
        let text = text.into();
        let formula = parse(&text, vars)?;
        Ok(Self { name: name.into(), text, vars: vars.to_vec(), formula })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn v_lt_120() -> Formula {
        Formula::atom(Affine::constant(120.0).sub(&Affine::var(0)))
    }

    #[test]
    fn always_expands_to_negated_until() {
        let f = parse("G[0,30] (v < 120)", &vars(&["v"])).unwrap();
        let expected = Formula::not(Formula::until(
            Interval::new(0.0, 30.0).unwrap(),
            Formula::top(),
            Formula::not(v_lt_120()),
        ));
        assert_eq!(f, expected);
    }

    #[test]
    fn eventually_defaults_to_unbounded() {
        let f = parse("F (x > 0)", &vars(&["x"])).unwrap();
        assert_eq!(f, Formula::until(Interval::unbounded(), Formula::top(), Formula::atom(Affine::var(0))));
        assert_eq!(parse("◇(x > 0)", &vars(&["x"])).unwrap(), f);
        assert_eq!(parse("F[0, inf) (x > 0)", &vars(&["x"])).unwrap(), f);
    }

    #[test]
    fn non_strict_comparisons_use_negation() {
        let f = parse("v <= 50", &vars(&["v"])).unwrap();
        assert_eq!(f, Formula::not(Formula::atom(Affine::var(0).sub(&Affine::constant(50.0)))));
        let g = parse("v >= 60", &vars(&["v"])).unwrap();
        assert_eq!(g, Formula::not(Formula::atom(Affine::constant(60.0).sub(&Affine::var(0)))));
    }

    #[test]
    fn affine_arithmetic_in_atoms() {
        let f = parse("AF - 14.7 > 0.07 * 14.7", &vars(&["AF"])).unwrap();
        let Formula::Atom(a) = f else { panic!() };
        assert_eq!(a.terms, vec![(0, 1.0)]);
        assert!((a.constant - (-14.7 - 0.07 * 14.7)).abs() < 1e-12);
        let g = parse("(v + 2*w) / 2 < -w + 1e1", &vars(&["v", "w"])).unwrap();
        let Formula::Atom(b) = g else { panic!() };
        assert_eq!(b.eval(&[2.0, 1.0]), 10.0 - 1.0 - 2.0);
    }

    #[test]
    fn operators_and_precedence() {
        let vs = vars(&["g", "v", "omega"]);
        let s2 = parse("G[0,30] ((g > 2.5 and g < 3.5) -> v >= 30)", &vs).unwrap();
        assert!(s2.as_always().is_some());
        let s4 = parse("G[0,10] (v < 80) or F[0,30] (omega > 4500)", &vs).unwrap();
        assert!(s4.is_flat());
        assert!(s4.as_always().is_none());
        let nested = parse("not (F[0,6] G[0,3] (v > 1))", &vs).unwrap();
        assert!(!nested.is_flat());
        let u = parse("v > 0 U[1,2] g > 0", &vs).unwrap();
        assert!(matches!(u, Formula::Until(..)));
        assert_eq!(parse("true", &vs).unwrap(), Formula::top());
        assert_eq!(parse("false or false", &vs).unwrap(), Formula::or(Formula::Bottom, Formula::Bottom));
        assert_eq!(
            parse("v > 0 | g > 0", &vs).unwrap(),
            parse("v > 0 or g > 0", &vs).unwrap()
        );
        // `->` is right associative and binds loosest.
        assert_eq!(
            parse("v > 0 -> g > 0 -> omega > 0", &vs).unwrap(),
            parse("v > 0 -> (g > 0 -> omega > 0)", &vs).unwrap()
        );
    }

    #[test]
    fn parse_errors() {
        let vs = vars(&["x"]);
        assert!(matches!(parse("G[5,3] (x>0)", &vs), Err(StlError::BadInterval { pos: 1, .. })));
        assert!(matches!(parse("G[2,2] (x>0)", &vs), Err(StlError::BadInterval { .. })));
        assert!(matches!(parse("F (y > 0)", &vs), Err(StlError::UnknownVariable { pos: 3, .. })));
        assert!(matches!(parse("x * x > 0", &vs), Err(StlError::Parse { pos: 2, .. })));
        assert!(matches!(parse("x / x > 0", &vs), Err(StlError::Parse { .. })));
        assert!(matches!(parse("(x > 0", &vs), Err(StlError::Parse { pos: 6, .. })));
        assert!(matches!(parse("x > 0)", &vs), Err(StlError::Parse { pos: 5, .. })));
        assert!(matches!(parse("x $ 0", &vs), Err(StlError::Parse { pos: 2, .. })));
        assert!(matches!(parse("", &vs), Err(StlError::Parse { .. })));
        assert!(matches!(parse("G[0,1", &vs), Err(StlError::Parse { .. })));
    }

    #[test]
    fn display_round_trips_through_structure() {
        let vs = vars(&["v"]);
        let f = parse("G[0,30] (v < 120)", &vs).unwrap();
        let shown = f.display_with(&vs).to_string();
        assert!(shown.contains("U[0,30]"), "{shown}");
        assert!(shown.contains("-v + 120"), "{shown}");
    }

    #[test]
    fn specification_serde() {
        let spec = Specification::parse("S1", "G[0,30] (v < 120)", &vars(&["v"])).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        let back: Specification = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let unb = Specification::parse("r", "F (v > 1)", &vars(&["v"])).unwrap();
        let back: Specification = serde_json::from_str(&serde_json::to_string(&unb).unwrap()).unwrap();
        // serde_json writes infinity as null, so unbounded intervals need care.
        assert_eq!(back, unb);
    }
}
