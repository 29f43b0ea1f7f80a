//! Boolean satisfaction, used to cross-check the sign of robustness.

use serde::{Deserialize, Serialize};

use super::robustness::check_channels;
use super::{robustness, Formula, StlError};
use crate::signal::Signal;

/// Whether `w ⊨ φ`, with atoms `f > 0` strict and constants `c_r` true iff `r > 0`.
pub fn satisfies(w: &Signal, phi: &Formula) -> Result<bool, StlError> {
    check_channels(w, phi)?;
    Ok(holds(w, phi, 0))
}

fn holds(w: &Signal, phi: &Formula, i: usize) -> bool {
    match phi {
        Formula::Atom(f) => f.eval(w.sample(i)) > 0.0,
        Formula::Const(r) => *r > 0.0,
        Formula::Bottom => false,
        Formula::Not(a) => !holds(w, a, i),
        Formula::And(a, b) => holds(w, a, i) && holds(w, b, i),
        Formula::Until(interval, a, b) => {
            let Some((d_lo, d_hi)) = interval.grid_offsets(w.dt()) else {
                return false;
            };
            let last = i.saturating_add(d_hi).min(w.len() - 1);
            (i.saturating_add(d_lo)..=last).any(|k| holds(w, b, k) && (i..k).all(|m| holds(w, a, m)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignCheck {
    pub robustness: f64,
    pub satisfied: bool,
    /// Positive robustness implies satisfaction and negative robustness implies violation.
    pub consistent: bool,
}

pub fn sign_refines_boolean(w: &Signal, phi: &Formula) -> Result<SignCheck, StlError> {
    let r = robustness(w, phi)?;
    let b = satisfies(w, phi)?;
    let consistent = !(r > 0.0 && !b) && !(r < 0.0 && b);
    Ok(SignCheck { robustness: r, satisfied: b, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::{Affine, Interval};

    fn below_120() -> Formula {
        Formula::always(Interval::unbounded(), Formula::atom(Affine::constant(120.0).sub(&Affine::var(0))))
    }

    #[test]
    fn constant_signals() {
        let ok = Signal::constant(&[5.0], 1.0, 30.0).unwrap();
        let c = sign_refines_boolean(&ok, &below_120()).unwrap();
        assert_eq!((c.robustness, c.satisfied, c.consistent), (115.0, true, true));
        let bad = Signal::constant(&[125.0], 1.0, 30.0).unwrap();
        let c = sign_refines_boolean(&bad, &below_120()).unwrap();
        assert_eq!((c.robustness, c.satisfied, c.consistent), (-5.0, false, true));
    }
}
