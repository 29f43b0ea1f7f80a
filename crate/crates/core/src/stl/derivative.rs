//! Syntactic derivative of flat formulas by a signal prefix.
//!
//! `∂_v φ` is a formula such that for every continuation `v'` starting where `v` ends
//! (`v'(0) = v(T)`), `⟦v', ∂_v φ⟧ = ⟦v·v', φ⟧`.

use super::robustness::{check_channels, trace};
use super::{Formula, Interval, StlError};
use crate::signal::{Signal, GRID_EPS};

pub fn derivative(v: &Signal, phi: &Formula) -> Result<Formula, StlError> {
    if !phi.is_flat() {
        return Err(StlError::NotFlat);
    }
    check_channels(v, phi)?;
    Ok(derive(v, phi))
}

fn derive(v: &Signal, phi: &Formula) -> Formula {
    match phi {
        Formula::Atom(_) => Formula::Const(trace(v, phi)[0]),
        Formula::Const(_) | Formula::Bottom => phi.clone(),
        Formula::Not(a) => Formula::not(derive(v, a)),
        Formula::And(a, b) => Formula::and(derive(v, a), derive(v, b)),
        Formula::Until(i, a, _) => {
            let now = trace(v, phi)[0];
            let prefix_inf = trace(v, a).into_iter().fold(f64::INFINITY, f64::min);
            let rest = match shift_interval(*i, v.horizon(), v.dt()) {
                None => Formula::Bottom,
                Some(j) => {
                    let Formula::Until(_, a, b) = phi else { unreachable!() };
                    Formula::until(j, Formula::and(Formula::Const(prefix_inf), (**a).clone()), (**b).clone())
                }
            };
            Formula::or(Formula::Const(now), rest)
        }
    }
}

/// `{s > 0 : s + T ∈ I}`, or `None` when empty.
///
/// The instant `s = 0` of the continuation is the junction `T`, which the prefix term already
/// covers with the correct left-operand infimum, so it is always excluded.
pub(crate) fn shift_interval(i: Interval, t: f64, dt: f64) -> Option<Interval> {
    let tol = GRID_EPS * dt;
    let hi = i.hi - t;
    if hi <= tol {
        return None;
    }
    let lo = i.lo - t;
    if lo <= tol {
        Some(Interval { lo: 0.0, hi, lo_open: true })
    } else {
        Some(Interval { lo, hi, lo_open: i.lo_open })
    }
}
