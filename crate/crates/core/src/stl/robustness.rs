//! Quantitative semantics on sampled traces.
//!
//! Every formula is evaluated to a robustness trace: entry `i` is the robustness of the suffix of
//! the signal starting at grid index `i`, with all suprema and infima taken over grid points of
//! that suffix. The robustness of the whole signal is entry 0.

use std::collections::VecDeque;

use super::{Formula, Interval, StlError};
use crate::signal::Signal;

/// Robustness `⟦w, φ⟧` of a bounded signal.
pub fn robustness(w: &Signal, phi: &Formula) -> Result<f64, StlError> {
    check_channels(w, phi)?;
    Ok(trace(w, phi)[0])
}

/// Robustness of every suffix of `w`.
pub fn robustness_trace(w: &Signal, phi: &Formula) -> Result<Vec<f64>, StlError> {
    check_channels(w, phi)?;
    Ok(trace(w, phi))
}

pub(crate) fn check_channels(w: &Signal, phi: &Formula) -> Result<(), StlError> {
    match phi.max_channel() {
        Some(ch) if ch >= w.dim() => Err(StlError::UnmappedChannel { channel: ch, dim: w.dim() }),
        _ => Ok(()),
    }
}

pub(crate) fn trace(w: &Signal, phi: &Formula) -> Vec<f64> {
    let n = w.len();
    match phi {
        Formula::Atom(f) => w.samples().map(|x| f.eval(x)).collect(),
        Formula::Const(r) => vec![*r; n],
        Formula::Bottom => vec![f64::NEG_INFINITY; n],
        Formula::Not(a) => {
            let mut r = trace(w, a);
            r.iter_mut().for_each(|x| *x = -*x);
            r
        }
        Formula::And(a, b) => {
            let mut r = trace(w, a);
            let s = trace(w, b);
            r.iter_mut().zip(s).for_each(|(x, y)| *x = x.min(y));
            r
        }
        Formula::Until(i, a, b) => {
            let r1 = trace(w, a);
            let r2 = trace(w, b);
            until(*i, &r1, &r2, w.dt())
        }
    }
}

/// `ρ(i) = sup_{k ∈ i+I, k < n} min(r2[k], inf_{i ≤ m < k} r1[m])`.
pub(crate) fn until(interval: Interval, r1: &[f64], r2: &[f64], dt: f64) -> Vec<f64> {
    let n = r2.len();
    let Some((d_lo, d_hi)) = interval.grid_offsets(dt) else {
        return vec![f64::NEG_INFINITY; n];
    };
    if r1.iter().all(|&x| x == f64::INFINITY) {
        return window_max(r2, d_lo, d_hi);
    }
    let mut out = vec![f64::NEG_INFINITY; n];
    for (i, o) in out.iter_mut().enumerate() {
        let first = i.saturating_add(d_lo);
        let last = i.saturating_add(d_hi).min(n - 1);
        let mut best = f64::NEG_INFINITY;
        let mut run_inf = f64::INFINITY;
        for k in i..=last {
            if k >= first {
                best = best.max(r2[k].min(run_inf));
            }
            run_inf = run_inf.min(r1[k]);
            if run_inf <= best {
                break;
            }
        }
        *o = best;
    }
    out
}

/// `out[i] = max r[k]` over `k ∈ [i + d_lo, i + d_hi] ∩ [0, n)`, `-∞` if empty.
fn window_max(r: &[f64], d_lo: usize, d_hi: usize) -> Vec<f64> {
    let n = r.len();
    let mut out = vec![f64::NEG_INFINITY; n];
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0usize;
    for (i, o) in out.iter_mut().enumerate() {
        let lo = i.saturating_add(d_lo);
        if lo >= n {
            break;
        }
        let hi = i.saturating_add(d_hi).min(n - 1);
        while next <= hi {
            while dq.back().is_some_and(|&b| r[b] <= r[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        while dq.front().is_some_and(|&f| f < lo) {
            dq.pop_front();
        }
        if let Some(&f) = dq.front() {
            *o = r[f];
        }
    }
    out
}
