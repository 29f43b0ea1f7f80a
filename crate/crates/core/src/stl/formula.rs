use std::fmt;

use serde::{Deserialize, Serialize};

use crate::signal::GRID_EPS;

/// Time interval of a temporal operator. Closed unless `lo_open` is set; `hi` may be `+∞`.
///
/// Parsed intervals are always closed with `0 ≤ lo < hi`. Left-open intervals only arise
/// internally, when the derivative shifts an interval past its left end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    #[serde(with = "crate::ext_real")]
    pub hi: f64,
    #[serde(default)]
    pub lo_open: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid interval [{lo}, {hi}]: need 0 <= lo < hi")]
pub struct IntervalError {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if !(lo.is_finite() && lo >= 0.0 && lo < hi && !hi.is_nan()) {
            return Err(IntervalError { lo, hi });
        }
        Ok(Self { lo, hi, lo_open: false })
    }

    /// `[0, ∞)`.
    pub fn unbounded() -> Self {
        Self { lo: 0.0, hi: f64::INFINITY, lo_open: false }
    }

    pub fn is_unbounded(&self) -> bool {
        self.hi == f64::INFINITY
    }

    /// Offsets `(d_lo, d_hi)` of the grid points of step `dt` lying in the interval, or `None`
    /// when there are none. `d_hi` is `usize::MAX` for an unbounded interval.
    ///
    /// Endpoints within a relative `1e-9` of a grid point snap onto it.
    pub fn grid_offsets(&self, dt: f64) -> Option<(usize, usize)> {
        let lo = self.lo / dt;
        let d_lo = if self.lo_open {
            (lo + GRID_EPS).floor() + 1.0
        } else {
            (lo - GRID_EPS).ceil()
        }
        .max(0.0);
        let d_hi = if self.is_unbounded() {
            f64::INFINITY
        } else {
            (self.hi / dt + GRID_EPS).floor()
        };
        if d_hi < d_lo || d_hi < 0.0 {
            return None;
        }
        let to_usize = |x: f64| if x >= usize::MAX as f64 { usize::MAX } else { x as usize };
        Some((to_usize(d_lo), to_usize(d_hi)))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_open { "(" } else { "[" };
        if self.is_unbounded() {
            write!(f, "{open}{},inf)", self.lo)
        } else {
            write!(f, "{open}{},{}]", self.lo, self.hi)
        }
    }
}

/// Affine function `constant + Σ coeff · x[channel]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(channel: usize) -> Self {
        Self { terms: vec![(channel, 1.0)], constant: 0.0 }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().fold(self.constant, |acc, &(ch, c)| acc + c * x[ch])
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(mut self, k: f64) -> Self {
        self.constant *= k;
        for t in &mut self.terms {
            t.1 *= k;
        }
        self.normalize()
    }

    pub fn add(mut self, other: &Affine) -> Self {
        self.constant += other.constant;
        for &(ch, c) in &other.terms {
            match self.terms.iter_mut().find(|t| t.0 == ch) {
                Some(t) => t.1 += c,
                None => self.terms.push((ch, c)),
            }
        }
        self.normalize()
    }

    pub fn sub(self, other: &Affine) -> Self {
        self.add(&other.clone().scale(-1.0))
    }

    fn normalize(mut self) -> Self {
        self.terms.retain(|t| t.1 != 0.0);
        self.terms.sort_by_key(|t| t.0);
        self
    }

    pub fn max_channel(&self) -> Option<usize> {
        self.terms.iter().map(|t| t.0).max()
    }

    fn fmt_with(&self, f: &mut fmt::Formatter<'_>, names: Option<&[String]>) -> fmt::Result {
        let mut first = true;
        for &(ch, c) in &self.terms {
            let name = names
                .and_then(|n| n.get(ch))
                .cloned()
                .unwrap_or_else(|| format!("x{ch}"));
            let sign = if c < 0.0 { "-" } else { "+" };
            if first {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if c.abs() == 1.0 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{}*{name}", c.abs())?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant != 0.0 {
            let sign = if self.constant < 0.0 { "-" } else { "+" };
            write!(f, " {sign} {}", self.constant.abs())
        } else {
            Ok(())
        }
    }
}

/// STL formula over the extended syntax: atoms `f(x) > 0`, constants `c_r`, `⊥`, `¬`, `∧`, and
/// interval-bounded until. Other connectives are built from these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    Atom(Affine),
    Const(#[serde(with = "crate::ext_real")] f64),
    Bottom,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(f: Affine) -> Self {
        Formula::Atom(f)
    }

    pub fn top() -> Self {
        Formula::Not(Box::new(Formula::Bottom))
    }

    pub fn not(phi: Formula) -> Self {
        Formula::Not(Box::new(phi))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Self::not(Self::and(Self::not(a), Self::not(b)))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Self::or(Self::not(a), b)
    }

    pub fn until(i: Interval, a: Formula, b: Formula) -> Self {
        Formula::Until(i, Box::new(a), Box::new(b))
    }

    pub fn eventually(i: Interval, phi: Formula) -> Self {
        Self::until(i, Self::top(), phi)
    }

    pub fn always(i: Interval, phi: Formula) -> Self {
        Self::not(Self::eventually(i, Self::not(phi)))
    }

    pub fn is_top(&self) -> bool {
        matches!(self, Formula::Not(b) if **b == Formula::Bottom)
    }

    /// True iff no until occurs inside an operand of another until.
    pub fn is_flat(&self) -> bool {
        match self {
            Formula::Atom(_) | Formula::Const(_) | Formula::Bottom => true,
            Formula::Not(a) => a.is_flat(),
            Formula::And(a, b) => a.is_flat() && b.is_flat(),
            Formula::Until(_, a, b) => !a.has_modality() && !b.has_modality(),
        }
    }

    pub fn has_modality(&self) -> bool {
        match self {
            Formula::Atom(_) | Formula::Const(_) | Formula::Bottom => false,
            Formula::Not(a) => a.has_modality(),
            Formula::And(a, b) => a.has_modality() || b.has_modality(),
            Formula::Until(..) => true,
        }
    }

    /// Body `ψ` when the formula has the shape `□_I ψ`.
    pub fn as_always(&self) -> Option<(Interval, &Formula)> {
        if let Formula::Not(inner) = self {
            if let Formula::Until(i, a, b) = &**inner {
                if a.is_top() {
                    if let Formula::Not(body) = &**b {
                        return Some((*i, body));
                    }
                }
            }
        }
        None
    }

    /// Largest channel index referenced by an atom.
    pub fn max_channel(&self) -> Option<usize> {
        match self {
            Formula::Atom(f) => f.max_channel(),
            Formula::Const(_) | Formula::Bottom => None,
            Formula::Not(a) => a.max_channel(),
            Formula::And(a, b) | Formula::Until(_, a, b) => a.max_channel().max(b.max_channel()),
        }
    }

    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        Named { phi: self, names: Some(names) }
    }

    fn fmt_with(&self, f: &mut fmt::Formatter<'_>, names: Option<&[String]>) -> fmt::Result {
        match self {
            Formula::Atom(a) => {
                write!(f, "(")?;
                a.fmt_with(f, names)?;
                write!(f, " > 0)")
            }
            Formula::Const(r) => write!(f, "c({r})"),
            Formula::Bottom => write!(f, "false"),
            Formula::Not(a) if **a == Formula::Bottom => write!(f, "true"),
            Formula::Not(a) => {
                write!(f, "not ")?;
                a.fmt_with(f, names)
            }
            Formula::And(a, b) => {
                write!(f, "(")?;
                a.fmt_with(f, names)?;
                write!(f, " and ")?;
                b.fmt_with(f, names)?;
                write!(f, ")")
            }
            Formula::Until(i, a, b) => {
                write!(f, "(")?;
                a.fmt_with(f, names)?;
                write!(f, " U{i} ")?;
                b.fmt_with(f, names)?;
                write!(f, ")")
            }
        }
    }
}

struct Named<'a> {
    phi: &'a Formula,
    names: Option<&'a [String]>,
}

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.phi.fmt_with(f, self.names)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with(f, None)
    }
}
