//! Uniformly sampled, time-bounded, vector-valued signals.
//!
//! A [`Signal`] with `n` samples and step `dt` lives on the grid `0, dt, ..., (n-1)·dt`; its
//! horizon is `(n-1)·dt`. A one-sample signal has horizon zero.
//!
//! Concatenation follows the half-open junction convention: in `w·w'` the sample at the junction
//! belongs to `w`, and `w'` is read as starting at the junction, so its sample 0 is dropped. This
//! makes concatenation associative and length-additive on the grid.

use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used when snapping a time instant onto the sample grid.
pub(crate) const GRID_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("signal must have at least one sample")]
    Empty,
    #[error("signal dimension must be positive")]
    ZeroDim,
    #[error("sample step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("sample {index} has {got} channels, expected {expected}")]
    Ragged { index: usize, got: usize, expected: usize },
    #[error("sample {index} channel {channel} is not finite")]
    NonFinite { index: usize, channel: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("sample step mismatch: {0} vs {1}")]
    StepMismatch(f64, f64),
    #[error("time {0} is not on the sample grid (dt = {1})")]
    OffGrid(f64, f64),
    #[error("invalid time range [{0}, {1}] for a signal of horizon {2}")]
    BadRange(f64, f64, f64),
    #[error("horizon {horizon} is not divisible into {segments} segments of step {dt}")]
    NotDivisible { horizon: f64, segments: usize, dt: f64 },
    #[error("value {value} of segment {segment} channel {channel} outside [{lo}, {hi}]")]
    OutOfBounds { segment: usize, channel: usize, value: f64, lo: f64, hi: f64 },
    #[error("invalid bounds [{0}, {1}]")]
    BadBounds(f64, f64),
    #[error("csv: {0}")]
    Csv(String),
}

/// Closed interval `[lo, hi]` bounding one input channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self, SignalError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(SignalError::BadBounds(lo, hi));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

/// Converts a time instant to a grid index, failing when it is not a multiple of `dt`.
pub(crate) fn grid_index(t: f64, dt: f64) -> Option<usize> {
    if !t.is_finite() || t < -GRID_EPS * dt {
        return None;
    }
    let k = (t / dt).round();
    let tol = GRID_EPS * k.abs().max(1.0);
    if ((t / dt) - k).abs() <= tol {
        Some(k as usize)
    } else {
        None
    }
}

/// A time-bounded signal sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    dim: usize,
    dt: f64,
    /// Row-major samples, `len() == n * dim`.
    data: Vec<f64>,
}

impl Signal {
    pub fn new(dt: f64, samples: Vec<Vec<f64>>) -> Result<Self, SignalError> {
        let dim = samples.first().ok_or(SignalError::Empty)?.len();
        let mut data = Vec::with_capacity(samples.len() * dim);
        for (index, s) in samples.iter().enumerate() {
            if s.len() != dim {
                return Err(SignalError::Ragged { index, got: s.len(), expected: dim });
            }
            data.extend_from_slice(s);
        }
        Self::from_flat(dim, dt, data)
    }

    /// Builds a signal from row-major data.
    pub fn from_flat(dim: usize, dt: f64, data: Vec<f64>) -> Result<Self, SignalError> {
        if dim == 0 {
            return Err(SignalError::ZeroDim);
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SignalError::BadStep(dt));
        }
        if data.is_empty() {
            return Err(SignalError::Empty);
        }
        if data.len() % dim != 0 {
            return Err(SignalError::Ragged { index: data.len() / dim, got: data.len() % dim, expected: dim });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite { index: pos / dim, channel: pos % dim });
        }
        Ok(Self { dim, dt, data })
    }

    /// Scalar signal from a list of values.
    pub fn scalar(dt: f64, values: &[f64]) -> Result<Self, SignalError> {
        Self::from_flat(1, dt, values.to_vec())
    }

    /// Constant signal holding `value` over `[0, horizon]`.
    pub fn constant(value: &[f64], dt: f64, horizon: f64) -> Result<Self, SignalError> {
        let steps = grid_index(horizon, dt).ok_or(SignalError::OffGrid(horizon, dt))?;
        let mut data = Vec::with_capacity((steps + 1) * value.len());
        for _ in 0..=steps {
            data.extend_from_slice(value);
        }
        Self::from_flat(value.len(), dt, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Always false; a signal holds at least one sample.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.sample(self.len() - 1)
    }

    pub fn value(&self, k: usize, channel: usize) -> f64 {
        self.data[k * self.dim + channel]
    }

    pub fn samples(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn channel(&self, channel: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(channel).step_by(self.dim).copied()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    fn check_compatible(&self, other: &Signal) -> Result<(), SignalError> {
        if self.dim != other.dim {
            return Err(SignalError::DimMismatch(self.dim, other.dim));
        }
        if self.dt != other.dt {
            return Err(SignalError::StepMismatch(self.dt, other.dt));
        }
        Ok(())
    }

    /// `self · other`: horizon `T + T'`, junction sample owned by `self`.
    pub fn concatenate(&self, other: &Signal) -> Result<Signal, SignalError> {
        self.check_compatible(other)?;
        let mut data = Vec::with_capacity(self.data.len() + other.data.len() - other.dim);
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data[other.dim..]);
        Ok(Signal { dim: self.dim, dt: self.dt, data })
    }

    /// Restriction to `[t1, t2]`, re-based to start at time zero.
    pub fn restrict(&self, t1: f64, t2: f64) -> Result<Signal, SignalError> {
        let i1 = grid_index(t1, self.dt).ok_or(SignalError::OffGrid(t1, self.dt))?;
        let i2 = grid_index(t2, self.dt).ok_or(SignalError::OffGrid(t2, self.dt))?;
        if i1 >= i2 || i2 >= self.len() {
            return Err(SignalError::BadRange(t1, t2, self.horizon()));
        }
        Ok(self.slice(i1, i2))
    }

    /// Samples `from..=to` as a new signal. Panics when out of range.
    pub fn slice(&self, from: usize, to: usize) -> Signal {
        assert!(from <= to && to < self.len(), "slice {from}..={to} out of range");
        Signal {
            dim: self.dim,
            dt: self.dt,
            data: self.data[from * self.dim..(to + 1) * self.dim].to_vec(),
        }
    }

    /// The first `k + 1` samples, i.e. the truncation to `[0, k·dt]`. Allows a single sample.
    pub fn head(&self, k: usize) -> Signal {
        self.slice(0, k)
    }

    /// The `t`-shift: `result(t') = self(t + t')`, horizon shrinks by `t`.
    pub fn shift(&self, t: f64) -> Result<Signal, SignalError> {
        let k = grid_index(t, self.dt).ok_or(SignalError::OffGrid(t, self.dt))?;
        if k >= self.len() {
            return Err(SignalError::BadRange(t, self.horizon(), self.horizon()));
        }
        Ok(self.slice(k, self.len() - 1))
    }

    /// Extends the signal to `horizon` by holding its last sample. A no-op when already long enough.
    pub fn hold_to(&self, horizon: f64) -> Signal {
        let target = (horizon / self.dt + GRID_EPS).floor() as usize + 1;
        if target <= self.len() {
            return self.clone();
        }
        let mut data = self.data.clone();
        let last = self.last().to_vec();
        for _ in self.len()..target {
            data.extend_from_slice(&last);
        }
        Signal { dim: self.dim, dt: self.dt, data }
    }

    /// Writes `t,<names...>` CSV with shortest round-trip float formatting.
    pub fn to_csv(&self, names: Option<&[String]>) -> String {
        let mut out = String::from("t");
        for c in 0..self.dim {
            match names.and_then(|n| n.get(c)) {
                Some(name) => write!(out, ",{name}").unwrap(),
                None => write!(out, ",ch{c}").unwrap(),
            }
        }
        out.push('\n');
        for (k, s) in self.samples().enumerate() {
            write!(out, "{}", self.time(k)).unwrap();
            for v in s {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV layout written by [`Signal::to_csv`]. `dt` is inferred from the first two
    /// time stamps when not given.
    pub fn from_csv<R: BufRead>(reader: R, dt: Option<f64>) -> Result<Signal, SignalError> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| SignalError::Csv("missing header".into()))?
            .map_err(|e| SignalError::Csv(e.to_string()))?;
        let dim = header.split(',').count().saturating_sub(1);
        let mut times = Vec::new();
        let mut data = Vec::new();
        for (row, line) in lines.enumerate() {
            let line = line.map_err(|e| SignalError::Csv(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let parse = |f: Option<&str>| -> Result<f64, SignalError> {
                f.ok_or_else(|| SignalError::Csv(format!("row {row}: too few fields")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| SignalError::Csv(format!("row {row}: {e}")))
            };
            times.push(parse(fields.next())?);
            for _ in 0..dim {
                data.push(parse(fields.next())?);
            }
            if fields.next().is_some() {
                return Err(SignalError::Csv(format!("row {row}: too many fields")));
            }
        }
        let dt = match dt {
            Some(dt) => dt,
            None if times.len() >= 2 => times[1] - times[0],
            None => return Err(SignalError::Csv("cannot infer dt from a single row".into())),
        };
        Signal::from_flat(dim, dt, data)
    }
}

/// Piecewise-constant input description: `K` control values over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstant {
    pub values: Vec<Vec<f64>>,
    pub bounds: Vec<Bounds>,
    pub horizon: f64,
}

impl PiecewiseConstant {
    /// Builds a description from a flat segment-major vector `[u1(ch0), u1(ch1), u2(ch0), ...]`.
    pub fn from_flat(point: &[f64], bounds: &[Bounds], horizon: f64) -> Self {
        let m = bounds.len();
        Self {
            values: point.chunks_exact(m).map(|c| c.to_vec()).collect(),
            bounds: bounds.to_vec(),
            horizon,
        }
    }

    pub fn segments(&self) -> usize {
        self.values.len()
    }

    fn validate(&self) -> Result<(), SignalError> {
        for b in &self.bounds {
            Bounds::new(b.lo, b.hi)?;
        }
        for (segment, v) in self.values.iter().enumerate() {
            if v.len() != self.bounds.len() {
                return Err(SignalError::DimMismatch(v.len(), self.bounds.len()));
            }
            for (channel, (&value, b)) in v.iter().zip(&self.bounds).enumerate() {
                if !b.contains(value) {
                    return Err(SignalError::OutOfBounds { segment, channel, value, lo: b.lo, hi: b.hi });
                }
            }
        }
        Ok(())
    }

    /// Samples the signal on a grid of step `dt`.
    ///
    /// Segment `j` (1-based) owns the grid points in `((j-1)·T/K, j·T/K]`, and time zero belongs to
    /// the first segment. So the value changes right after a control point, which is what the
    /// concatenation of per-segment constant signals produces.
    pub fn realize(&self, dt: f64) -> Result<Signal, SignalError> {
        self.validate()?;
        let k = self.segments();
        if k == 0 {
            return Err(SignalError::Empty);
        }
        let steps = grid_index(self.horizon, dt).ok_or(SignalError::OffGrid(self.horizon, dt))?;
        if steps == 0 || steps % k != 0 {
            return Err(SignalError::NotDivisible { horizon: self.horizon, segments: k, dt });
        }
        let per = steps / k;
        let m = self.bounds.len();
        let mut data = Vec::with_capacity((steps + 1) * m);
        for i in 0..=steps {
            let seg = if i == 0 { 0 } else { (i - 1) / per };
            data.extend_from_slice(&self.values[seg]);
        }
        Signal::from_flat(m, dt, data)
    }
}
