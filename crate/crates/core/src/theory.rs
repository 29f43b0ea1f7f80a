//! Executable checks of the conditions under which staged search loses nothing: incremental
//! falsification on quantized inputs, (truncated) time monotonicity, and statelessness.
//!
//! The monotonicity and statelessness definitions quantify over all signals, so they are checked
//! on sampled triples `(u1, u1', u2)`. A clean report means "no violation in n samples".

use rand::{Rng as _, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::falsify::FalsifyError;
use crate::model::{ModelError, SystemModel};
use crate::optim::{cmp_score, Rng};
use crate::signal::{grid_index, Bounds, PiecewiseConstant, Signal, SignalError};
use crate::stl::{robustness, Formula, StlError};

/// Largest `|U|^K` the exhaustive check accepts.
pub const MAX_GRID_SIZE: u128 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("grid has {0} input combinations; the limit is {MAX_GRID_SIZE}")]
    GridTooLarge(u128),
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("not a ceiling formula G (x < c): {0}")]
    NotCeiling(String),
    #[error("model '{0}' is not declared monotone")]
    NotMonotone(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stl(#[from] StlError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Falsify(#[from] FalsifyError),
}

/// Finite per-stage input alphabet `U` with `K` stages of equal length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedInputGrid {
    /// The elements of `U`, one input vector each.
    pub values: Vec<Vec<f64>>,
    pub stages: usize,
    /// Length of one stage in seconds.
    pub segment: f64,
    pub dt: f64,
}

impl QuantizedInputGrid {
    pub fn size(&self) -> u128 {
        (self.values.len() as u128).saturating_pow(self.stages as u32)
    }

    fn validate(&self, bounds: &[Bounds]) -> Result<(), TheoryError> {
        if self.values.is_empty() || self.stages == 0 {
            return Err(TheoryError::BadGrid("U and the stage count must be non-empty".into()));
        }
        if self.size() > MAX_GRID_SIZE {
            return Err(TheoryError::GridTooLarge(self.size()));
        }
        if grid_index(self.segment, self.dt).is_none_or(|s| s == 0) {
            return Err(TheoryError::BadGrid(format!("segment {} is not a multiple of {}", self.segment, self.dt)));
        }
        for v in &self.values {
            if v.len() != bounds.len() || v.iter().zip(bounds).any(|(x, b)| !b.contains(*x)) {
                return Err(TheoryError::BadGrid(format!("{v:?} is not an input within the model bounds")));
            }
        }
        Ok(())
    }

    /// Input signal choosing `U[choice[j]]` in stage `j`, over `choice.len()` stages.
    pub fn input(&self, choice: &[usize], bounds: &[Bounds]) -> Result<Signal, SignalError> {
        let values = choice.iter().map(|&i| self.values[i].clone()).collect();
        let horizon = self.segment * choice.len() as f64;
        PiecewiseConstant { values, bounds: bounds.to_vec(), horizon }.realize(self.dt)
    }
}

/// Outcome of comparing the global minimum with the greedy stage-by-stage one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementalReport {
    pub holds: bool,
    /// Minimum robustness over all of `U^K`.
    #[serde(with = "crate::ext_real")]
    pub lhs: f64,
    /// Robustness reached by greedy prefix selection.
    #[serde(with = "crate::ext_real")]
    pub rhs: f64,
    /// `rhs − lhs`; zero when the property holds.
    #[serde(with = "crate::ext_real")]
    pub gap: f64,
    pub lhs_witness: Vec<usize>,
    pub rhs_witness: Vec<usize>,
}

fn score(model: &dyn SystemModel, u: &Signal, phi: &Formula) -> Result<f64, TheoryError> {
    Ok(robustness(&model.simulate(u)?, phi)?)
}

/// Brute force over `U^K` against greedy selection: each stage keeps the element with the lowest
/// robustness of the prefix trace (first on ties), the last stage takes the minimum over `U`.
pub fn check_incremental_falsification(
    model: &dyn SystemModel,
    phi: &Formula,
    grid: &QuantizedInputGrid,
) -> Result<IncrementalReport, TheoryError> {
    let bounds = model.input_bounds();
    grid.validate(&bounds)?;
    let n = grid.values.len();
    let k = grid.stages;

    let mut choice = vec![0usize; k];
    let mut lhs = f64::INFINITY;
    let mut lhs_witness = choice.clone();
    let mut first = true;
    'all: loop {
        let r = score(model, &grid.input(&choice, &bounds)?, phi)?;
        if first || cmp_score(r, lhs).is_lt() {
            lhs = r;
            lhs_witness.clone_from(&choice);
            first = false;
        }
        // Odometer, last stage fastest.
        let mut pos = k;
        loop {
            if pos == 0 {
                break 'all;
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < n {
                break;
            }
            choice[pos] = 0;
        }
    }

    let mut greedy: Vec<usize> = Vec::with_capacity(k);
    let mut rhs = f64::INFINITY;
    for _ in 0..k {
        let mut best = (0, f64::INFINITY);
        for a in 0..n {
            greedy.push(a);
            let r = score(model, &grid.input(&greedy, &bounds)?, phi)?;
            greedy.pop();
            if a == 0 || cmp_score(r, best.1).is_lt() {
                best = (a, r);
            }
        }
        greedy.push(best.0);
        rhs = best.1;
    }

    let holds = lhs == rhs || (lhs.is_nan() && rhs.is_nan());
    Ok(IncrementalReport { holds, lhs, rhs, gap: rhs - lhs, lhs_witness, rhs_witness: greedy })
}

/// Draws triples of piecewise-constant inputs uniformly within the model bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleSampler {
    pub prefix_horizon: f64,
    pub prefix_segments: usize,
    pub suffix_horizon: f64,
    pub suffix_segments: usize,
    pub dt: f64,
}

/// Control values of a sampled triple, one vector per segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub u1: Vec<Vec<f64>>,
    pub u1_alt: Vec<Vec<f64>>,
    pub u2: Vec<Vec<f64>>,
}

impl TripleSampler {
    fn draw(&self, bounds: &[Bounds], segments: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
        (0..segments).map(|_| bounds.iter().map(|b| rng.random_range(b.lo..=b.hi)).collect()).collect()
    }

    pub fn sample(&self, bounds: &[Bounds], rng: &mut Rng) -> Triple {
        Triple {
            u1: self.draw(bounds, self.prefix_segments, rng),
            u1_alt: self.draw(bounds, self.prefix_segments, rng),
            u2: self.draw(bounds, self.suffix_segments, rng),
        }
    }

    fn signals(&self, t: &Triple, bounds: &[Bounds]) -> Result<(Signal, Signal, Signal), SignalError> {
        let pc = |values: &Vec<Vec<f64>>, horizon| {
            PiecewiseConstant { values: values.clone(), bounds: bounds.to_vec(), horizon }.realize(self.dt)
        };
        Ok((pc(&t.u1, self.prefix_horizon)?, pc(&t.u1_alt, self.prefix_horizon)?, pc(&t.u2, self.suffix_horizon)?))
    }
}

/// A triple for which a better prefix did not stay better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    /// `u1` is the prefix with the lower (or equal) robustness.
    pub triple: Triple,
    #[serde(with = "crate::ext_real::vec")]
    pub prefix_scores: Vec<f64>,
    #[serde(with = "crate::ext_real::vec")]
    pub extended_scores: Vec<f64>,
    /// Truncation instant used, for the truncated variant.
    pub truncation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub samples: usize,
    /// Ordered prefix pairs for which the premise held and the conclusion was checked.
    pub checked: usize,
    pub violations: Vec<MonotonicityViolation>,
}

fn ordered_pairs(t: &Triple, r: f64, r_alt: f64) -> Vec<(Triple, f64, f64)> {
    let swapped = Triple { u1: t.u1_alt.clone(), u1_alt: t.u1.clone(), u2: t.u2.clone() };
    let mut out = Vec::new();
    if r <= r_alt {
        out.push((t.clone(), r, r_alt));
    }
    if r_alt <= r {
        out.push((swapped, r_alt, r));
    }
    out
}

/// Samples triples and checks that `⟦M(u1)⟧ ≤ ⟦M(u1')⟧` implies `⟦M(u1·u2)⟧ ≤ ⟦M(u1'·u2)⟧`,
/// in both orders of each sampled prefix pair.
pub fn check_time_monotonicity(
    model: &dyn SystemModel,
    phi: &Formula,
    sampler: &TripleSampler,
    n_triples: usize,
    seed: u64,
) -> Result<MonotonicityReport, TheoryError> {
    let bounds = model.input_bounds();
    let mut rng = Rng::seed_from_u64(seed);
    let mut report = MonotonicityReport { samples: n_triples, checked: 0, violations: Vec::new() };
    for _ in 0..n_triples {
        let t = sampler.sample(&bounds, &mut rng);
        let (u1, u1_alt, _) = sampler.signals(&t, &bounds)?;
        let (r, r_alt) = (score(model, &u1, phi)?, score(model, &u1_alt, phi)?);
        for (pair, a, b) in ordered_pairs(&t, r, r_alt) {
            let (u1, u1_alt, u2) = sampler.signals(&pair, &bounds)?;
            let c = score(model, &u1.concatenate(&u2)?, phi)?;
            let d = score(model, &u1_alt.concatenate(&u2)?, phi)?;
            report.checked += 1;
            if c > d {
                report.violations.push(MonotonicityViolation {
                    triple: pair,
                    prefix_scores: vec![a, b],
                    extended_scores: vec![c, d],
                    truncation: None,
                });
            }
        }
    }
    Ok(report)
}

/// `G (x < c)` decomposed into the output channel of `x` and `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ceiling {
    pub channel: usize,
    pub threshold: f64,
}

impl Ceiling {
    /// Accepts an always-formula from time 0 over an atom `c − x > 0`.
    pub fn of(phi: &Formula) -> Result<Self, TheoryError> {
        let not = |why: &str| TheoryError::NotCeiling(format!("{phi}: {why}"));
        let (interval, body) = phi.as_always().ok_or_else(|| not("not an always-formula"))?;
        if interval.lo != 0.0 || interval.lo_open {
            return Err(not("the interval does not start at 0"));
        }
        match body {
            Formula::Atom(f) if f.terms.len() == 1 && f.terms[0].1 == -1.0 => {
                Ok(Self { channel: f.terms[0].0, threshold: f.constant })
            }
            _ => Err(not("the body is not x < c")),
        }
    }
}

/// The grid instant at which the output of `u1` truncated there has the lowest robustness
/// against a ceiling formula: the first peak of `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub time: f64,
    pub index: usize,
    #[serde(with = "crate::ext_real")]
    pub robustness: f64,
}

pub fn truncation_instant(model: &dyn SystemModel, u1: &Signal, phi: &Formula) -> Result<Truncation, TheoryError> {
    let ceiling = Ceiling::of(phi)?;
    let y = model.simulate(u1)?;
    let mut index = 0;
    for (k, x) in y.channel(ceiling.channel).enumerate() {
        if x > y.value(index, ceiling.channel) {
            index = k;
        }
    }
    let robustness = score(model, &u1.head(index), phi)?;
    Ok(Truncation { time: u1.time(index), index, robustness })
}

/// Like [`check_time_monotonicity`], with both prefixes truncated at the truncation instant of
/// the better one before appending `u2`. Requires a model declared monotone and a ceiling formula.
pub fn check_truncated_time_monotonicity(
    model: &dyn SystemModel,
    phi: &Formula,
    sampler: &TripleSampler,
    n_triples: usize,
    seed: u64,
) -> Result<MonotonicityReport, TheoryError> {
    Ceiling::of(phi)?;
    if !model.is_monotone() {
        return Err(TheoryError::NotMonotone(model.name().into()));
    }
    let bounds = model.input_bounds();
    let mut rng = Rng::seed_from_u64(seed);
    let mut report = MonotonicityReport { samples: n_triples, checked: 0, violations: Vec::new() };
    for _ in 0..n_triples {
        let t = sampler.sample(&bounds, &mut rng);
        let (u1, u1_alt, _) = sampler.signals(&t, &bounds)?;
        let (r, r_alt) = (score(model, &u1, phi)?, score(model, &u1_alt, phi)?);
        for (pair, a, b) in ordered_pairs(&t, r, r_alt) {
            let (u1, u1_alt, u2) = sampler.signals(&pair, &bounds)?;
            let cut = truncation_instant(model, &u1, phi)?;
            let c = score(model, &u1.head(cut.index).concatenate(&u2)?, phi)?;
            let d = score(model, &u1_alt.head(cut.index).concatenate(&u2)?, phi)?;
            report.checked += 1;
            if c > d {
                report.violations.push(MonotonicityViolation {
                    triple: pair,
                    prefix_scores: vec![a, b],
                    extended_scores: vec![c, d],
                    truncation: Some(cut.time),
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatelessViolation {
    pub triple: Triple,
    /// Largest absolute output difference after the junction.
    pub max_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatelessReport {
    pub samples: usize,
    pub violations: Vec<StatelessViolation>,
}

/// Checks that outputs after the junction do not depend on the prefix, samplewise and exactly.
pub fn check_statelessness(
    model: &dyn SystemModel,
    sampler: &TripleSampler,
    n_triples: usize,
    seed: u64,
) -> Result<StatelessReport, TheoryError> {
    let bounds = model.input_bounds();
    let mut rng = Rng::seed_from_u64(seed);
    let mut report = StatelessReport { samples: n_triples, violations: Vec::new() };
    for _ in 0..n_triples {
        let t = sampler.sample(&bounds, &mut rng);
        let (u1, u1_alt, u2) = sampler.signals(&t, &bounds)?;
        let junction = u1.len() - 1;
        let a = model.simulate(&u1.concatenate(&u2)?)?;
        let b = model.simulate(&u1_alt.concatenate(&u2)?)?;
        let tail = |s: &Signal| s.as_flat()[(junction + 1) * s.dim()..].to_vec();
        let (ta, tb) = (tail(&a), tail(&b));
        if ta != tb {
            let max_difference = ta.iter().zip(&tb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            report.violations.push(StatelessViolation { triple: t, max_difference });
        }
    }
    Ok(report)
}
