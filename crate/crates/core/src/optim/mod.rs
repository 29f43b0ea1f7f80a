//! Box-constrained derivative-free minimizers driven through a budgeted [`Evaluator`].
//!
//! Optimizers never see the objective directly. They call [`Evaluator::eval`], which clamps the
//! point into the box, records it, and returns `Err(Stop)` once the trial must end: budget spent,
//! stalled, or a negative score found. Optimizers propagate that with `?`, so every one of them
//! stops exactly where the evaluator says.

mod annealing;
mod cmaes;
mod nelder_mead;
mod sampling;

use std::cmp::Ordering;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use annealing::Annealing;
pub use cmaes::CmaEs;
pub use nelder_mead::NelderMead;
pub use sampling::{corner_prefix, corner_samples, halton, uniform_samples, MAX_CORNER_DIM};

use crate::signal::{Bounds, SignalError};

pub type Rng = ChaCha8Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("search space must have at least one dimension")]
    Empty,
    #[error(transparent)]
    Bounds(#[from] SignalError),
    #[error("{0} corner samples requested; the limit is 2^{MAX_CORNER_DIM}")]
    TooManyCorners(usize),
}

/// Axis-aligned box `Π [a_i, b_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    bounds: Vec<Bounds>,
}

impl SearchSpace {
    pub fn new(bounds: Vec<Bounds>) -> Result<Self, OptimError> {
        if bounds.is_empty() {
            return Err(OptimError::Empty);
        }
        for b in &bounds {
            Bounds::new(b.lo, b.hi)?;
        }
        Ok(Self { bounds })
    }

    /// `reps` copies of `bounds`, e.g. one per control point.
    pub fn repeated(bounds: &[Bounds], reps: usize) -> Result<Self, OptimError> {
        Self::new(bounds.iter().cycle().take(bounds.len() * reps).copied().collect())
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[Bounds] {
        &self.bounds
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.bounds).all(|(&v, b)| b.contains(v))
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, b) in x.iter_mut().zip(&self.bounds) {
            *v = if v.is_nan() { b.lo } else { b.clamp(*v) };
        }
    }

    /// Maps a point of the unit cube into the box.
    pub fn from_unit(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.bounds).map(|(&z, b)| b.lo + z * b.width()).collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.bounds).map(|(&x, b)| (x - b.lo) / b.width()).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|b| 0.5 * (b.lo + b.hi)).collect()
    }
}

/// Orders extended reals, NaN last.
pub fn cmp_score(a: f64, b: f64) -> Ordering {
    match (a.is_nan(), b.is_nan()) {
        (false, false) => a.total_cmp(&b),
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
    }
}

/// Why an optimization run ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stop {
    /// A negative score was found.
    Success,
    /// The evaluation budget is spent.
    Budget,
    /// Too many evaluations without improving the best score.
    Stalled,
    /// A finite candidate set was fully evaluated.
    Exhausted,
    /// The objective failed.
    Error(String),
}

/// Limits on one optimization run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_evals: usize,
    /// Stop once `evaluations − index of best ≥ stall` (indices 0-based, ties keep the earliest).
    pub stall: Option<usize>,
}

/// One evaluated point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub point: Vec<f64>,
    #[serde(with = "crate::ext_real")]
    pub score: f64,
}

type Objective<'a> = dyn FnMut(&[f64]) -> Result<f64, String> + 'a;

/// Budget-enforcing wrapper around an objective, recording every evaluation.
pub struct Evaluator<'a> {
    space: SearchSpace,
    objective: Box<Objective<'a>>,
    budget: Budget,
    stall_enabled: bool,
    history: Vec<Evaluation>,
    best: Option<usize>,
    stopped: Option<Stop>,
}

impl<'a> Evaluator<'a> {
    pub fn new(space: SearchSpace, budget: Budget, objective: impl FnMut(&[f64]) -> Result<f64, String> + 'a) -> Self {
        Self {
            space,
            objective: Box::new(objective),
            budget,
            stall_enabled: true,
            history: Vec::new(),
            best: None,
            stopped: None,
        }
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn history(&self) -> &[Evaluation] {
        &self.history
    }

    pub fn into_history(self) -> Vec<Evaluation> {
        self.history
    }

    pub fn evals(&self) -> usize {
        self.history.len()
    }

    pub fn remaining(&self) -> usize {
        self.budget.max_evals.saturating_sub(self.history.len())
    }

    pub fn best(&self) -> Option<&Evaluation> {
        self.best.map(|i| &self.history[i])
    }

    pub fn best_index(&self) -> Option<usize> {
        self.best
    }

    /// Turns the stall rule on or off, e.g. to exempt an initial sampling phase.
    pub fn set_stall_enabled(&mut self, on: bool) {
        self.stall_enabled = on;
    }

    pub fn stopped(&self) -> Option<&Stop> {
        self.stopped.as_ref()
    }

    fn halt(&mut self, s: Stop) -> Stop {
        if self.stopped.is_none() {
            self.stopped = Some(s.clone());
        }
        s
    }

    /// Evaluates `x` (clamped into the box) unless the run is over.
    pub fn eval(&mut self, x: &[f64]) -> Result<f64, Stop> {
        if let Some(s) = &self.stopped {
            return Err(s.clone());
        }
        if self.history.len() >= self.budget.max_evals {
            return Err(self.halt(Stop::Budget));
        }
        let mut point = x.to_vec();
        self.space.clamp(&mut point);
        let score = match (self.objective)(&point) {
            Ok(s) => s,
            Err(e) => return Err(self.halt(Stop::Error(e))),
        };
        self.history.push(Evaluation { point, score });
        let idx = self.history.len() - 1;
        match self.best {
            Some(b) if cmp_score(score, self.history[b].score) != Ordering::Less => {}
            _ => self.best = Some(idx),
        }
        if score < 0.0 {
            return Err(self.halt(Stop::Success));
        }
        if let (true, Some(n), Some(b)) = (self.stall_enabled, self.budget.stall, self.best) {
            if self.history.len() - b >= n {
                return Err(self.halt(Stop::Stalled));
            }
        }
        Ok(score)
    }

    /// Evaluates points in order until one of them stops the run.
    pub fn eval_all(&mut self, points: &[Vec<f64>]) -> Result<(), Stop> {
        for p in points {
            self.eval(p)?;
        }
        Ok(())
    }

    /// Evaluated points sorted by score, ties by evaluation order.
    pub fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.history.len()).collect();
        idx.sort_by(|&a, &b| cmp_score(self.history[a].score, self.history[b].score));
        idx
    }
}

/// How the initial sampling phase in front of a minimizer picks its points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialSampling {
    /// Independent uniform points.
    Uniform,
    /// Box corners in lexicographic order, then Halton points. Uses no randomness.
    CornersThenHalton,
}

/// A minimizer run on an [`Evaluator`] whose history already holds the seed points.
pub trait Minimizer: Send + Sync {
    fn name(&self) -> &str;

    fn initial_sampling(&self) -> InitialSampling {
        InitialSampling::Uniform
    }

    /// Runs until the evaluator stops the run and returns why.
    fn minimize(&self, ev: &mut Evaluator, rng: &mut Rng) -> Stop;
}

/// Evaluates a fixed candidate list, for exhaustive search over quantized inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    pub points: Vec<Vec<f64>>,
}

impl Minimizer for Enumeration {
    fn name(&self) -> &str {
        "exhaustive"
    }

    fn minimize(&self, ev: &mut Evaluator, _rng: &mut Rng) -> Stop {
        match ev.eval_all(&self.points) {
            Ok(()) => Stop::Exhausted,
            Err(s) => s,
        }
    }
}

/// Best seed to start from: the lowest-scoring evaluated point, or the box center after
/// evaluating it when nothing was evaluated yet.
pub(crate) fn start_point(ev: &mut Evaluator) -> Result<(Vec<f64>, f64), Stop> {
    if let Some(b) = ev.best() {
        return Ok((b.point.clone(), b.score));
    }
    let c = ev.space().center();
    let s = ev.eval(&c)?;
    Ok((c, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space1() -> SearchSpace {
        SearchSpace::new(vec![Bounds::new(0.0, 10.0).unwrap()]).unwrap()
    }

    #[test]
    fn budget_and_clamping() {
        let mut ev = Evaluator::new(space1(), Budget { max_evals: 2, stall: None }, |x| Ok(x[0]));
        assert_eq!(ev.eval(&[20.0]), Ok(10.0));
        assert_eq!(ev.eval(&[-3.0]), Ok(0.0));
        assert_eq!(ev.eval(&[5.0]), Err(Stop::Budget));
        assert_eq!(ev.history()[0].point, vec![10.0]);
        assert_eq!(ev.best_index(), Some(1));
    }

    #[test]
    fn stall_counts_from_best() {
        let scores = [5.0, 4.0, 4.0, 4.0, 3.0];
        let mut i = 0;
        let mut ev = Evaluator::new(space1(), Budget { max_evals: 10, stall: Some(3) }, |_| {
            i += 1;
            Ok(scores[i - 1])
        });
        assert!(ev.eval(&[0.0]).is_ok());
        assert!(ev.eval(&[0.0]).is_ok());
        assert!(ev.eval(&[0.0]).is_ok());
        assert_eq!(ev.eval(&[0.0]), Err(Stop::Stalled));
        assert_eq!(ev.evals(), 4);
    }

    #[test]
    fn strictly_decreasing_never_stalls() {
        let mut i = 0.0;
        let mut ev = Evaluator::new(space1(), Budget { max_evals: 20, stall: Some(2) }, |_| {
            i += 1.0;
            Ok(100.0 - i)
        });
        for _ in 0..20 {
            assert!(ev.eval(&[1.0]).is_ok());
        }
        assert_eq!(ev.eval(&[1.0]), Err(Stop::Budget));
    }

    #[test]
    fn negative_score_is_success() {
        let mut ev = Evaluator::new(space1(), Budget { max_evals: 5, stall: None }, |x| Ok(x[0] - 1.0));
        assert_eq!(ev.eval(&[0.0]), Err(Stop::Success));
        assert_eq!(ev.eval(&[5.0]), Err(Stop::Success));
        assert_eq!(ev.evals(), 1);
    }

    #[test]
    fn infinities_are_ordered() {
        let mut vals = vec![f64::INFINITY, 1.0, f64::NEG_INFINITY, f64::NAN, 0.0];
        vals.sort_by(|a, b| cmp_score(*a, *b));
        assert_eq!(vals[0], f64::NEG_INFINITY);
        assert_eq!(vals[3], f64::INFINITY);
        assert!(vals[4].is_nan());
        let mut ev = Evaluator::new(space1(), Budget { max_evals: 5, stall: None }, |x| {
            Ok(if x[0] > 5.0 { f64::INFINITY } else { 1.0 })
        });
        ev.eval(&[1.0]).unwrap();
        ev.eval(&[9.0]).unwrap();
        assert_eq!(ev.best_index(), Some(0));
    }

    #[test]
    fn objective_errors_stop_the_run() {
        let mut ev = Evaluator::new(space1(), Budget { max_evals: 5, stall: None }, |_| Err("boom".to_string()));
        assert_eq!(ev.eval(&[1.0]), Err(Stop::Error("boom".into())));
        assert_eq!(ev.evals(), 0);
    }
}
