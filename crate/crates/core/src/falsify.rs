//! One falsification trial: initial sampling followed by optimization of a score over
//! piecewise-constant inputs.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Continuation, ModelError, SystemModel};
use crate::optim::{
    corner_prefix, halton, uniform_samples, Budget, Evaluation, Evaluator, InitialSampling, Minimizer, OptimError,
    Rng, SearchSpace, Stop,
};
use crate::signal::{grid_index, Bounds, PiecewiseConstant, Signal, SignalError};
use crate::stl::{derivative, robustness, Formula, StlError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FalsifyError {
    #[error("horizon {horizon} is not split into {segments} segments on the grid of step {dt}")]
    Grid { horizon: f64, segments: usize, dt: f64 },
    #[error("invalid stop policy: {0}")]
    Policy(String),
    #[error("invalid staging configuration: {0}")]
    Staging(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stl(#[from] StlError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Optim(#[from] OptimError),
}

/// Something that turns input signals into output signals: a model or a continuation of one.
pub trait Simulator {
    fn input_bounds(&self) -> Vec<Bounds>;
    fn simulate(&self, u: &Signal) -> Result<Signal, ModelError>;
}

impl<M: SystemModel + ?Sized> Simulator for M {
    fn input_bounds(&self) -> Vec<Bounds> {
        SystemModel::input_bounds(self)
    }

    fn simulate(&self, u: &Signal) -> Result<Signal, ModelError> {
        SystemModel::simulate(self, u)
    }
}

impl Simulator for Continuation<'_> {
    fn input_bounds(&self) -> Vec<Bounds> {
        self.model().input_bounds()
    }

    fn simulate(&self, u: &Signal) -> Result<Signal, ModelError> {
        Continuation::simulate(self, u)
    }
}

/// Maps an output signal to a score; negative means falsified.
pub trait ScoreFunction: Send + Sync {
    fn score(&self, v: &Signal) -> Result<f64, FalsifyError>;
}

/// Robustness of the output against a formula.
#[derive(Debug, Clone, PartialEq)]
pub struct FormulaScore {
    pub formula: Formula,
}

impl FormulaScore {
    pub fn new(formula: Formula) -> Self {
        Self { formula }
    }
}

impl ScoreFunction for FormulaScore {
    fn score(&self, v: &Signal) -> Result<f64, FalsifyError> {
        Ok(robustness(v, &self.formula)?)
    }
}

/// How an output shorter than the full horizon is completed before it is scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// Score the partial trace as it is.
    None,
    /// Hold the last output sample up to the horizon.
    #[default]
    HoldLast,
}

/// Robustness of `prefix · v'`, evaluated by concatenating and rescanning the prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticDerivativeScore {
    prefix: Option<Signal>,
    formula: Formula,
    pad_to: Option<f64>,
}

impl SemanticDerivativeScore {
    /// `horizon` is the full horizon the padded trace is extended to.
    pub fn new(prefix: Option<Signal>, formula: Formula, padding: Padding, horizon: f64) -> Self {
        let pad_to = (padding == Padding::HoldLast).then_some(horizon);
        Self { prefix, formula, pad_to }
    }
}

impl ScoreFunction for SemanticDerivativeScore {
    fn score(&self, v: &Signal) -> Result<f64, FalsifyError> {
        let w = match &self.prefix {
            Some(p) => p.concatenate(v)?,
            None => v.clone(),
        };
        let w = match self.pad_to {
            Some(h) => w.hold_to(h),
            None => w,
        };
        Ok(robustness(&w, &self.formula)?)
    }
}

/// Robustness of `v'` against the derivative of the formula by the prefix, computed once.
///
/// Agrees with [`SemanticDerivativeScore`] when `v'` starts with the prefix's last sample, which
/// is the case for continuation outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntacticDerivativeScore {
    derivative: Formula,
    pad_to: Option<f64>,
}

impl SyntacticDerivativeScore {
    pub fn new(prefix: Option<&Signal>, formula: &Formula, padding: Padding, horizon: f64) -> Result<Self, FalsifyError> {
        if !formula.is_flat() {
            return Err(StlError::NotFlat.into());
        }
        let (derivative, elapsed) = match prefix {
            Some(p) => (derivative(p, formula)?, p.horizon()),
            None => (formula.clone(), 0.0),
        };
        let pad_to = (padding == Padding::HoldLast).then_some(horizon - elapsed);
        Ok(Self { derivative, pad_to })
    }

    pub fn derivative(&self) -> &Formula {
        &self.derivative
    }
}

impl ScoreFunction for SyntacticDerivativeScore {
    fn score(&self, v: &Signal) -> Result<f64, FalsifyError> {
        let w = match self.pad_to {
            Some(h) => v.hold_to(h),
            None => v.clone(),
        };
        Ok(robustness(&w, &self.derivative)?)
    }
}

/// When the two sampling phases of a trial end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopPolicy {
    /// Initial samples.
    pub n_init: usize,
    /// Optimizer samples after the initial ones.
    pub n_opt: usize,
    /// During optimization, stop once this many samples passed since the best one
    /// (`evaluations − index of best ≥ stall`). `None` runs the whole budget.
    #[serde(default)]
    pub stall: Option<usize>,
}

impl StopPolicy {
    pub fn fixed(n_init: usize, n_opt: usize) -> Self {
        Self { n_init, n_opt, stall: None }
    }

    pub fn adaptive(n_init: usize, n_opt: usize, stall: usize) -> Self {
        Self { n_init, n_opt, stall: Some(stall) }
    }

    pub fn budget(&self) -> usize {
        self.n_init + self.n_opt
    }

    pub fn validate(&self) -> Result<(), FalsifyError> {
        if self.budget() == 0 {
            return Err(FalsifyError::Policy("the sampling budget is zero".into()));
        }
        if self.stall == Some(0) {
            return Err(FalsifyError::Policy("stall threshold must be positive".into()));
        }
        Ok(())
    }
}

/// Horizon, grid and input parametrization of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSetup {
    pub horizon: f64,
    pub dt: f64,
    pub control_points: usize,
    pub stop: StopPolicy,
}

impl TrialSetup {
    pub fn validate(&self) -> Result<(), FalsifyError> {
        self.stop.validate()?;
        let bad = FalsifyError::Grid { horizon: self.horizon, segments: self.control_points, dt: self.dt };
        if !(self.dt > 0.0) || self.control_points == 0 {
            return Err(bad);
        }
        match grid_index(self.horizon, self.dt) {
            Some(steps) if steps > 0 && steps % self.control_points == 0 => Ok(()),
            _ => Err(bad),
        }
    }
}

/// Result of one falsification trial. Candidates are in evaluation order, initial samples first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub optimizer: String,
    pub horizon: f64,
    pub dt: f64,
    pub bounds: Vec<Bounds>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<Evaluation>,
    pub best_index: Option<usize>,
    pub best_point: Option<Vec<f64>>,
    #[serde(with = "crate::ext_real")]
    pub best_score: f64,
    pub success: bool,
    pub evals_used: usize,
    /// Number of initial samples that were box corners.
    pub corner_samples: usize,
    pub stop: Stop,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl TrialRecord {
    /// The input signal of a point in this trial's search space.
    pub fn realize(&self, point: &[f64]) -> Result<Signal, SignalError> {
        PiecewiseConstant::from_flat(point, &self.bounds, self.horizon).realize(self.dt)
    }

    pub fn best_input(&self) -> Option<Signal> {
        self.best_point.as_ref().map(|p| self.realize(p).expect("recorded points realize"))
    }

    /// Copy without the candidate list, for compact output.
    pub fn without_candidates(&self) -> Self {
        Self { candidates: Vec::new(), ..self.clone() }
    }
}

fn initial_points(space: &SearchSpace, n: usize, sampling: InitialSampling, rng: &mut Rng) -> (Vec<Vec<f64>>, usize) {
    match sampling {
        InitialSampling::Uniform => (uniform_samples(space, n, rng), 0),
        InitialSampling::CornersThenHalton => {
            let mut pts = corner_prefix(space, n);
            let corners = pts.len();
            pts.extend(halton(space, 1, n - corners));
            (pts, corners)
        }
    }
}

/// Runs one trial: `stop.n_init` initial samples, then the optimizer seeded with them, until a
/// negative score is found or the stop policy fires. Returns the argmin over all candidates.
pub fn falsify<S: Simulator + ?Sized>(
    sim: &S,
    score: &dyn ScoreFunction,
    setup: &TrialSetup,
    optimizer: &dyn Minimizer,
    seed: u64,
) -> Result<TrialRecord, FalsifyError> {
    setup.validate()?;
    let started = Instant::now();
    let bounds = sim.input_bounds();
    let space = SearchSpace::repeated(&bounds, setup.control_points)?;
    let mut rng = Rng::seed_from_u64(seed);
    let mut failure: Option<FalsifyError> = None;

    let (history, stop, corners) = {
        let objective = |x: &[f64]| -> Result<f64, String> {
            let run = || -> Result<f64, FalsifyError> {
                let u = PiecewiseConstant::from_flat(x, &bounds, setup.horizon).realize(setup.dt)?;
                let y = sim.simulate(&u)?;
                score.score(&y)
            };
            run().map_err(|e| {
                let msg = e.to_string();
                failure.get_or_insert(e);
                msg
            })
        };
        let budget = Budget { max_evals: setup.stop.budget(), stall: setup.stop.stall };
        let mut ev = Evaluator::new(space.clone(), budget, objective);
        let (points, corners) = initial_points(&space, setup.stop.n_init, optimizer.initial_sampling(), &mut rng);
        ev.set_stall_enabled(false);
        let stop = match ev.eval_all(&points) {
            Err(s) => s,
            Ok(()) => {
                ev.set_stall_enabled(true);
                optimizer.minimize(&mut ev, &mut rng)
            }
        };
        (ev.into_history(), stop, corners)
    };
    if let Some(e) = failure {
        return Err(e);
    }

    let best_index = (0..history.len()).min_by(|&a, &b| crate::optim::cmp_score(history[a].score, history[b].score));
    let best_score = best_index.map_or(f64::INFINITY, |i| history[i].score);
    Ok(TrialRecord {
        seed,
        optimizer: optimizer.name().to_string(),
        horizon: setup.horizon,
        dt: setup.dt,
        bounds,
        best_point: best_index.map(|i| history[i].point.clone()),
        best_index,
        best_score,
        success: best_score < 0.0,
        evals_used: history.len(),
        corner_samples: corners.min(history.len()),
        candidates: history,
        stop,
        wall_time: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtin;
    use crate::optim::{Annealing, CmaEs, NelderMead};
    use crate::stl::Affine;
    use std::collections::BTreeMap;

    struct ConstScore(f64);

    impl ScoreFunction for ConstScore {
        fn score(&self, _: &Signal) -> Result<f64, FalsifyError> {
            Ok(self.0)
        }
    }

    fn setup(n_init: usize, n_opt: usize) -> TrialSetup {
        TrialSetup { horizon: 30.0, dt: 0.05, control_points: 5, stop: StopPolicy::fixed(n_init, n_opt) }
    }

    fn ceiling(c: f64) -> Formula {
        // G (v < c)
        Formula::always(Interval::new(0.0, 30.0).unwrap(), Formula::atom(Affine::constant(c).sub(&Affine::var(0))))
    }

    use crate::stl::Interval;

    #[test]
    fn powertrain_ceiling_is_falsified_by_gnm() {
        let m = builtin("powertrain", &BTreeMap::new()).unwrap();
        let score = FormulaScore::new(ceiling(120.0));
        let r = falsify(m.as_ref(), &score, &setup(20, 130), &NelderMead::default(), 0).unwrap();
        assert!(r.success, "{}", r.best_score);
        let again = falsify(m.as_ref(), &score, &setup(20, 130), &NelderMead::default(), 99).unwrap();
        assert_eq!(r.candidates, again.candidates);
    }

    #[test]
    fn unfalsifiable_uses_the_whole_budget() {
        let m = builtin("powertrain", &BTreeMap::new()).unwrap();
        for opt in [&NelderMead::default() as &dyn Minimizer, &Annealing::default(), &CmaEs::default()] {
            let r = falsify(m.as_ref(), &ConstScore(1.0), &setup(5, 20), opt, 3).unwrap();
            assert!(!r.success);
            assert_eq!(r.evals_used, 25, "{}", opt.name());
            assert_eq!(r.stop, Stop::Budget);
            assert_eq!(r.best_index, Some(0));
        }
    }

    #[test]
    fn negative_first_sample_stops_at_once() {
        let m = builtin("powertrain", &BTreeMap::new()).unwrap();
        let r = falsify(m.as_ref(), &ConstScore(-1.0), &setup(1, 0), &Annealing::default(), 0).unwrap();
        assert!(r.success);
        assert_eq!(r.evals_used, 1);
        assert_eq!(r.stop, Stop::Success);
    }

    #[test]
    fn formula_score_values() {
        let v = Signal::constant(&[125.0], 0.5, 3.0).unwrap();
        assert_eq!(FormulaScore::new(ceiling(120.0)).score(&v).unwrap(), -5.0);
        assert_eq!(FormulaScore::new(Formula::Bottom).score(&v).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn gnm_starts_with_corners() {
        let m = builtin("auto_transmission", &BTreeMap::new()).unwrap();
        let s = TrialSetup { horizon: 30.0, dt: 0.05, control_points: 1, stop: StopPolicy::fixed(6, 0) };
        let r = falsify(m.as_ref(), &ConstScore(1.0), &s, &NelderMead::default(), 0).unwrap();
        assert_eq!(r.corner_samples, 4);
        let pts: Vec<_> = r.candidates.iter().map(|c| c.point.clone()).collect();
        assert_eq!(&pts[..4], &[vec![0.0, 0.0], vec![0.0, 325.0], vec![100.0, 0.0], vec![100.0, 325.0]]);
        let s = TrialSetup { stop: StopPolicy::fixed(3, 0), ..s };
        let r = falsify(m.as_ref(), &ConstScore(1.0), &s, &NelderMead::default(), 0).unwrap();
        assert_eq!(r.corner_samples, 3);
    }

    #[test]
    fn adaptive_stop_fires_after_stall() {
        let m = builtin("powertrain", &BTreeMap::new()).unwrap();
        let s = TrialSetup { stop: StopPolicy::adaptive(5, 500, 15), ..setup(0, 0) };
        let r = falsify(m.as_ref(), &ConstScore(2.0), &s, &Annealing::default(), 1).unwrap();
        assert_eq!(r.stop, Stop::Stalled);
        assert_eq!(r.evals_used, 15);
    }

    #[test]
    fn bad_setups() {
        let m = builtin("powertrain", &BTreeMap::new()).unwrap();
        let sc = ConstScore(1.0);
        let bad = TrialSetup { control_points: 7, ..setup(1, 1) };
        assert!(matches!(falsify(m.as_ref(), &sc, &bad, &Annealing::default(), 0), Err(FalsifyError::Grid { .. })));
        assert!(matches!(
            falsify(m.as_ref(), &sc, &setup(0, 0), &Annealing::default(), 0),
            Err(FalsifyError::Policy(_))
        ));
    }

    #[test]
    fn record_round_trips_through_json() {
        let m = builtin("powertrain", &BTreeMap::new()).unwrap();
        let r = falsify(m.as_ref(), &FormulaScore::new(ceiling(120.0)), &setup(4, 6), &CmaEs::default(), 5).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: TrialRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.candidates, r.candidates);
        assert_eq!(back.best_input(), r.best_input());
        assert!(!serde_json::to_string(&r.without_candidates()).unwrap().contains("candidates"));
    }
}
