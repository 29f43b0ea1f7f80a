//! Running the trials of an experiment and aggregating them.

use std::time::{Duration, Instant};

use falsify_core::falsify::{falsify, FalsifyError, FormulaScore, TrialRecord};
use falsify_core::staging::{staged_falsify, StagedTrialRecord};
use falsify_core::Signal;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Experiment;

/// Trial seeds, drawn in order from a generator seeded with the master seed.
pub fn trial_seeds(master: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..n).map(|_| rng.random()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrialDetail {
    Plain(TrialRecord),
    Staged(StagedTrialRecord),
}

/// One trial, reduced to what the summary needs plus the full record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub index: usize,
    pub seed: u64,
    pub success: bool,
    /// Robustness of the full simulation of the returned input.
    #[serde(with = "falsify_core::ext_real")]
    pub robustness: f64,
    pub simulations: usize,
    pub detail: TrialDetail,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl TrialOutcome {
    /// The returned input over the full horizon; `None` when a plain trial evaluated nothing.
    pub fn input(&self) -> Option<Signal> {
        match &self.detail {
            TrialDetail::Plain(r) => r.best_input(),
            TrialDetail::Staged(r) => Some(r.input.clone()),
        }
    }

    /// Drops the candidate lists from the embedded records.
    pub fn compact(&self) -> Self {
        let detail = match &self.detail {
            TrialDetail::Plain(r) => TrialDetail::Plain(r.without_candidates()),
            TrialDetail::Staged(r) => {
                let stages = r.stages.iter().map(TrialRecord::without_candidates).collect();
                TrialDetail::Staged(StagedTrialRecord { stages, ..r.clone() })
            }
        };
        Self { detail, ..self.clone() }
    }
}

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub config: String,
    pub model: String,
    pub spec: String,
    pub algorithm: String,
    pub optimizer: String,
    /// `successes/trials`, e.g. `14/20`.
    pub successes: String,
    pub n_success: usize,
    pub n_trials: usize,
    /// Mean simulations per trial; failed trials count what they used.
    pub mean_simulations: f64,
    /// Mean simulations over the successful trials; `None` without successes.
    pub mean_simulations_success: Option<f64>,
    #[serde(with = "falsify_core::ext_real")]
    pub mean_robustness: f64,
    #[serde(skip)]
    pub mean_wall_time: Duration,
}

impl SummaryRow {
    pub fn from_trials(exp: &Experiment, trials: &[TrialOutcome]) -> Self {
        let n = trials.len();
        let n_success = trials.iter().filter(|t| t.success).count();
        let mean = |xs: Vec<f64>| if xs.is_empty() { None } else { Some(xs.iter().sum::<f64>() / xs.len() as f64) };
        let sims = |ok_only: bool| {
            trials.iter().filter(|t| t.success || !ok_only).map(|t| t.simulations as f64).collect::<Vec<_>>()
        };
        let wall: Duration = trials.iter().map(|t| t.wall_time).sum();
        Self {
            config: exp.name.clone(),
            model: exp.model_name.clone(),
            spec: exp.spec_name.clone(),
            algorithm: exp.algorithm.as_str().to_string(),
            optimizer: exp.optimizer.as_str().to_string(),
            successes: format!("{n_success}/{n}"),
            n_success,
            n_trials: n,
            mean_simulations: mean(sims(false)).unwrap_or(0.0),
            mean_simulations_success: mean(sims(true)),
            mean_robustness: mean(trials.iter().map(|t| t.robustness).collect()).unwrap_or(f64::NAN),
            mean_wall_time: if n == 0 { Duration::ZERO } else { wall / n as u32 },
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub summary: SummaryRow,
    pub trials: Vec<TrialOutcome>,
    pub wall_time: Duration,
}

impl ExperimentResult {
    /// The trial with the lowest robustness, first on ties.
    pub fn best_trial(&self) -> Option<&TrialOutcome> {
        self.trials.iter().min_by(|a, b| falsify_core::optim::cmp_score(a.robustness, b.robustness))
    }
}

pub fn run_trial(exp: &Experiment, index: usize, seed: u64) -> Result<TrialOutcome, FalsifyError> {
    let started = Instant::now();
    let optimizer = exp.optimizer.build();
    let model = exp.model.as_ref();
    let (success, robustness, simulations, detail) = if exp.algorithm.is_staged() {
        let r = staged_falsify(model, &exp.formula, exp.setup.horizon, exp.setup.dt, &exp.staging, optimizer.as_ref(), seed)?;
        (r.success, r.final_score, r.simulations, TrialDetail::Staged(r))
    } else {
        let score = FormulaScore::new(exp.formula.clone());
        let r = falsify(model, &score, &exp.setup, optimizer.as_ref(), seed)?;
        (r.success, r.best_score, r.evals_used, TrialDetail::Plain(r))
    };
    Ok(TrialOutcome { index, seed, success, robustness, simulations, detail, wall_time: started.elapsed() })
}

/// Runs all trials of an experiment in parallel; results come back in trial order.
pub fn run_experiment(exp: &Experiment) -> Result<ExperimentResult, FalsifyError> {
    let started = Instant::now();
    let seeds = trial_seeds(exp.seed, exp.n_trials);
    let trials = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| run_trial(exp, i, s))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = SummaryRow::from_trials(exp, &trials);
    Ok(ExperimentResult { summary, trials, wall_time: started.elapsed() })
}

/// Runs the experiments in order.
pub fn run_matrix(exps: &[Experiment]) -> Result<Vec<ExperimentResult>, FalsifyError> {
    exps.iter().map(run_experiment).collect()
}
