//! Time-staged falsification: the horizon is split into stages, each stage searches only its own
//! input segment after the best prefix found so far, scored by the robustness of the whole
//! prefix-plus-candidate output.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::falsify::{
    falsify, FalsifyError, Padding, ScoreFunction, SemanticDerivativeScore, StopPolicy, SyntacticDerivativeScore,
    TrialRecord, TrialSetup,
};
use crate::model::{Continuation, ContinuationPath, SystemModel};
use crate::optim::Minimizer;
use crate::signal::{grid_index, Signal};
use crate::stl::{robustness, Formula};

/// How a stage scores candidate continuations of the prefix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativePath {
    /// Concatenate the prefix output and evaluate the formula.
    #[default]
    Semantic,
    /// Evaluate the derivative of the formula by the prefix output. Needs a flat formula.
    Syntactic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StagingConfig {
    pub stages: usize,
    #[serde(default = "one")]
    pub control_points_per_stage: usize,
    /// Stop policy of every stage.
    pub stop: StopPolicy,
    #[serde(default)]
    pub derivative_path: DerivativePath,
    #[serde(default)]
    pub continuation_path: ContinuationPath,
    #[serde(default)]
    pub padding: Padding,
    /// Skip the remaining stages once an always-formula is already violated by the prefix.
    #[serde(default = "yes")]
    pub early_exit: bool,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl StagingConfig {
    pub fn new(stages: usize, stop: StopPolicy) -> Self {
        Self {
            stages,
            control_points_per_stage: 1,
            stop,
            derivative_path: DerivativePath::default(),
            continuation_path: ContinuationPath::default(),
            padding: Padding::default(),
            early_exit: true,
        }
    }

    fn stage_setup(&self, horizon: f64, dt: f64) -> Result<TrialSetup, FalsifyError> {
        if self.stages == 0 || self.control_points_per_stage == 0 {
            return Err(FalsifyError::Staging("stages and control points per stage must be positive".into()));
        }
        let segments = self.stages * self.control_points_per_stage;
        let steps = grid_index(horizon, dt).filter(|&s| s > 0 && s % segments == 0);
        let Some(steps) = steps else {
            return Err(FalsifyError::Grid { horizon, segments, dt });
        };
        let setup = TrialSetup {
            horizon: (steps / self.stages) as f64 * dt,
            dt,
            control_points: self.control_points_per_stage,
            stop: self.stop,
        };
        setup.validate()?;
        Ok(setup)
    }
}

/// Result of a staged trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagedTrialRecord {
    pub seed: u64,
    pub stages: Vec<TrialRecord>,
    /// Best point of each stage that ran.
    pub stage_points: Vec<Vec<f64>>,
    /// The assembled input over the full horizon.
    pub input: Signal,
    #[serde(with = "crate::ext_real")]
    pub final_score: f64,
    pub success: bool,
    /// Candidate evaluations over all stages.
    pub simulations: usize,
    /// Stage (1-based) after which the remaining stages were skipped.
    pub early_exit_after: Option<usize>,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Per-stage seed; stage 0 uses the trial seed itself so a single stage replays a plain trial.
pub fn stage_seed(seed: u64, stage: usize) -> u64 {
    seed ^ (stage as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// True when prefix robustness can only decrease under extension: `□_I ψ` with modality-free `ψ`.
fn violation_is_final(phi: &Formula) -> bool {
    matches!(phi.as_always(), Some((_, body)) if !body.has_modality())
}

/// Runs the stages in order and returns the assembled input with its robustness.
pub fn staged_falsify(
    model: &dyn SystemModel,
    phi: &Formula,
    horizon: f64,
    dt: f64,
    cfg: &StagingConfig,
    optimizer: &dyn Minimizer,
    seed: u64,
) -> Result<StagedTrialRecord, FalsifyError> {
    let setup = cfg.stage_setup(horizon, dt)?;
    if cfg.derivative_path == DerivativePath::Syntactic && !phi.is_flat() {
        return Err(crate::stl::StlError::NotFlat.into());
    }
    let started = Instant::now();
    let mut prefix: Option<Signal> = None;
    let mut stages = Vec::with_capacity(cfg.stages);
    let mut stage_points = Vec::with_capacity(cfg.stages);
    let mut early_exit_after = None;

    for j in 0..cfg.stages {
        let cont = Continuation::new(model, prefix.as_ref(), cfg.continuation_path)?;
        let prefix_output = cont.prefix_output().cloned();
        let score: Box<dyn ScoreFunction> = match cfg.derivative_path {
            DerivativePath::Semantic => {
                Box::new(SemanticDerivativeScore::new(prefix_output, phi.clone(), cfg.padding, horizon))
            }
            DerivativePath::Syntactic => {
                Box::new(SyntacticDerivativeScore::new(prefix_output.as_ref(), phi, cfg.padding, horizon)?)
            }
        };
        let record = falsify(&cont, score.as_ref(), &setup, optimizer, stage_seed(seed, j))?;
        let segment = record.best_input().expect("a stage evaluates at least one candidate");
        stage_points.push(record.best_point.clone().unwrap_or_default());
        stages.push(record);
        let extended = match &prefix {
            Some(p) => p.concatenate(&segment)?,
            None => segment,
        };
        prefix = Some(extended);

        if cfg.early_exit && j + 1 < cfg.stages && violation_is_final(phi) {
            let y = model.simulate(prefix.as_ref().unwrap())?;
            if robustness(&y, phi)? < 0.0 {
                early_exit_after = Some(j + 1);
                break;
            }
        }
    }

    // After an early exit the input is completed by holding the last segment value.
    let input = prefix.expect("at least one stage").hold_to(horizon);
    let output = model.simulate(&input)?;
    let final_score = robustness(&output, phi)?;
    Ok(StagedTrialRecord {
        seed,
        simulations: stages.iter().map(|s| s.evals_used).sum(),
        stages,
        stage_points,
        input,
        final_score,
        success: final_score < 0.0,
        early_exit_after,
        wall_time: started.elapsed(),
    })
}

/// Number of evaluations after which the adaptive rule stops a score stream: the first `n` with
/// `n − (index of the first minimum among the first n) ≥ n_stuck`, or `None` if it never fires.
pub fn adaptive_stop_index(scores: &[f64], n_stuck: usize) -> Option<usize> {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if crate::optim::cmp_score(s, scores[best]) == std::cmp::Ordering::Less {
            best = i;
        }
        if i + 1 - best >= n_stuck {
            return Some(i + 1);
        }
    }
    None
}
