//! TOML experiment configuration and its validation into a runnable [`Experiment`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use falsify_core::falsify::{Padding, StopPolicy, TrialSetup};
use falsify_core::model::{builtin, fixtures, ContinuationPath, SystemModel};
use falsify_core::optim::{Annealing, CmaEs, Minimizer, NelderMead};
use falsify_core::staging::{DerivativePath, StagingConfig};
use falsify_core::stl::parse;
use falsify_core::Formula;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specs::{builtin_spec, BUILTIN_SPECS};

/// Environment variable overriding the master seed of every experiment.
pub const SEED_ENV: &str = "FALSIFY_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    fn invalid(key: impl Into<String>, message: impl ToString) -> Self {
        Self::Invalid { key: key.into(), message: message.to_string() }
    }

    /// Dotted key the error refers to, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            Self::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }
}

/// Deserializes TOML text, reporting the dotted path of the offending key.
pub fn from_toml<T: DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    let de = toml::Deserializer::new(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        if key == "." {
            ConfigError::Syntax(e.into_inner().to_string())
        } else {
            ConfigError::invalid(key, e.into_inner().message())
        }
    })
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    from_toml(&text)
}

/// Parses a seed override such as the value of [`SEED_ENV`].
pub fn parse_seed(text: &str) -> Result<u64, ConfigError> {
    text.trim().parse().map_err(|e| ConfigError::invalid(SEED_ENV, format!("'{text}' is not a seed: {e}")))
}

/// Reads [`SEED_ENV`] if it is set.
pub fn seed_override() -> Result<Option<u64>, ConfigError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => parse_seed(&v).map(Some),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(ConfigError::invalid(SEED_ENV, e)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// One search over all control points.
    #[default]
    Plain,
    /// Time staging with a fixed per-stage budget.
    Ts,
    /// Time staging with per-stage stall detection.
    Ats,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Plain => "plain",
            Self::Ts => "ts",
            Self::Ats => "ats",
        }
    }

    pub fn is_staged(self) -> bool {
        self != Self::Plain
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    CmaEs,
    Sa,
    Gnm,
}

impl OptimizerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CmaEs => "cma_es",
            Self::Sa => "sa",
            Self::Gnm => "gnm",
        }
    }

    pub fn build(self) -> Box<dyn Minimizer> {
        match self {
            Self::CmaEs => Box::new(CmaEs::default()),
            Self::Sa => Box::new(Annealing::default()),
            Self::Gnm => Box::new(NelderMead::default()),
        }
    }
}

/// A model given by name, or by name with parameter overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Name(String),
    Table(ModelTable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelTable {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl ModelRef {
    pub fn name(&self) -> &str {
        match self {
            Self::Name(n) => n,
            Self::Table(t) => &t.name,
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        match self {
            Self::Name(_) => BTreeMap::new(),
            Self::Table(t) => t.params.clone(),
        }
    }

    /// Instantiates a built-in model; `oscillator` names the non-monotone test fixture.
    pub fn build(&self, key: &str) -> Result<Arc<dyn SystemModel>, ConfigError> {
        let params = self.params();
        if self.name() == "oscillator" {
            if let Some(p) = params.keys().next() {
                return Err(ConfigError::invalid(format!("{key}.params.{p}"), "the oscillator takes no parameters"));
            }
            return Ok(Arc::new(fixtures::oscillator()));
        }
        builtin(self.name(), &params).map_err(|e| ConfigError::invalid(key, e))
    }
}

/// Resolves a spec given as a built-in name or as formula text.
pub fn resolve_spec(text: &str, vars: &[String], key: &str) -> Result<(String, Formula), ConfigError> {
    let text = match builtin_spec(text) {
        Ok(s) => s.text,
        Err(_) => text,
    };
    let formula = parse(text, vars).map_err(|e| ConfigError::invalid(key, e))?;
    Ok((text.to_string(), formula))
}

fn default_trials() -> usize {
    20
}

fn default_dt() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub n_init: usize,
    pub n_opt: usize,
    #[serde(default)]
    pub stall: Option<usize>,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self { n_init: 20, n_opt: 130, stall: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StagingSection {
    pub n_init: usize,
    /// Per-stage optimizer samples; 20 for `ts` and 140 for `ats` when unset.
    pub n_opt: Option<usize>,
    /// Stall threshold of `ats`.
    pub n_stuck: usize,
    pub control_points_per_stage: usize,
    pub derivative_path: DerivativePath,
    pub continuation_path: ContinuationPath,
    pub padding: Padding,
    pub early_exit: bool,
}

impl Default for StagingSection {
    fn default() -> Self {
        Self {
            n_init: 10,
            n_opt: None,
            n_stuck: 15,
            control_points_per_stage: 1,
            derivative_path: DerivativePath::default(),
            continuation_path: ContinuationPath::default(),
            padding: Padding::default(),
            early_exit: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Keep every evaluated candidate in the JSON records.
    pub candidates: bool,
    pub svg: bool,
    /// Write the best input and output as CSV.
    pub signals: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, candidates: false, svg: true, signals: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    /// Defaults to the model of a built-in spec.
    #[serde(default)]
    pub model: Option<ModelRef>,
    /// Built-in spec name or formula text.
    pub spec: String,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Control points of the whole input; the number of stages for staged algorithms.
    #[serde(default)]
    pub control_points: Option<usize>,
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(default)]
    pub optimizer: OptimizerKind,
    #[serde(default)]
    pub budget: BudgetConfig,
    #[serde(default)]
    pub staging: StagingSection,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn new(spec: impl Into<String>, algorithm: Algorithm, optimizer: OptimizerKind) -> Self {
        Self {
            name: None,
            seed: 0,
            n_trials: default_trials(),
            model: None,
            spec: spec.into(),
            horizon: None,
            dt: default_dt(),
            control_points: None,
            algorithm,
            optimizer,
            budget: BudgetConfig::default(),
            staging: StagingSection::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Self = read_toml(path)?;
        if cfg.name.is_none() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    /// Name for output files: the configured one or one derived from spec and algorithm.
    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            let spec = if builtin_spec(&self.spec).is_ok() { self.spec.as_str() } else { "custom" };
            format!("{spec}_{}_{}", self.algorithm.as_str(), self.optimizer.as_str())
        })
    }

    pub fn resolve(&self) -> Result<Experiment, ConfigError> {
        let preset = builtin_spec(&self.spec).ok();
        let model_ref = match (&self.model, preset) {
            (Some(m), _) => m.clone(),
            (None, Some(p)) => ModelRef::Name(p.model.to_string()),
            (None, None) => return Err(ConfigError::invalid("model", "required unless the spec is a built-in name")),
        };
        let model = model_ref.build("model")?;
        let (spec_text, formula) = resolve_spec(&self.spec, &model.output_names(), "spec")?;

        let horizon = match (self.horizon, preset) {
            (Some(h), _) => h,
            (None, Some(p)) => p.horizon,
            (None, None) => return Err(ConfigError::invalid("horizon", "required unless the spec is a built-in name")),
        };
        let control_points = self.control_points.or(preset.map(|p| p.control_points)).unwrap_or(5);
        if self.n_trials == 0 {
            return Err(ConfigError::invalid("n_trials", "must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ConfigError::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(ConfigError::invalid("horizon", format!("must be positive, got {horizon}")));
        }
        if control_points == 0 {
            return Err(ConfigError::invalid("control_points", "must be at least 1"));
        }

        let plain = StopPolicy { n_init: self.budget.n_init, n_opt: self.budget.n_opt, stall: self.budget.stall };
        let setup = TrialSetup { horizon, dt: self.dt, control_points, stop: plain };
        if !self.algorithm.is_staged() {
            setup.stop.validate().map_err(|e| ConfigError::invalid("budget", e))?;
        }
        setup.validate().map_err(|e| match e {
            falsify_core::falsify::FalsifyError::Grid { .. } => ConfigError::invalid("control_points", e),
            _ => ConfigError::invalid("budget", e),
        })?;

        let st = &self.staging;
        let n_opt = st.n_opt.unwrap_or(if self.algorithm == Algorithm::Ats { 140 } else { 20 });
        let stop = match self.algorithm {
            Algorithm::Ats => StopPolicy::adaptive(st.n_init, n_opt, st.n_stuck),
            _ => StopPolicy::fixed(st.n_init, n_opt),
        };
        if st.control_points_per_stage == 0 || control_points % st.control_points_per_stage != 0 {
            return Err(ConfigError::invalid(
                "staging.control_points_per_stage",
                format!("must divide control_points = {control_points}"),
            ));
        }
        let staging = StagingConfig {
            stages: control_points / st.control_points_per_stage,
            control_points_per_stage: st.control_points_per_stage,
            stop,
            derivative_path: st.derivative_path,
            continuation_path: st.continuation_path,
            padding: st.padding,
            early_exit: st.early_exit,
        };
        if self.algorithm.is_staged() {
            stop.validate().map_err(|e| ConfigError::invalid("staging", e))?;
            if st.derivative_path == DerivativePath::Syntactic && !formula.is_flat() {
                return Err(ConfigError::invalid("staging.derivative_path", "the syntactic path needs a flat formula"));
            }
            if st.continuation_path == ContinuationPath::Snapshot && !model.supports_snapshot() {
                return Err(ConfigError::invalid("staging.continuation_path", "the model does not support snapshots"));
            }
        }

        Ok(Experiment {
            name: self.display_name(),
            model_name: model_ref.name().to_string(),
            model,
            spec_name: preset.map_or_else(|| "custom".to_string(), |p| p.name.to_string()),
            spec_text,
            formula,
            setup,
            algorithm: self.algorithm,
            optimizer: self.optimizer,
            n_trials: self.n_trials,
            seed: self.seed,
            staging,
            output: self.output.clone(),
        })
    }
}

/// A validated experiment.
#[derive(Clone)]
pub struct Experiment {
    pub name: String,
    pub model_name: String,
    pub model: Arc<dyn SystemModel>,
    /// Built-in spec name, or `custom`.
    pub spec_name: String,
    pub spec_text: String,
    pub formula: Formula,
    /// Horizon, grid, control points and the unstaged stop policy.
    pub setup: TrialSetup,
    pub algorithm: Algorithm,
    pub optimizer: OptimizerKind,
    pub n_trials: usize,
    pub seed: u64,
    pub staging: StagingConfig,
    pub output: OutputConfig,
}

impl std::fmt::Debug for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiment")
            .field("name", &self.name)
            .field("model", &self.model_name)
            .field("spec", &self.spec_text)
            .field("algorithm", &self.algorithm)
            .field("optimizer", &self.optimizer)
            .field("n_trials", &self.n_trials)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

/// A list of experiments run one after another into a common table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    /// Root of the per-experiment output directories.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub experiment: Vec<ExperimentConfig>,
}

impl MatrixConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        read_toml(path)
    }

    pub fn resolve(&self) -> Result<Vec<Experiment>, ConfigError> {
        let mut names = std::collections::BTreeSet::new();
        self.experiment
            .iter()
            .enumerate()
            .map(|(i, cfg)| {
                let e = cfg.resolve().map_err(|err| match err {
                    ConfigError::Invalid { key, message } => {
                        ConfigError::Invalid { key: format!("experiment[{i}].{key}"), message }
                    }
                    other => other,
                })?;
                if !names.insert(e.name.clone()) {
                    return Err(ConfigError::invalid(format!("experiment[{i}].name"), format!("duplicate name '{}'", e.name)));
                }
                Ok(e)
            })
            .collect()
    }
}

/// All built-in spec names, for help texts.
pub fn builtin_spec_names() -> Vec<&'static str> {
    BUILTIN_SPECS.iter().map(|s| s.name).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err_key(text: &str) -> String {
        let cfg: Result<ExperimentConfig, _> = from_toml(text);
        match cfg.and_then(|c| c.resolve()) {
            Err(e) => e.key().unwrap_or("").to_string(),
            Ok(_) => panic!("accepted: {text}"),
        }
    }

    #[test]
    fn minimal_builtin_config() {
        let cfg: ExperimentConfig = from_toml("spec = \"S1\"\nalgorithm = \"ts\"\noptimizer = \"gnm\"\n").unwrap();
        let e = cfg.resolve().unwrap();
        assert_eq!(e.model_name, "auto_transmission");
        assert_eq!((e.setup.horizon, e.setup.control_points, e.n_trials), (30.0, 5, 20));
        assert_eq!(e.staging.stages, 5);
        assert_eq!(e.staging.stop, StopPolicy::fixed(10, 20));
        assert_eq!(e.setup.stop, StopPolicy::fixed(20, 130));
        assert_eq!(e.name, "S1_ts_gnm");
    }

    #[test]
    fn ats_budget_and_model_table() {
        let text = r#"
            spec = "F[0,10] (y >= 9)"
            algorithm = "ats"
            horizon = 10
            dt = 0.5
            control_points = 2
            [model]
            name = "stateless_map"
            params = { amplitude = 0.5 }
        "#;
        let e = from_toml::<ExperimentConfig>(text).unwrap().resolve().unwrap();
        assert_eq!(e.staging.stop, StopPolicy::adaptive(10, 140, 15));
        assert_eq!(e.spec_name, "custom");
    }

    #[test]
    fn errors_carry_key_paths() {
        assert_eq!(err_key("spec = \"S1\"\nn_trials = 0\n"), "n_trials");
        assert_eq!(err_key("spec = \"S1\"\nbogus = 1\n"), "bogus");
        assert_eq!(err_key("spec = \"S1\"\n[staging]\nn_stuk = 3\n"), "staging.n_stuk");
        assert_eq!(err_key("spec = \"S1\"\noptimizer = \"bfgs\"\n"), "optimizer");
        assert_eq!(err_key("spec = \"S1\"\ncontrol_points = 7\n"), "control_points");
        assert_eq!(err_key("spec = \"G[0,1] (q > 1)\"\nmodel = \"powertrain\"\nhorizon = 1\n"), "spec");
        assert_eq!(err_key("spec = \"x > 0\"\nhorizon = 1\n"), "model");
        assert_eq!(err_key("spec = \"S1\"\n[model]\nname = \"powertrain\"\nparams = { k_z = 1 }\n"), "model");
        assert_eq!(err_key("spec = \"S1\"\n[budget]\nn_init = 0\nn_opt = 0\n"), "budget");
        assert_eq!(err_key("spec = \"S1\"\nalgorithm = \"ats\"\n[staging]\nn_stuck = 0\n"), "staging");
        assert_eq!(
            err_key("spec = \"S_init\"\nalgorithm = \"ts\"\n[staging]\nderivative_path = \"syntactic\"\n"),
            "staging.derivative_path"
        );
    }

    #[test]
    fn syntax_errors_are_reported() {
        let e = from_toml::<ExperimentConfig>("spec = ").unwrap_err();
        assert!(matches!(e, ConfigError::Syntax(_)), "{e:?}");
    }

    #[test]
    fn matrix_prefixes_keys_and_rejects_duplicates() {
        let text = "[[experiment]]\nspec = \"S1\"\n[[experiment]]\nspec = \"S1\"\nn_trials = 0\n";
        let m: MatrixConfig = from_toml(text).unwrap();
        assert_eq!(m.resolve().unwrap_err().key(), Some("experiment[1].n_trials"));
        let text = "[[experiment]]\nspec = \"S1\"\n[[experiment]]\nspec = \"S1\"\n";
        let m: MatrixConfig = from_toml(text).unwrap();
        assert_eq!(m.resolve().unwrap_err().key(), Some("experiment[1].name"));
        assert!(from_toml::<MatrixConfig>("").unwrap().resolve().unwrap().is_empty());
    }

    #[test]
    fn seeds_parse() {
        assert_eq!(parse_seed(" 42 ").unwrap(), 42);
        assert_eq!(parse_seed("x").unwrap_err().key(), Some(SEED_ENV));
    }
}
