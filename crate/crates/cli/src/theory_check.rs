//! Batch runs of the staging soundness checks, described in a TOML file of `[[check]]` tables.

use std::path::Path;

use falsify_core::theory::{
    check_incremental_falsification, check_statelessness, check_time_monotonicity, check_truncated_time_monotonicity,
    IncrementalReport, MonotonicityReport, QuantizedInputGrid, StatelessReport, TheoryError, TripleSampler,
};
use serde::{Deserialize, Serialize};

use crate::config::{read_toml, resolve_spec, ConfigError, ModelRef};

fn default_triples() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryFile {
    /// Seed of checks that do not set their own.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub check: Vec<CheckConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub prefix_horizon: f64,
    pub prefix_segments: usize,
    pub suffix_horizon: f64,
    pub suffix_segments: usize,
    pub dt: f64,
}

impl From<&SamplerConfig> for TripleSampler {
    fn from(s: &SamplerConfig) -> Self {
        Self {
            prefix_horizon: s.prefix_horizon,
            prefix_segments: s.prefix_segments,
            suffix_horizon: s.suffix_horizon,
            suffix_segments: s.suffix_segments,
            dt: s.dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckConfig {
    /// Brute force over `U^K` against greedy stage selection.
    Incremental { model: ModelRef, spec: String, values: Vec<Vec<f64>>, stages: usize, segment: f64, dt: f64 },
    TimeMonotonicity {
        model: ModelRef,
        spec: String,
        sampler: SamplerConfig,
        #[serde(default = "default_triples")]
        triples: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    TruncatedTimeMonotonicity {
        model: ModelRef,
        spec: String,
        sampler: SamplerConfig,
        #[serde(default = "default_triples")]
        triples: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    Statelessness {
        model: ModelRef,
        sampler: SamplerConfig,
        #[serde(default = "default_triples")]
        triples: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Report {
    Incremental(IncrementalReport),
    Monotonicity(MonotonicityReport),
    Stateless(StatelessReport),
}

impl Report {
    /// Whether the report shows no counterexample.
    pub fn passed(&self) -> bool {
        match self {
            Self::Incremental(r) => r.holds,
            Self::Monotonicity(r) => r.violations.is_empty(),
            Self::Stateless(r) => r.violations.is_empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub kind: String,
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    pub passed: bool,
    pub report: Report,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("check[{index}]: {source}")]
    Theory { index: usize, source: TheoryError },
}

impl TheoryFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        read_toml(path)
    }

    /// Runs every check in order. Configuration problems are reported before anything runs.
    pub fn run(&self) -> Result<Vec<CheckResult>, CheckError> {
        let prepared = self
            .check
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let key = |k: &str| format!("check[{i}].{k}");
                let (model_ref, spec) = match c {
                    CheckConfig::Incremental { model, spec, .. }
                    | CheckConfig::TimeMonotonicity { model, spec, .. }
                    | CheckConfig::TruncatedTimeMonotonicity { model, spec, .. } => (model, Some(spec)),
                    CheckConfig::Statelessness { model, .. } => (model, None),
                };
                let model = model_ref.build(&key("model"))?;
                let spec = spec.map(|s| resolve_spec(s, &model.output_names(), &key("spec"))).transpose()?;
                Ok((c, model_ref.name().to_string(), model, spec))
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;

        prepared
            .into_iter()
            .enumerate()
            .map(|(index, (c, model_name, model, spec))| {
                let m = model.as_ref();
                let phi = spec.as_ref().map(|(_, f)| f);
                let wrap = |source| CheckError::Theory { index, source };
                let (kind, report) = match c {
                    CheckConfig::Incremental { values, stages, segment, dt, .. } => {
                        let grid = QuantizedInputGrid { values: values.clone(), stages: *stages, segment: *segment, dt: *dt };
                        let r = check_incremental_falsification(m, phi.expect("spec"), &grid).map_err(wrap)?;
                        ("incremental", Report::Incremental(r))
                    }
                    CheckConfig::TimeMonotonicity { sampler, triples, seed, .. } => {
                        let s = TripleSampler::from(sampler);
                        let r = check_time_monotonicity(m, phi.expect("spec"), &s, *triples, seed.unwrap_or(self.seed))
                            .map_err(wrap)?;
                        ("time_monotonicity", Report::Monotonicity(r))
                    }
                    CheckConfig::TruncatedTimeMonotonicity { sampler, triples, seed, .. } => {
                        let s = TripleSampler::from(sampler);
                        let r =
                            check_truncated_time_monotonicity(m, phi.expect("spec"), &s, *triples, seed.unwrap_or(self.seed))
                                .map_err(wrap)?;
                        ("truncated_time_monotonicity", Report::Monotonicity(r))
                    }
                    CheckConfig::Statelessness { sampler, triples, seed, .. } => {
                        let s = TripleSampler::from(sampler);
                        let r = check_statelessness(m, &s, *triples, seed.unwrap_or(self.seed)).map_err(wrap)?;
                        ("statelessness", Report::Stateless(r))
                    }
                };
                Ok(CheckResult {
                    kind: kind.to_string(),
                    model: model_name,
                    spec: spec.map(|(text, _)| text),
                    passed: report.passed(),
                    report,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::from_toml;

    const FILE: &str = r#"
        seed = 3

        [[check]]
        kind = "incremental"
        model = "stateless_map"
        spec = "F[0,2] (y <= 3 | y >= 6)"
        values = [[0.0], [5.0], [10.0]]
        stages = 2
        segment = 1.0
        dt = 0.25

        [[check]]
        kind = "statelessness"
        model = "monotone_integrator"
        triples = 20
        sampler = { prefix_horizon = 1.0, prefix_segments = 2, suffix_horizon = 1.0, suffix_segments = 1, dt = 0.25 }

        [[check]]
        kind = "truncated_time_monotonicity"
        model = "monotone_integrator"
        spec = "G[0,2] (x < 0.5)"
        triples = 50
        sampler = { prefix_horizon = 1.0, prefix_segments = 2, suffix_horizon = 1.0, suffix_segments = 2, dt = 0.25 }
    "#;

    #[test]
    fn runs_each_kind_in_order() {
        let file: TheoryFile = from_toml(FILE).unwrap();
        let results = file.run().unwrap();
        let kinds: Vec<&str> = results.iter().map(|r| r.kind.as_str()).collect();
        assert_eq!(kinds, ["incremental", "statelessness", "truncated_time_monotonicity"]);
        assert!(results[0].passed);
        assert!(!results[1].passed);
        assert!(results[2].passed);
        let json = serde_json::to_string(&results).unwrap();
        assert!(json.contains("\"lhs\""));
    }

    #[test]
    fn unknown_kind_and_fields_are_rejected() {
        assert!(from_toml::<TheoryFile>("[[check]]\nkind = \"proof\"\n").is_err());
        let bad = "[[check]]\nkind = \"incremental\"\nmodel = \"stateless_map\"\nspec = \"S1\"\nvalues = [[0.0]]\nstages = 1\nsegment = 1.0\ndt = 0.5\nextra = 1\n";
        assert!(from_toml::<TheoryFile>(bad).is_err());
    }

    #[test]
    fn spec_errors_point_at_the_check() {
        let text = "[[check]]\nkind = \"incremental\"\nmodel = \"stateless_map\"\nspec = \"F[0,1] (v > 1)\"\nvalues = [[0.0]]\nstages = 1\nsegment = 1.0\ndt = 0.5\n";
        let err = from_toml::<TheoryFile>(text).unwrap().run().unwrap_err();
        match err {
            CheckError::Config(e) => assert_eq!(e.key(), Some("check[0].spec")),
            other => panic!("{other}"),
        }
    }
}
