//! Experiment configuration files.
//!
//! A file holds either one experiment or a suite:
//!
//! ```json
//! { "name": "fig2", "common": { "scenario": { "rayleigh": false } },
//!   "runs": [ { "algorithm": "dqesa_e", "feedback": { "bits": 1 } },
//!             { "algorithm": "dbsa" } ] }
//! ```
//!
//! `common` is merged into every run (run keys win, objects merge
//! recursively). Unknown keys are rejected and every error names the key
//! path that caused it, e.g. `.runs[1].scenario.p_add`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::algorithms::{AlgorithmKind, AlgorithmParams, AngleFeedback};
use crate::channel::ScenarioSpec;
use crate::error::{Error, Result};

use crate::algorithms::quantize::MAX_BITS;

/// Width of the angle feedback link: `"exact"` or a bit count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Bits {
    #[default]
    Exact,
    Count(u8),
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bits::Exact => s.serialize_str("exact"),
            Bits::Count(k) => s.serialize_u8(*k),
        }
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct BitsVisitor;
        impl Visitor<'_> for BitsVisitor {
            type Value = Bits;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "\"exact\" or an integer bit count in 1..={MAX_BITS}")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Bits, E> {
                if v == "exact" {
                    Ok(Bits::Exact)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Bits, E> {
                match u8::try_from(v) {
                    Ok(k) if (1..=MAX_BITS).contains(&k) => Ok(Bits::Count(k)),
                    _ => Err(E::invalid_value(de::Unexpected::Unsigned(v), &self)),
                }
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Bits, E> {
                Err(E::invalid_value(de::Unexpected::Signed(v), &self))
            }
        }
        d.deserialize_any(BitsVisitor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackSpec {
    #[serde(default)]
    pub bits: Bits,
}

impl FeedbackSpec {
    pub fn exact() -> Self {
        Self { bits: Bits::Exact }
    }

    pub fn bits(k: u8) -> Self {
        Self { bits: Bits::Count(k) }
    }

    pub fn angle_feedback(&self) -> AngleFeedback {
        match self.bits {
            Bits::Exact => AngleFeedback::Exact,
            Bits::Count(k) => AngleFeedback::Bits(k),
        }
    }

    fn label(&self) -> String {
        match self.bits {
            Bits::Exact => "exact".to_string(),
            Bits::Count(k) => format!("{k}bit"),
        }
    }
}

fn default_trials() -> u32 {
    100
}
fn default_budget() -> u64 {
    1000
}
fn default_true() -> bool {
    true
}

/// One experiment: an algorithm run on a scenario for some number of trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Series name in summaries and plots; derived from the algorithm and
    /// feedback width when absent.
    #[serde(default)]
    pub name: Option<String>,
    pub algorithm: AlgorithmKind,
    #[serde(default)]
    pub feedback: FeedbackSpec,
    #[serde(default)]
    pub scenario: ScenarioSpec,
    #[serde(default = "default_trials")]
    pub n_trials: u32,
    #[serde(default = "default_budget")]
    pub slot_budget: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub algorithm_params: AlgorithmParams,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Write one trace CSV per trial next to the summary.
    #[serde(default = "default_true")]
    pub write_traces: bool,
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn new(algorithm: AlgorithmKind, scenario: ScenarioSpec) -> Self {
        Self {
            name: None,
            algorithm,
            feedback: FeedbackSpec::default(),
            scenario,
            n_trials: default_trials(),
            slot_budget: default_budget(),
            master_seed: 0,
            algorithm_params: AlgorithmParams::default(),
            output_dir: None,
            write_traces: true,
        }
    }

    pub fn series_name(&self) -> String {
        match &self.name {
            Some(n) => n.clone(),
            None if !self.algorithm.uses_angle_feedback() => self.algorithm.as_str().to_string(),
            None => format!("{}_{}", self.algorithm.as_str(), self.feedback.label()),
        }
    }

    /// Range checks. Paths are relative to this config object.
    pub fn validate(&self) -> Result<()> {
        if self.n_trials < 1 {
            return Err(Error::config(".n_trials", "must be >= 1"));
        }
        if self.slot_budget < 1 {
            return Err(Error::config(".slot_budget", "must be >= 1"));
        }
        if let Some(name) = &self.name {
            if name.is_empty() || name.contains([',', '"', '\n', '\r', '/', '\\']) {
                return Err(Error::config(
                    ".name",
                    "must be non-empty and free of commas, quotes, slashes and newlines",
                ));
            }
        }
        self.scenario.validate().map_err(|e| prefix(".scenario", e))?;
        self.algorithm_params
            .validate()
            .map_err(|e| prefix(".algorithm_params", e))
    }
}

/// A named list of experiments that share an output root and a plot.
#[derive(Clone, Debug, PartialEq)]
pub struct Suite {
    pub name: String,
    pub description: Option<String>,
    pub runs: Vec<ExperimentConfig>,
}

impl Suite {
    /// Applies command-line overrides to every run.
    pub fn override_all(&mut self, seed: Option<u64>, trials: Option<u32>, budget: Option<u64>) {
        for run in &mut self.runs {
            if let Some(s) = seed {
                run.master_seed = s;
            }
            if let Some(t) = trials {
                run.n_trials = t;
            }
            if let Some(b) = budget {
                run.slot_budget = b;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs.is_empty() {
            return Err(Error::config(".runs", "a suite needs at least one run"));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, run) in self.runs.iter().enumerate() {
            let at = |e| prefix(&format!(".runs[{i}]"), e);
            run.validate().map_err(at)?;
            if !seen.insert(run.series_name()) {
                return Err(at(Error::config(
                    ".name",
                    format!("duplicate series name `{}`", run.series_name()),
                )));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteFile {
    name: String,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    common: Option<Value>,
    runs: Vec<Value>,
}

fn prefix(p: &str, e: Error) -> Error {
    match e {
        Error::Config { path, message } => Error::config(format!("{p}{path}"), message),
        other => other,
    }
}

fn path_error(base: &str, e: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = e.path().to_string();
    let path = if path == "." || path.is_empty() {
        base.to_string()
    } else {
        format!("{base}.{path}")
    };
    let message = e.into_inner().to_string();
    Error::config(if path.is_empty() { ".".to_string() } else { path }, message)
}

/// Recursively overlays `over` onto `base`.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn parse_run(value: Value, base: &str) -> Result<ExperimentConfig> {
    serde_path_to_error::deserialize(value).map_err(|e| path_error(base, e))
}

/// Parses a single config or a suite from JSON text. `default_name` names a
/// suite made from a single config.
pub fn parse_suite(text: &str, default_name: &str) -> Result<Suite> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::config(".", e.to_string()))?;
    let is_suite = value.as_object().is_some_and(|o| o.contains_key("runs"));
    let suite = if is_suite {
        let file: SuiteFile = serde_path_to_error::deserialize(value).map_err(|e| path_error("", e))?;
        let mut runs = Vec::with_capacity(file.runs.len());
        for (i, run) in file.runs.into_iter().enumerate() {
            let run = match &file.common {
                Some(common) => {
                    let mut merged = common.clone();
                    merge(&mut merged, run);
                    merged
                }
                None => run,
            };
            runs.push(parse_run(run, &format!(".runs[{i}]"))?);
        }
        Suite {
            name: file.name,
            description: file.description,
            runs,
        }
    } else {
        let run = parse_run(value, "")?;
        run.validate()?;
        Suite {
            name: run.name.clone().unwrap_or_else(|| default_name.to_string()),
            description: None,
            runs: vec![run],
        }
    };
    suite.validate()?;
    Ok(suite)
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<Suite> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "experiment".to_string());
    parse_suite(&text, &stem)
}

/// Parses exactly one experiment.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let suite = parse_suite(text, "experiment")?;
    match <[ExperimentConfig; 1]>::try_from(suite.runs) {
        Ok([run]) => Ok(run),
        Err(_) => Err(Error::config(".runs", "expected a single experiment, found a suite")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::SignMode;
    use crate::channel::ScenarioKind;

    fn err_path(text: &str) -> String {
        match parse_suite(text, "x") {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(
            r#"{"algorithm":"dqesa","scenario":{"kind":"static","rayleigh":true,"n_nodes_initial":100}}"#,
        )
        .unwrap();
        assert_eq!(c.scenario.tx_power, 1.0);
        assert_eq!(c.feedback.bits, Bits::Exact);
        assert_eq!(c.n_trials, 100);
        assert_eq!(c.slot_budget, 1000);
        assert_eq!(c.algorithm_params.sign_mode, SignMode::Predict);
        assert_eq!(c.series_name(), "dqesa_exact");
    }

    #[test]
    fn probability_out_of_range() {
        let p = err_path(r#"{"algorithm":"dqesa","scenario":{"kind":"churn","p_add":1.5}}"#);
        assert_eq!(p, ".scenario.p_add");
    }

    #[test]
    fn unknown_keys_carry_their_path() {
        assert_eq!(err_path(r#"{"algorithm":"dqesa","scenario":{"foo":1}}"#), ".scenario.foo");
        assert_eq!(err_path(r#"{"algorithm":"dqesa","bar":1}"#), ".bar");
        assert_eq!(
            err_path(r#"{"algorithm":"dqesa","algorithm_params":{"biorarsa":{"rhoo":1}}}"#),
            ".algorithm_params.biorarsa.rhoo"
        );
        assert_eq!(
            err_path(r#"{"name":"s","runs":[{"algorithm":"dbsa"},{"algorithm":"dbsa","scenario":{"zz":0}}]}"#),
            ".runs[1].scenario.zz"
        );
    }

    #[test]
    fn bad_values_carry_their_path() {
        assert_eq!(err_path(r#"{"algorithm":"nope"}"#), ".algorithm");
        assert_eq!(err_path(r#"{"algorithm":"dqesa","feedback":{"bits":0}}"#), ".feedback.bits");
        assert_eq!(err_path(r#"{"algorithm":"dqesa","feedback":{"bits":"many"}}"#), ".feedback.bits");
        assert_eq!(err_path(r#"{"algorithm":"dqesa","n_trials":0}"#), ".n_trials");
        assert_eq!(
            err_path(r#"{"algorithm":"dbsa","algorithm_params":{"dbsa_alpha_init":1.0}}"#),
            ".algorithm_params.dbsa_alpha_init"
        );
        assert_eq!(err_path("{not json"), ".");
    }

    #[test]
    fn suite_common_merges() {
        let s = parse_suite(
            r#"{"name":"s","common":{"scenario":{"rayleigh":false,"n_nodes_initial":7},"slot_budget":50},
                "runs":[{"algorithm":"dqesa_e","feedback":{"bits":1}},
                        {"algorithm":"dbsa","scenario":{"n_nodes_initial":9}}]}"#,
            "x",
        )
        .unwrap();
        assert_eq!(s.runs.len(), 2);
        assert!(!s.runs[0].scenario.rayleigh);
        assert_eq!(s.runs[0].scenario.n_nodes_initial, 7);
        assert_eq!(s.runs[1].scenario.n_nodes_initial, 9);
        assert!(!s.runs[1].scenario.rayleigh);
        assert_eq!(s.runs[1].slot_budget, 50);
        assert_eq!(s.runs[0].series_name(), "dqesa_e_1bit");
        assert_eq!(s.runs[0].scenario.kind, ScenarioKind::Static);
    }

    #[test]
    fn duplicate_series_rejected() {
        assert_eq!(
            err_path(r#"{"name":"s","runs":[{"algorithm":"dbsa"},{"algorithm":"dbsa"}]}"#),
            ".runs[1].name"
        );
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = parse_config(r#"{"algorithm":"hybrid","feedback":{"bits":3}}"#).unwrap();
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert!(text.contains("\"sign_mode\": \"predict\""));
        assert!(text.contains("\"l_helds\": 10"));
        assert_eq!(parse_config(&text).unwrap(), c);
    }
}
