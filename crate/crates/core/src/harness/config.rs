//! Experiment spec files: TOML with nested tables for grid, initial
//! configuration, adversary, thresholds, and outputs.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::adversary::AdversaryKind;
use crate::dynamics::TieBreakRule;
use crate::observer::Thresholds;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Multinomial,
    NodeLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// Strict consensus under the Null adversary, almost-consensus otherwise.
    Auto,
    Strict,
    Almost,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Uniform,
    /// Canonical configuration string; must match the cell's `n` and `k`.
    Explicit(String),
    /// Uniform with `gap` extra nodes moved onto opinion 0.
    Biased { gap: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetSpec {
    Explicit(u64),
    /// `floor(n/k - sqrt(k n ln n))`.
    StaticFormula,
    /// `floor(beta sqrt(n) / (k^{5/2} ln n))`.
    DynamicFormula { beta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryConfig {
    pub kind: AdversaryKind,
    pub budget: BudgetSpec,
    pub target: Option<u32>,
    pub sustain_level: Option<u64>,
}

impl AdversaryConfig {
    pub fn null() -> Self {
        AdversaryConfig {
            kind: AdversaryKind::Null,
            budget: BudgetSpec::Explicit(0),
            target: None,
            sustain_level: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputSpec {
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

/// A declarative experiment grid; see the crate README for the file format.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub seed: u64,
    pub trials: u64,
    /// 0 means the default budget derived from (n, k).
    pub max_rounds: u64,
    pub engine: Engine,
    pub tie_break: TieBreakRule,
    pub stop: StopRule,
    /// 0 means the global rayon default.
    pub workers: usize,
    pub grid_n: Vec<u64>,
    pub grid_k: Vec<u32>,
    pub initial: InitialSpec,
    pub adversary: AdversaryConfig,
    pub thresholds: Thresholds,
    pub outputs: OutputSpec,
}

impl ExperimentSpec {
    /// Single-cell spec with library defaults, used by the CLI `simulate`.
    pub fn single_cell(n: u64, k: u32) -> Self {
        ExperimentSpec {
            seed: 0,
            trials: 1,
            max_rounds: 0,
            engine: Engine::Multinomial,
            tie_break: TieBreakRule::FirstSample,
            stop: StopRule::Auto,
            workers: 0,
            grid_n: vec![n],
            grid_k: vec![k],
            initial: InitialSpec::Uniform,
            adversary: AdversaryConfig::null(),
            thresholds: Thresholds::default(),
            outputs: OutputSpec::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_trials")]
    trials: u64,
    #[serde(default)]
    max_rounds: u64,
    #[serde(default)]
    engine: Option<String>,
    #[serde(default)]
    tie_break: Option<String>,
    #[serde(default)]
    stop: Option<String>,
    #[serde(default)]
    workers: usize,
    grid: RawGrid,
    #[serde(default)]
    initial: RawInitial,
    #[serde(default)]
    adversary: RawAdversary,
    #[serde(default)]
    thresholds: RawThresholds,
    #[serde(default)]
    outputs: RawOutputs,
}

fn default_trials() -> u64 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: Vec<u64>,
    k: Vec<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    #[serde(default)]
    kind: Option<String>,
    #[serde(default)]
    config: Option<String>,
    #[serde(default)]
    gap: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdversary {
    #[serde(default)]
    kind: Option<String>,
    #[serde(default, rename = "F")]
    budget: Option<u64>,
    #[serde(default, rename = "F_formula")]
    budget_formula: Option<RawFormula>,
    #[serde(default)]
    target: Option<u32>,
    #[serde(default)]
    sustain_level: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFormula {
    kind: String,
    #[serde(default)]
    beta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThresholds {
    #[serde(default)]
    gamma: Option<f64>,
    #[serde(default)]
    alpha_bias: Option<f64>,
    #[serde(default)]
    c_stop: Option<f64>,
    #[serde(default)]
    log_base: Option<f64>,
    #[serde(default)]
    small_k_exponent: Option<f64>,
    #[serde(default)]
    small_log_exponent: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    #[serde(default)]
    csv: Option<PathBuf>,
    #[serde(default)]
    summary: Option<PathBuf>,
}

pub fn parse_engine(s: &str) -> Result<Engine, HarnessError> {
    match s {
        "multinomial" => Ok(Engine::Multinomial),
        "node-level" => Ok(Engine::NodeLevel),
        other => Err(HarnessError::Spec(format!("unknown engine {other:?}"))),
    }
}

pub fn parse_tie_break(s: &str) -> Result<TieBreakRule, HarnessError> {
    match s {
        "first-sample" => Ok(TieBreakRule::FirstSample),
        "uniform" => Ok(TieBreakRule::UniformAmongSample),
        other => Err(HarnessError::Spec(format!("unknown tie-break {other:?}"))),
    }
}

pub fn parse_stop(s: &str) -> Result<StopRule, HarnessError> {
    match s {
        "auto" => Ok(StopRule::Auto),
        "strict" => Ok(StopRule::Strict),
        "almost" => Ok(StopRule::Almost),
        other => Err(HarnessError::Spec(format!("unknown stop rule {other:?}"))),
    }
}

pub fn parse_adversary_kind(s: &str) -> Result<AdversaryKind, HarnessError> {
    match s {
        "null" => Ok(AdversaryKind::Null),
        "static-plant" => Ok(AdversaryKind::StaticPlant),
        "dynamic-sustain" => Ok(AdversaryKind::DynamicSustain),
        "dynamic-balance-big" => Ok(AdversaryKind::DynamicBalanceBig),
        "dynamic-feed-min-big" => Ok(AdversaryKind::DynamicFeedMinBig),
        "dynamic-random" => Ok(AdversaryKind::DynamicRandom),
        other => Err(HarnessError::Spec(format!("unknown adversary {other:?}"))),
    }
}

impl RawSpec {
    fn into_spec(self) -> Result<ExperimentSpec, HarnessError> {
        let engine = match self.engine.as_deref() {
            None => Engine::Multinomial,
            Some(s) => parse_engine(s)?,
        };
        let tie_break = match self.tie_break.as_deref() {
            None => TieBreakRule::FirstSample,
            Some(s) => parse_tie_break(s)?,
        };
        let stop = match self.stop.as_deref() {
            None => StopRule::Auto,
            Some(s) => parse_stop(s)?,
        };

        let initial = match self.initial.kind.as_deref().unwrap_or("uniform") {
            "uniform" => InitialSpec::Uniform,
            "explicit" => InitialSpec::Explicit(self.initial.config.ok_or_else(|| {
                HarnessError::Spec("initial.kind = \"explicit\" requires initial.config".into())
            })?),
            "biased" => InitialSpec::Biased {
                gap: self.initial.gap.ok_or_else(|| {
                    HarnessError::Spec("initial.kind = \"biased\" requires initial.gap".into())
                })?,
            },
            other => {
                return Err(HarnessError::Spec(format!(
                    "unknown initial kind {other:?}"
                )))
            }
        };

        let kind = match self.adversary.kind.as_deref() {
            None => AdversaryKind::Null,
            Some(s) => parse_adversary_kind(s)?,
        };
        let budget = match (self.adversary.budget, self.adversary.budget_formula) {
            (Some(_), Some(_)) => {
                return Err(HarnessError::Spec(
                    "adversary cannot set both F and F_formula".into(),
                ))
            }
            (Some(f), None) => BudgetSpec::Explicit(f),
            (None, Some(formula)) => match formula.kind.as_str() {
                "static" => BudgetSpec::StaticFormula,
                "dynamic" => BudgetSpec::DynamicFormula {
                    beta: formula.beta.unwrap_or(1.0),
                },
                other => {
                    return Err(HarnessError::Spec(format!(
                        "unknown F_formula kind {other:?}"
                    )))
                }
            },
            (None, None) => BudgetSpec::Explicit(0),
        };

        let defaults = Thresholds::default();
        let thresholds = Thresholds {
            gamma: self.thresholds.gamma.unwrap_or(defaults.gamma),
            alpha_bias: self.thresholds.alpha_bias.unwrap_or(defaults.alpha_bias),
            c_stop: self.thresholds.c_stop.unwrap_or(defaults.c_stop),
            log_base: self.thresholds.log_base.unwrap_or(defaults.log_base),
            small_k_exponent: self
                .thresholds
                .small_k_exponent
                .unwrap_or(defaults.small_k_exponent),
            small_log_exponent: self
                .thresholds
                .small_log_exponent
                .unwrap_or(defaults.small_log_exponent),
        };

        Ok(ExperimentSpec {
            seed: self.seed,
            trials: self.trials,
            max_rounds: self.max_rounds,
            engine,
            tie_break,
            stop,
            workers: self.workers,
            grid_n: self.grid.n,
            grid_k: self.grid.k,
            initial,
            adversary: AdversaryConfig {
                kind,
                budget,
                target: self.adversary.target,
                sustain_level: self.adversary.sustain_level,
            },
            thresholds,
            outputs: OutputSpec {
                csv: self.outputs.csv,
                summary: self.outputs.summary,
            },
        })
    }
}

pub fn parse_spec_toml(text: &str) -> Result<ExperimentSpec, HarnessError> {
    let raw: RawSpec =
        toml::from_str(text).map_err(|e| HarnessError::Spec(format!("spec parse: {e}")))?;
    raw.into_spec()
}

pub fn load_spec_file(path: &Path) -> Result<ExperimentSpec, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    parse_spec_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_spec_fills_defaults() {
        let spec = parse_spec_toml("[grid]\nn = [1000]\nk = [3]\n").unwrap();
        assert_eq!(spec.seed, 0);
        assert_eq!(spec.trials, 1);
        assert_eq!(spec.engine, Engine::Multinomial);
        assert_eq!(spec.stop, StopRule::Auto);
        assert_eq!(spec.initial, InitialSpec::Uniform);
        assert_eq!(spec.adversary, AdversaryConfig::null());
        assert_eq!(spec.thresholds, Thresholds::default());
    }

    #[test]
    fn full_spec_round_trips_every_field() {
        let text = r#"
seed = 7
trials = 20
max_rounds = 500
engine = "node-level"
tie_break = "uniform"
stop = "almost"
workers = 4

[grid]
n = [1000, 10000]
k = [2, 3]

[initial]
kind = "biased"
gap = 50

[adversary]
kind = "dynamic-sustain"
target = 100
sustain_level = 9
F_formula = { kind = "dynamic", beta = 2.0 }

[thresholds]
gamma = 3.0
c_stop = 2.0

[outputs]
csv = "rows.csv"
summary = "summary.json"
"#;
        let spec = parse_spec_toml(text).unwrap();
        assert_eq!(spec.seed, 7);
        assert_eq!(spec.engine, Engine::NodeLevel);
        assert_eq!(spec.tie_break, TieBreakRule::UniformAmongSample);
        assert_eq!(spec.stop, StopRule::Almost);
        assert_eq!(spec.grid_n, vec![1000, 10000]);
        assert_eq!(spec.initial, InitialSpec::Biased { gap: 50 });
        assert_eq!(spec.adversary.kind, AdversaryKind::DynamicSustain);
        assert_eq!(
            spec.adversary.budget,
            BudgetSpec::DynamicFormula { beta: 2.0 }
        );
        assert_eq!(spec.adversary.target, Some(100));
        assert_eq!(spec.thresholds.gamma, 3.0);
        assert_eq!(spec.thresholds.c_stop, 2.0);
        assert_eq!(spec.outputs.csv.as_deref(), Some(Path::new("rows.csv")));
    }

    #[test]
    fn conflicting_budget_definitions_are_rejected() {
        let text = r#"
[grid]
n = [100]
k = [2]
[adversary]
kind = "dynamic-sustain"
F = 5
F_formula = { kind = "static" }
"#;
        assert!(parse_spec_toml(text).is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(parse_spec_toml("[grid]\nn = [10]\nk = [2]\nbogus = 1\n").is_err());
    }
}
