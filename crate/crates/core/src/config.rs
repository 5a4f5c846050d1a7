//! Experiment configuration files and embedded presets.
//!
//! A config is a TOML document with `[ground_truth]`, `[learner]`,
//! `[experiment]` and `[sweep]` tables, optional `[sacrifice]`, and any
//! number of `[[curve]]` entries. Each curve is the base document with its
//! `set` table of dotted-key overrides applied; without curves the base
//! document is a single run.

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::model::{CommonMode, GroundTruth, LearnerConfig, Sacrifice, TruthSpec};
use crate::montecarlo::{Metric, SweepSpec, SweepVariable};
use crate::pipeline::TransferMethod;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthSection {
    pub s: usize,
    #[serde(default)]
    pub s1: usize,
    #[serde(default)]
    pub s2: usize,
    #[serde(default)]
    pub w1_norm: f64,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub q1_norm: f64,
    #[serde(default)]
    pub q2_norm: f64,
    #[serde(default)]
    pub sigma1: f64,
    #[serde(default)]
    pub sigma2: f64,
    /// Explicit vectors; each replaces the norm-based construction of that vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q2: Option<Vec<f64>>,
}

fn default_mode() -> String {
    "equal".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSection {
    pub p: usize,
    #[serde(default)]
    pub p1: usize,
    #[serde(default)]
    pub p2: usize,
    pub n1: usize,
    pub n2: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SacrificeSection {
    #[serde(default)]
    pub common: Vec<usize>,
    #[serde(default)]
    pub task1: Vec<usize>,
    #[serde(default)]
    pub task2: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_metric")]
    pub metric: String,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub threads: usize,
    /// Append `b1_sq, b2_sq, b3_sq` columns to the CSV.
    #[serde(default)]
    pub bias_bound_columns: bool,
}

fn default_name() -> String {
    "sweep".into()
}
fn default_method() -> String {
    "option_a".into()
}
fn default_metric() -> String {
    "model_error".into()
}
fn default_replicates() -> usize {
    100
}
fn default_seed() -> u64 {
    1
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            name: default_name(),
            method: default_method(),
            metric: default_metric(),
            replicates: default_replicates(),
            seed: default_seed(),
            threads: 0,
            bias_bound_columns: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl SweepSection {
    /// Explicit `values`, or `start..=stop` by `step`.
    pub fn grid(&self) -> Result<Vec<f64>> {
        if let Some(v) = &self.values {
            return Ok(v.clone());
        }
        match (self.start, self.stop, self.step) {
            (Some(a), Some(b), Some(h)) => {
                if !(h > 0.0 && a.is_finite() && b.is_finite()) {
                    return Err(Error::Config("sweep step must be positive and bounds finite".into()));
                }
                let count = ((b - a) / h + 1e-9).floor();
                if count < 0.0 {
                    return Ok(Vec::new());
                }
                Ok((0..=count as usize).map(|i| a + h * i as f64).collect())
            }
            (None, None, None) => Ok(Vec::new()),
            _ => Err(Error::Config("sweep needs `values` or all of `start`, `stop`, `step`".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSection {
    pub id: String,
    #[serde(default)]
    pub set: Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdviseSection {
    /// Total feature budget `p + p1`; defaults to the learner's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default = "default_sacrifice_value")]
    pub sacrifice_value: f64,
}

fn default_sacrifice_value() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ground_truth: GroundTruthSection,
    pub learner: LearnerSection,
    #[serde(default)]
    pub sacrifice: SacrificeSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, rename = "curve", skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<CurveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advise: Option<AdviseSection>,
    /// Provenance written next to outputs; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<Table>,
}

/// One fully resolved sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    /// Curve id, if the config has curves.
    pub id: Option<String>,
    pub name: String,
    pub truth: GroundTruth,
    pub learner: LearnerConfig,
    pub sacrifice: Sacrifice,
    pub spec: SweepSpec,
    pub bias_bound_columns: bool,
}

pub fn parse_method(s: &str) -> Result<TransferMethod> {
    Ok(match s {
        "option_a" => TransferMethod::OptionA,
        "option_b" => TransferMethod::OptionB,
        "sample_transfer" => TransferMethod::SampleTransfer,
        "sample_transfer_fine_tuned" => TransferMethod::SampleTransferFineTuned,
        _ => return Err(Error::Config(format!("unknown method `{s}`"))),
    })
}

pub fn parse_metric(s: &str) -> Result<Metric> {
    Ok(match s {
        "model_error" => Metric::ModelError,
        "transfer_error" => Metric::TransferError,
        _ => return Err(Error::Config(format!("unknown metric `{s}`"))),
    })
}

impl GroundTruthSection {
    pub fn build(&self) -> Result<GroundTruth> {
        let mode = match self.mode.as_str() {
            "equal" => CommonMode::Equal,
            "opposite" => CommonMode::Opposite,
            "offset" => CommonMode::Offset { delta: self.delta },
            m => return Err(Error::Config(format!("unknown mode `{m}`"))),
        };
        let mut gt = GroundTruth::from_spec(&TruthSpec {
            s: self.s,
            s1: self.s1,
            s2: self.s2,
            w1_norm: self.w1_norm,
            mode,
            q1_norm: self.q1_norm,
            q2_norm: self.q2_norm,
            sigma1: self.sigma1,
            sigma2: self.sigma2,
        })?;
        let explicit = [
            (&self.w1, &mut gt.w1, "w1", self.s),
            (&self.w2, &mut gt.w2, "w2", self.s),
            (&self.q1, &mut gt.q1, "q1", self.s1),
            (&self.q2, &mut gt.q2, "q2", self.s2),
        ];
        for (src, dst, what, len) in explicit {
            if let Some(v) = src {
                if v.len() != len {
                    return Err(Error::DimensionMismatch { what, expected: len, found: v.len() });
                }
                *dst = nalgebra::DVector::from_column_slice(v);
            }
        }
        gt.validate()?;
        Ok(gt)
    }
}

impl ExperimentConfig {
    pub fn from_table(table: &Table) -> Result<Self> {
        table.clone().try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn learner_config(&self) -> LearnerConfig {
        let l = &self.learner;
        LearnerConfig::new(l.p, l.p1, l.p2, l.n1, l.n2)
    }

    fn run(&self, id: Option<String>) -> Result<Run> {
        let sweep = self.sweep.as_ref().ok_or_else(|| Error::Config("missing [sweep] table".into()))?;
        let variable = SweepVariable::parse(&sweep.variable)
            .ok_or_else(|| Error::Config(format!("unknown sweep variable `{}`", sweep.variable)))?;
        let e = &self.experiment;
        let spec = SweepSpec {
            variable,
            grid: sweep.grid()?,
            replicates: e.replicates,
            master_seed: e.seed,
            method: parse_method(&e.method)?,
            metric: parse_metric(&e.metric)?,
            threads: e.threads,
        };
        spec.validate()?;
        let s = &self.sacrifice;
        Ok(Run {
            id,
            name: e.name.clone(),
            truth: self.ground_truth.build()?,
            learner: self.learner_config(),
            sacrifice: Sacrifice { common: s.common.clone(), task1: s.task1.clone(), task2: s.task2.clone() },
            spec,
            bias_bound_columns: e.bias_bound_columns,
        })
    }
}

pub fn parse_table(text: &str) -> Result<Table> {
    text.parse::<Table>().map_err(|e| Error::Config(e.to_string()))
}

/// Parses a command-line value as TOML, falling back to a bare string.
pub fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

/// Sets `a.b.c = value`, creating intermediate tables.
pub fn set_dotted(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::Config(format!("bad key `{key}`")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{p}` in `{key}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Applies an override whose value may itself be a table of overrides, so
/// `set = { "learner.p" = 5 }` and `set.learner.p = 5` mean the same.
fn merge_set(table: &mut Table, key: &str, value: &Value) -> Result<()> {
    match value {
        Value::Table(sub) => {
            for (k, v) in sub {
                merge_set(table, &format!("{key}.{k}"), v)?;
            }
            Ok(())
        }
        v => set_dotted(table, key, v.clone()),
    }
}

/// Applies `key=value` overrides in order.
pub fn apply_overrides(table: &mut Table, overrides: &[(String, String)]) -> Result<()> {
    for (k, v) in overrides {
        set_dotted(table, k, parse_value(v))?;
    }
    Ok(())
}

/// Splits a document into one self-contained table per curve, each with
/// its overrides applied and no `curve` entries; without curves the
/// document itself is returned.
pub fn curve_tables(table: &Table) -> Result<Vec<(Option<String>, Table)>> {
    let cfg = ExperimentConfig::from_table(table)?;
    if cfg.curves.is_empty() {
        return Ok(vec![(None, table.clone())]);
    }
    let mut base = table.clone();
    base.remove("curve");
    let mut seen = std::collections::HashSet::new();
    cfg.curves
        .iter()
        .map(|c| {
            if !seen.insert(c.id.clone()) {
                return Err(Error::Config(format!("duplicate curve id `{}`", c.id)));
            }
            let mut t = base.clone();
            for (k, v) in &c.set {
                merge_set(&mut t, k, v)?;
            }
            Ok((Some(c.id.clone()), t))
        })
        .collect()
}

/// Resolves a table without curves into a run.
pub fn run_from_table(table: &Table, id: Option<String>) -> Result<Run> {
    ExperimentConfig::from_table(table)?.run(id)
}

/// Splits a document into one run per curve (or a single run).
pub fn resolve_runs(table: &Table) -> Result<Vec<Run>> {
    curve_tables(table)?.into_iter().map(|(id, t)| run_from_table(&t, id)).collect()
}

/// Embedded preset configs, by name.
pub mod presets {
    pub const NAMES: [&str; 4] = ["fig1a", "fig1b", "fig1c", "tightness"];

    pub fn get(name: &str) -> Option<&'static str> {
        Some(match name {
            "fig1a" => include_str!("../presets/fig1a.toml"),
            "fig1b" => include_str!("../presets/fig1b.toml"),
            "fig1c" => include_str!("../presets/fig1c.toml"),
            "tightness" => include_str!("../presets/tightness.toml"),
            _ => return None,
        })
    }
}
