//! Fixed scenarios whose sweeps are checked against exact closed forms or
//! bounds, used by the `verify` command and the acceptance tests.

use std::fmt;

use super::checks::{check_bounds, check_exact};
use super::sweep::{run_sweep, Metric, SweepSpec, SweepVariable};
use crate::error::Result;
use crate::model::{CommonMode, GroundTruth, LearnerConfig, Sacrifice, TruthSpec};
use crate::pipeline::TransferMethod;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    /// Within 3 SE of an exact value.
    Exact,
    /// Inside an interval widened by 3 SE on each side.
    Bounds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckCase {
    pub name: String,
    pub truth: GroundTruth,
    pub learner: LearnerConfig,
    pub spec: SweepSpec,
    pub expectation: Expectation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub name: String,
    pub value: f64,
    pub mean: f64,
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            let target = if e.lower == e.upper {
                format!("{:.6}", e.lower)
            } else {
                format!("[{:.6}, {:.6}]", e.lower, e.upper)
            };
            writeln!(
                f,
                "{:<5} {:<44} at {:<6} mean {:.6} ± {:.6} theory {} z {:+.2}",
                if e.pass { "PASS" } else { "FAIL" },
                e.name,
                e.value,
                e.mean,
                e.se,
                target,
                e.z
            )?;
        }
        Ok(())
    }
}

fn spec(
    variable: SweepVariable,
    grid: Vec<f64>,
    replicates: usize,
    seed: u64,
    method: TransferMethod,
    metric: Metric,
) -> SweepSpec {
    SweepSpec { variable, grid, replicates, master_seed: seed, method, metric, threads: 0 }
}

fn truth(mode: CommonMode, w1: f64, q1: f64, q2: f64, sigma1: f64, sigma2: f64) -> GroundTruth {
    GroundTruth::from_spec(&TruthSpec {
        s: 5,
        s1: 5,
        s2: 5,
        w1_norm: w1,
        mode,
        q1_norm: q1,
        q2_norm: q2,
        sigma1,
        sigma2,
    })
    .expect("fixed truth is valid")
}

/// Transferring error with an underparameterized source fit; the
/// expectation is `5/89`.
pub fn transfer_error_under(replicates: usize, seed: u64) -> CheckCase {
    CheckCase {
        name: "transferring error, source underparameterized".into(),
        truth: truth(CommonMode::Equal, 1.0, 1.0, 1.0, 1.0, 1.0),
        learner: LearnerConfig::new(5, 5, 5, 100, 50),
        spec: spec(SweepVariable::P, vec![5.0], replicates, seed, TransferMethod::OptionA, Metric::TransferError),
        expectation: Expectation::Exact,
    }
}

/// Transferring error of a pure-noise source with an overparameterized
/// fit; the bounds collapse to `50/59 · 10/110`.
pub fn transfer_error_over_null(replicates: usize, seed: u64) -> CheckCase {
    CheckCase {
        name: "transferring error, null truth, overparameterized".into(),
        truth: GroundTruth::zeros(5, 5, 5, 1.0, 1.0),
        learner: LearnerConfig::new(10, 100, 5, 50, 50),
        spec: spec(SweepVariable::P, vec![10.0], replicates, seed, TransferMethod::OptionA, Metric::TransferError),
        expectation: Expectation::Bounds,
    }
}

/// Option A and B target errors with an exact source fit (no source
/// noise), both target fits underparameterized.
pub fn option_errors_exact_source(replicates: usize, seed: u64) -> Vec<CheckCase> {
    let grid = vec![5.0, 10.0, 15.0, 20.0, 25.0];
    [TransferMethod::OptionA, TransferMethod::OptionB]
        .into_iter()
        .map(|method| CheckCase {
            name: format!("{} error, exact source", method.as_str()),
            truth: truth(CommonMode::Equal, 1.0, 1.0, 1.0, 0.0, 1.0),
            learner: LearnerConfig::new(5, 5, 5, 100, 50),
            spec: spec(SweepVariable::P2, grid.clone(), replicates, seed, method, Metric::ModelError),
            expectation: Expectation::Exact,
        })
        .collect()
}

/// Noiseless transferring error against the three bias bounds, for equal
/// and opposite common parts and two source-specific norms.
pub fn noiseless_bias_bounds(replicates: usize, seed: u64) -> Vec<CheckCase> {
    let mut out = Vec::new();
    for (mode, label) in [(CommonMode::Equal, "equal"), (CommonMode::Opposite, "opposite")] {
        for q1 in [1.0, 5.0] {
            out.push(CheckCase {
                name: format!("noiseless transferring error, {label} |q1|={q1}"),
                truth: truth(mode, 1.0, q1, 1.0, 0.0, 0.0),
                learner: LearnerConfig::new(110, 20, 5, 100, 50),
                spec: spec(
                    SweepVariable::P,
                    vec![110.0, 150.0, 200.0, 400.0],
                    replicates,
                    seed,
                    TransferMethod::OptionA,
                    Metric::TransferError,
                ),
                expectation: Expectation::Bounds,
            });
        }
    }
    out
}

/// Every case at its default size; `replicates` overrides all of them.
pub fn standard_cases(replicates: Option<usize>, seed: u64) -> Vec<CheckCase> {
    let exact = replicates.unwrap_or(10_000);
    let mut cases = vec![transfer_error_under(exact, seed), transfer_error_over_null(exact, seed)];
    cases.extend(option_errors_exact_source(exact, seed));
    cases.extend(noiseless_bias_bounds(replicates.unwrap_or(1000), seed));
    cases
}

/// Runs each case; a point without a closed form fails.
pub fn run_cases(cases: &[CheckCase], threads: usize) -> Result<CheckReport> {
    let mut entries = Vec::new();
    for case in cases {
        let spec = SweepSpec { threads, ..case.spec.clone() };
        for r in run_sweep(&spec, &case.truth, &case.learner, &Sacrifice::none())? {
            let outcome = match case.expectation {
                Expectation::Exact => check_exact(&r),
                Expectation::Bounds => check_bounds(&r, 3.0),
            };
            let (lower, upper) = r.theory.map(|t| (t.lower(), t.upper())).unwrap_or((f64::NAN, f64::NAN));
            entries.push(CheckEntry {
                name: case.name.clone(),
                value: r.value,
                mean: r.empirical.mean,
                se: r.empirical.se,
                lower,
                upper,
                z: outcome.map_or(f64::NAN, |o| o.z),
                pass: outcome.is_some_and(|o| o.pass),
            });
        }
    }
    Ok(CheckReport { entries })
}
