//! Parameter sweeps: replicate a transfer method over a grid of one
//! scenario variable and pair each point with its closed form.

use rayon::prelude::*;

use super::rng::replicate_rng;
use super::stats::Summary;
use crate::error::{Error, Result};
use crate::linalg::Regime;
use crate::model::{extend_truth, GroundTruth, LearnerConfig, Sacrifice};
use crate::pipeline::{run_method, train_source, TransferMethod};
use crate::theory::{
    fine_tune_theory, option_a_error_from, option_b_error, option_b_error_from, sample_transfer_theory,
    transferring_error, ScenarioParams, TermedResult, TheoryResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVariable {
    P,
    P1,
    P2,
    N1,
    N2,
    Sigma1,
    Sigma2,
}

impl SweepVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVariable::P => "p",
            SweepVariable::P1 => "p1",
            SweepVariable::P2 => "p2",
            SweepVariable::N1 => "n1",
            SweepVariable::N2 => "n2",
            SweepVariable::Sigma1 => "sigma1",
            SweepVariable::Sigma2 => "sigma2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "p" => SweepVariable::P,
            "p1" => SweepVariable::P1,
            "p2" => SweepVariable::P2,
            "n1" => SweepVariable::N1,
            "n2" => SweepVariable::N2,
            "sigma1" => SweepVariable::Sigma1,
            "sigma2" => SweepVariable::Sigma2,
            _ => return None,
        })
    }

    pub fn is_count(&self) -> bool {
        !matches!(self, SweepVariable::Sigma1 | SweepVariable::Sigma2)
    }

    fn apply(&self, value: f64, gt: &mut GroundTruth, cfg: &mut LearnerConfig) -> Result<()> {
        if self.is_count() {
            if !(value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                return Err(Error::InvalidSpec(format!(
                    "{} must be a non-negative integer, got {value}",
                    self.as_str()
                )));
            }
        } else if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidSpec(format!("{} must be non-negative, got {value}", self.as_str())));
        }
        let k = value as usize;
        match self {
            SweepVariable::P => cfg.p = k,
            SweepVariable::P1 => cfg.p1 = k,
            SweepVariable::P2 => cfg.p2 = k,
            SweepVariable::N1 => cfg.n1 = k,
            SweepVariable::N2 => cfg.n2 = k,
            SweepVariable::Sigma1 => gt.sigma1 = value,
            SweepVariable::Sigma2 => gt.sigma2 = value,
        }
        Ok(())
    }
}

/// Quantity averaged over replicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    /// Target model error `‖w̃2 − w2‖² + ‖q̃2 − q2‖²`.
    ModelError,
    /// `‖w2 − w̃‖²` for the common part handed to the target.
    TransferError,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::ModelError => "model_error",
            Metric::TransferError => "transfer_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    pub replicates: usize,
    pub master_seed: u64,
    pub method: TransferMethod,
    pub metric: Metric,
    /// Worker threads; 0 lets the pool pick.
    pub threads: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidSpec("grid is empty".into()));
        }
        if self.replicates < 2 {
            return Err(Error::InvalidSpec(format!("need at least 2 replicates, got {}", self.replicates)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermSummary {
    pub name: &'static str,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub variable: SweepVariable,
    pub value: f64,
    pub regime: Regime,
    pub empirical: Summary,
    pub terms: Vec<TermSummary>,
    pub theory: Option<TheoryResult>,
    pub theory_term1: Option<f64>,
    pub theory_term2: Option<f64>,
    pub scenario: ScenarioParams,
}

impl SweepRecord {
    pub fn term(&self, name: &str) -> Option<Summary> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.summary)
    }
}

/// Closed form matching a record: the total (when one exists) and the two
/// named terms.
struct PointTheory {
    regime: Regime,
    total: Option<TheoryResult>,
    term1: Option<f64>,
    term2: Option<f64>,
}

fn theory_for(method: TransferMethod, metric: Metric, sp: &ScenarioParams) -> PointTheory {
    let termed = |regime, t: Result<TermedResult>| match t {
        Ok(t) => PointTheory { regime, total: Some(t.result), term1: t.term1, term2: t.term2 },
        Err(_) => PointTheory { regime, total: None, term1: None, term2: None },
    };
    match (metric, method) {
        (Metric::TransferError, TransferMethod::OptionA | TransferMethod::OptionB) => PointTheory {
            regime: sp.step1_regime(),
            total: transferring_error(sp).ok(),
            term1: None,
            term2: None,
        },
        (Metric::TransferError, _) => PointTheory { regime: sp.pooled_regime(), total: None, term1: None, term2: None },
        (Metric::ModelError, TransferMethod::OptionA) => termed(
            sp.option_a_regime(),
            transferring_error(sp).and_then(|lco| option_a_error_from(sp, &lco)),
        ),
        (Metric::ModelError, TransferMethod::OptionB) => {
            let t = match sp.option_b_regime() {
                Regime::Underparameterized => option_b_error(sp, 0.0),
                _ => transferring_error(sp).and_then(|lco| option_b_error_from(sp, &lco)),
            };
            termed(sp.option_b_regime(), t)
        }
        (Metric::ModelError, TransferMethod::SampleTransfer) => {
            let regime = sp.pooled_regime();
            match sample_transfer_theory(sp) {
                Ok(st) => PointTheory {
                    regime,
                    total: Some(st.total()),
                    term1: Some(st.k_bias),
                    term2: Some(st.k_noise),
                },
                Err(_) => PointTheory { regime, total: None, term1: None, term2: None },
            }
        }
        // The fine-tuning variance only has a high-probability bound, so
        // there is no total; term1 carries the expected refit bias.
        (Metric::ModelError, TransferMethod::SampleTransferFineTuned) => PointTheory {
            regime: sp.pooled_regime(),
            total: None,
            term1: fine_tune_theory(sp).ok().map(|ft| ft.t_bias),
            term2: sample_transfer_theory(sp).ok().map(|st| st.k_noise),
        },
    }
}

struct Replicate {
    metric: f64,
    terms: Vec<(&'static str, f64)>,
}

/// Runs every grid point. Output is identical for any thread count.
pub fn run_sweep(
    spec: &SweepSpec,
    truth: &GroundTruth,
    cfg: &LearnerConfig,
    sacrifice: &Sacrifice,
) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let run = || -> Result<Vec<SweepRecord>> {
        spec.grid
            .iter()
            .enumerate()
            .map(|(i, &v)| run_point(spec, i as u64, v, truth, cfg, sacrifice))
            .collect()
    };
    if spec.threads == 1 {
        run()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.threads)
            .build()
            .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?;
        pool.install(run)
    }
}

fn run_point(
    spec: &SweepSpec,
    index: u64,
    value: f64,
    truth: &GroundTruth,
    cfg: &LearnerConfig,
    sacrifice: &Sacrifice,
) -> Result<SweepRecord> {
    let mut gt = truth.clone();
    let mut cfg = *cfg;
    spec.variable.apply(value, &mut gt, &mut cfg)?;
    let ext = extend_truth(&gt, &cfg, sacrifice)?;
    let sp = ScenarioParams::from_truth(&ext, &cfg);

    let source_only = spec.metric == Metric::TransferError
        && matches!(spec.method, TransferMethod::OptionA | TransferMethod::OptionB);
    let one = |r: u64| -> Result<Replicate> {
        let mut rng = replicate_rng(spec.master_seed, index, r);
        if source_only {
            let (src, _) = train_source(&ext, &cfg, &mut rng)?;
            let te = (&ext.w2e - &src.w_tilde).norm_squared();
            return Ok(Replicate { metric: te, terms: Vec::new() });
        }
        let out = run_method(spec.method, &ext, &cfg, &mut rng)?;
        let metric = match spec.metric {
            Metric::ModelError => out.model_error,
            Metric::TransferError => out.transfer_error,
        };
        Ok(Replicate { metric, terms: out.decomposition.iter().map(|t| (t.name, t.value)).collect() })
    };
    let reps: Vec<Replicate> = if spec.threads == 1 {
        (0..spec.replicates as u64).map(one).collect::<Result<_>>()?
    } else {
        (0..spec.replicates as u64).into_par_iter().map(one).collect::<Result<_>>()?
    };

    let metrics: Vec<f64> = reps.iter().map(|r| r.metric).collect();
    let terms = reps[0]
        .terms
        .iter()
        .enumerate()
        .map(|(k, &(name, _))| {
            let xs: Vec<f64> = reps.iter().map(|r| r.terms[k].1).collect();
            TermSummary { name, summary: Summary::from_samples(&xs) }
        })
        .collect();
    let th = theory_for(spec.method, spec.metric, &sp);
    Ok(SweepRecord {
        variable: spec.variable,
        value,
        regime: th.regime,
        empirical: Summary::from_samples(&metrics),
        terms,
        theory: th.total,
        theory_term1: th.term1,
        theory_term2: th.term2,
        scenario: sp,
    })
}
