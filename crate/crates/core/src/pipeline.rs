//! Source training, the two parameter-transfer options, sample transfer,
//! and model-error evaluation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{min_norm_fit_from_init, PinvOp};
use crate::model::{sample_dataset, Dataset, ExtendedTruth, LearnerConfig, Task};

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedModel {
    pub task: Task,
    pub w_tilde: DVector<f64>,
    pub q_tilde: DVector<f64>,
}

/// A named realized error component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferOutcome {
    pub model: LearnedModel,
    pub source_model: LearnedModel,
    pub model_error: f64,
    pub transfer_error: f64,
    pub decomposition: Vec<Term>,
}

impl TransferOutcome {
    pub fn term(&self, name: &str) -> Option<f64> {
        self.decomposition.iter().find(|t| t.name == name).map(|t| t.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransferMethod {
    OptionA,
    OptionB,
    SampleTransfer,
    SampleTransferFineTuned,
}

impl TransferMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransferMethod::OptionA => "option_a",
            TransferMethod::OptionB => "option_b",
            TransferMethod::SampleTransfer => "sample_transfer",
            TransferMethod::SampleTransferFineTuned => "sample_transfer_fine_tuned",
        }
    }
}

/// Min-norm interpolation when there are more parameters than samples,
/// least squares otherwise.
fn fit(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    PinvOp::new(a)?.apply(y)
}

fn sq_dist(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm_squared()
}

fn check_truth(truth: &ExtendedTruth, cfg: &LearnerConfig) -> Result<()> {
    let checks = [
        ("w1", cfg.p, truth.w1e.len()),
        ("w2", cfg.p, truth.w2e.len()),
        ("q1", cfg.p1, truth.q1e.len()),
        ("q2", cfg.p2, truth.q2e.len()),
    ];
    for (what, expected, found) in checks {
        if expected != found {
            return Err(Error::DimensionMismatch { what, expected, found });
        }
    }
    Ok(())
}

/// Fits the source task on `[X1; Z1]`.
pub fn train_source<R: Rng + ?Sized>(
    truth: &ExtendedTruth,
    cfg: &LearnerConfig,
    rng: &mut R,
) -> Result<(LearnedModel, Dataset)> {
    check_truth(truth, cfg)?;
    let data = sample_dataset(truth, Task::Source, cfg.n1, rng)?;
    let a = fit(&data.stacked(), &data.y)?;
    let model = LearnedModel {
        task: Task::Source,
        w_tilde: a.rows(0, cfg.p).into_owned(),
        q_tilde: a.rows(cfg.p, cfg.p1).into_owned(),
    };
    Ok((model, data))
}

/// `‖w̃ − w2‖² + ‖q̃ − q2‖²` against the target truth.
pub fn model_error(model: &LearnedModel, truth: &ExtendedTruth) -> Result<f64> {
    if model.w_tilde.len() != truth.w2e.len() {
        return Err(Error::DimensionMismatch {
            what: "common parameters",
            expected: truth.w2e.len(),
            found: model.w_tilde.len(),
        });
    }
    if model.q_tilde.len() != truth.q2e.len() {
        return Err(Error::DimensionMismatch {
            what: "target-specific parameters",
            expected: truth.q2e.len(),
            found: model.q_tilde.len(),
        });
    }
    Ok(sq_dist(&model.w_tilde, &truth.w2e) + sq_dist(&model.q_tilde, &truth.q2e))
}

fn check_source(source: &LearnedModel, cfg: &LearnerConfig) -> Result<()> {
    if source.w_tilde.len() != cfg.p {
        return Err(Error::DimensionMismatch {
            what: "source common parameters",
            expected: cfg.p,
            found: source.w_tilde.len(),
        });
    }
    Ok(())
}

fn outcome(
    model: LearnedModel,
    source: &LearnedModel,
    truth: &ExtendedTruth,
    transfer_error: f64,
    mut decomposition: Vec<Term>,
) -> Result<TransferOutcome> {
    let specific = sq_dist(&model.q_tilde, &truth.q2e);
    let common = sq_dist(&model.w_tilde, &truth.w2e);
    decomposition.insert(0, Term { name: "common_error", value: common });
    decomposition.insert(1, Term { name: "specific_error", value: specific });
    Ok(TransferOutcome {
        model_error: common + specific,
        model,
        source_model: source.clone(),
        transfer_error,
        decomposition,
    })
}

/// Copies the source's common part and fits only the target-specific part
/// on the residual `y2 − X2ᵀw̃1`.
pub fn transfer_option_a<R: Rng + ?Sized>(
    source: &LearnedModel,
    truth: &ExtendedTruth,
    cfg: &LearnerConfig,
    rng: &mut R,
) -> Result<TransferOutcome> {
    check_truth(truth, cfg)?;
    check_source(source, cfg)?;
    let data = sample_dataset(truth, Task::Target, cfg.n2, rng)?;
    let resid = &data.y - data.x.tr_mul(&source.w_tilde);
    let q = fit(&data.z, &resid)?;
    let model = LearnedModel { task: Task::Target, w_tilde: source.w_tilde.clone(), q_tilde: q };
    let te = sq_dist(&truth.w2e, &source.w_tilde);
    outcome(model, source, truth, te, Vec::new())
}

/// Uses `(w̃1, 0)` as the starting point of the target fit over `[X2; Z2]`:
/// the interpolator closest to it when overparameterized, the joint
/// least-squares fit otherwise.
pub fn transfer_option_b<R: Rng + ?Sized>(
    source: &LearnedModel,
    truth: &ExtendedTruth,
    cfg: &LearnerConfig,
    rng: &mut R,
) -> Result<TransferOutcome> {
    check_truth(truth, cfg)?;
    check_source(source, cfg)?;
    let data = sample_dataset(truth, Task::Target, cfg.n2, rng)?;
    let u = data.stacked();
    let a = if cfg.p + cfg.p2 > cfg.n2 {
        let mut a0 = DVector::zeros(cfg.p + cfg.p2);
        a0.rows_mut(0, cfg.p).copy_from(&source.w_tilde);
        min_norm_fit_from_init(&u, &data.y, &a0)?
    } else {
        fit(&u, &data.y)?
    };
    let model = LearnedModel {
        task: Task::Target,
        w_tilde: a.rows(0, cfg.p).into_owned(),
        q_tilde: a.rows(cfg.p, cfg.p2).into_owned(),
    };
    let te = sq_dist(&truth.w2e, &source.w_tilde);
    outcome(model, source, truth, te, Vec::new())
}

/// Pools source and target samples on the common features, optionally
/// followed by fitting the target-specific part on the target residual.
///
/// The decomposition carries the realized `k_bias`, `k_noise`,
/// `k_similarity` and `k_cross` (which sum to the model error) and, when
/// fine-tuning, `t_bias` and `t_var`.
pub fn sample_transfer<R: Rng + ?Sized>(
    truth: &ExtendedTruth,
    cfg: &LearnerConfig,
    rng: &mut R,
    fine_tune: bool,
) -> Result<TransferOutcome> {
    check_truth(truth, cfg)?;
    let src = sample_dataset(truth, Task::Source, cfg.n1, rng)?;
    let tgt = sample_dataset(truth, Task::Target, cfg.n2, rng)?;
    let (p, n1, n2) = (cfg.p, cfg.n1, cfg.n2);
    let nbar = n1 + n2;

    let mut v = DMatrix::zeros(p, nbar);
    v.columns_mut(0, n1).copy_from(&src.x);
    v.columns_mut(n1, n2).copy_from(&tgt.x);
    let mut y = DVector::zeros(nbar);
    y.rows_mut(0, n1).copy_from(&src.y);
    y.rows_mut(n1, n2).copy_from(&tgt.y);

    let op = PinvOp::new(&v)?;
    let w = op.apply(&y)?;

    let mut eps_tilde = DVector::zeros(nbar);
    eps_tilde.rows_mut(0, n1).copy_from(&(src.z.tr_mul(&truth.q1e) + &src.eps));
    eps_tilde.rows_mut(n1, n2).copy_from(&(tgt.z.tr_mul(&truth.q2e) + &tgt.eps));
    let noise_part = op.apply(&eps_tilde)?;

    let dw = &truth.w1e - &truth.w2e;
    let sim_part = if dw.iter().any(|&x| x != 0.0) {
        let mut xi = DVector::zeros(nbar);
        xi.rows_mut(0, n1).copy_from(&src.x.tr_mul(&dw));
        op.apply(&xi)?
    } else {
        DVector::zeros(p)
    };

    let common_bias = (&truth.w2e - op.project(&truth.w2e)?).norm_squared();

    let mut terms = Vec::new();
    let q = if fine_tune {
        let resid = &tgt.y - tgt.x.tr_mul(&w);
        let zop = PinvOp::new(&tgt.z)?;
        let q = zop.apply(&resid)?;
        let gamma = &tgt.eps - tgt.x.tr_mul(&(&w - &truth.w2e));
        let t_bias = (&truth.q2e - zop.project(&truth.q2e)?).norm_squared();
        let t_var = zop.apply(&gamma)?.norm_squared();
        terms.push(Term { name: "t_bias", value: t_bias });
        terms.push(Term { name: "t_var", value: t_var });
        q
    } else {
        DVector::zeros(cfg.p2)
    };
    let specific = sq_dist(&q, &truth.q2e);

    let mut decomposition = vec![
        Term { name: "k_bias", value: common_bias + specific },
        Term { name: "k_noise", value: noise_part.norm_squared() },
        Term { name: "k_similarity", value: sim_part.norm_squared() },
        Term { name: "k_cross", value: 2.0 * noise_part.dot(&sim_part) },
    ];
    decomposition.extend(terms);

    let model = LearnedModel { task: Task::Target, w_tilde: w, q_tilde: q };
    // No source model is trained; the pooled fit doubles as the source's view.
    let source = LearnedModel {
        task: Task::Source,
        w_tilde: model.w_tilde.clone(),
        q_tilde: DVector::zeros(cfg.p1),
    };
    let te = sq_dist(&truth.w2e, &model.w_tilde);
    outcome(model, &source, truth, te, decomposition)
}

/// Runs one replicate of `method`, drawing all data from `rng`.
pub fn run_method<R: Rng + ?Sized>(
    method: TransferMethod,
    truth: &ExtendedTruth,
    cfg: &LearnerConfig,
    rng: &mut R,
) -> Result<TransferOutcome> {
    match method {
        TransferMethod::OptionA => {
            let (src, _) = train_source(truth, cfg, rng)?;
            transfer_option_a(&src, truth, cfg, rng)
        }
        TransferMethod::OptionB => {
            let (src, _) = train_source(truth, cfg, rng)?;
            transfer_option_b(&src, truth, cfg, rng)
        }
        TransferMethod::SampleTransfer => sample_transfer(truth, cfg, rng, false),
        TransferMethod::SampleTransferFineTuned => sample_transfer(truth, cfg, rng, true),
    }
}
