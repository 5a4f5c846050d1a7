//! Ground truth, learner configuration, and the Gaussian data model.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Which of the two tasks a vector or dataset belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Source,
    Target,
}

/// True parameters of both tasks, indexed by true feature.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub w1: DVector<f64>,
    pub w2: DVector<f64>,
    pub q1: DVector<f64>,
    pub q2: DVector<f64>,
    pub sigma1: f64,
    pub sigma2: f64,
}

/// How the target's common parameters relate to the source's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CommonMode {
    /// `w2 = w1`
    Equal,
    /// `w2 = -w1`
    Opposite,
    /// `w2 = w1 + delta * u` for a fixed unit direction `u`.
    Offset { delta: f64 },
}

/// Norm-level description of a ground truth; vectors are spread evenly
/// over their coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthSpec {
    pub s: usize,
    pub s1: usize,
    pub s2: usize,
    pub w1_norm: f64,
    pub mode: CommonMode,
    pub q1_norm: f64,
    pub q2_norm: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

fn flat(len: usize, norm: f64, what: &str) -> Result<DVector<f64>> {
    if !(norm.is_finite() && norm >= 0.0) {
        return Err(Error::InvalidParameter(format!("{what} norm must be finite and non-negative")));
    }
    if len == 0 {
        if norm > 0.0 {
            return Err(Error::InvalidParameter(format!("{what} has no coordinates but norm {norm}")));
        }
        return Ok(DVector::zeros(0));
    }
    Ok(DVector::from_element(len, norm / (len as f64).sqrt()))
}

impl GroundTruth {
    pub fn new(
        w1: DVector<f64>,
        w2: DVector<f64>,
        q1: DVector<f64>,
        q2: DVector<f64>,
        sigma1: f64,
        sigma2: f64,
    ) -> Result<Self> {
        let gt = GroundTruth { w1, w2, q1, q2, sigma1, sigma2 };
        gt.validate()?;
        Ok(gt)
    }

    /// All-zero parameters with the given feature counts and noise levels.
    pub fn zeros(s: usize, s1: usize, s2: usize, sigma1: f64, sigma2: f64) -> Self {
        GroundTruth {
            w1: DVector::zeros(s),
            w2: DVector::zeros(s),
            q1: DVector::zeros(s1),
            q2: DVector::zeros(s2),
            sigma1,
            sigma2,
        }
    }

    pub fn from_spec(spec: &TruthSpec) -> Result<Self> {
        let w1 = flat(spec.s, spec.w1_norm, "w1")?;
        let w2 = match spec.mode {
            CommonMode::Equal => w1.clone(),
            CommonMode::Opposite => -&w1,
            CommonMode::Offset { delta } => {
                if !(delta.is_finite() && delta >= 0.0) {
                    return Err(Error::InvalidParameter("delta must be finite and non-negative".into()));
                }
                let mut u = DVector::zeros(spec.s);
                match spec.s {
                    0 if delta > 0.0 => {
                        return Err(Error::InvalidParameter("offset needs at least one common feature".into()))
                    }
                    0 => {}
                    1 => u[0] = 1.0,
                    _ => {
                        u[0] = std::f64::consts::FRAC_1_SQRT_2;
                        u[1] = -std::f64::consts::FRAC_1_SQRT_2;
                    }
                }
                &w1 + u * delta
            }
        };
        GroundTruth::new(
            w1,
            w2,
            flat(spec.s1, spec.q1_norm, "q1")?,
            flat(spec.s2, spec.q2_norm, "q2")?,
            spec.sigma1,
            spec.sigma2,
        )
    }

    pub fn s(&self) -> usize {
        self.w1.len()
    }

    pub fn s1(&self) -> usize {
        self.q1.len()
    }

    pub fn s2(&self) -> usize {
        self.q2.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.w2.len() != self.w1.len() {
            return Err(Error::DimensionMismatch {
                what: "w2",
                expected: self.w1.len(),
                found: self.w2.len(),
            });
        }
        for (name, sigma) in [("sigma1", self.sigma1), ("sigma2", self.sigma2)] {
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and non-negative")));
            }
        }
        let finite = [&self.w1, &self.w2, &self.q1, &self.q2]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::InvalidParameter("ground-truth parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Learner's feature selection and sample counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LearnerConfig {
    pub p: usize,
    pub p1: usize,
    pub p2: usize,
    pub n1: usize,
    pub n2: usize,
}

impl LearnerConfig {
    pub fn new(p: usize, p1: usize, p2: usize, n1: usize, n2: usize) -> Self {
        LearnerConfig { p, p1, p2, n1, n2 }
    }

    pub fn p_task(&self, task: Task) -> usize {
        match task {
            Task::Source => self.p1,
            Task::Target => self.p2,
        }
    }

    pub fn n_task(&self, task: Task) -> usize {
        match task {
            Task::Source => self.n1,
            Task::Target => self.n2,
        }
    }
}

/// True-feature indices left out of the learner's selection.
///
/// A common index removes that feature from both tasks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sacrifice {
    pub common: Vec<usize>,
    pub task1: Vec<usize>,
    pub task2: Vec<usize>,
}

impl Sacrifice {
    pub fn none() -> Self {
        Sacrifice::default()
    }

    pub fn is_empty(&self) -> bool {
        self.common.is_empty() && self.task1.is_empty() && self.task2.is_empty()
    }
}

/// Ground truth written in the learner's coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedTruth {
    pub w1e: DVector<f64>,
    pub w2e: DVector<f64>,
    pub q1e: DVector<f64>,
    pub q2e: DVector<f64>,
    pub effective_sigma1: f64,
    pub effective_sigma2: f64,
}

impl ExtendedTruth {
    pub fn common(&self, task: Task) -> &DVector<f64> {
        match task {
            Task::Source => &self.w1e,
            Task::Target => &self.w2e,
        }
    }

    pub fn specific(&self, task: Task) -> &DVector<f64> {
        match task {
            Task::Source => &self.q1e,
            Task::Target => &self.q2e,
        }
    }

    pub fn sigma(&self, task: Task) -> f64 {
        match task {
            Task::Source => self.effective_sigma1,
            Task::Target => self.effective_sigma2,
        }
    }

    /// `‖w2 - w1‖`
    pub fn delta(&self) -> f64 {
        (&self.w2e - &self.w1e).norm()
    }
}

/// Kept values padded with zeros to `dim`, plus the squared norm of the
/// dropped values for each source vector.
fn keep_and_pad(
    parts: &[&DVector<f64>],
    dropped: &[usize],
    dim: usize,
    what: &'static str,
) -> Result<(Vec<DVector<f64>>, Vec<f64>)> {
    let len = parts[0].len();
    let mut seen = vec![false; len];
    for &i in dropped {
        if i >= len {
            return Err(Error::InvalidSacrifice(format!(
                "{what} index {i} out of range for {len} true features"
            )));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidSacrifice(format!("{what} index {i} listed twice")));
        }
    }
    let kept = len - dropped.len();
    if dim < kept {
        return Err(Error::DimensionMismatch { what, expected: kept, found: dim });
    }
    let mut out = Vec::with_capacity(parts.len());
    let mut missing = Vec::with_capacity(parts.len());
    for v in parts {
        let mut e = DVector::zeros(dim);
        let mut k = 0;
        let mut lost = 0.0;
        for (i, &x) in v.iter().enumerate() {
            if seen[i] {
                lost += x * x;
            } else {
                e[k] = x;
                k += 1;
            }
        }
        out.push(e);
        missing.push(lost);
    }
    Ok((out, missing))
}

/// Writes the truth in the learner's coordinates. Kept true parameters take
/// the leading coordinates; sacrificed ones are folded into the noise.
pub fn extend_truth(gt: &GroundTruth, cfg: &LearnerConfig, sacrifice: &Sacrifice) -> Result<ExtendedTruth> {
    gt.validate()?;
    let (w, w_miss) = keep_and_pad(&[&gt.w1, &gt.w2], &sacrifice.common, cfg.p, "common features")?;
    let (q1, q1_miss) = keep_and_pad(&[&gt.q1], &sacrifice.task1, cfg.p1, "source-specific features")?;
    let (q2, q2_miss) = keep_and_pad(&[&gt.q2], &sacrifice.task2, cfg.p2, "target-specific features")?;
    let mut w = w.into_iter();
    Ok(ExtendedTruth {
        w1e: w.next().unwrap(),
        w2e: w.next().unwrap(),
        q1e: q1.into_iter().next().unwrap(),
        q2e: q2.into_iter().next().unwrap(),
        effective_sigma1: (gt.sigma1 * gt.sigma1 + w_miss[0] + q1_miss[0]).sqrt(),
        effective_sigma2: (gt.sigma2 * gt.sigma2 + w_miss[1] + q2_miss[0]).sqrt(),
    })
}

/// One task's training data; columns are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub y: DVector<f64>,
    pub eps: DVector<f64>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// `[X; Z]`
    pub fn stacked(&self) -> DMatrix<f64> {
        let (p, pi, n) = (self.x.nrows(), self.z.nrows(), self.n());
        let mut u = DMatrix::zeros(p + pi, n);
        u.rows_mut(0, p).copy_from(&self.x);
        u.rows_mut(p, pi).copy_from(&self.z);
        u
    }
}

pub(crate) fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_vec(rows, cols, data)
}

pub(crate) fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, scale: f64) -> DVector<f64> {
    DVector::from_iterator(len, (0..len).map(|_| scale * rng.sample::<f64, _>(StandardNormal)))
}

/// Draws `n` samples for `task`. Entries are consumed from the stream in
/// the order X, Z, noise, each column-major.
pub fn sample_dataset<R: Rng + ?Sized>(truth: &ExtendedTruth, task: Task, n: usize, rng: &mut R) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let w = truth.common(task);
    let q = truth.specific(task);
    let x = gaussian_matrix(rng, w.len(), n);
    let z = gaussian_matrix(rng, q.len(), n);
    let eps = gaussian_vector(rng, n, truth.sigma(task));
    let y = x.tr_mul(w) + z.tr_mul(q) + &eps;
    Ok(Dataset { x, z, y, eps })
}
