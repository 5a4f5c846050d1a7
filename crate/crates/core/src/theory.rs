//! Closed-form expected errors, bounds, and design rules.

use crate::error::{Error, Result};
use crate::linalg::Regime;
use crate::model::{ExtendedTruth, LearnerConfig};

/// Scalar summary of a scenario: norms, noise levels and dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    pub w1_norm: f64,
    pub w2_norm: f64,
    pub q1_norm: f64,
    pub q2_norm: f64,
    pub delta: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub p: usize,
    pub p1: usize,
    pub p2: usize,
    pub n1: usize,
    pub n2: usize,
}

impl ScenarioParams {
    /// Uses the effective noise levels, so sacrificed features count as noise.
    pub fn from_truth(truth: &ExtendedTruth, cfg: &LearnerConfig) -> Self {
        ScenarioParams {
            w1_norm: truth.w1e.norm(),
            w2_norm: truth.w2e.norm(),
            q1_norm: truth.q1e.norm(),
            q2_norm: truth.q2e.norm(),
            delta: truth.delta(),
            sigma1: truth.effective_sigma1,
            sigma2: truth.effective_sigma2,
            p: cfg.p,
            p1: cfg.p1,
            p2: cfg.p2,
            n1: cfg.n1,
            n2: cfg.n2,
        }
    }

    /// `1 − n1/(p+p1)`
    pub fn r(&self) -> f64 {
        1.0 - self.n1 as f64 / (self.p + self.p1) as f64
    }

    pub fn step1_regime(&self) -> Regime {
        Regime::classify(self.p + self.p1, self.n1)
    }

    pub fn option_a_regime(&self) -> Regime {
        Regime::classify(self.p2, self.n2)
    }

    pub fn option_b_regime(&self) -> Regime {
        Regime::classify(self.p + self.p2, self.n2)
    }

    pub fn pooled_regime(&self) -> Regime {
        Regime::classify(self.p, self.n1 + self.n2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TheoryValue {
    Exact(f64),
    Bounds { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryResult {
    pub value: TheoryValue,
    pub regime: Regime,
}

impl TheoryResult {
    pub fn exact(value: f64, regime: Regime) -> Self {
        TheoryResult { value: TheoryValue::Exact(value), regime }
    }

    pub fn bounds(lower: f64, upper: f64, regime: Regime) -> Self {
        debug_assert!(lower <= upper, "bounds out of order: {lower} > {upper}");
        TheoryResult { value: TheoryValue::Bounds { lower, upper }, regime }
    }

    /// The point value, if exact.
    pub fn value(&self) -> Option<f64> {
        match self.value {
            TheoryValue::Exact(v) => Some(v),
            TheoryValue::Bounds { .. } => None,
        }
    }

    pub fn lower(&self) -> f64 {
        match self.value {
            TheoryValue::Exact(v) => v,
            TheoryValue::Bounds { lower, .. } => lower,
        }
    }

    pub fn upper(&self) -> f64 {
        match self.value {
            TheoryValue::Exact(v) => v,
            TheoryValue::Bounds { upper, .. } => upper,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.value, TheoryValue::Exact(_))
    }
}

/// A total with its two named terms; a term is `None` when it is not
/// defined in the regime or is only known as an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermedResult {
    pub result: TheoryResult,
    pub term1: Option<f64>,
    pub term2: Option<f64>,
}

fn require_defined(params: usize, samples: usize) -> Result<Regime> {
    match Regime::classify(params, samples) {
        Regime::Threshold => Err(Error::TheoryUndefinedAtThreshold { params, samples }),
        r => Ok(r),
    }
}

fn require_over(params: usize, samples: usize) -> Result<()> {
    match require_defined(params, samples)? {
        Regime::Overparameterized => Ok(()),
        found => Err(Error::WrongRegime { expected: Regime::Overparameterized, found }),
    }
}

fn check_lco(lco: f64) -> Result<()> {
    if lco.is_finite() && lco >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("transferring error must be finite and non-negative, got {lco}")))
    }
}

/// Noise contribution to the transferring error when step 1 interpolates:
/// `p/(p+p1) · n1σ1²/(p+p1−n1−1)`.
pub fn bnoise(sp: &ScenarioParams) -> Result<f64> {
    require_over(sp.p + sp.p1, sp.n1)?;
    let d = (sp.p + sp.p1) as f64;
    let n1 = sp.n1 as f64;
    Ok(sp.p as f64 / d * n1 * sp.sigma1 * sp.sigma1 / (d - n1 - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasBounds {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

impl BiasBounds {
    /// `min(b1², b2², b3²)`
    pub fn min_sq(&self) -> f64 {
        (self.b1 * self.b1).min(self.b2 * self.b2).min(self.b3 * self.b3)
    }
}

/// The three upper bounds on the square root of the noiseless
/// transferring error.
pub fn bias_bounds_b1_b2_b3(sp: &ScenarioParams) -> Result<BiasBounds> {
    require_over(sp.p + sp.p1, sp.n1)?;
    let r = sp.r();
    let m = r.min(1.0 - r).sqrt();
    let (w1, q1) = (sp.w1_norm, sp.q1_norm);
    Ok(BiasBounds {
        b1: sp.delta + (r * (w1 * w1 + q1 * q1)).sqrt(),
        b2: sp.w2_norm + (1.0 - r).sqrt() * w1 + m * q1,
        b3: r.sqrt() * w1 + sp.delta + m * q1,
    })
}

/// Expected `‖w2 − w̃1‖²` after step 1: exact when underparameterized, an
/// interval when overparameterized.
pub fn transferring_error(sp: &ScenarioParams) -> Result<TheoryResult> {
    let d = sp.p + sp.p1;
    match require_defined(d, sp.n1)? {
        Regime::Underparameterized => {
            let v = sp.delta * sp.delta
                + sp.p as f64 * sp.sigma1 * sp.sigma1 / (sp.n1 as f64 - d as f64 - 1.0);
            Ok(TheoryResult::exact(v, Regime::Underparameterized))
        }
        _ => {
            let noise = bnoise(sp)?;
            let bias = bias_bounds_b1_b2_b3(sp)?.min_sq();
            Ok(TheoryResult::bounds(noise, noise + bias, Regime::Overparameterized))
        }
    }
}

/// Expected target model error of Option A given a transferring error.
pub fn option_a_error(sp: &ScenarioParams, lco: f64) -> Result<TermedResult> {
    check_lco(lco)?;
    let (p2, n2) = (sp.p2 as f64, sp.n2 as f64);
    let s2 = sp.sigma2 * sp.sigma2;
    Ok(match require_defined(sp.p2, sp.n2)? {
        Regime::Overparameterized => {
            let a1 = lco + n2 * (lco + s2) / (p2 - n2 - 1.0);
            let a2 = (1.0 - n2 / p2) * sp.q2_norm * sp.q2_norm;
            TermedResult {
                result: TheoryResult::exact(a1 + a2, Regime::Overparameterized),
                term1: Some(a1),
                term2: Some(a2),
            }
        }
        _ => TermedResult {
            result: TheoryResult::exact(lco + p2 * (lco + s2) / (n2 - p2 - 1.0), Regime::Underparameterized),
            term1: None,
            term2: None,
        },
    })
}

/// Expected target model error of Option B given a transferring error.
pub fn option_b_error(sp: &ScenarioParams, lco: f64) -> Result<TermedResult> {
    check_lco(lco)?;
    let d = (sp.p + sp.p2) as f64;
    let n2 = sp.n2 as f64;
    let s2 = sp.sigma2 * sp.sigma2;
    Ok(match require_defined(sp.p + sp.p2, sp.n2)? {
        Regime::Overparameterized => {
            let b1 = (1.0 - n2 / d) * (lco + sp.q2_norm * sp.q2_norm);
            let b2 = n2 * s2 / (d - n2 - 1.0);
            TermedResult {
                result: TheoryResult::exact(b1 + b2, Regime::Overparameterized),
                term1: Some(b1),
                term2: Some(b2),
            }
        }
        _ => TermedResult {
            result: TheoryResult::exact(d * s2 / (n2 - d - 1.0), Regime::Underparameterized),
            term1: None,
            term2: None,
        },
    })
}

/// Propagates an exact or interval transferring error through an option's
/// closed form, which is increasing in it.
fn propagate(
    sp: &ScenarioParams,
    lco: &TheoryResult,
    f: fn(&ScenarioParams, f64) -> Result<TermedResult>,
) -> Result<TermedResult> {
    match lco.value {
        TheoryValue::Exact(v) => f(sp, v),
        TheoryValue::Bounds { lower, upper } => {
            let lo = f(sp, lower)?;
            let hi = f(sp, upper)?;
            let same = |a: Option<f64>, b: Option<f64>| if a == b { a } else { None };
            let result = if lo.result.lower() == hi.result.upper() {
                lo.result
            } else {
                TheoryResult::bounds(lo.result.lower(), hi.result.upper(), lo.result.regime)
            };
            Ok(TermedResult { result, term1: same(lo.term1, hi.term1), term2: same(lo.term2, hi.term2) })
        }
    }
}

pub fn option_a_error_from(sp: &ScenarioParams, lco: &TheoryResult) -> Result<TermedResult> {
    propagate(sp, lco, option_a_error)
}

pub fn option_b_error_from(sp: &ScenarioParams, lco: &TheoryResult) -> Result<TermedResult> {
    propagate(sp, lco, option_b_error)
}

/// Stationary `p2` of Option A's overparameterized curve, if it has one.
pub fn descent_floor_option_a(sp: &ScenarioParams, lco: f64) -> Option<f64> {
    let c = lco + sp.sigma2 * sp.sigma2;
    let q = sp.q2_norm;
    if c >= q * q {
        return None;
    }
    Some((sp.n2 as f64 + 1.0) / (1.0 - c.sqrt() / q))
}

/// Stationary `p2` of Option B's overparameterized curve at the scenario's
/// `p`, if it has one.
pub fn descent_floor_option_b(sp: &ScenarioParams, lco: f64) -> Option<f64> {
    let m = lco + sp.q2_norm * sp.q2_norm;
    if sp.sigma2 * sp.sigma2 >= m {
        return None;
    }
    let t = (sp.n2 as f64 + 1.0) / (1.0 - sp.sigma2 / m.sqrt());
    let p = sp.p as f64;
    if p >= t {
        None
    } else {
        Some(t - p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Increasing,
    Decreasing,
    Stationary,
}

/// Direction of the noise term in `p` at fixed `p1`, valid when step 1 is
/// overparameterized: decreasing iff `p² > p1(p1 − n1 − 1)`.
pub fn bnoise_trend(p: usize, p1: usize, n1: usize) -> Trend {
    let lhs = (p as i128) * (p as i128);
    let rhs = (p1 as i128) * (p1 as i128 - n1 as i128 - 1);
    match lhs.cmp(&rhs) {
        std::cmp::Ordering::Greater => Trend::Decreasing,
        std::cmp::Ordering::Less => Trend::Increasing,
        std::cmp::Ordering::Equal => Trend::Stationary,
    }
}

/// Split of a fixed feature budget between common and source-specific parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetAllocation {
    pub p: usize,
    pub p1: usize,
    /// At fixed `p + p1`, the transferring error does not decrease in `p`.
    pub lco_increasing_in_p: bool,
    /// Transferring error at the recommended split, when defined.
    pub transferring_error: Option<TheoryResult>,
}

/// Keeps only the true common features in the common part and gives the
/// rest of the budget to the source-specific part.
pub fn allocate_budget(c: usize, s: usize, sp: &ScenarioParams) -> Result<BudgetAllocation> {
    if c <= s {
        return Err(Error::InvalidParameter(format!("budget {c} must exceed the common feature count {s}")));
    }
    let at = ScenarioParams { p: s, p1: c - s, ..*sp };
    Ok(BudgetAllocation {
        p: s,
        p1: c - s,
        lco_increasing_in_p: true,
        transferring_error: transferring_error(&at).ok(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SacrificeAnalysis {
    /// Lower bound on the transferring error keeping both common features.
    pub q1: f64,
    /// Upper bound after sacrificing one of them.
    pub q2: f64,
    pub recommend: bool,
}

/// Compares keeping two small common features against sacrificing one of
/// value `sacrifice_value` at budget `C` (`p + p1 = C`).
pub fn sacrifice_analysis(c: usize, n1: usize, sigma1: f64, sacrifice_value: f64) -> Result<SacrificeAnalysis> {
    if c <= n1 + 1 {
        return Err(Error::WrongRegime {
            expected: Regime::Overparameterized,
            found: Regime::classify(c, n1),
        });
    }
    let (cf, n) = (c as f64, n1 as f64);
    let s2 = sigma1 * sigma1;
    let q1 = 2.0 / cf * n * s2 / (cf - n - 1.0);
    let q2 = 1.0 + 1.0 / cf * n * (s2 + sacrifice_value * sacrifice_value) / (cf - n - 1.0);
    Ok(SacrificeAnalysis { q1, q2, recommend: q1 > q2 })
}

/// The `σ1²` at which sacrificing starts to pay off.
pub fn sacrifice_crossover_sigma1_sq(c: usize, n1: usize, sacrifice_value: f64) -> Result<f64> {
    if c <= n1 + 1 {
        return Err(Error::WrongRegime {
            expected: Regime::Overparameterized,
            found: Regime::classify(c, n1),
        });
    }
    let (cf, n) = (c as f64, n1 as f64);
    let k = n / (cf * (cf - n - 1.0));
    Ok(1.0 / k + sacrifice_value * sacrifice_value)
}

/// Expected bias and noise of pooled-sample transfer, plus the
/// high-probability interval for the dissimilarity term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleTransferTheory {
    pub regime: Regime,
    pub k_bias: f64,
    pub k_noise: f64,
    pub k_similarity: TheoryResult,
}

impl SampleTransferTheory {
    /// Sum of the expectations and the dissimilarity interval.
    pub fn total(&self) -> TheoryResult {
        let base = self.k_bias + self.k_noise;
        TheoryResult::bounds(base + self.k_similarity.lower(), base + self.k_similarity.upper(), self.regime)
    }
}

fn chi_upper(n: f64) -> f64 {
    n + 2.0 * (n * n.ln()).sqrt() + 2.0 * n.ln()
}

fn chi_lower(n: f64) -> f64 {
    n - 2.0 * (n * n.ln()).sqrt()
}

pub fn sample_transfer_theory(sp: &ScenarioParams) -> Result<SampleTransferTheory> {
    let nbar = sp.n1 + sp.n2;
    let regime = require_defined(sp.p, nbar)?;
    let (p, nb, n1, n2) = (sp.p as f64, nbar as f64, sp.n1 as f64, sp.n2 as f64);
    let load = n1 * (sp.sigma1 * sp.sigma1 + sp.q1_norm * sp.q1_norm)
        + n2 * (sp.sigma2 * sp.sigma2 + sp.q2_norm * sp.q2_norm);
    let q2sq = sp.q2_norm * sp.q2_norm;
    let d2 = sp.delta * sp.delta;
    let zero = TheoryResult::bounds(0.0, 0.0, regime);
    Ok(match regime {
        Regime::Overparameterized => {
            let k_similarity = if d2 == 0.0 {
                zero
            } else {
                let l = (2.0 * n1.ln()).sqrt();
                let gap = p.sqrt() - nb.sqrt() - l;
                if gap <= 0.0 {
                    return Err(Error::DegenerateInterval(format!(
                        "sqrt(p) - sqrt(n1+n2) - sqrt(2 ln n1) = {gap} is not positive"
                    )));
                }
                let lower = (chi_lower(n1) * d2 / (p.sqrt() + nb.sqrt() + l).powi(2)).max(0.0);
                let upper = chi_upper(n1) * d2 / (gap * gap);
                TheoryResult::bounds(lower, upper, regime)
            };
            SampleTransferTheory {
                regime,
                k_bias: (1.0 - nb / p) * sp.w2_norm * sp.w2_norm + q2sq,
                k_noise: load / (p - nb - 1.0),
                k_similarity,
            }
        }
        _ => {
            let k_similarity = if d2 == 0.0 {
                zero
            } else {
                let gap = nb.sqrt() - p.sqrt() - (2.0 * nb.ln()).sqrt();
                if gap <= 0.0 {
                    return Err(Error::DegenerateInterval(format!(
                        "sqrt(n1+n2) - sqrt(p) - sqrt(2 ln(n1+n2)) = {gap} is not positive"
                    )));
                }
                TheoryResult::bounds(0.0, chi_upper(n1) * d2 / (gap * gap), regime)
            };
            SampleTransferTheory {
                regime,
                k_bias: q2sq,
                k_noise: p * load / (nb * (nb - p - 1.0)),
                k_similarity,
            }
        }
    })
}

/// `(k̃, C)` of the fine-tuning variance bound.
pub fn fine_tune_constants(sp: &ScenarioParams) -> Result<(f64, f64)> {
    let p = sp.p as f64;
    let nb = (sp.n1 + sp.n2) as f64;
    let den = chi_lower(nb);
    if den.is_nan() || den <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "n1+n2 - 2 sqrt((n1+n2) ln(n1+n2)) = {den} is not positive"
        )));
    }
    let k = if sp.p == 0 { 0.0 } else { chi_upper(p) / den };
    let (n1, n2) = (sp.n1 as f64, sp.n2 as f64);
    let (s1, s2) = (sp.sigma1 * sp.sigma1, sp.sigma2 * sp.sigma2);
    let c = 3.0 * (k * s1 + k * sp.q1_norm * sp.q1_norm + sp.delta * sp.delta) * chi_upper(n1)
        + 3.0 * (s2 + k * s2 + k * sp.q2_norm * sp.q2_norm) * chi_upper(n2);
    Ok((k, c))
}

/// Fine-tuning terms: the expected bias of the target-specific refit and,
/// where its denominator is positive, the high-probability variance bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineTuneTheory {
    pub regime: Regime,
    pub t_bias: f64,
    pub t_var_upper: Option<f64>,
}

pub fn fine_tune_theory(sp: &ScenarioParams) -> Result<FineTuneTheory> {
    let regime = require_defined(sp.p2, sp.n2)?;
    let (p2, n2) = (sp.p2 as f64, sp.n2 as f64);
    let (_, c) = fine_tune_constants(sp)?;
    let (t_bias, gap) = match regime {
        Regime::Overparameterized => (
            (1.0 - n2 / p2) * sp.q2_norm * sp.q2_norm,
            p2.sqrt() - n2.sqrt() - (2.0 * n2.ln()).sqrt(),
        ),
        _ => (0.0, n2.sqrt() - p2.sqrt() - (2.0 * p2.max(1.0).ln()).sqrt()),
    };
    Ok(FineTuneTheory {
        regime,
        t_bias,
        t_var_upper: (gap > 0.0).then(|| c / (gap * gap)),
    })
}
