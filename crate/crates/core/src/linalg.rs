//! Minimum-norm and least-squares solvers and column-space projections.
//!
//! Every estimator reduces to applying the pseudo-inverse of `Aᵀ` for a
//! `d × n` design `A` with samples as columns. The smaller Gram matrix
//! (`AᵀA` when `d ≥ n`, `AAᵀ` otherwise) is Cholesky-factored; when its
//! diagonal suggests poor conditioning the operator falls back to a
//! Householder QR of the design, after the singular values have ruled out
//! rank deficiency.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative singular-value cutoff below which a design is rank deficient.
pub const RANK_RTOL: f64 = 1e-10;

/// Cholesky pivots spread wider than this (as a ratio of the smallest to
/// the largest diagonal entry of the factor) trigger the QR path.
const CHOLESKY_MIN_RATIO: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Overparameterized,
    Underparameterized,
    Threshold,
}

impl Regime {
    pub fn classify(params: usize, samples: usize) -> Regime {
        if params > samples + 1 {
            Regime::Overparameterized
        } else if samples > params + 1 {
            Regime::Underparameterized
        } else {
            Regime::Threshold
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Overparameterized => "over",
            Regime::Underparameterized => "under",
            Regime::Threshold => "threshold",
        }
    }
}

enum Factor {
    /// `d ≥ n`: Cholesky of `AᵀA`.
    Wide(Cholesky<f64, Dyn>),
    /// `d < n`: Cholesky of `AAᵀ`.
    Tall(Cholesky<f64, Dyn>),
    /// Thin QR of `A` (`d ≥ n`) or of `Aᵀ` (`d < n`).
    Qr { q: DMatrix<f64>, r: DMatrix<f64>, wide: bool },
    /// No parameters.
    Empty,
}

/// `y ↦ pinv(Aᵀ) y` for a fixed full-rank design `A` (`d × n`).
///
/// For `d ≥ n` this is `A(AᵀA)⁻¹y`, the minimum-norm solution of `Aᵀa = y`;
/// for `d < n` it is `(AAᵀ)⁻¹Ay`, the least-squares solution.
pub struct PinvOp<'a> {
    a: &'a DMatrix<f64>,
    factor: Factor,
}

fn check_samples(a: &DMatrix<f64>) -> Result<()> {
    if a.ncols() == 0 {
        return Err(Error::InvalidParameter("design has no samples".into()));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("design contains non-finite entries".into()));
    }
    Ok(())
}

fn diag_ratio(chol: &Cholesky<f64, Dyn>) -> f64 {
    let l = chol.l_dirty().diagonal();
    let (lo, hi) = l.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if hi > 0.0 {
        lo / hi
    } else {
        0.0
    }
}

fn triangular(x: Option<DVector<f64>>) -> Result<DVector<f64>> {
    x.ok_or_else(|| Error::InvalidParameter("zero pivot in triangular solve".into()))
}

impl<'a> PinvOp<'a> {
    pub fn new(a: &'a DMatrix<f64>) -> Result<Self> {
        check_samples(a)?;
        let (d, n) = a.shape();
        if d == 0 {
            return Ok(PinvOp { a, factor: Factor::Empty });
        }
        let chol = if d >= n {
            Cholesky::new(a.tr_mul(a)).map(Factor::Wide)
        } else {
            let at = a.transpose();
            Cholesky::new(at.tr_mul(&at)).map(Factor::Tall)
        };
        let well_conditioned = match &chol {
            Some(Factor::Wide(c) | Factor::Tall(c)) => diag_ratio(c) >= CHOLESKY_MIN_RATIO,
            _ => false,
        };
        match chol {
            Some(factor) if well_conditioned => Ok(PinvOp { a, factor }),
            _ => PinvOp::new_qr(a),
        }
    }

    /// Builds the operator from a QR factorization regardless of conditioning.
    pub fn new_qr(a: &'a DMatrix<f64>) -> Result<Self> {
        check_samples(a)?;
        let (d, n) = a.shape();
        if d == 0 {
            return Ok(PinvOp { a, factor: Factor::Empty });
        }
        let s = a.singular_values();
        let smax = s.max();
        let smin = s.min();
        if smax.is_nan() || smax <= 0.0 || smin < RANK_RTOL * smax {
            return Err(Error::Singular {
                rows: d,
                cols: n,
                dimension: if d >= n { "columns" } else { "rows" },
                ratio: if smax > 0.0 { smin / smax } else { 0.0 },
            });
        }
        let wide = d >= n;
        let qr = if wide { a.clone().qr() } else { a.transpose().qr() };
        Ok(PinvOp { a, factor: Factor::Qr { q: qr.q(), r: qr.r(), wide } })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        self.a
    }

    /// True when the QR fallback is in use.
    pub fn uses_qr(&self) -> bool {
        matches!(self.factor, Factor::Qr { .. })
    }

    /// `pinv(Aᵀ) y`, a vector of length `d`.
    pub fn apply(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        let (d, n) = self.a.shape();
        if y.len() != n {
            return Err(Error::DimensionMismatch { what: "right-hand side", expected: n, found: y.len() });
        }
        Ok(match &self.factor {
            Factor::Wide(c) => self.a * c.solve(y),
            Factor::Tall(c) => c.solve(&(self.a * y)),
            // A = QR: a = Q R⁻ᵀ y.  Aᵀ = QR: a = R⁻¹ Qᵀ y.
            Factor::Qr { q, r, wide: true } => q * triangular(r.transpose().solve_lower_triangular(y))?,
            Factor::Qr { q, r, wide: false } => triangular(r.solve_upper_triangular(&q.tr_mul(y)))?,
            Factor::Empty => DVector::zeros(d),
        })
    }

    /// Orthogonal projection of `v` onto the column space of `A`.
    pub fn project(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let d = self.a.nrows();
        if v.len() != d {
            return Err(Error::DimensionMismatch { what: "projected vector", expected: d, found: v.len() });
        }
        self.apply(&self.a.tr_mul(v))
    }
}

/// Minimum-ℓ2-norm `a` with `Aᵀa = y`, for `d ≥ n`.
pub fn min_norm_fit(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() < a.ncols() {
        return Err(Error::InvalidParameter(format!(
            "min_norm_fit needs at least as many parameters as samples, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    PinvOp::new(a)?.apply(y)
}

/// The `a` closest to `a0` with `Aᵀa = y`: `a0 + A(AᵀA)⁻¹(y − Aᵀa0)`.
pub fn min_norm_fit_from_init(a: &DMatrix<f64>, y: &DVector<f64>, a0: &DVector<f64>) -> Result<DVector<f64>> {
    if a0.len() != a.nrows() {
        return Err(Error::DimensionMismatch { what: "initial point", expected: a.nrows(), found: a0.len() });
    }
    if y.len() != a.ncols() {
        return Err(Error::DimensionMismatch { what: "right-hand side", expected: a.ncols(), found: y.len() });
    }
    let r = y - a.tr_mul(a0);
    Ok(a0 + min_norm_fit(a, &r)?)
}

/// Least-squares minimizer of `‖Aᵀa − y‖`, for `n ≥ d`.
pub fn least_squares_fit(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() > a.ncols() {
        return Err(Error::InvalidParameter(format!(
            "least_squares_fit needs at least as many samples as parameters, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    PinvOp::new(a)?.apply(y)
}

/// Splits `v` into its projection onto the column space of `A` and the
/// orthogonal remainder.
pub fn projection_residual(a: &DMatrix<f64>, v: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    let proj = PinvOp::new(a)?.project(v)?;
    let resid = v - &proj;
    Ok((proj, resid))
}
