//! Monte Carlo checks of the random-matrix facts the closed forms rest on.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::stats::NeumaierSum;
use crate::linalg::projection_residual;
use crate::model::{gaussian_matrix, gaussian_vector};

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaEntry {
    pub lemma: &'static str,
    pub quantity: String,
    pub measured: f64,
    pub target: f64,
    /// Relative tolerance for expectations; for coverage and violation
    /// rates the target is itself the limit.
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LemmaReport {
    pub entries: Vec<LemmaEntry>,
}

impl LemmaReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

impl fmt::Display for LemmaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(
                f,
                "{:<5} {:<18} {:<44} measured {:>12.6} target {:>12.6} tol {:<8} ",
                if e.pass { "PASS" } else { "FAIL" },
                e.lemma,
                e.quantity,
                e.measured,
                e.target,
                e.tolerance,
            )?;
        }
        Ok(())
    }
}

/// Sizes used by [`verify_lemma_suite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaConfig {
    pub draws: usize,
    /// Ambient and subspace dimension of the projection check.
    pub bias_dims: (usize, usize),
    /// `(a, b)` for the inverse-Wishart mean.
    pub iw_mean_dims: (usize, usize),
    /// `(a, b)` for the three inverse-Wishart norm identities.
    pub iw_norm_dims: (usize, usize),
    pub chi_dof: usize,
    pub singular_dims: (usize, usize),
    /// `(p, n)` for the minimum-eigenvalue bound, `n > p`.
    pub min_eig_dims: (usize, usize),
    pub rel_tol: f64,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        LemmaConfig {
            draws: 10_000,
            bias_dims: (10, 4),
            iw_mean_dims: (10, 3),
            iw_norm_dims: (40, 10),
            chi_dof: 100,
            singular_dims: (100, 20),
            min_eig_dims: (10, 30),
            rel_tol: 0.02,
        }
    }
}

fn mean(xs: impl Iterator<Item = f64>, n: usize) -> f64 {
    xs.collect::<NeumaierSum>().total() / n as f64
}

fn rel_entry(lemma: &'static str, quantity: String, measured: f64, target: f64, tol: f64) -> LemmaEntry {
    LemmaEntry {
        lemma,
        quantity,
        measured,
        target,
        tolerance: tol,
        pass: ((measured - target) / target).abs() <= tol,
    }
}

fn inv_gram(k: &DMatrix<f64>) -> DMatrix<f64> {
    k.tr_mul(k).cholesky().expect("Gaussian Gram is positive definite").inverse()
}

/// Runs every lemma check with the default sizes.
pub fn verify_lemma_suite<R: Rng + ?Sized>(rng: &mut R) -> LemmaReport {
    verify_lemma_suite_with(rng, &LemmaConfig::default())
}

pub fn verify_lemma_suite_with<R: Rng + ?Sized>(rng: &mut R, cfg: &LemmaConfig) -> LemmaReport {
    let n_draws = cfg.draws;
    let tol = cfg.rel_tol;
    let mut entries = Vec::new();

    // Projection onto a random n-dimensional subspace.
    {
        let (d, n) = cfg.bias_dims;
        let a = DVector::from_fn(d, |i, _| (i + 1) as f64);
        let a2 = a.norm_squared();
        let mut proj = NeumaierSum::new();
        let mut resid = NeumaierSum::new();
        for _ in 0..n_draws {
            let k = gaussian_matrix(rng, d, n);
            let (p, r) = projection_residual(&k, &a).expect("Gaussian design has full rank");
            proj.add(p.norm_squared() / a2);
            resid.add(r.norm_squared() / a2);
        }
        let nd = n as f64 / d as f64;
        entries.push(rel_entry(
            "projection",
            format!("E|(I-P)a|^2/|a|^2, d={d} n={n}"),
            resid.total() / n_draws as f64,
            1.0 - nd,
            tol,
        ));
        entries.push(rel_entry(
            "projection",
            format!("E|Pa|^2/|a|^2, d={d} n={n}"),
            proj.total() / n_draws as f64,
            nd,
            tol,
        ));
    }

    // Mean of an inverse Wishart matrix, through its diagonal.
    {
        let (a, b) = cfg.iw_mean_dims;
        let m = mean(
            (0..n_draws).map(|_| inv_gram(&gaussian_matrix(rng, a, b)).trace() / b as f64),
            n_draws,
        );
        entries.push(rel_entry(
            "inverse_wishart",
            format!("E diag (K^T K)^-1, a={a} b={b}"),
            m,
            1.0 / (a - b - 1) as f64,
            tol,
        ));
    }

    // The three norm identities.
    {
        let (a, b) = cfg.iw_norm_dims;
        let (sa, sb) = (0.7, 1.3);
        let d: Vec<f64> = (0..a).map(|i| 0.5 + i as f64 / a as f64).collect();
        let dsum: f64 = d.iter().map(|x| x * x).sum();
        let (mut beta_acc, mut alpha_acc, mut gamma_acc) = (NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new());
        for _ in 0..n_draws {
            let k = gaussian_matrix(rng, a, b);
            let g = inv_gram(&k);
            let beta = gaussian_vector(rng, b, sb);
            let alpha = gaussian_vector(rng, a, sa);
            let mut gamma = gaussian_vector(rng, a, 1.0);
            gamma.iter_mut().zip(&d).for_each(|(x, s)| *x *= s);
            beta_acc.add((&k * (&g * &beta)).norm_squared());
            alpha_acc.add((&g * k.tr_mul(&alpha)).norm_squared());
            gamma_acc.add((&g * k.tr_mul(&gamma)).norm_squared());
        }
        let den = (a - b - 1) as f64;
        let nd = n_draws as f64;
        entries.push(rel_entry(
            "inverse_wishart",
            format!("E|K(K^T K)^-1 beta|^2, a={a} b={b}"),
            beta_acc.total() / nd,
            b as f64 * sb * sb / den,
            tol,
        ));
        entries.push(rel_entry(
            "inverse_wishart",
            format!("E|(K^T K)^-1 K^T alpha|^2, a={a} b={b}"),
            alpha_acc.total() / nd,
            b as f64 * sa * sa / den,
            tol,
        ));
        entries.push(rel_entry(
            "inverse_wishart",
            format!("E|(K^T K)^-1 K^T gamma|^2, a={a} b={b}"),
            gamma_acc.total() / nd,
            b as f64 * dsum / (a as f64 * den),
            tol,
        ));
    }

    // Two-sided chi-square concentration at x = ln D.
    {
        let dof = cfg.chi_dof;
        let df = dof as f64;
        let x = df.ln();
        let (lo, hi) = (df - 2.0 * (df * x).sqrt(), df + 2.0 * (df * x).sqrt() + 2.0 * x);
        let inside = (0..n_draws)
            .filter(|_| {
                let u = gaussian_vector(rng, dof, 1.0).norm_squared();
                (lo..=hi).contains(&u)
            })
            .count();
        let coverage = inside as f64 / n_draws as f64;
        let target = 1.0 - 2.0 * (-x).exp();
        entries.push(LemmaEntry {
            lemma: "chi_square",
            quantity: format!("coverage, D={dof} x=ln D"),
            measured: coverage,
            target,
            tolerance: 0.0,
            pass: coverage >= target,
        });
    }

    // Extreme singular values of a Gaussian matrix at t = sqrt(2 ln N1).
    {
        let (n1, n2) = cfg.singular_dims;
        let t = (2.0 * (n1 as f64).ln()).sqrt();
        let (lo, hi) = (
            (n1 as f64).sqrt() - (n2 as f64).sqrt() - t,
            (n1 as f64).sqrt() + (n2 as f64).sqrt() + t,
        );
        let violations = (0..n_draws)
            .filter(|_| {
                let k = gaussian_matrix(rng, n1, n2);
                let ev = k.tr_mul(&k).symmetric_eigenvalues();
                let smin = ev.min().max(0.0).sqrt();
                let smax = ev.max().sqrt();
                smin < lo || smax > hi
            })
            .count();
        let rate = violations as f64 / n_draws as f64;
        let bound = 2.0 * (-t * t / 2.0).exp();
        entries.push(LemmaEntry {
            lemma: "singular_values",
            quantity: format!("violation rate, {n1}x{n2} t=sqrt(2 ln N1)"),
            measured: rate,
            target: bound,
            tolerance: 0.0,
            pass: rate <= bound,
        });
    }

    // |(K Kᵀ)⁻¹ K a|² ≤ |a|² / λ_min(K Kᵀ) on every draw.
    {
        let (p, n) = cfg.min_eig_dims;
        let held = (0..n_draws)
            .filter(|_| {
                let k = gaussian_matrix(rng, p, n);
                let a = gaussian_vector(rng, n, 1.0);
                let kkt = &k * k.transpose();
                let lmin = kkt.symmetric_eigenvalues().min();
                let lhs = kkt.cholesky().expect("full row rank").solve(&(&k * &a)).norm_squared();
                lhs <= a.norm_squared() / lmin * (1.0 + 1e-9)
            })
            .count();
        let frac = held as f64 / n_draws as f64;
        entries.push(LemmaEntry {
            lemma: "min_eigenvalue",
            quantity: format!("fraction of draws within bound, {p}x{n}"),
            measured: frac,
            target: 1.0,
            tolerance: 0.0,
            pass: held == n_draws,
        });
    }

    LemmaReport { entries }
}
