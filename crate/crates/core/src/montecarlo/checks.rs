//! Pass/fail comparisons between a sweep record and its closed form.

use super::sweep::SweepRecord;
use crate::theory::TheoryValue;

/// Differences below this are treated as rounding when the standard
/// error is zero.
const ROUNDING: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOutcome {
    pub pass: bool,
    /// Signed distance from the target (or from the nearest interval end)
    /// in standard errors; 0 inside the interval.
    pub z: f64,
}

fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if se > 0.0 {
        diff / se
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Passes iff the empirical mean is within 3 standard errors of the exact
/// theory value. `None` when the record has no exact theory.
pub fn check_exact(record: &SweepRecord) -> Option<CheckOutcome> {
    let TheoryValue::Exact(target) = record.theory?.value else {
        return None;
    };
    let diff = record.empirical.mean - target;
    let se = record.empirical.se;
    let tol = 3.0 * se + ROUNDING * target.abs().max(1.0);
    Some(CheckOutcome { pass: diff.abs() <= tol, z: z_score(diff, se) })
}

/// Passes iff the empirical mean lies in `[lower − slack·SE, upper + slack·SE]`.
/// Exact theory is treated as a degenerate interval.
pub fn check_bounds(record: &SweepRecord, slack: f64) -> Option<CheckOutcome> {
    let t = record.theory?;
    let (lo, hi) = (t.lower(), t.upper());
    let m = record.empirical.mean;
    let se = record.empirical.se;
    let diff = if m < lo {
        m - lo
    } else if m > hi {
        m - hi
    } else {
        0.0
    };
    let tol = slack * se + ROUNDING * hi.abs().max(1.0);
    Some(CheckOutcome { pass: diff.abs() <= tol, z: z_score(diff, se) })
}
