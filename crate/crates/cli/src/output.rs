//! CSV rendering of sweep records.

use partial_transfer::montecarlo::SweepRecord;
use partial_transfer::theory::{bias_bounds_b1_b2_b3, TheoryValue};

pub const COLUMNS: [&str; 11] = [
    "sweep_var",
    "value",
    "regime",
    "empirical_mean",
    "empirical_se",
    "theory_kind",
    "theory_value",
    "theory_lower",
    "theory_upper",
    "term1",
    "term2",
];

pub const BOUND_COLUMNS: [&str; 3] = ["b1_sq", "b2_sq", "b3_sq"];

/// `printf("%.12g")`.
pub fn fmt_g(x: f64) -> String {
    const SIG: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..SIG).contains(&exp) {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (SIG - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

pub fn header(bound_columns: bool) -> String {
    let mut cols: Vec<&str> = COLUMNS.to_vec();
    if bound_columns {
        cols.extend(BOUND_COLUMNS);
    }
    cols.join(",") + "\n"
}

pub fn row(r: &SweepRecord, bound_columns: bool) -> String {
    let (kind, value, lower, upper) = match r.theory.map(|t| t.value) {
        Some(TheoryValue::Exact(v)) => ("exact", Some(v), None, None),
        Some(TheoryValue::Bounds { lower, upper }) => ("bounds", None, Some(lower), Some(upper)),
        None => ("", None, None, None),
    };
    let mut fields = vec![
        r.variable.as_str().to_string(),
        fmt_g(r.value),
        r.regime.as_str().to_string(),
        fmt_g(r.empirical.mean),
        fmt_g(r.empirical.se),
        kind.to_string(),
        opt(value),
        opt(lower),
        opt(upper),
        opt(r.theory_term1),
        opt(r.theory_term2),
    ];
    if bound_columns {
        let b = bias_bounds_b1_b2_b3(&r.scenario).ok();
        fields.push(opt(b.map(|b| b.b1 * b.b1)));
        fields.push(opt(b.map(|b| b.b2 * b.b2)));
        fields.push(opt(b.map(|b| b.b3 * b.b3)));
    }
    fields.join(",") + "\n"
}

pub fn render(records: &[SweepRecord], bound_columns: bool) -> String {
    let mut out = header(bound_columns);
    for r in records {
        out.push_str(&row(r, bound_columns));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (110.0, "110"),
            (5.0 / 89.0, "0.0561797752809"),
            (0.1, "0.1"),
            (1e-5, "1e-05"),
            (0.000123456789012345, "0.000123456789012"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (-2.5, "-2.5"),
            (1.0 / 3.0, "0.333333333333"),
            (f64::NAN, "nan"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g(x), want, "{x}");
        }
    }

    #[test]
    fn header_has_eleven_columns() {
        assert_eq!(header(false).trim_end().split(',').count(), 11);
        assert_eq!(header(true).trim_end().split(',').count(), 14);
    }
}
