//! Decimal formatting for cost values in reports.
//!
//! Costs are serialized as decimal strings with 12 significant digits so that
//! report files diff cleanly across platforms. Trailing zeros are trimmed;
//! magnitudes outside [1e-4, 1e15) switch to exponent notation.

use serde::Serializer;

const SIG_DIGITS: usize = 12;

/// Format `x` with 12 significant digits, trimmed.
///
/// `0 -> "0"`, `7.5 -> "7.5"`, `1.0/3.0 -> "0.333333333333"`,
/// `2.5e-7 -> "2.5e-7"`.
pub fn cost_string(x: f64) -> String {
    assert!(x.is_finite(), "cost values must be finite, got {x}");
    if x == 0.0 {
        return "0".to_owned();
    }
    // `{:.*e}` rounds to SIG_DIGITS significant digits and normalizes the
    // exponent, including the carry case (9.99..9 -> 1.0e+1).
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("exponent digits");
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), SIG_DIGITS);

    let body = if (-4..15).contains(&exp) {
        positional(&digits, exp)
    } else {
        let m = trim_fraction(&format!(
            "{}.{}",
            &digits[..1],
            &digits[1..]
        ));
        format!("{m}e{exp}")
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Render `0.d1 d2 ... * 10^(exp+1)` positionally from the digit string.
fn positional(digits: &str, exp: i32) -> String {
    let raw = if exp < 0 {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("0.{zeros}{digits}")
    } else {
        let point = exp as usize + 1;
        if point >= digits.len() {
            let zeros = "0".repeat(point - digits.len());
            format!("{digits}{zeros}")
        } else {
            format!("{}.{}", &digits[..point], &digits[point..])
        }
    };
    trim_fraction(&raw)
}

fn trim_fraction(s: &str) -> String {
    if !s.contains('.') {
        return s.to_owned();
    }
    s.trim_end_matches('0').trim_end_matches('.').to_owned()
}

pub fn ser_cost<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&cost_string(*x))
}

pub fn ser_cost_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|&x| cost_string(x)))
}

pub fn ser_cost_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&cost_string(*v)),
        None => s.serialize_none(),
    }
}
