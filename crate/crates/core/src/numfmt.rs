//! Fixed-significant-digit number rendering shared by the CSV and JSON writers.
//!
//! Output follows the C `%.<d>g` conversion: fixed notation when the decimal
//! exponent lies in `[-4, d)`, scientific notation otherwise, trailing zeros
//! removed. With `d = 17` every finite `f64` survives a text round trip.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// Digits needed for a lossless `f64` round trip.
pub const ROUND_TRIP_DIGITS: usize = 17;

pub fn format_sig(value: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if value.is_nan() {
        return "NaN".to_string();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if value == 0.0 {
        return if value.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.unsigned_abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{:.*}", decimals, value)).to_string()
    }
}

/// 17 significant digits.
pub fn format_real(value: f64) -> String {
    format_sig(value, ROUND_TRIP_DIGITS)
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `serialize_with` adaptor writing a finite real as a bare JSON number with
/// 17 significant digits.
pub fn serialize_real<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    if !value.is_finite() {
        return Err(serde::ser::Error::custom(format!(
            "non-finite value {value} cannot be written as a JSON number"
        )));
    }
    let raw = RawValue::from_string(format_real(*value)).map_err(serde::ser::Error::custom)?;
    raw.serialize(serializer)
}
