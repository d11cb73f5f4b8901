//! Fixed-precision decimal formatting used for every emitted number.

/// Significant digits in emitted numbers.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Formats `v` with 12 significant digits, `%g` style: plain decimal for
/// moderate exponents, scientific otherwise; trailing zeros trimmed.
pub fn format_sig(v: f64) -> String {
    format_sig_digits(v, SIGNIFICANT_DIGITS)
}

pub fn format_sig_digits(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0".to_string();
    }
    // Round first so the exponent reflects the rounded value (e.g. 9.9999999999999 -> 10).
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, v)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `v` rounded to 12 significant digits, as it would be read back from text.
pub fn round_sig(v: f64) -> f64 {
    format_sig(v).parse().unwrap_or(v)
}
