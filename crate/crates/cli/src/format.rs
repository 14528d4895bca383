//! Locale-independent number formatting.

pub const SIG_DIGITS: usize = 12;

/// `v` with 12 significant digits but never fewer than 12 decimals, trailing
/// zeros dropped. Plain notation for exponents in `-5..15`, scientific
/// otherwise.
pub fn fmt12(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(SIG_DIGITS as i32) as usize;
        trim(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

/// The number `fmt12` prints, as a float.
pub fn round12(v: f64) -> f64 {
    fmt12(v).parse().unwrap_or(v)
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}
