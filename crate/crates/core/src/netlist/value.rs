//! Numbers with engineering suffixes.

use crate::error::NetlistError;

/// Suffix and its decimal exponent.
const SUFFIXES: [(&str, i64); 9] = [
    ("meg", 6),
    ("f", -15),
    ("p", -12),
    ("n", -9),
    ("u", -6),
    ("m", -3),
    ("k", 3),
    ("g", 9),
    ("t", 12),
];

/// Parses `1.5k`, `17n`, `2meg`, `1e-3`, ... into SI base units.
pub fn parse_value(token: &str) -> Result<f64, NetlistError> {
    let bad = || NetlistError::BadValue(token.to_string());
    let bytes = token.as_bytes();
    let mut end = 0;
    if matches!(bytes.first(), Some(b'+' | b'-')) {
        end = 1;
    }
    let mantissa_start = end;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end < bytes.len() && bytes[end] == b'.' {
        end += 1;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
    }
    let mantissa = &token[mantissa_start..end];
    if mantissa.is_empty() || mantissa == "." {
        return Err(bad());
    }
    let mantissa_end = end;
    let mut exponent: i64 = 0;
    // exponent only if followed by digits, so "1e" is rejected below and "1meg" is not an exponent
    if end < bytes.len() && matches!(bytes[end], b'e' | b'E') {
        let mut k = end + 1;
        if k < bytes.len() && matches!(bytes[k], b'+' | b'-') {
            k += 1;
        }
        let digits_start = k;
        while k < bytes.len() && bytes[k].is_ascii_digit() {
            k += 1;
        }
        if k > digits_start {
            // absurdly long exponents saturate; the float parse then gives 0 or inf
            exponent = token[end + 1..k].parse::<i64>().unwrap_or(if bytes[end + 1] == b'-' {
                -100_000
            } else {
                100_000
            });
            end = k;
        }
    }
    let suffix = token[end..].to_ascii_lowercase();
    if !suffix.is_empty() {
        exponent += SUFFIXES
            .iter()
            .find(|(s, _)| *s == suffix)
            .map(|(_, e)| *e)
            .ok_or_else(bad)?;
    }
    // scaling in decimal keeps `180n` identical to `180e-9`
    let value: f64 = format!("{}e{exponent}", &token[..mantissa_end])
        .parse()
        .map_err(|_| bad())?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

/// Shortest text that parses back to exactly `x`.
pub fn format_value(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-3..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
