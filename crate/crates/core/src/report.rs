//! Locale-independent numeric formatting shared by the CSV writers.

/// Formats with the given number of significant digits, positional where the
/// exponent allows it and scientific otherwise, trailing zeros trimmed.
/// Always uses `.` as the decimal separator.
pub fn format_significant(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let formatted = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = formatted
        .split_once('e')
        .expect("exponential format always carries an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    let negative = mantissa.starts_with('-');
    let digits_only: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let body = if exp >= -4 && (exp as i64) < digits as i64 {
        if exp >= 0 {
            let split = (exp + 1) as usize;
            let int_part = &digits_only[..split];
            let frac = trim_zeros(&digits_only[split..]);
            if frac.is_empty() {
                int_part.to_string()
            } else {
                format!("{int_part}.{frac}")
            }
        } else {
            let frac = trim_zeros(&digits_only);
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), frac)
        }
    } else {
        let head = &digits_only[..1];
        let frac = trim_zeros(&digits_only[1..]);
        if frac.is_empty() {
            format!("{head}e{exp}")
        } else {
            format!("{head}.{frac}e{exp}")
        }
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

fn trim_zeros(s: &str) -> &str {
    s.trim_end_matches('0')
}
