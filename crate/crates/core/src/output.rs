//! CSV number formatting shared by every writer in the crate.

use std::fmt::Write as _;

/// Formats `v` with 9 significant digits, equivalent to C's `%.9g`.
pub fn sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".to_string() } else { "-inf".to_string() };
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        let m = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Writes a matrix with a header row of column coordinates; each data row
/// starts with its row coordinate.
pub fn matrix_csv(corner: &str, cols: &[f64], rows: &[f64], cell: impl Fn(usize, usize) -> String) -> String {
    let mut out = String::new();
    out.push_str(corner);
    for c in cols {
        let _ = write!(out, ",{}", sig9(*c));
    }
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&sig9(*r));
        for j in 0..cols.len() {
            let _ = write!(out, ",{}", cell(i, j));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::sig9;

    #[test]
    fn matches_printf_g() {
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(0.1), "0.1");
        assert_eq!(sig9(-1.75), "-1.75");
        assert_eq!(sig9(std::f64::consts::PI), "3.14159265");
        assert_eq!(sig9(1e-4), "0.0001");
        assert_eq!(sig9(1.5e-5), "1.5e-05");
        assert_eq!(sig9(123456789.0), "123456789");
        assert_eq!(sig9(1234567890.0), "1.23456789e+09");
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(99999999.95), "100000000");
    }
}
