//! CSV and JSON rendering.

use posmap_core::{Detector, ScanRow};
use serde::Serialize;

use crate::error::CliError;

/// Shortest decimal with at most 12 significant digits, like C's `%.12g`.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Header and rows for a scan.
///
/// Columns: `parameter`, `s1..sN` (or `e1..eN`), `detH1`, `detH2`,
/// `min_eig_S`, then one verdict column per detector.
pub fn scan_csv(rows: &[ScanRow], detectors: &[Detector], moment_prefix: &str) -> String {
    let n = rows.first().map_or(0, |r| r.moments.len());
    let mut header = vec!["parameter".to_string()];
    header.extend((1..=n).map(|i| format!("{moment_prefix}{i}")));
    header.extend(["detH1", "detH2", "min_eig_S"].map(String::from));
    header.extend(detectors.iter().map(|d| d.as_str().to_string()));
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let mut cells = vec![sig12(row.parameter)];
        cells.extend(row.moments.iter().map(|&x| sig12(x)));
        cells.push(sig12(row.det_h1));
        cells.push(row.det_h2.map(sig12).unwrap_or_default());
        cells.push(sig12(row.min_eig_s));
        for d in detectors {
            cells.push(row.verdict(*d).map(|v| v.as_str().to_string()).unwrap_or_default());
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string(value)
        .map_err(|e| CliError::Numerical(format!("cannot serialize output: {e}")))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(0.625), "0.625");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(-2.0 / 3.0), "-0.666666666667");
        assert_eq!(sig12(4.6502331856877e-8), "4.65023318569e-8");
        assert_eq!(sig12(123456.0), "123456");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(-1e-12), "-1e-12");
    }
}
