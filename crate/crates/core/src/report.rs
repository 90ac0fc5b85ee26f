//! Serialization of run results as JSON, CSV or aligned text.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::oracle::OracleReport;
use crate::theorems::{DefectReport, Verdict};

pub const SIGNIFICANT_DIGITS: usize = 12;
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub twistor_lab: &'static str,
    pub schema: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            twistor_lab: env!("CARGO_PKG_VERSION"),
            schema: SCHEMA_VERSION,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<C: Serialize> {
    pub config: C,
    pub results: Vec<DefectReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub oracle: Vec<OracleReport>,
    pub versions: Versions,
    /// Always null so that identical configurations give identical bytes.
    pub wall_time_ms: Option<u64>,
}

impl<C: Serialize> Report<C> {
    pub fn new(config: C, results: Vec<DefectReport>, oracle: Vec<OracleReport>) -> Self {
        Self {
            config,
            results,
            oracle,
            versions: Versions::default(),
            wall_time_ms: None,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.results.iter().all(DefectReport::passed) && self.oracle.iter().all(OracleReport::passed)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => to_json(self),
            Format::Csv => Ok(to_csv(&self.results, &self.oracle)),
            Format::Text => Ok(to_text(&self.results, &self.oracle)),
        }
    }
}

/// Round to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().unwrap_or(v)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(f) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig(f)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded; non-finite values become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{}", round_sig(v))
    } else {
        format!("{v}")
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Warn => "warn",
        Verdict::Fail => "fail",
    }
}

fn expect_str(e: crate::theorems::Expect) -> &'static str {
    match e {
        crate::theorems::Expect::Vanish => "vanish",
        crate::theorems::Expect::Exceed => "exceed",
    }
}

pub fn to_csv(results: &[DefectReport], oracle: &[OracleReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "theorem", "check", "manifold", "t", "n", "samples", "seed", "expect", "max_abs_residual", "tolerance", "threshold", "verdict",
        "external",
    ];
    w.write_record(header).expect("in-memory csv");
    for r in results {
        w.write_record([
            r.theorem.clone(),
            r.check.clone(),
            r.manifold.clone(),
            num(r.t),
            r.n.map_or(String::new(), |n| n.to_string()),
            r.samples.to_string(),
            r.seed.to_string(),
            expect_str(r.expect).to_string(),
            num(r.max_abs_residual),
            num(r.tolerance),
            num(r.threshold),
            verdict_str(r.verdict).to_string(),
            r.external.to_string(),
        ])
        .expect("in-memory csv");
    }
    for o in oracle {
        for (check, value) in [("base", o.base_discrepancy), ("twistor", o.twistor_discrepancy)] {
            w.write_record([
                "oracle".to_string(),
                check.to_string(),
                o.manifold.clone(),
                num(o.t),
                String::new(),
                o.samples.to_string(),
                o.seed.to_string(),
                "vanish".to_string(),
                num(value),
                num(o.tolerance),
                num(o.tolerance),
                verdict_str(o.verdict).to_string(),
                "false".to_string(),
            ])
            .expect("in-memory csv");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv")
}

pub fn to_text(results: &[DefectReport], oracle: &[OracleReport]) -> String {
    let mut s = String::new();
    for r in results {
        let n = r.n.map_or("-".to_string(), |n| n.to_string());
        let _ = writeln!(
            s,
            "{:<5} {:<16} {:<34} {:<10} t={:<8} n={} {:<6} {:>12.4e} ({} {:.0e}){}",
            verdict_str(r.verdict),
            r.theorem,
            r.check,
            r.manifold,
            num(r.t),
            n,
            expect_str(r.expect),
            r.max_abs_residual,
            if r.expect == crate::theorems::Expect::Vanish { "tol" } else { "threshold" },
            if r.expect == crate::theorems::Expect::Vanish { r.tolerance } else { r.threshold },
            if r.external { " [external]" } else { "" }
        );
    }
    for o in oracle {
        let _ = writeln!(
            s,
            "{:<5} oracle           {:<34} {:<10} t={:<8} base {:.3e} twistor {:.3e} (tol {:.0e}, {} of {} points)",
            verdict_str(o.verdict),
            "jets_vs_finite_differences",
            o.manifold,
            num(o.t),
            o.base_discrepancy,
            o.twistor_discrepancy,
            o.tolerance,
            o.checked,
            o.samples
        );
    }
    let total = results.len() + oracle.len();
    let passed = results.iter().filter(|r| r.passed()).count() + oracle.iter().filter(|o| o.passed()).count();
    let _ = writeln!(s, "{passed}/{total} checks passed");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(1.234567890123456), 1.23456789012);
        assert_eq!(round_sig(-9.87654321098765e-7), -9.87654321099e-7);
        assert_eq!(round_sig(0.0), 0.0);
        assert!(round_sig(f64::NAN).is_nan());
    }

    #[test]
    fn json_rounds_nested_floats() {
        let v = serde_json::json!({"a": [0.1234567890123456, 2], "b": {"c": 1.0 / 3.0}, "d": "x"});
        let s = to_json(&v).unwrap();
        assert!(s.contains("0.123456789012"));
        assert!(s.contains("0.333333333333"));
        assert!(s.contains("\"d\": \"x\""));
    }

    proptest! {
        #[test]
        fn rounding_is_idempotent(v in -1e12f64..1e12) {
            let r = round_sig(v);
            prop_assert_eq!(round_sig(r), r);
            prop_assert!((r - v).abs() <= 1e-11 * v.abs().max(f64::MIN_POSITIVE));
        }
    }
}
