//! Machine-readable reports: every number carries a method trace entry so
//! the computation can be replayed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use doeblin::Interval64;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct IntervalDto {
    pub lo: f64,
    pub hi: f64,
}

impl From<Interval64> for IntervalDto {
    fn from(v: Interval64) -> Self {
        IntervalDto { lo: v.lo, hi: v.hi }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TraceEntry {
    pub quantity: String,
    pub method: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
pub struct OracleSummary {
    pub dimension: usize,
    /// Largest moduli, descending (at most eight).
    pub top_moduli: Vec<f64>,
}

/// Quasi-compactness report: certified intervals plus the verification
/// trail.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct QcReport {
    pub source: String,
    pub spectral_radius: IntervalDto,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub re_upper: Option<IntervalDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_b: Option<IntervalDto>,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quasi_compact: Option<bool>,
    pub verification: BTreeMap<String, bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    pub trace: Vec<TraceEntry>,
}

impl QcReport {
    pub fn new(source: impl Into<String>, method: impl Into<String>) -> Self {
        QcReport {
            source: source.into(),
            spectral_radius: IntervalDto {
                lo: 0.0,
                hi: f64::INFINITY,
            },
            re_upper: None,
            r_b: None,
            method: method.into(),
            quasi_compact: None,
            verification: BTreeMap::new(),
            witness: None,
            oracle: None,
            trace: Vec::new(),
        }
    }

    pub fn push_trace(&mut self, quantity: &str, method: &str, value: f64) {
        self.trace.push(TraceEntry {
            quantity: quantity.into(),
            method: method.into(),
            value,
        });
    }

    pub fn emit(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("reports serialize");
        out.push('\n');
        out
    }

    /// Human rendering; `color` enables ANSI for the PASS/FAIL verdicts.
    pub fn render(&self, color: bool) -> String {
        let mut s = String::new();
        s.push_str(&format!("kernel: {}\n", self.source));
        s.push_str(&format!("method: {}\n", self.method));
        s.push_str(&format!(
            "spectral radius: [{:.12}, {:.12}]\n",
            self.spectral_radius.lo, self.spectral_radius.hi
        ));
        if let Some(re) = &self.re_upper {
            s.push_str(&format!(
                "r_e upper bound: [{:.12}, {:.12}]\n",
                re.lo, re.hi
            ));
        }
        if let Some(rb) = &self.r_b {
            s.push_str(&format!("r_b: [{:.12}, {:.12}]\n", rb.lo, rb.hi));
        }
        if let Some(qc) = self.quasi_compact {
            s.push_str(&format!(
                "quasi-compact: {}\n",
                if qc {
                    "certified"
                } else {
                    "not certified by this bound"
                }
            ));
        }
        for (name, ok) in &self.verification {
            s.push_str(&format!("  {}: {}\n", name, verdict(*ok, color)));
        }
        if let Some(w) = &self.witness {
            s.push_str(&format!("witness: {w}\n"));
        }
        if let Some(o) = &self.oracle {
            s.push_str(&format!(
                "oracle ({} eigenvalues), top moduli: {:?}\n",
                o.dimension, o.top_moduli
            ));
        }
        s
    }
}

pub fn verdict(ok: bool, color: bool) -> String {
    match (ok, color) {
        (true, true) => "\x1b[32mPASS\x1b[0m".into(),
        (false, true) => "\x1b[31mFAIL\x1b[0m".into(),
        (true, false) => "PASS".into(),
        (false, false) => "FAIL".into(),
    }
}
