//! Verification reports and their JSON / CSV forms.

use serde::{Deserialize, Serialize};

use crate::error::{QhmError, Result};

/// Outcome of one checked property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    /// Acceptance criterion number, or 0 for auxiliary checks.
    pub criterion: u32,
    pub name: String,
    pub suite: String,
    pub passed: bool,
    /// Worst value of the checked quantity.
    pub measured: f64,
    /// The bound `measured` is compared against.
    pub limit: f64,
    pub samples: usize,
    pub detail: String,
}

/// Wall-clock time of one property, kept apart so reports compare byte for byte without it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub criterion: u32,
    pub elapsed_s: f64,
    pub budget_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub properties: Vec<PropertyResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub timings: Vec<Timing>,
}

impl VerifyReport {
    pub fn new(suite: &str, seed: u64, properties: Vec<PropertyResult>, timings: Vec<Timing>) -> Self {
        let passed = properties.iter().all(|p| p.passed);
        VerifyReport { suite: suite.to_string(), seed, passed, properties, timings }
    }

    pub fn without_timings(&self) -> VerifyReport {
        VerifyReport { timings: Vec::new(), ..self.clone() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// One row per property; timing columns are empty when no timing was recorded.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("criterion,name,suite,passed,measured,limit,samples,elapsed_s,budget_s,detail\n");
        for p in &self.properties {
            let t = self.timings.iter().find(|t| t.criterion == p.criterion && p.criterion != 0);
            let (el, bu) = t.map_or((String::new(), String::new()), |t| (t.elapsed_s.to_string(), t.budget_s.to_string()));
            out.push_str(&format!(
                "{},{},{},{},{:e},{:e},{},{},{},{}\n",
                p.criterion,
                csv_field(&p.name),
                csv_field(&p.suite),
                p.passed,
                p.measured,
                p.limit,
                p.samples,
                el,
                bu,
                csv_field(&p.detail)
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Flattens a report file (JSON) into CSV.
pub fn export_csv(report_json: &str) -> Result<String> {
    let report = VerifyReport::from_json(report_json)
        .map_err(|e| QhmError::Config(format!("not a verification report: {e}")))?;
    Ok(report.to_csv())
}
