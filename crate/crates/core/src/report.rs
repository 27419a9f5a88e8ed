//! JSON reports written by the command-line tool.
//!
//! Field order is fixed by the struct definitions and maps inside `detail`
//! are sorted, so two runs with the same manifest and seed differ only in
//! `wall_clock_ms`.

use serde::Serialize;
use serde_json::Value;

use crate::manifest::{Manifest, Numerics};
use crate::warped::{FiberFlags, StaticSpacetime};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    /// Informational record; never affects the exit code.
    Info,
    Pass,
    Inconclusive,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub tol: f64,
    pub samples: usize,
    pub detail: Value,
}

impl Check {
    pub fn new(name: impl Into<String>, status: CheckStatus, tol: f64, samples: usize, detail: impl Serialize) -> Self {
        Self {
            name: name.into(),
            status,
            tol,
            samples,
            detail: serde_json::to_value(detail).expect("report details serialize"),
        }
    }

    pub fn pass_if(name: impl Into<String>, ok: bool, tol: f64, samples: usize, detail: impl Serialize) -> Self {
        let status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
        Self::new(name, status, tol, samples, detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacetimeSummary {
    pub coords: Vec<String>,
    pub fiber_metric: Vec<Vec<String>>,
    pub warp: String,
    pub domain: Vec<(f64, f64)>,
    pub margin: f64,
    pub sample_box: Vec<(f64, f64)>,
    /// Endpoints as numbers, or the strings `"-inf"` / `"inf"`.
    pub interval: [Value; 2],
    pub t_sample: (f64, f64),
    /// Declared by the manifest, not verified.
    pub declared_flags: FiberFlags,
    pub declared_inf_f: Option<f64>,
    pub declared_sup_f: Option<f64>,
}

fn endpoint(x: f64) -> Value {
    if x == f64::INFINITY {
        Value::from("inf")
    } else if x == f64::NEG_INFINITY {
        Value::from("-inf")
    } else {
        Value::from(x)
    }
}

impl SpacetimeSummary {
    pub fn new(s: &StaticSpacetime) -> Self {
        let chart = s.fiber().chart();
        let n = chart.dim();
        let (t1, t2) = s.interval();
        Self {
            coords: chart.names().to_vec(),
            fiber_metric: (0..n)
                .map(|i| (0..n).map(|j| s.fiber().component(i, j).source().to_string()).collect())
                .collect(),
            warp: s.warp().source().to_string(),
            domain: chart.domain().to_vec(),
            margin: chart.margin(),
            sample_box: chart.sample_box(),
            interval: [endpoint(t1), endpoint(t2)],
            t_sample: s.t_sample_range(),
            declared_flags: s.flags(),
            declared_inf_f: s.declared_inf_f(),
            declared_sup_f: s.declared_sup_f(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub manifest: String,
    pub manifest_digest: String,
    pub command: String,
    pub numerics: Numerics,
    pub spacetime: SpacetimeSummary,
    pub checks: Vec<Check>,
    pub exit_code: i32,
    pub wall_clock_ms: u64,
}

impl Report {
    pub fn new(command: &str, manifest_path: &str, m: &Manifest, numerics: &Numerics) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: TOOL.into(),
            tool_version: TOOL_VERSION.into(),
            manifest: manifest_path.into(),
            manifest_digest: m.digest.clone(),
            command: command.into(),
            numerics: numerics.clone(),
            spacetime: SpacetimeSummary::new(&m.spacetime),
            checks: Vec::new(),
            exit_code: 0,
            wall_clock_ms: 0,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    /// 1 if any check failed, else 2 if any is inconclusive, else 0.
    pub fn finish(&mut self) -> i32 {
        self.exit_code = exit_code(self.checks.iter().map(|c| c.status));
        self.exit_code
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn exit_code(statuses: impl IntoIterator<Item = CheckStatus>) -> i32 {
    match statuses.into_iter().max() {
        Some(CheckStatus::Fail) => 1,
        Some(CheckStatus::Inconclusive) => 2,
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        use CheckStatus::*;
        assert_eq!(exit_code([]), 0);
        assert_eq!(exit_code([Info, Pass]), 0);
        assert_eq!(exit_code([Pass, Inconclusive, Info]), 2);
        assert_eq!(exit_code([Inconclusive, Fail, Pass]), 1);
    }

    #[test]
    fn endpoints() {
        assert_eq!(endpoint(f64::NEG_INFINITY), Value::from("-inf"));
        assert_eq!(endpoint(f64::INFINITY), Value::from("inf"));
        assert_eq!(endpoint(2.5), Value::from(2.5));
    }
}
