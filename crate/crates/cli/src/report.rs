use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::{Outcome, ScenarioConfig};
use crate::CliError;

pub const REPORT_SCHEMA: &str = "filtration-lab/report-v1";

/// A float that survives JSON when it is not finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Num(#[serde(with = "flab_mc::report::nonfinite")] pub f64);

/// What a suite observed for one statement, before polarity is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub name: String,
    pub holds: bool,
    /// `None`: follows the suite's declared polarity. `Some`: fixed, as for
    /// negative controls and internal consistency checks.
    pub fixed: Option<Outcome>,
    pub evidence: BTreeMap<String, Num>,
    pub witness: Option<String>,
    pub note: Option<String>,
}

impl Finding {
    /// Statement subject to the suite's declared polarity.
    pub fn property(name: impl Into<String>, holds: bool) -> Self {
        Self { name: name.into(), holds, fixed: None, evidence: BTreeMap::new(), witness: None, note: None }
    }

    /// Statement that must come out as `expected` whatever the polarity.
    pub fn fixed(name: impl Into<String>, holds: bool, expected: Outcome) -> Self {
        Self { fixed: Some(expected), ..Self::property(name, holds) }
    }

    pub fn invariant(name: impl Into<String>, holds: bool) -> Self {
        Self::fixed(name, holds, Outcome::Holds)
    }

    pub fn ev(mut self, key: &str, v: f64) -> Self {
        self.evidence.insert(key.to_string(), Num(v));
        self
    }

    pub fn witness(mut self, w: Option<impl Display>) -> Self {
        self.witness = w.map(|w| w.to_string());
        self
    }

    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRecord {
    pub suite: String,
    pub name: String,
    pub anchor: String,
    pub expected: Outcome,
    pub observed: Outcome,
    pub pass: bool,
    pub evidence: BTreeMap<String, Num>,
    #[serde(default)]
    pub witness: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    pub fn new(suite: &str, anchor: &str, polarity: Outcome, f: Finding) -> Self {
        let expected = f.fixed.unwrap_or(polarity);
        let observed = Outcome::from_bool(f.holds);
        let pass = expected == observed;
        let witness = match f.witness {
            Some(w) => Some(w),
            None if !pass => Some(fallback_witness(&f.name, observed, &f.evidence)),
            None => None,
        };
        Self {
            suite: suite.into(),
            name: f.name,
            anchor: anchor.into(),
            expected,
            observed,
            pass,
            evidence: f.evidence,
            witness,
            note: f.note,
        }
    }
}

fn fallback_witness(name: &str, observed: Outcome, evidence: &BTreeMap<String, Num>) -> String {
    let ev: Vec<String> = evidence.iter().map(|(k, v)| format!("{k}={}", v.0)).collect();
    format!("{name} {}: {}", observed.as_str(), ev.join(", "))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schema: String,
    pub tool_version: String,
    /// The config as run, with the seed actually used.
    pub config: ScenarioConfig,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl RunReport {
    pub fn new(config: ScenarioConfig, checks: Vec<CheckRecord>) -> Self {
        let passed = checks.iter().filter(|c| c.pass).count();
        Self {
            schema: REPORT_SCHEMA.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config,
            summary: Summary { total: checks.len(), passed, failed: checks.len() - passed },
            checks,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let r: Self = serde_json::from_str(text).map_err(|e| CliError::Report(e.to_string()))?;
        if r.schema != REPORT_SCHEMA {
            return Err(CliError::Report(format!("schema {:?}, expected {REPORT_SCHEMA:?}", r.schema)));
        }
        Ok(r)
    }

    /// One row per check: suite, check, anchor, expected, observed, pass,
    /// evidence as `key=value;...`, witness.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| CliError::Report(e.to_string());
        w.write_record(["suite", "check", "anchor", "expected", "observed", "pass", "evidence", "witness"])
            .map_err(io)?;
        for c in &self.checks {
            let ev: Vec<String> = c.evidence.iter().map(|(k, v)| format!("{k}={}", v.0)).collect();
            w.write_record([
                c.suite.as_str(),
                c.name.as_str(),
                c.anchor.as_str(),
                c.expected.as_str(),
                c.observed.as_str(),
                if c.pass { "true" } else { "false" },
                ev.join(";").as_str(),
                c.witness.as_deref().unwrap_or(""),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Report(e.to_string()))
    }
}
