use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::config::Engine;
use crate::CliError;

/// What a suite computes; names and anchors live in `registry.json`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Enlargement,
    BasePrp,
    PointProcessDecomposition,
    CompensatedMeasure,
    FiltrationIdentities,
    FundamentalMartingales,
    WrpCompleteness,
    TripleCompleteness,
    Multiplicity,
    Independence,
    OrthogonalityLemma,
    OrthogonalityCounterexample,
    PoissonGrid,
    AzemaFormula,
    Avoidance,
    StoppedOrthogonality,
    StoppedRepresentation,
    McPoisson,
    McAzema,
    McAvoidance,
    McPredictableJump,
}

impl SuiteKind {
    pub fn is_mc(self) -> bool {
        matches!(self, Self::McPoisson | Self::McAzema | Self::McAvoidance | Self::McPredictableJump)
    }

    /// Needs `H = 1_{[τ,∞)}` for a single random time.
    pub fn needs_random_time(self) -> bool {
        matches!(self, Self::AzemaFormula | Self::Avoidance | Self::StoppedOrthogonality | Self::StoppedRepresentation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteInfo {
    pub name: String,
    pub kind: SuiteKind,
    pub engine: Engine,
    pub anchor: String,
    pub summary: String,
}

static REGISTRY: OnceLock<Vec<SuiteInfo>> = OnceLock::new();

/// All registered suites in their stable order.
pub fn registry() -> &'static [SuiteInfo] {
    REGISTRY.get_or_init(|| serde_json::from_str(include_str!("../registry.json")).expect("bundled registry parses"))
}

pub fn lookup(name: &str) -> Result<&'static SuiteInfo, CliError> {
    registry().iter().find(|s| s.name == name).ok_or_else(|| CliError::UnknownSuite(name.to_string()))
}

/// One line per suite: name, engine, anchor.
pub fn list_suites() -> String {
    let width = registry().iter().map(|s| s.name.len()).max().unwrap_or(0);
    registry()
        .iter()
        .map(|s| format!("{:<width$}  {:<5}  {}\n", s.name, s.engine.as_str(), s.anchor))
        .collect()
}

pub fn describe_suite(name: &str) -> Result<String, CliError> {
    let s = lookup(name)?;
    let mut out = format!("{}\n  engine: {}\n  anchor: {}\n  {}\n", s.name, s.engine.as_str(), s.anchor, s.summary);
    if s.kind.needs_random_time() {
        out.push_str("  requires: a fixture whose H jumps at most once\n");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn registry_is_well_formed() {
        let r = registry();
        assert!(r.len() >= 12);
        let names: HashSet<_> = r.iter().map(|s| &s.name).collect();
        assert_eq!(names.len(), r.len());
        for s in r {
            assert_eq!(s.kind.is_mc(), s.engine == Engine::Mc, "{}", s.name);
            let d = describe_suite(&s.name).unwrap();
            assert!(d.contains(&s.anchor));
        }
    }

    #[test]
    fn unknown_suite() {
        assert!(matches!(describe_suite("nope"), Err(CliError::UnknownSuite(n)) if n == "nope"));
    }

    #[test]
    fn listing_is_stable() {
        let l = list_suites();
        assert_eq!(l.lines().count(), registry().len());
        assert_eq!(l, list_suites());
    }
}
