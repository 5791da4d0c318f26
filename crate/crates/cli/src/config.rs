use std::collections::HashSet;

use flab_core::fixtures::{self, Scenario};
use flab_core::io::BundleDoc;
use serde::{Deserialize, Serialize};

use crate::registry::{lookup, SuiteInfo};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Exact,
    Mc,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Exact => "exact",
            Engine::Mc => "mc",
        }
    }
}

/// Declared polarity of a suite's property checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    #[default]
    Holds,
    Fails,
}

impl Outcome {
    pub fn from_bool(holds: bool) -> Self {
        if holds {
            Outcome::Holds
        } else {
            Outcome::Fails
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Holds => "holds",
            Outcome::Fails => "fails",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FixtureRef {
    Named(String),
    Inline(Box<BundleDoc>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteRequest {
    pub name: String,
    #[serde(default)]
    pub expected_outcome: Outcome,
}

/// A suite given either by name or as `{name, expected_outcome}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum SuiteEntry {
    Name(String),
    Full(SuiteRequest),
}

impl From<SuiteEntry> for SuiteRequest {
    fn from(e: SuiteEntry) -> Self {
        match e {
            SuiteEntry::Name(name) => SuiteRequest { name, expected_outcome: Outcome::Holds },
            SuiteEntry::Full(r) => r,
        }
    }
}

fn suites_de<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<SuiteRequest>, D::Error> {
    Ok(Vec::<SuiteEntry>::deserialize(d)?.into_iter().map(Into::into).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Exact engine: residuals, drifts and identity gaps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
    /// Monte Carlo engine: |z| bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactParams {
    /// Random closures or predictable functions drawn per suite.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    100
}

impl Default for ExactParams {
    fn default() -> Self {
        Self { samples: default_samples() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McParams {
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default = "default_t_real")]
    pub t_real: f64,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
}

fn one() -> f64 {
    1.0
}
fn default_t_real() -> f64 {
    10.0
}
fn default_n_paths() -> usize {
    100_000
}
fn default_epsilons() -> Vec<f64> {
    vec![0.1, 0.01]
}

impl Default for McParams {
    fn default() -> Self {
        Self { lambda: 1.0, mu: 1.0, t_real: 10.0, n_paths: default_n_paths(), epsilons: default_epsilons() }
    }
}

pub const DEFAULT_EXACT_TOL: f64 = flab_core::EXACT_TOL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub engine: Engine,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<FixtureRef>,
    #[serde(deserialize_with = "suites_de")]
    pub suites: Vec<SuiteRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McParams>,
}

/// A validated config with everything resolved.
#[derive(Debug, Clone)]
pub struct Plan {
    pub engine: Engine,
    pub scenario: Option<Scenario>,
    pub suites: Vec<(&'static SuiteInfo, Outcome)>,
    pub seed: u64,
    pub exact_tol: f64,
    pub z_max: f64,
    pub exact: ExactParams,
    pub mc: McParams,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::ConfigInvalid(msg.into())
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn validate(&self, seed: u64) -> Result<Plan, CliError> {
        if self.suites.is_empty() {
            return Err(invalid("no suites listed"));
        }
        let mut seen = HashSet::new();
        let mut suites = Vec::with_capacity(self.suites.len());
        for req in &self.suites {
            let info = lookup(&req.name).map_err(|e| invalid(e.to_string()))?;
            if info.engine != self.engine {
                return Err(invalid(format!(
                    "suite {} runs on the {} engine, config engine is {}",
                    info.name,
                    info.engine.as_str(),
                    self.engine.as_str()
                )));
            }
            if !seen.insert(info.name.as_str()) {
                return Err(invalid(format!("suite {} listed twice", info.name)));
            }
            suites.push((info, req.expected_outcome));
        }
        let tol = self.tolerances.unwrap_or_default();
        match self.engine {
            Engine::Exact => self.validate_exact(suites, tol, seed),
            Engine::Mc => self.validate_mc(suites, tol, seed),
        }
    }

    fn validate_exact(
        &self,
        suites: Vec<(&'static SuiteInfo, Outcome)>,
        tol: Tolerances,
        seed: u64,
    ) -> Result<Plan, CliError> {
        if self.mc.is_some() {
            return Err(invalid("mc parameters given for the exact engine"));
        }
        if tol.z_max.is_some() {
            return Err(invalid("tolerances.z_max applies to the mc engine only"));
        }
        let exact_tol = tol.exact.unwrap_or(DEFAULT_EXACT_TOL);
        if !(exact_tol.is_finite() && exact_tol > 0.0) {
            return Err(invalid(format!("tolerances.exact must be positive, got {exact_tol}")));
        }
        let exact = self.exact.unwrap_or_default();
        if exact.samples == 0 {
            return Err(invalid("exact.samples must be at least 1"));
        }
        let scenario = match &self.fixture {
            None => return Err(invalid("the exact engine needs a fixture")),
            Some(FixtureRef::Named(n)) => fixtures::by_name(n).ok_or_else(|| {
                invalid(format!("unknown fixture {n:?}; known: {}", fixtures::FIXTURE_NAMES.join(", ")))
            })?,
            Some(FixtureRef::Inline(doc)) => doc.to_scenario().map_err(|e| invalid(format!("inline fixture: {e}")))?,
        };
        scenario.bundle().map_err(|e| invalid(format!("fixture {}: {e}", scenario.name)))?;
        if let Some((info, _)) = suites.iter().find(|(i, _)| i.kind.needs_random_time()) {
            if scenario.tau.is_none() {
                return Err(invalid(format!(
                    "suite {} needs a fixture whose H jumps at most once; {} does not",
                    info.name, scenario.name
                )));
            }
        }
        Ok(Plan {
            engine: Engine::Exact,
            scenario: Some(scenario),
            suites,
            seed,
            exact_tol,
            z_max: flab_mc::DEFAULT_Z_MAX,
            exact,
            mc: McParams::default(),
        })
    }

    fn validate_mc(
        &self,
        suites: Vec<(&'static SuiteInfo, Outcome)>,
        tol: Tolerances,
        seed: u64,
    ) -> Result<Plan, CliError> {
        if self.fixture.is_some() {
            return Err(invalid("the mc engine simulates its own paths and takes no fixture"));
        }
        if self.exact.is_some() {
            return Err(invalid("exact parameters given for the mc engine"));
        }
        if tol.exact.is_some() {
            return Err(invalid("tolerances.exact applies to the exact engine only"));
        }
        let z_max = tol.z_max.unwrap_or(flab_mc::DEFAULT_Z_MAX);
        if !(z_max.is_finite() && z_max > 0.0) {
            return Err(invalid(format!("tolerances.z_max must be positive, got {z_max}")));
        }
        let mc = self.mc.clone().unwrap_or_default();
        for (name, v) in [("lambda", mc.lambda), ("mu", mc.mu), ("t_real", mc.t_real)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("mc.{name} must be positive and finite, got {v}")));
            }
        }
        if mc.n_paths < 2 {
            return Err(invalid("mc.n_paths must be at least 2"));
        }
        if mc.epsilons.is_empty() || mc.epsilons.iter().any(|&e| !(e > 0.0 && e < mc.t_real)) {
            return Err(invalid("mc.epsilons must be a non-empty list in (0, t_real)"));
        }
        Ok(Plan {
            engine: Engine::Mc,
            scenario: None,
            suites,
            seed,
            exact_tol: DEFAULT_EXACT_TOL,
            z_max,
            exact: ExactParams::default(),
            mc,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_suite() -> &'static str {
        &crate::registry::registry().iter().find(|s| s.engine == Engine::Exact).unwrap().name
    }

    fn mc_suite() -> &'static str {
        &crate::registry::registry().iter().find(|s| s.engine == Engine::Mc).unwrap().name
    }

    #[test]
    fn both_suite_forms_parse() {
        let text = format!(
            r#"{{"engine":"exact","fixture":"space_a","suites":["{0}",{{"name":"{0}","expected_outcome":"fails"}}]}}"#,
            exact_suite()
        );
        let c = ScenarioConfig::parse(&text).unwrap();
        assert_eq!(c.suites[0].expected_outcome, Outcome::Holds);
        assert_eq!(c.suites[1].expected_outcome, Outcome::Fails);
        assert!(matches!(c.validate(0), Err(CliError::ConfigInvalid(m)) if m.contains("twice")));
    }

    #[test]
    fn engine_parameters_do_not_mix() {
        let exact_with_mc = format!(
            r#"{{"engine":"exact","fixture":"space_a","suites":["{}"],"mc":{{"lambda":2}}}}"#,
            exact_suite()
        );
        assert!(ScenarioConfig::parse(&exact_with_mc).unwrap().validate(0).is_err());
        let mc_with_exact_tol =
            format!(r#"{{"engine":"mc","suites":["{}"],"tolerances":{{"exact":1e-9}}}}"#, mc_suite());
        assert!(ScenarioConfig::parse(&mc_with_exact_tol).unwrap().validate(0).is_err());
        let wrong_engine = format!(r#"{{"engine":"mc","suites":["{}"]}}"#, exact_suite());
        assert!(ScenarioConfig::parse(&wrong_engine).unwrap().validate(0).is_err());
    }

    #[test]
    fn unknown_fields_and_fixtures_rejected() {
        assert!(ScenarioConfig::parse(r#"{"engine":"exact","suites":[],"colour":1}"#).is_err());
        let text = format!(r#"{{"engine":"exact","fixture":"nowhere","suites":["{}"]}}"#, exact_suite());
        assert!(ScenarioConfig::parse(&text).unwrap().validate(0).is_err());
    }

    #[test]
    fn random_time_suites_need_single_jump_h() {
        let name = &crate::registry::registry().iter().find(|s| s.kind.needs_random_time()).unwrap().name;
        let bad = format!(r#"{{"engine":"exact","fixture":"space_a","suites":["{name}"]}}"#);
        assert!(ScenarioConfig::parse(&bad).unwrap().validate(0).is_err());
        let good = format!(r#"{{"engine":"exact","fixture":"staggered","suites":["{name}"]}}"#);
        assert!(ScenarioConfig::parse(&good).unwrap().validate(0).is_ok());
    }

    #[test]
    fn inline_fixture() {
        let doc = BundleDoc::from_scenario(&fixtures::counterexample_a2());
        let c = ScenarioConfig {
            engine: Engine::Exact,
            fixture: Some(FixtureRef::Inline(Box::new(doc))),
            suites: vec![SuiteRequest { name: exact_suite().into(), expected_outcome: Outcome::Holds }],
            seed: None,
            tolerances: None,
            exact: None,
            mc: None,
        };
        let text = serde_json::to_string(&c).unwrap();
        let back = ScenarioConfig::parse(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.validate(1).unwrap().scenario.unwrap().space.len(), 3);
    }
}
