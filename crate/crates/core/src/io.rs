//! Versioned JSON documents for spaces, scenario bundles, jump measures,
//! representation solutions and random-time bundles.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures::Scenario;
use crate::jump_measure::{Mark, MarkedMeasure};
use crate::random_time::RandomTimeBundle;
use crate::representation::{Integrands, RepresentationSolution};
use crate::space::{FiniteProbabilitySpace, Filtration, Partition, Process};

pub const SPACE_SCHEMA: &str = "filtration-lab/space-v1";
pub const BUNDLE_SCHEMA: &str = "filtration-lab/bundle-v1";
pub const MEASURE_SCHEMA: &str = "filtration-lab/measure-v1";
pub const SOLUTION_SCHEMA: &str = "filtration-lab/solution-v1";
pub const RANDOMTIME_SCHEMA: &str = "filtration-lab/randomtime-v1";

fn check_schema(found: &str, expected: &str) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::Schema(format!("expected schema {expected:?}, found {found:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomDoc {
    pub id: u64,
    pub prob: f64,
}

/// Per-atom value rows, `rows[atom][t]`.
pub type Rows = Vec<Vec<f64>>;

/// Partitions as lists of blocks of atom ids, one per time.
pub type PartitionsDoc = Vec<Vec<Vec<u64>>>;

pub fn rows(p: &Process) -> Rows {
    (0..p.n_atoms()).map(|a| p.path(a).to_vec()).collect()
}

fn sequential_ids(n: usize) -> Vec<u64> {
    (0..n as u64).collect()
}

fn atoms_doc(space: &FiniteProbabilitySpace) -> Vec<AtomDoc> {
    space.probs().iter().enumerate().map(|(i, &prob)| AtomDoc { id: i as u64, prob }).collect()
}

/// Builds the space and an id → index map; ids must be unique.
fn space_from_atoms(atoms: &[AtomDoc]) -> Result<(Arc<FiniteProbabilitySpace>, HashMap<u64, usize>)> {
    let mut index = HashMap::with_capacity(atoms.len());
    for (i, a) in atoms.iter().enumerate() {
        if index.insert(a.id, i).is_some() {
            return Err(Error::Schema(format!("duplicate atom id {}", a.id)));
        }
    }
    let space = FiniteProbabilitySpace::new(atoms.iter().map(|a| a.prob).collect())?;
    Ok((Arc::new(space), index))
}

fn partition_from_doc(blocks: &[Vec<u64>], index: &HashMap<u64, usize>) -> Result<Partition> {
    let blocks = blocks
        .iter()
        .map(|b| {
            b.iter()
                .map(|id| index.get(id).copied().ok_or_else(|| Error::Schema(format!("unknown atom id {id}"))))
                .collect::<Result<Vec<usize>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Partition::from_blocks(index.len(), blocks)
}

fn partition_doc(p: &Partition, ids: &[u64]) -> Vec<Vec<u64>> {
    p.blocks().iter().map(|b| b.iter().map(|&a| ids[a]).collect()).collect()
}

pub fn filtration_doc(f: &Filtration) -> PartitionsDoc {
    let ids = sequential_ids(f.n_atoms());
    f.partitions().iter().map(|p| partition_doc(p, &ids)).collect()
}

/// A space, optionally a filtration, and named processes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDoc {
    pub schema: String,
    pub atoms: Vec<AtomDoc>,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filtration: Option<PartitionsDoc>,
    #[serde(default)]
    pub processes: BTreeMap<String, Rows>,
}

/// Parsed form of a [`SpaceDoc`].
#[derive(Debug, Clone)]
pub struct LoadedSpace {
    pub space: Arc<FiniteProbabilitySpace>,
    pub filtration: Option<Filtration>,
    pub processes: BTreeMap<String, Process>,
}

impl SpaceDoc {
    pub fn from_parts(f: &Filtration, processes: &[(&str, &Process)]) -> Self {
        Self {
            schema: SPACE_SCHEMA.into(),
            atoms: atoms_doc(f.space()),
            horizon: f.horizon(),
            filtration: Some(filtration_doc(f)),
            processes: processes.iter().map(|(k, p)| (k.to_string(), rows(p))).collect(),
        }
    }

    pub fn load(&self) -> Result<LoadedSpace> {
        check_schema(&self.schema, SPACE_SCHEMA)?;
        let (space, index) = space_from_atoms(&self.atoms)?;
        let filtration = match &self.filtration {
            Some(parts) => {
                if parts.len() != self.horizon + 1 {
                    return Err(Error::Schema("filtration needs horizon + 1 partitions".into()));
                }
                let ps = parts.iter().map(|b| partition_from_doc(b, &index)).collect::<Result<Vec<_>>>()?;
                Some(Filtration::new(space.clone(), ps)?)
            }
            None => None,
        };
        let mut processes = BTreeMap::new();
        for (name, r) in &self.processes {
            let p = load_rows(r, space.len(), self.horizon, name)?;
            if let Some(f) = &filtration {
                if let Some((t, block)) = p.adaptedness_violation(f) {
                    return Err(Error::NotAdapted { t, block });
                }
            }
            processes.insert(name.clone(), p);
        }
        Ok(LoadedSpace { space, filtration, processes })
    }
}

fn load_rows(r: &Rows, n: usize, horizon: usize, what: &str) -> Result<Process> {
    if r.len() != n || r.iter().any(|row| row.len() != horizon + 1) {
        return Err(Error::Schema(format!("{what}: expected {n} rows of length {}", horizon + 1)));
    }
    Process::from_rows(r)
}

/// Inline scenario: space, the two point processes and the initial σ-field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleDoc {
    pub schema: String,
    #[serde(default)]
    pub name: Option<String>,
    pub atoms: Vec<AtomDoc>,
    pub x: Rows,
    pub h: Rows,
    /// Blocks of the initial σ-field; trivial when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<Vec<u64>>>,
}

impl BundleDoc {
    pub fn from_scenario(s: &Scenario) -> Self {
        let ids = sequential_ids(s.space.len());
        Self {
            schema: BUNDLE_SCHEMA.into(),
            name: Some(s.name.clone()),
            atoms: atoms_doc(&s.space),
            x: rows(&s.x),
            h: rows(&s.h),
            r: Some(partition_doc(&s.r, &ids)),
        }
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        check_schema(&self.schema, BUNDLE_SCHEMA)?;
        let (space, index) = space_from_atoms(&self.atoms)?;
        let horizon = self.x.first().map_or(0, |r| r.len().saturating_sub(1));
        if horizon == 0 {
            return Err(Error::Schema("x must have at least one time step".into()));
        }
        let x = load_rows(&self.x, space.len(), horizon, "x")?;
        let h = load_rows(&self.h, space.len(), horizon, "h")?;
        x.check_point_process()?;
        h.check_point_process()?;
        let r = self.r.as_ref().map(|b| partition_from_doc(b, &index)).transpose()?;
        let name = self.name.clone().unwrap_or_else(|| "inline".into());
        Scenario::new(name, space.probs().to_vec(), x, h, r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventDoc {
    pub t: usize,
    pub mark: Mark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureDoc {
    pub schema: String,
    pub horizon: usize,
    pub events: Vec<Vec<EventDoc>>,
}

impl MeasureDoc {
    pub fn from_measure(mu: &MarkedMeasure) -> Self {
        Self {
            schema: MEASURE_SCHEMA.into(),
            horizon: mu.horizon(),
            events: (0..mu.n_atoms())
                .map(|a| mu.events(a).iter().map(|&(t, mark)| EventDoc { t, mark }).collect())
                .collect(),
        }
    }

    pub fn to_measure(&self) -> Result<MarkedMeasure> {
        check_schema(&self.schema, MEASURE_SCHEMA)?;
        MarkedMeasure::from_events(
            self.horizon,
            self.events.iter().map(|evs| evs.iter().map(|e| (e.t, e.mark)).collect()).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckDoc {
    pub name: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDoc {
    pub schema: String,
    /// `prp`, `wrp` or `triple`.
    pub kind: String,
    pub integrands: BTreeMap<String, Rows>,
    pub residual_sup: f64,
    pub checks: Vec<CheckDoc>,
}

impl SolutionDoc {
    pub fn from_solution(s: &RepresentationSolution, checks: Vec<CheckDoc>) -> Self {
        let (kind, integrands): (&str, BTreeMap<String, Rows>) = match &s.integrands {
            Integrands::Single(k) => ("prp", [("K".to_string(), rows(k))].into()),
            Integrands::Marks(w) => (
                "wrp",
                Mark::ALL
                    .iter()
                    .map(|m| {
                        let [a, b] = m.coords();
                        (format!("W({a},{b})"), rows(w.get(*m)))
                    })
                    .collect(),
            ),
            Integrands::Triple(k) => ("triple", (0..3).map(|i| (format!("K{}", i + 1), rows(&k[i]))).collect()),
        };
        Self {
            schema: SOLUTION_SCHEMA.into(),
            kind: kind.into(),
            integrands,
            residual_sup: s.residual_sup,
            checks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomTimeDoc {
    pub schema: String,
    pub atoms: Vec<AtomDoc>,
    /// `null` for τ = ∞.
    pub tau: Vec<Option<usize>>,
    pub h: Rows,
    pub azema: Rows,
    pub f: PartitionsDoc,
    pub g: PartitionsDoc,
}

impl RandomTimeDoc {
    pub fn from_bundle(b: &RandomTimeBundle) -> Self {
        Self {
            schema: RANDOMTIME_SCHEMA.into(),
            atoms: atoms_doc(b.f.space()),
            tau: b.tau.values().to_vec(),
            h: rows(&b.h),
            azema: rows(&b.azema),
            f: filtration_doc(&b.f),
            g: filtration_doc(&b.g),
        }
    }
}

pub fn to_json<T: Serialize>(doc: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(doc)?)
}

pub fn from_json<'a, T: Deserialize<'a>>(s: &'a str) -> Result<T> {
    Ok(serde_json::from_str(s)?)
}
