//! Finite probability spaces, partitions standing in for σ-fields, filtrations
//! as refining partition sequences, processes on a finite time grid, and
//! stopping times.
//!
//! Everything downstream computes on these types. Conditional expectation
//! given a partition is a probability-weighted block average; a block of total
//! probability zero gets the value 0 and is reported back to the caller.

use std::collections::HashMap;
use std::hash::Hash;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Absolute tolerance used by every exactness assertion in the engine.
pub const EXACT_TOL: f64 = 1e-9;

/// Allowed deviation of the atom probabilities from a total mass of one.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// A finite probability space. Atom ids are the indices `0..len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteProbabilitySpace {
    probs: Vec<f64>,
    null_atoms: Vec<usize>,
}

impl FiniteProbabilitySpace {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptySpace);
        }
        for (atom, &prob) in probs.iter().enumerate() {
            if prob < 0.0 || !prob.is_finite() {
                return Err(Error::NegativeProbability { atom, prob });
            }
        }
        let total: f64 = probs.iter().sum();
        let deviation = total - 1.0;
        if deviation.abs() > PROB_SUM_TOL {
            return Err(Error::ProbabilitySumMismatch { deviation });
        }
        let null_atoms = probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok(Self { probs, null_atoms })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, atom: usize) -> f64 {
        self.probs[atom]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Atoms carrying probability zero.
    pub fn null_atoms(&self) -> &[usize] {
        &self.null_atoms
    }

    pub fn is_null(&self, atom: usize) -> bool {
        self.probs[atom] == 0.0
    }

    pub fn expectation(&self, v: &[f64]) -> f64 {
        self.probs.iter().zip(v).map(|(p, x)| p * x).sum()
    }

    pub fn event_prob<I: IntoIterator<Item = usize>>(&self, atoms: I) -> f64 {
        atoms.into_iter().map(|a| self.probs[a]).sum()
    }
}

/// Builds a space with sequential atom ids from a list of probabilities.
pub fn build_space(atom_probs: &[f64]) -> Result<FiniteProbabilitySpace> {
    FiniteProbabilitySpace::new(atom_probs.to_vec())
}

/// A partition of the atoms; the finite model of a σ-field.
///
/// Blocks are kept in canonical order (sorted by smallest atom, atoms
/// ascending inside a block) so structural equality is set equality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl Partition {
    /// Groups atoms by equal label.
    pub fn from_labels<K: Eq + Hash>(labels: &[K]) -> Self {
        let mut index: HashMap<&K, usize> = HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = Vec::with_capacity(labels.len());
        for (atom, label) in labels.iter().enumerate() {
            let b = *index.entry(label).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(atom);
            block_of.push(b);
        }
        Self { blocks, block_of }
    }

    pub fn from_blocks(n_atoms: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut label = vec![usize::MAX; n_atoms];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {b} is empty")));
            }
            for &atom in block {
                if atom >= n_atoms {
                    return Err(Error::InvalidPartition(format!(
                        "atom {atom} out of range (space has {n_atoms} atoms)"
                    )));
                }
                if label[atom] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "atom {atom} appears in more than one block"
                    )));
                }
                label[atom] = b;
            }
        }
        if let Some(atom) = label.iter().position(|&l| l == usize::MAX) {
            return Err(Error::InvalidPartition(format!("atom {atom} is not covered")));
        }
        Ok(Self::from_labels(&label))
    }

    pub fn trivial(n_atoms: usize) -> Self {
        Self::from_labels(&vec![0u8; n_atoms])
    }

    pub fn finest(n_atoms: usize) -> Self {
        Self::from_labels(&(0..n_atoms).collect::<Vec<_>>())
    }

    /// σ(v): level sets of a random variable, with exact float equality.
    pub fn of_values(v: &[f64]) -> Self {
        let keys: Vec<u64> = v.iter().map(|x| float_key(*x)).collect();
        Self::from_labels(&keys)
    }

    pub fn n_atoms(&self) -> usize {
        self.block_of.len()
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &[usize] {
        &self.blocks[b]
    }

    pub fn block_of(&self, atom: usize) -> usize {
        self.block_of[atom]
    }

    /// True iff every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.n_atoms() == coarser.n_atoms()
            && self.blocks.iter().all(|block| {
                let target = coarser.block_of(block[0]);
                block.iter().all(|&a| coarser.block_of(a) == target)
            })
    }

    /// Common refinement of two partitions.
    pub fn join(&self, other: &Partition) -> Partition {
        assert_eq!(self.n_atoms(), other.n_atoms(), "join of partitions on different spaces");
        let labels: Vec<(usize, usize)> = (0..self.n_atoms())
            .map(|a| (self.block_of(a), other.block_of(a)))
            .collect();
        Partition::from_labels(&labels)
    }

    /// Blocks of `finer` contained in block `b` of `self`.
    pub fn children(&self, b: usize, finer: &Partition) -> Vec<usize> {
        let mut seen = Vec::new();
        for &atom in &self.blocks[b] {
            let c = finer.block_of(atom);
            if !seen.contains(&c) {
                seen.push(c);
            }
        }
        seen
    }
}

/// Join of two partitions.
pub fn join(a: &Partition, b: &Partition) -> Partition {
    a.join(b)
}

pub(crate) fn float_key(x: f64) -> u64 {
    // -0.0 and 0.0 are the same level
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

/// Result of a conditional expectation: the block-constant values plus the
/// blocks that carried no probability (where the value is defined as 0).
#[derive(Debug, Clone, PartialEq)]
pub struct CondExpectation {
    pub values: Vec<f64>,
    pub null_blocks: Vec<usize>,
}

/// E[v | σ(pi)] on a finite space.
pub fn conditional_expectation(
    space: &FiniteProbabilitySpace,
    v: &[f64],
    pi: &Partition,
) -> CondExpectation {
    assert_eq!(v.len(), space.len(), "random variable length differs from space size");
    assert_eq!(pi.n_atoms(), space.len(), "partition belongs to a different space");
    let mut values = vec![0.0; v.len()];
    let mut null_blocks = Vec::new();
    for (b, block) in pi.blocks().iter().enumerate() {
        let mass: f64 = block.iter().map(|&a| space.prob(a)).sum();
        if mass == 0.0 {
            null_blocks.push(b);
            continue;
        }
        let weighted: f64 = block.iter().map(|&a| space.prob(a) * v[a]).sum();
        let mean = weighted / mass;
        for &a in block {
            values[a] = mean;
        }
    }
    CondExpectation { values, null_blocks }
}

/// A filtration: partitions `P_0, ..., P_T`, each refining the previous one.
#[derive(Debug, Clone)]
pub struct Filtration {
    space: Arc<FiniteProbabilitySpace>,
    partitions: Vec<Partition>,
}

impl PartialEq for Filtration {
    fn eq(&self, other: &Self) -> bool {
        self.partitions == other.partitions && self.space.probs() == other.space.probs()
    }
}

impl Filtration {
    pub fn new(space: Arc<FiniteProbabilitySpace>, partitions: Vec<Partition>) -> Result<Self> {
        if partitions.len() < 2 {
            return Err(Error::ShapeMismatch(
                "a filtration needs a horizon of at least 1 (two partitions)".into(),
            ));
        }
        for (t, p) in partitions.iter().enumerate() {
            if p.n_atoms() != space.len() {
                return Err(Error::ShapeMismatch(format!(
                    "partition at t={t} covers {} atoms, space has {}",
                    p.n_atoms(),
                    space.len()
                )));
            }
            if t > 0 && !p.refines(&partitions[t - 1]) {
                return Err(Error::NotRefining { t });
            }
        }
        Ok(Self { space, partitions })
    }

    /// The same partition at every time.
    pub fn constant(space: Arc<FiniteProbabilitySpace>, partition: Partition, horizon: usize) -> Result<Self> {
        Self::new(space, vec![partition; horizon + 1])
    }

    pub fn trivial(space: Arc<FiniteProbabilitySpace>, horizon: usize) -> Result<Self> {
        let n = space.len();
        Self::constant(space, Partition::trivial(n), horizon)
    }

    pub fn horizon(&self) -> usize {
        self.partitions.len() - 1
    }

    pub fn n_atoms(&self) -> usize {
        self.space.len()
    }

    pub fn space(&self) -> &FiniteProbabilitySpace {
        &self.space
    }

    pub fn space_arc(&self) -> &Arc<FiniteProbabilitySpace> {
        &self.space
    }

    pub fn at(&self, t: usize) -> &Partition {
        &self.partitions[t]
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    /// E[v | P_t].
    pub fn cond_exp(&self, v: &[f64], t: usize) -> Vec<f64> {
        conditional_expectation(&self.space, v, &self.partitions[t]).values
    }

    /// True iff every `P_t` of `self` is refined by the corresponding `P_t` of `finer`.
    pub fn is_contained_in(&self, finer: &Filtration) -> bool {
        self.horizon() == finer.horizon()
            && self.partitions.iter().zip(&finer.partitions).all(|(c, f)| f.refines(c))
    }

    pub fn block_prob(&self, t: usize, b: usize) -> f64 {
        self.space.event_prob(self.partitions[t].block(b).iter().copied())
    }

    pub(crate) fn check_shape(&self, p: &Process) -> Result<()> {
        if p.n_atoms() != self.n_atoms() || p.horizon() != self.horizon() {
            return Err(Error::ShapeMismatch(format!(
                "process is {}x{}, filtration is {}x{}",
                p.n_atoms(),
                p.horizon() + 1,
                self.n_atoms(),
                self.horizon() + 1
            )));
        }
        Ok(())
    }
}

/// A real-valued process on atoms × {0..T}, stored atom-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Process {
    n_atoms: usize,
    horizon: usize,
    values: Vec<f64>,
}

impl Process {
    pub fn zeros(n_atoms: usize, horizon: usize) -> Self {
        Self { n_atoms, horizon, values: vec![0.0; n_atoms * (horizon + 1)] }
    }

    pub fn from_fn(n_atoms: usize, horizon: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n_atoms * (horizon + 1));
        for a in 0..n_atoms {
            for t in 0..=horizon {
                values.push(f(a, t));
            }
        }
        Self { n_atoms, horizon, values }
    }

    /// Builds `initial(atom) + Σ_{s<=t} inc(atom, s)` for s ≥ 1.
    pub fn from_increments(
        n_atoms: usize,
        horizon: usize,
        initial: impl Fn(usize) -> f64,
        inc: impl Fn(usize, usize) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(n_atoms * (horizon + 1));
        for a in 0..n_atoms {
            let mut acc = initial(a);
            values.push(acc);
            for t in 1..=horizon {
                acc += inc(a, t);
                values.push(acc);
            }
        }
        Self { n_atoms, horizon, values }
    }

    /// One row per atom, each of length `horizon + 1`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_atoms = rows.len();
        let len = rows.first().map(Vec::len).unwrap_or(0);
        if len < 2 || rows.iter().any(|r| r.len() != len) {
            return Err(Error::ShapeMismatch("rows must share a length of at least 2".into()));
        }
        Ok(Self { n_atoms, horizon: len - 1, values: rows.concat() })
    }

    pub fn from_row_major(n_atoms: usize, horizon: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_atoms * (horizon + 1) {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {}x{} process",
                values.len(),
                n_atoms,
                horizon + 1
            )));
        }
        Ok(Self { n_atoms, horizon, values })
    }

    /// Deterministic path `t ↦ c(t)`.
    pub fn deterministic(n_atoms: usize, path: &[f64]) -> Self {
        Self::from_fn(n_atoms, path.len() - 1, |_, t| path[t])
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, atom: usize, t: usize) -> f64 {
        self.values[atom * (self.horizon + 1) + t]
    }

    pub fn set(&mut self, atom: usize, t: usize, v: f64) {
        self.values[atom * (self.horizon + 1) + t] = v;
    }

    pub fn path(&self, atom: usize) -> &[f64] {
        let w = self.horizon + 1;
        &self.values[atom * w..(atom + 1) * w]
    }

    /// ΔX_t, with ΔX_0 = 0.
    pub fn increment(&self, atom: usize, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.value(atom, t) - self.value(atom, t - 1)
        }
    }

    /// Values at a fixed time, one per atom.
    pub fn at_time(&self, t: usize) -> Vec<f64> {
        (0..self.n_atoms).map(|a| self.value(a, t)).collect()
    }

    pub fn increments_at(&self, t: usize) -> Vec<f64> {
        (0..self.n_atoms).map(|a| self.increment(a, t)).collect()
    }

    pub fn terminal(&self) -> Vec<f64> {
        self.at_time(self.horizon)
    }

    /// The process of increments `t ↦ ΔX_t`.
    pub fn jumps(&self) -> Process {
        Process::from_fn(self.n_atoms, self.horizon, |a, t| self.increment(a, t))
    }

    /// `t ↦ X_{t-1}` with `X_{0-} := X_0`.
    pub fn left_limit(&self) -> Process {
        Process::from_fn(self.n_atoms, self.horizon, |a, t| self.value(a, t.saturating_sub(1)))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Process {
        Process { n_atoms: self.n_atoms, horizon: self.horizon, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Process, f: impl Fn(f64, f64) -> f64) -> Process {
        self.assert_same_shape(other);
        Process {
            n_atoms: self.n_atoms,
            horizon: self.horizon,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn same_shape(&self, other: &Process) -> bool {
        self.n_atoms == other.n_atoms && self.horizon == other.horizon
    }

    fn assert_same_shape(&self, other: &Process) {
        assert!(
            self.same_shape(other),
            "process shapes differ: {}x{} vs {}x{}",
            self.n_atoms,
            self.horizon + 1,
            other.n_atoms,
            other.horizon + 1
        );
    }

    /// Largest |value| over positive-probability atoms and all times.
    pub fn sup_abs(&self, space: &FiniteProbabilitySpace) -> f64 {
        (0..self.n_atoms)
            .filter(|&a| !space.is_null(a))
            .flat_map(|a| self.path(a).iter().map(|v| v.abs()))
            .fold(0.0, f64::max)
    }

    /// Largest |self - other| over positive-probability atoms and all times.
    pub fn max_abs_diff(&self, other: &Process, space: &FiniteProbabilitySpace) -> f64 {
        (self - other).sup_abs(space)
    }

    /// Largest |self - other| over every atom, null atoms included.
    pub fn max_abs_diff_all(&self, other: &Process) -> f64 {
        self.assert_same_shape(other);
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// First (t, block) where the value at t varies on a block of `P_t`.
    pub fn adaptedness_violation(&self, filtration: &Filtration) -> Option<(usize, usize)> {
        (0..=self.horizon).find_map(|t| {
            varying_block(filtration.at(t), |a| self.value(a, t)).map(|b| (t, b))
        })
    }

    pub fn is_adapted(&self, filtration: &Filtration) -> bool {
        filtration.check_shape(self).is_ok() && self.adaptedness_violation(filtration).is_none()
    }

    /// First (t, block) where measurability w.r.t. `P_{t-1}` (or `P_0` at t=0) fails.
    pub fn predictability_violation(&self, filtration: &Filtration) -> Option<(usize, usize)> {
        (0..=self.horizon).find_map(|t| {
            let p = filtration.at(t.saturating_sub(1));
            varying_block(p, |a| self.value(a, t)).map(|b| (t, b))
        })
    }

    pub fn is_predictable(&self, filtration: &Filtration) -> bool {
        filtration.check_shape(self).is_ok() && self.predictability_violation(filtration).is_none()
    }

    /// ℕ-valued, starts at 0, increments in {0, 1}.
    pub fn check_point_process(&self) -> Result<()> {
        for a in 0..self.n_atoms {
            if self.value(a, 0) != 0.0 {
                return Err(Error::NotPointProcess { atom: a, t: 0, reason: "does not start at 0" });
            }
            for t in 1..=self.horizon {
                let d = self.increment(a, t);
                if d != 0.0 && d != 1.0 {
                    return Err(Error::NotPointProcess { atom: a, t, reason: "increment outside {0, 1}" });
                }
            }
        }
        Ok(())
    }

    pub fn is_point_process(&self) -> bool {
        self.check_point_process().is_ok()
    }

    pub fn check_increasing(&self) -> Result<()> {
        for a in 0..self.n_atoms {
            for t in 1..=self.horizon {
                if self.increment(a, t) < -EXACT_TOL {
                    return Err(Error::NotIncreasing { atom: a, t });
                }
            }
        }
        Ok(())
    }
}

fn varying_block(p: &Partition, value: impl Fn(usize) -> f64) -> Option<usize> {
    p.blocks().iter().position(|block| {
        let v0 = value(block[0]);
        block.iter().any(|&a| (value(a) - v0).abs() > EXACT_TOL)
    })
}

impl Add for &Process {
    type Output = Process;
    fn add(self, rhs: &Process) -> Process {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Process {
    type Output = Process;
    fn sub(self, rhs: &Process) -> Process {
        self.zip_with(rhs, |a, b| a - b)
    }
}

/// Pointwise product.
impl Mul for &Process {
    type Output = Process;
    fn mul(self, rhs: &Process) -> Process {
        self.zip_with(rhs, |a, b| a * b)
    }
}

impl Mul<f64> for &Process {
    type Output = Process;
    fn mul(self, rhs: f64) -> Process {
        self.map(|a| a * rhs)
    }
}

impl Neg for &Process {
    type Output = Process;
    fn neg(self) -> Process {
        self.map(|a| -a)
    }
}

/// A random time with values in {0..T} ∪ {∞}; `None` is ∞.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoppingTime {
    values: Vec<Option<usize>>,
}

impl StoppingTime {
    pub fn new(values: Vec<Option<usize>>) -> Self {
        Self { values }
    }

    pub fn infinite(n_atoms: usize) -> Self {
        Self { values: vec![None; n_atoms] }
    }

    pub fn constant(n_atoms: usize, t: usize) -> Self {
        Self { values: vec![Some(t); n_atoms] }
    }

    /// First time the process reaches `level`, ∞ if never.
    pub fn hitting_time(p: &Process, level: f64) -> Self {
        Self {
            values: (0..p.n_atoms())
                .map(|a| p.path(a).iter().position(|&v| v >= level))
                .collect(),
        }
    }

    pub fn values(&self) -> &[Option<usize>] {
        &self.values
    }

    pub fn get(&self, atom: usize) -> Option<usize> {
        self.values[atom]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self, other: &StoppingTime) -> StoppingTime {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| match (a, b) {
                (Some(x), Some(y)) => Some((*x).min(*y)),
                (Some(x), None) | (None, Some(x)) => Some(*x),
                (None, None) => None,
            })
            .collect();
        StoppingTime { values }
    }

    /// Checks that `{σ <= t}` is a union of blocks of `P_t` for every t.
    pub fn check(&self, filtration: &Filtration) -> Result<()> {
        if self.values.len() != filtration.n_atoms() {
            return Err(Error::ShapeMismatch("stopping time length differs from space size".into()));
        }
        for t in 0..=filtration.horizon() {
            let stopped = |a: usize| matches!(self.values[a], Some(s) if s <= t);
            for (b, block) in filtration.at(t).blocks().iter().enumerate() {
                let first = stopped(block[0]);
                if block.iter().any(|&a| stopped(a) != first) {
                    return Err(Error::NotAStoppingTime { t, block: b });
                }
            }
        }
        Ok(())
    }

    pub fn is_stopping_time(&self, filtration: &Filtration) -> bool {
        self.check(filtration).is_ok()
    }

    /// Indicator process `1_{σ <= t}`.
    pub fn indicator(&self, horizon: usize) -> Process {
        Process::from_fn(self.values.len(), horizon, |a, t| match self.values[a] {
            Some(s) if s <= t => 1.0,
            _ => 0.0,
        })
    }
}

/// `X^σ_t = X_{t∧σ}`; σ must be a stopping time of `filtration`.
pub fn stop_process(p: &Process, sigma: &StoppingTime, filtration: &Filtration) -> Result<Process> {
    filtration.check_shape(p)?;
    sigma.check(filtration)?;
    Ok(stop_unchecked(p, sigma))
}

pub(crate) fn stop_unchecked(p: &Process, sigma: &StoppingTime) -> Process {
    Process::from_fn(p.n_atoms(), p.horizon(), |a, t| {
        let s = sigma.get(a).map_or(t, |s| s.min(t));
        p.value(a, s)
    })
}
