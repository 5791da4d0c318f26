//! The jump measure of the pair `(X, H)` on the mark set
//! `E = {(1,0), (0,1), (1,1)}`, its predictable compensator, integration of
//! predictable functions against both, and the three compensated point
//! processes `Z¹, Z², Z³` built from `X - [X,H]`, `H - [X,H]` and `[X,H]`.

use serde::{Deserialize, Serialize};

use crate::calculus::{compensator, quadratic_covariation};
use crate::error::{Error, Result};
use crate::space::{Filtration, Process};

/// Jump vector `(ΔX, ΔH)` of a joint event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "[u8; 2]", try_from = "[u8; 2]")]
pub enum Mark {
    /// (1,0): X jumps alone.
    XOnly,
    /// (0,1): H jumps alone.
    HOnly,
    /// (1,1): common jump.
    Joint,
}

impl Mark {
    pub const ALL: [Mark; 3] = [Mark::XOnly, Mark::HOnly, Mark::Joint];

    pub fn from_jumps(dx: f64, dh: f64) -> Option<Mark> {
        match (dx == 1.0, dh == 1.0) {
            (true, false) => Some(Mark::XOnly),
            (false, true) => Some(Mark::HOnly),
            (true, true) => Some(Mark::Joint),
            (false, false) => None,
        }
    }

    pub fn coords(self) -> [u8; 2] {
        match self {
            Mark::XOnly => [1, 0],
            Mark::HOnly => [0, 1],
            Mark::Joint => [1, 1],
        }
    }

    pub fn index(self) -> usize {
        match self {
            Mark::XOnly => 0,
            Mark::HOnly => 1,
            Mark::Joint => 2,
        }
    }
}

impl From<Mark> for [u8; 2] {
    fn from(m: Mark) -> Self {
        m.coords()
    }
}

impl TryFrom<[u8; 2]> for Mark {
    type Error = String;
    fn try_from(v: [u8; 2]) -> std::result::Result<Self, String> {
        match v {
            [1, 0] => Ok(Mark::XOnly),
            [0, 1] => Ok(Mark::HOnly),
            [1, 1] => Ok(Mark::Joint),
            other => Err(format!("{other:?} is not a mark in E")),
        }
    }
}

/// Integration of predictable functions against a random measure.
pub trait RandomMeasure {
    fn integrate(&self, w: &PredictableFunction) -> Process;
}

/// `W∗m`.
pub fn integrate<M: RandomMeasure + ?Sized>(w: &PredictableFunction, m: &M) -> Process {
    m.integrate(w)
}

/// Integer-valued jump measure: per atom, the list of `(time, mark)` events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedMeasure {
    horizon: usize,
    events: Vec<Vec<(usize, Mark)>>,
}

impl MarkedMeasure {
    /// Events at every `(atom, t)`, t ≥ 1, with `(ΔX, ΔH) ≠ (0, 0)`.
    pub fn from_paths(x: &Process, h: &Process) -> Result<Self> {
        x.check_point_process()?;
        h.check_point_process()?;
        if !x.same_shape(h) {
            return Err(Error::ShapeMismatch("X and H have different shapes".into()));
        }
        let events = (0..x.n_atoms())
            .map(|a| {
                (1..=x.horizon())
                    .filter_map(|t| Mark::from_jumps(x.increment(a, t), h.increment(a, t)).map(|m| (t, m)))
                    .collect()
            })
            .collect();
        Ok(Self { horizon: x.horizon(), events })
    }

    pub fn from_events(horizon: usize, events: Vec<Vec<(usize, Mark)>>) -> Result<Self> {
        for (a, evs) in events.iter().enumerate() {
            let mut last = 0;
            for &(t, _) in evs {
                if t == 0 || t > horizon || t <= last {
                    return Err(Error::ShapeMismatch(format!(
                        "atom {a}: event times must be strictly increasing in 1..={horizon}"
                    )));
                }
                last = t;
            }
        }
        Ok(Self { horizon, events })
    }

    pub fn n_atoms(&self) -> usize {
        self.events.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn events(&self, atom: usize) -> &[(usize, Mark)] {
        &self.events[atom]
    }

    pub fn is_empty(&self) -> bool {
        self.events.iter().all(Vec::is_empty)
    }

    /// Counting process of events carrying `mark`.
    pub fn count(&self, mark: Mark) -> Process {
        self.integrate(&PredictableFunction::indicator(self.n_atoms(), self.horizon, mark))
    }

    /// `μ([0,t] × E)` per atom.
    pub fn total_mass(&self) -> Process {
        self.integrate(&PredictableFunction::constant(self.n_atoms(), self.horizon, 1.0))
    }

    /// `X = (1_{(1,0)} + 1_{(1,1)})∗μ` and `H = (1_{(0,1)} + 1_{(1,1)})∗μ`.
    pub fn reconstruct(&self) -> (Process, Process) {
        let joint = self.count(Mark::Joint);
        (&self.count(Mark::XOnly) + &joint, &self.count(Mark::HOnly) + &joint)
    }
}

impl RandomMeasure for MarkedMeasure {
    fn integrate(&self, w: &PredictableFunction) -> Process {
        let mut out = Process::zeros(self.n_atoms(), self.horizon);
        for (a, evs) in self.events.iter().enumerate() {
            let mut acc = 0.0;
            let mut next = evs.iter().peekable();
            for t in 1..=self.horizon {
                if let Some(&&(s, m)) = next.peek() {
                    if s == t {
                        acc += w.get(m).value(a, t);
                        next.next();
                    }
                }
                out.set(a, t, acc);
            }
        }
        out
    }
}

/// Predictable compensator of the jump measure, stored as the three
/// compensators of `X - [X,H]`, `H - [X,H]` and `[X,H]`; the per-step
/// density at `(atom, t, mark)` is their increment.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensatorMeasure {
    compensators: [Process; 3],
}

impl CompensatorMeasure {
    pub fn from_compensators(compensators: [Process; 3]) -> Self {
        Self { compensators }
    }

    pub fn compensator(&self, mark: Mark) -> &Process {
        &self.compensators[mark.index()]
    }

    /// `ν({t} × {mark})` on `atom`.
    pub fn density(&self, mark: Mark, atom: usize, t: usize) -> f64 {
        self.compensators[mark.index()].increment(atom, t)
    }

    pub fn n_atoms(&self) -> usize {
        self.compensators[0].n_atoms()
    }

    pub fn horizon(&self) -> usize {
        self.compensators[0].horizon()
    }
}

impl RandomMeasure for CompensatorMeasure {
    fn integrate(&self, w: &PredictableFunction) -> Process {
        Process::from_increments(
            self.n_atoms(),
            self.horizon(),
            |_| 0.0,
            |a, t| Mark::ALL.iter().map(|&m| w.get(m).value(a, t) * self.density(m, a, t)).sum(),
        )
    }
}

/// `W(ω, t, x)` for `x ∈ E`, as three processes indexed by mark.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictableFunction {
    components: [Process; 3],
}

impl PredictableFunction {
    /// Components in mark order (1,0), (0,1), (1,1).
    pub fn new(w10: Process, w01: Process, w11: Process) -> Self {
        assert!(w10.same_shape(&w01) && w10.same_shape(&w11), "predictable function components differ in shape");
        Self { components: [w10, w01, w11] }
    }

    pub fn constant(n_atoms: usize, horizon: usize, c: f64) -> Self {
        let p = Process::from_fn(n_atoms, horizon, |_, _| c);
        Self::new(p.clone(), p.clone(), p)
    }

    /// `1_{x = mark}`.
    pub fn indicator(n_atoms: usize, horizon: usize, mark: Mark) -> Self {
        let one = Process::from_fn(n_atoms, horizon, |_, _| 1.0);
        let zero = Process::zeros(n_atoms, horizon);
        let mut c = [zero.clone(), zero.clone(), zero];
        c[mark.index()] = one;
        Self { components: c }
    }

    pub fn get(&self, mark: Mark) -> &Process {
        &self.components[mark.index()]
    }

    pub fn components(&self) -> &[Process; 3] {
        &self.components
    }

    /// Each component must be predictable in `g`.
    pub fn check_predictable(&self, g: &Filtration) -> Result<()> {
        for c in &self.components {
            if let Some((t, block)) = c.predictability_violation(g) {
                return Err(Error::NotPredictable { t, block });
            }
        }
        Ok(())
    }

    /// `W^{mark} = W 1_{x = mark}`.
    pub fn restrict(&self, mark: Mark) -> Self {
        let zero = Process::zeros(self.components[0].n_atoms(), self.components[0].horizon());
        let mut c = [zero.clone(), zero.clone(), zero];
        c[mark.index()] = self.components[mark.index()].clone();
        Self { components: c }
    }
}

/// `X - [X,H]`, `H - [X,H]`, `[X,H]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDecomposition {
    pub x_only: Process,
    pub h_only: Process,
    pub joint: Process,
}

impl JointDecomposition {
    pub fn as_array(&self) -> [&Process; 3] {
        [&self.x_only, &self.h_only, &self.joint]
    }
}

fn check_pair(x: &Process, h: &Process, g: &Filtration) -> Result<()> {
    x.check_point_process()?;
    h.check_point_process()?;
    g.check_shape(x)?;
    g.check_shape(h)?;
    for p in [x, h] {
        if let Some((t, block)) = p.adaptedness_violation(g) {
            return Err(Error::NotAdapted { t, block });
        }
    }
    Ok(())
}

/// Splits `(X, H)` into three point processes with pairwise no common jumps.
pub fn joint_decomposition(x: &Process, h: &Process, g: &Filtration) -> Result<JointDecomposition> {
    check_pair(x, h, g)?;
    let joint = quadratic_covariation(x, h);
    Ok(JointDecomposition { x_only: x - &joint, h_only: h - &joint, joint })
}

/// The jump measure of `(X, H)`.
pub fn jump_measure(x: &Process, h: &Process, g: &Filtration) -> Result<MarkedMeasure> {
    check_pair(x, h, g)?;
    MarkedMeasure::from_paths(x, h)
}

/// G-compensator of the jump measure: the compensators of the three counting
/// processes of the marks.
pub fn compensator_measure(mu: &MarkedMeasure, g: &Filtration) -> Result<CompensatorMeasure> {
    let comps = Mark::ALL.map(|m| compensator(&mu.count(m), g).map(|c| c.compensator));
    let [a, b, c] = comps;
    Ok(CompensatorMeasure { compensators: [a?, b?, c?] })
}

/// `Z¹, Z², Z³` with their decomposition and compensators.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalMartingales {
    pub decomposition: JointDecomposition,
    /// Compensators of `X - [X,H]`, `H - [X,H]`, `[X,H]`.
    pub compensators: [Process; 3],
    pub z: [Process; 3],
}

impl FundamentalMartingales {
    pub fn z1(&self) -> &Process {
        &self.z[0]
    }
    pub fn z2(&self) -> &Process {
        &self.z[1]
    }
    pub fn z3(&self) -> &Process {
        &self.z[2]
    }
}

pub fn fundamental_martingales(x: &Process, h: &Process, g: &Filtration) -> Result<FundamentalMartingales> {
    let decomposition = joint_decomposition(x, h, g)?;
    let pairs = decomposition.as_array().map(|y| compensator(y, g));
    let [a, b, c] = pairs;
    let (a, b, c) = (a?, b?, c?);
    Ok(FundamentalMartingales {
        decomposition,
        compensators: [a.compensator, b.compensator, c.compensator],
        z: [a.martingale_part, b.martingale_part, c.martingale_part],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::is_martingale;
    use crate::fixtures;

    #[test]
    fn degenerate_decompositions() {
        let fx = fixtures::space_a();
        let g = fx.bundle().unwrap().g;
        let zero = Process::zeros(fx.x.n_atoms(), fx.x.horizon());
        let d = joint_decomposition(&fx.x, &zero, &g).unwrap();
        assert_eq!((d.x_only, d.h_only, d.joint), (fx.x.clone(), zero.clone(), zero.clone()));
        let d = joint_decomposition(&fx.x, &fx.x, &g).unwrap();
        assert_eq!((d.x_only, d.h_only, d.joint), (zero.clone(), zero, fx.x.clone()));
    }

    #[test]
    fn empty_measure_without_jumps() {
        let zero = Process::zeros(3, 2);
        let mu = MarkedMeasure::from_paths(&zero, &zero).unwrap();
        assert!(mu.is_empty());
    }

    #[test]
    fn a2_events() {
        let fx = fixtures::counterexample_a2();
        let g = fx.bundle().unwrap().g;
        let mu = jump_measure(&fx.x, &fx.h, &g).unwrap();
        assert_eq!(mu.events(0), &[(1, Mark::XOnly)]);
        assert_eq!(mu.events(1), &[(1, Mark::HOnly)]);
        assert!(mu.events(2).is_empty());
        let nu = compensator_measure(&mu, &g).unwrap();
        for a in 0..3 {
            assert!((nu.density(Mark::XOnly, a, 1) - 0.3).abs() < 1e-15);
            assert!((nu.density(Mark::HOnly, a, 1) - 0.5).abs() < 1e-15);
            assert_eq!(nu.density(Mark::Joint, a, 1), 0.0);
        }
        let zs = fundamental_martingales(&fx.x, &fx.h, &g).unwrap();
        assert_eq!(zs.z3().sup_abs(g.space()), 0.0);
    }

    #[test]
    fn deterministic_jumps_have_nu_equal_mu() {
        let s = std::sync::Arc::new(crate::space::FiniteProbabilitySpace::uniform(2).unwrap());
        let x = Process::deterministic(2, &[0.0, 1.0, 1.0]);
        let h = Process::deterministic(2, &[0.0, 1.0, 2.0]);
        let g = Filtration::trivial(s, 2).unwrap();
        let mu = jump_measure(&x, &h, &g).unwrap();
        let nu = compensator_measure(&mu, &g).unwrap();
        let w = PredictableFunction::new(
            Process::deterministic(2, &[0.0, 2.0, -1.0]),
            Process::deterministic(2, &[0.0, 0.5, 3.0]),
            Process::deterministic(2, &[0.0, 7.0, 1.0]),
        );
        assert_eq!(mu.integrate(&w), nu.integrate(&w));
    }

    #[test]
    fn mark_serde_uses_jump_vectors() {
        assert_eq!(serde_json::to_string(&Mark::HOnly).unwrap(), "[0,1]");
        let m: Mark = serde_json::from_str("[1,1]").unwrap();
        assert_eq!(m, Mark::Joint);
        assert!(serde_json::from_str::<Mark>("[0,0]").is_err());
    }

    #[test]
    fn space_a_event_listing() {
        // atom with ΔX = (1,1), ΔH = (0,1)
        let fx = fixtures::space_a();
        let atom = fixtures::space_a_atom([1, 1], [0, 1]);
        let mu = MarkedMeasure::from_paths(&fx.x, &fx.h).unwrap();
        assert_eq!(mu.events(atom), &[(1, Mark::XOnly), (2, Mark::Joint)]);
        let g = fx.bundle().unwrap().g;
        let zs = fundamental_martingales(&fx.x, &fx.h, &g).unwrap();
        for z in &zs.z {
            assert!(is_martingale(z, &g).is_martingale());
        }
    }
}
