//! Canonical scenario trees used by tests, the CLI and the acceptance suite.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::enlargement::EnlargementBundle;
use crate::error::Result;
use crate::space::{FiniteProbabilitySpace, Partition, Process, StoppingTime};

/// A finite space carrying two point processes, an initial σ-field and,
/// when `H` jumps at most once, the random time `τ` with `H = 1_{[τ,∞)}`.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub space: Arc<FiniteProbabilitySpace>,
    pub x: Process,
    pub h: Process,
    pub r: Partition,
    pub tau: Option<StoppingTime>,
}

impl Scenario {
    pub fn new(name: impl Into<String>, probs: Vec<f64>, x: Process, h: Process, r: Option<Partition>) -> Result<Self> {
        let space = Arc::new(FiniteProbabilitySpace::new(probs)?);
        let r = r.unwrap_or_else(|| Partition::trivial(space.len()));
        let tau = single_jump_time(&h);
        Ok(Self { name: name.into(), space, x, h, r, tau })
    }

    pub fn bundle(&self) -> Result<EnlargementBundle> {
        EnlargementBundle::new(self.space.clone(), self.x.clone(), self.h.clone(), self.r.clone())
    }

    pub fn horizon(&self) -> usize {
        self.x.horizon()
    }
}

fn single_jump_time(h: &Process) -> Option<StoppingTime> {
    let once = (0..h.n_atoms()).all(|a| h.value(a, h.horizon()) <= 1.0 && h.value(a, 0) == 0.0);
    once.then(|| StoppingTime::hitting_time(h, 1.0))
}

fn paths_from_increments(incs: &[Vec<u8>]) -> Process {
    let rows: Vec<Vec<f64>> = incs
        .iter()
        .map(|inc| {
            let mut acc = 0.0;
            std::iter::once(0.0)
                .chain(inc.iter().map(|&d| {
                    acc += f64::from(d);
                    acc
                }))
                .collect()
        })
        .collect();
    Process::from_rows(&rows).expect("fixture rows share a horizon")
}

/// Index of the SPACE-A atom with the given jump vectors over t = 1, 2.
pub fn space_a_atom(dx: [u8; 2], dh: [u8; 2]) -> usize {
    usize::from(dx[0]) << 3 | usize::from(dh[0]) << 2 | usize::from(dx[1]) << 1 | usize::from(dh[1])
}

/// 16 uniform atoms, T = 2, `ΔX_t`, `ΔH_t` i.i.d. fair coin flips.
pub fn space_a() -> Scenario {
    let bit = |a: usize, k: u32| ((a >> k) & 1) as u8;
    let xs: Vec<Vec<u8>> = (0..16).map(|a| vec![bit(a, 3), bit(a, 1)]).collect();
    let hs: Vec<Vec<u8>> = (0..16).map(|a| vec![bit(a, 2), bit(a, 0)]).collect();
    Scenario::new("space_a", vec![1.0 / 16.0; 16], paths_from_increments(&xs), paths_from_increments(&hs), None)
        .expect("space_a is valid")
}

/// Three atoms `ω_A, ω_B, ω_C` with probabilities 0.3, 0.5, 0.2, T = 1.
/// `X = 1_{ω_A} 1_{t≥1}`, `H = 1_{ω_B} 1_{t≥1}`.
pub fn counterexample_a2() -> Scenario {
    let x = paths_from_increments(&[vec![1], vec![0], vec![0]]);
    let h = paths_from_increments(&[vec![0], vec![1], vec![0]]);
    Scenario::new("counterexample_a2", vec![0.3, 0.5, 0.2], x, h, None).expect("counterexample_a2 is valid")
}

/// X may jump only at t = 1, H only at t = 2, with H's jump probability
/// depending on X's first step. Atoms are ordered by `(ΔX_1, ΔH_2)`.
pub fn staggered() -> Scenario {
    let x = paths_from_increments(&[vec![0, 0], vec![0, 0], vec![1, 0], vec![1, 0]]);
    let h = paths_from_increments(&[vec![0, 0], vec![0, 1], vec![0, 0], vec![0, 1]]);
    Scenario::new("staggered", vec![0.42, 0.18, 0.16, 0.24], x, h, None).expect("staggered is valid")
}

/// At each of two steps either nothing happens, X jumps, or H jumps (at
/// most once), so every node branches three ways until H has fired.
pub fn avoidance_three_branch() -> Scenario {
    // paths: nn nx nh xn xx xh hn hx
    let steps: [(u8, u8); 8] = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 0), (2, 1)];
    let xs: Vec<Vec<u8>> = steps.iter().map(|&(a, b)| vec![u8::from(a == 1), u8::from(b == 1)]).collect();
    let hs: Vec<Vec<u8>> = steps.iter().map(|&(a, b)| vec![u8::from(a == 2), u8::from(b == 2)]).collect();
    Scenario::new(
        "avoidance_three_branch",
        vec![0.25, 0.15, 0.10, 0.15, 0.09, 0.06, 0.12, 0.08],
        paths_from_increments(&xs),
        paths_from_increments(&hs),
        None,
    )
    .expect("avoidance_three_branch is valid")
}

/// Eight uniform atoms, T = 2, with `ΔH_1 = ΔX_1`; `ΔX_2`, `ΔH_2` free.
pub fn dependent() -> Scenario {
    let bit = |a: usize, k: u32| ((a >> k) & 1) as u8;
    let xs: Vec<Vec<u8>> = (0..8).map(|a| vec![bit(a, 2), bit(a, 1)]).collect();
    let hs: Vec<Vec<u8>> = (0..8).map(|a| vec![bit(a, 2), bit(a, 0)]).collect();
    Scenario::new("dependent", vec![0.125; 8], paths_from_increments(&xs), paths_from_increments(&hs), None)
        .expect("dependent is valid")
}

/// One point process on a binary tree of depth `horizon` with jump
/// probability `p` per step; `H ≡ 0`.
pub fn single_point_process(horizon: usize, p: f64) -> Scenario {
    let mut s = bernoulli_grid(horizon, p);
    s.name = "single_point_process".into();
    s
}

/// Bernoulli(p) counting process on `steps` grid points, all `2^steps`
/// paths as atoms, `H ≡ 0`.
pub fn bernoulli_grid(steps: usize, p: f64) -> Scenario {
    let n = 1usize << steps;
    let incs: Vec<Vec<u8>> = (0..n).map(|a| (0..steps).map(|k| ((a >> (steps - 1 - k)) & 1) as u8).collect()).collect();
    let probs: Vec<f64> = incs
        .iter()
        .map(|inc| inc.iter().map(|&d| if d == 1 { p } else { 1.0 - p }).product())
        .collect();
    let x = paths_from_increments(&incs);
    let h = Process::zeros(n, steps);
    Scenario::new("bernoulli_grid", probs, x, h, None).expect("bernoulli grid is valid")
}

/// Deterministic seed-indexed small scenario: 2 to 6 atoms, horizon 1 to 3,
/// random probabilities, random point-process paths and a random initial
/// σ-field with at most two blocks.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=6);
    let horizon = rng.random_range(1..=3);
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let draw = |rng: &mut ChaCha8Rng| -> Vec<Vec<u8>> {
        (0..n).map(|_| (0..horizon).map(|_| u8::from(rng.random_bool(0.5))).collect()).collect()
    };
    let xs = draw(&mut rng);
    let hs = draw(&mut rng);
    let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.3))).collect();
    Scenario::new(
        format!("random_{seed}"),
        probs,
        paths_from_increments(&xs),
        paths_from_increments(&hs),
        Some(Partition::from_labels(&labels)),
    )
    .expect("random scenario is valid")
}

/// Like [`random_scenario`] but `H = 1_{[τ,∞)}` for a random `τ` in
/// `{1..T} ∪ {∞}` that need not be adapted to X's filtration.
pub fn random_time_scenario(seed: u64) -> Scenario {
    let mut base = random_scenario(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a75_5f74_696d_6521);
    let horizon = base.horizon();
    let tau: Vec<Option<usize>> = (0..base.space.len())
        .map(|_| {
            let k = rng.random_range(1..=horizon + 1);
            (k <= horizon).then_some(k)
        })
        .collect();
    let tau = StoppingTime::new(tau);
    base.h = tau.indicator(horizon);
    base.tau = Some(tau);
    base.name = format!("random_time_{seed}");
    base
}

/// Registry used by the CLI.
pub fn by_name(name: &str) -> Option<Scenario> {
    match name {
        "space_a" => Some(space_a()),
        "counterexample_a2" => Some(counterexample_a2()),
        "staggered" => Some(staggered()),
        "avoidance_three_branch" => Some(avoidance_three_branch()),
        "dependent" => Some(dependent()),
        "single_point_process" => Some(single_point_process(3, 0.5)),
        _ => None,
    }
}

pub const FIXTURE_NAMES: [&str; 6] = [
    "space_a",
    "counterexample_a2",
    "staggered",
    "avoidance_three_branch",
    "dependent",
    "single_point_process",
];
