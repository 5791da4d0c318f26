use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::{McError, Result};

/// Jump times of `X` on `(0, T]` and the random time `τ` (∞ allowed).
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousPath {
    pub horizon: f64,
    pub x_events: Vec<f64>,
    pub tau: f64,
}

impl ContinuousPath {
    /// `X_t`
    pub fn count(&self, t: f64) -> usize {
        self.x_events.partition_point(|&e| e <= t)
    }

    /// Number of jumps in `(a, b]`.
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        self.count(b) - self.count(a)
    }

    /// `H_t = 1_{τ ≤ t}`
    pub fn h(&self, t: f64) -> f64 {
        f64::from(u8::from(self.tau <= t))
    }

    pub fn tau_is_jump_time(&self) -> bool {
        self.x_events.binary_search_by(|e| e.total_cmp(&self.tau)).is_ok()
    }
}

/// How `τ` is built from the path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RandomTimeSpec {
    /// Exponential with rate `mu`, independent of `X`.
    IndependentExp { mu: f64 },
    /// `(τ₁ + τ₂) / 2`
    Midpoint,
    /// `τ₁`
    FirstJump,
}

/// Rate, horizon and random-time recipe shared by all paths of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathModel {
    pub lambda: f64,
    pub t_real: f64,
    pub tau: RandomTimeSpec,
}

impl PathModel {
    pub fn new(lambda: f64, t_real: f64, tau: RandomTimeSpec) -> Result<Self> {
        check_rate("lambda", lambda)?;
        check_rate("t_real", t_real)?;
        if let RandomTimeSpec::IndependentExp { mu } = tau {
            check_rate("mu", mu)?;
        }
        Ok(Self { lambda, t_real, tau })
    }

    /// Path `index` of the run with master seed `master`.
    pub fn path(&self, master: u64, index: u64) -> Result<ContinuousPath> {
        let mut rng = path_rng(master, index);
        let mut p = self.draw_x(&mut rng);
        p.tau = sample_random_time_with(&mut rng, self.tau, &p)?;
        Ok(p)
    }

    /// The same path's jump times with `τ = ∞`.
    pub fn x_path(&self, master: u64, index: u64) -> ContinuousPath {
        self.draw_x(&mut path_rng(master, index))
    }

    fn draw_x(&self, rng: &mut ChaCha8Rng) -> ContinuousPath {
        let x_events = poisson_events(rng, self.lambda, self.t_real);
        ContinuousPath { horizon: self.t_real, x_events, tau: f64::INFINITY }
    }
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(McError::BadParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

pub(crate) fn path_rng(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

fn poisson_events<R: Rng>(rng: &mut R, lambda: f64, t_real: f64) -> Vec<f64> {
    let exp = Exp::new(lambda).expect("rate validated");
    let mut out = Vec::with_capacity((lambda * t_real * 1.5) as usize + 4);
    let mut t = 0.0;
    loop {
        t += exp.sample(rng);
        if t > t_real {
            return out;
        }
        out.push(t);
    }
}

/// Poisson(λ) jump times on `(0, T]` with `τ = ∞`.
pub fn simulate_poisson(lambda: f64, t_real: f64, seed: u64) -> Result<ContinuousPath> {
    check_rate("lambda", lambda)?;
    check_rate("t_real", t_real)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(ContinuousPath { horizon: t_real, x_events: poisson_events(&mut rng, lambda, t_real), tau: f64::INFINITY })
}

/// Draws `τ` for `path` under `spec`; the exponential case consumes `seed`.
pub fn sample_random_time(spec: RandomTimeSpec, path: &ContinuousPath, seed: u64) -> Result<f64> {
    sample_random_time_with(&mut ChaCha8Rng::seed_from_u64(seed), spec, path)
}

fn sample_random_time_with<R: Rng>(rng: &mut R, spec: RandomTimeSpec, path: &ContinuousPath) -> Result<f64> {
    let ev = &path.x_events;
    match spec {
        RandomTimeSpec::IndependentExp { mu } => {
            check_rate("mu", mu)?;
            Ok(Exp::new(mu).expect("rate validated").sample(rng))
        }
        RandomTimeSpec::Midpoint => match ev.as_slice() {
            [t1, t2, ..] => Ok(0.5 * (t1 + t2)),
            _ => Err(McError::InsufficientEvents { needed: 2, found: ev.len() }),
        },
        RandomTimeSpec::FirstJump => ev.first().copied().ok_or(McError::InsufficientEvents { needed: 1, found: 0 }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn events_sorted_within_horizon() {
        let p = simulate_poisson(3.0, 5.0, 11).unwrap();
        assert!(p.x_events.windows(2).all(|w| w[0] < w[1]));
        assert!(p.x_events.iter().all(|&e| e > 0.0 && e <= 5.0));
        assert_eq!(p, simulate_poisson(3.0, 5.0, 11).unwrap());
    }

    #[test]
    fn bad_parameters() {
        assert!(matches!(simulate_poisson(0.0, 1.0, 0), Err(McError::BadParameter(_))));
        assert!(matches!(simulate_poisson(1.0, f64::NAN, 0), Err(McError::BadParameter(_))));
        assert!(PathModel::new(1.0, 1.0, RandomTimeSpec::IndependentExp { mu: -1.0 }).is_err());
    }

    #[test]
    fn midpoint_lies_between_first_two_jumps() {
        let m = PathModel::new(1.0, 10.0, RandomTimeSpec::Midpoint).unwrap();
        for i in 0..500 {
            if let Ok(p) = m.path(5, i) {
                assert!(p.x_events[0] < p.tau && p.tau < p.x_events[1]);
            }
        }
        let empty = ContinuousPath { horizon: 1.0, x_events: vec![0.5], tau: f64::INFINITY };
        assert_eq!(
            sample_random_time(RandomTimeSpec::Midpoint, &empty, 0),
            Err(McError::InsufficientEvents { needed: 2, found: 1 })
        );
    }

    #[test]
    fn first_jump_is_charged() {
        let m = PathModel::new(2.0, 10.0, RandomTimeSpec::FirstJump).unwrap();
        let p = m.path(1, 0).unwrap();
        assert!(p.tau_is_jump_time());
    }

    #[test]
    fn counting() {
        let p = ContinuousPath { horizon: 3.0, x_events: vec![0.5, 1.0, 2.5], tau: 1.0 };
        assert_eq!(p.count(1.0), 2);
        assert_eq!(p.count_in(0.5, 2.5), 2);
        assert_eq!(p.h(0.99), 0.0);
        assert_eq!(p.h(1.0), 1.0);
        assert!(p.tau_is_jump_time());
    }
}
