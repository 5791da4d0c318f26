//! Continuous-time Monte Carlo checks for a Poisson process `X` progressively
//! enlarged by a random time `τ`.
//!
//! Every path draws from its own ChaCha8 stream (`seed_from_u64(master)` with
//! `set_stream(path_index)`), per-path values are collected in index order and
//! summed sequentially, so reports do not depend on the thread count.

pub mod path;
pub mod report;
pub mod suites;

pub use path::{sample_random_time, simulate_poisson, ContinuousPath, PathModel, RandomTimeSpec};
pub use report::{McReport, DEFAULT_Z_MAX};
pub use suites::{
    avoidance_mc_suite, azema_exponential_check, mc_martingale_test, poisson_suite, predictable_jump_probe, McCheck,
    ProbeReports,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("path has {found} events, {needed} needed")]
    InsufficientEvents { needed: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, McError>;

/// SplitMix64 finaliser, used to derive independent masters from one seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
