//! Exact engine for point processes on finite filtered probability spaces:
//! compensators, brackets, enlargements, the joint jump measure, martingale
//! representation and random-time machinery.

pub mod calculus;
pub mod enlargement;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod jump_measure;
pub mod random_time;
pub mod representation;
pub mod space;

pub use error::{Error, Result};
pub use space::{FiniteProbabilitySpace, Filtration, Partition, Process, StoppingTime, EXACT_TOL};
