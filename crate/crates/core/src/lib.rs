//! Simulation and closed-form runtime analysis of the (1+1) evolutionary
//! algorithm on OneMax and LeadingOnes when the problem size is unknown.
//!
//! Mutation is either a fixed vector of per-position flip probabilities or
//! a rate `1/i` drawn afresh each iteration from a summable sequence. The
//! crate has the bit-string problems, the sequences and length
//! distributions, the algorithm itself, exact and bound formulas for the
//! expected runtime, and an experiment harness that sweeps configurations
//! and writes tables.
//!
//! ```
//! use ea_lab::{run_ea, FitnessSpec, MutationScheme};
//!
//! let spec = FitnessSpec::leading_ones(20)?;
//! let scheme = MutationScheme::UniformFixed(1.0 / 20.0);
//! let run = run_ea(&spec, &scheme, 1_000_000, 7)?;
//! assert!(!run.hit_budget);
//! # Ok::<(), ea_lab::Error>(())
//! ```

pub mod analytic;
pub mod bitgenome;
pub mod distributions;
pub mod ea;
pub mod harness;
pub mod error;
pub mod numeric;
pub mod rng;
pub mod sequences;

pub use bitgenome::{BitGenome, Family, FitnessSpec};
pub use distributions::{LengthDistribution, RateDistribution};
pub use ea::{mutate, run_ea, run_ea_random_length, Engine, MutationScheme, RunRecord};
pub use error::{Error, Result};
pub use rng::RngStream;
pub use sequences::{SequenceFamily, SequenceKind};
