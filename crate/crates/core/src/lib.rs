//! Kemeny's constant of finite irreducible Markov chains.
//!
//! Dense reference methods live in [`direct`], the recursive
//! stochastic-complement algorithm in [`dnc`], closed forms for structured
//! chains in [`structured`], a-priori bounds in [`bounds`] and the Hutch++
//! estimator in [`hutch`]. [`io`] reads and writes Matrix Market files and
//! drives the command-line tool.

pub mod direct;
pub mod bounds;
pub mod dnc;
pub mod error;
pub mod generators;
pub mod hutch;
pub mod io;
pub mod linalg;
pub mod markov;
pub mod result;
pub mod structured;

pub use error::{KemenyError, Result};
pub use markov::{BlockPartition, StationaryDistribution, StochasticMatrix};
pub use result::{Diagnostics, KemenyResult, Method};
