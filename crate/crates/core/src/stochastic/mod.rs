//! Pseudo- and quasi-random number generation plus the return-shock
//! distributions (densities, CDFs, sampling).

mod dist;
mod halton;
mod stream;

pub use dist::{sample, DistributionSpec};
pub use halton::{low_discrepancy_points, radical_inverse, MAX_HALTON_DIM, PRIMES};
pub use stream::{substream, SeededStream};
