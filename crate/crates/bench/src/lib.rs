//! Shared fixtures for the criterion benches.

use cubeshot::colouring::sample_colouring;
use cubeshot::{ColourDistribution, Colouring, CubeDim, Seed};

/// A fair two-colouring of `Q_n` drawn from `seed`.
pub fn fair_colouring(n: u32, seed: u64) -> Colouring {
    let dim = CubeDim::new(n).expect("bench dimension in range");
    sample_colouring(dim, &ColourDistribution::TwoPoint(0.5), Seed::new(seed)).expect("valid distribution")
}
