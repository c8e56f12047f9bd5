//! Shotgun reconstruction of random colourings of the hypercube `Q_n`.
//!
//! The crate is organised bottom-up:
//!
//! * [`cube`]: vertices, shells, balls, the Harper order and spread sets.
//! * [`colouring`]: random colourings, distances between colourings and balls.
//! * [`canon`]: canonical signatures of coloured balls and ball multisets.
//! * [`shotgun`]: assemblers that rebuild a colouring from its ball multiset,
//!   equivalence checking and exhaustive indistinguishability search.
//! * [`structure`]: approximately local bijections, duals, stability
//!   witnesses and rigid layers.
//! * [`probability`]: binomial tail tools and seeded Monte Carlo estimators.

pub mod canon;
pub mod colouring;
pub mod cube;
mod error;
pub mod probability;
pub mod shotgun;
pub mod structure;

pub use canon::{BallMultiset, BallSignature, BallView};
pub use colouring::{ColourDistribution, Colouring, Seed};
pub use cube::{CubeDim, Vertex, VertexSet};
pub use error::{Error, Result};
pub use structure::BijectionTable;
