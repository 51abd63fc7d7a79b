//! Numerical laboratory for enhanced dissipation by rough shear flows.
//!
//! A shear `u(y)` on the torus `[-pi, pi)` acts on the `k`-th Fourier mode in
//! `x` through `d_t f + i k u f = nu d_y^2 f`. The crate measures how fast
//! that propagator contracts, computes the irregularity index of `u` that
//! controls the rate, and checks the supporting estimates.

pub mod elliptic;
pub mod error;
pub mod experiments;
pub mod extended;
pub mod fields;
pub mod irregularity;
pub mod norms;
pub mod parabolic;
pub mod rng;
pub mod semigroup;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
pub use extended::Extended;
pub use fields::{generate, FieldRecipe, Grid, GridField, RecipeKind, SpectralField};
