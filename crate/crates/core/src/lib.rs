//! Numerical laboratory for front propagation under small random shear
//! advection: monotone finite-difference solvers for the level-set and
//! viscous eikonal models, correctors of the metric planar problem at the
//! ε^{2/3} scale, a pathwise solver for the limiting white-noise-forced
//! Hamilton–Jacobi equation, and Monte Carlo verification of the Brownian
//! front-fluctuation statistics.

pub mod ensemble;
pub mod fields;
pub mod front;
pub mod io;
pub mod limit;
pub mod metric;
pub mod noise;
pub mod scalar;
pub mod solver;
pub mod stats;
pub mod verify;

pub use scalar::Scalar;

/// Default working precision.
pub type Real = f64;

/// Grid, field, and parameter aliases at the default precision.
pub type Grid = fields::Grid2D<Real>;
pub type Field = fields::ScalarField<Real>;
pub type Params = fields::SimParams<Real>;
pub type Advection = fields::AdvectionSpec<Real>;
pub type Noise = noise::NoisePath<Real>;
pub type Driver = noise::BrownianPath<Real>;
