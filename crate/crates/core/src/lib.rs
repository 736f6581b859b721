//! Forward solver and fixed-point coefficient reconstruction for the
//! time-fractional reaction-subdiffusion equation
//!
//! ```text
//! D_t^alpha u - (D u')' + d u = q(x) u - p(x) f(u) + r(t, x)
//! ```
//!
//! on a one-dimensional interval. The reconstruction recovers `p` and `q`
//! from two spatial snapshots of the state: two final-time observations under
//! different excitations, or two observation times of a single run.

pub mod boundary;
pub mod elliptic;
pub mod error;
pub mod field;
pub mod fit;
pub mod forward;
pub mod fractional;
pub mod grid;
pub mod inverse;
pub mod nonlinearity;
pub mod problem;
pub mod synthdata;

pub use boundary::{BoundaryCondition, BoundaryData, BoundaryKind};
pub use elliptic::{assemble, sobolev_norm, SobolevOrder, TridiagonalOperator};
pub use error::{Error, Result};
pub use field::{Field, Profile};
pub use forward::{
    caputo_at_time, decay_diagnostic, solve_ibvp, solve_ibvp_with, solve_steady, solve_steady_from,
    DecayReport, SolverOptions, Trajectory,
};
pub use fractional::{l1_weights, L1Weights};
pub use grid::{SpatialGrid, TimeGrid};
pub use nonlinearity::Nonlinearity;
pub use problem::{
    make_phantoms, phantom_p, phantom_q, ProblemSpec, ProblemTemplate, RunSetup, Source,
};
