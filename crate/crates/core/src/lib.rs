//! Weighted energy-dissipation (WED) minimization for the 1-D flow
//! `g(k * u) u_t - u_xx + beta(u) ∋ 0` with homogeneous Dirichlet data.
//!
//! Trajectories are minimizers of an exponentially weighted functional over
//! the whole time interval. As the weight parameter `eps` shrinks they
//! approach the causal solution, which [`reference`] computes by implicit
//! Euler for comparison.

pub mod assumptions;
pub mod config;
pub mod error;
pub mod experiments;
pub mod functional;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod models;
pub mod moreau_yosida;
pub mod optimizer;
pub mod problem;
pub mod reference;

pub use error::{Result, WedError};
pub use functional::{Quadrature, WedConfig, WedFunctional};
pub use grid::{SpatialGrid, StateVector, Trajectory};
pub use kernel::Kernel;
pub use models::{ConvexPotential, JumpSelection, Mobility};
pub use problem::{DissipationModel, ProblemInstance};
