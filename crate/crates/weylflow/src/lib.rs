//! Volume-preserving curvature flow for Weyl-invariant curves.
//!
//! The library evolves closed star-shaped curves that are invariant under the
//! Weyl group of a weighted root system. The driving quantity is a modified
//! mean curvature: the Euclidean curvature of the curve plus a correction
//! built from the roots,
//!
//! ```text
//! rho(phi, nu) = sum over positive roots alpha of
//!                m_alpha * alpha(nu) * cot_eps(alpha(phi))
//! ```
//!
//! where `cot_eps` is the cotangent (eps = +1) or hyperbolic cotangent
//! (eps = -1) kernel. Stationary curves of the flow have constant modified
//! curvature and model isoperimetric bubbles.
//!
//! Modules:
//! * [`rootsys`]: weighted root systems, Weyl groups, chamber geometry.
//! * [`curvature`]: the rho correction, curvature of centered spheres, and
//!   extremal curvature bounds over directions.
//! * [`flow`]: the radial-graph evolution on a single chamber arc.
//! * [`verify`]: quantitative checks on computed trajectories.
//! * [`config`] and [`emit`]: run configuration and file output for the CLI.

pub mod config;
pub mod curvature;
pub mod emit;
pub mod flow;
pub mod rootsys;
pub mod verify;

pub use curvature::{cot_eps, eta_bounds, rho_point, sphere_h, EtaBounds};
pub use flow::{run_flow, ConvergenceStatus, FlowConfig, FlowState, RadialProfile, Trajectory};
pub use rootsys::{ChamberArc, Epsilon, RootFamily, WeightedRootSystem, WeylGroup};
pub use verify::{Check, CheckStatus, VerifyReport};
