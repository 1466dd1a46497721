//! Parametric minimum-cost flows with separable convex edge costs.
//!
//! The demand is affine in a parameter, `b(λ) = b0 + λ b` for `λ ∈ [0, λ_max]`.
//! [`efpa`] computes the exact solution path for piecewise-quadratic costs,
//! [`mca`] approximates general costs by splines and solves the spline instance
//! exactly, and [`mcfi`] interpolates fixed-parameter [`fw`] solutions.

// `!(a > b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cost;
pub mod efpa;
pub mod error;
pub mod fw;
pub mod instance;
pub mod io;
pub mod linalg;
pub mod mca;
pub mod mcfi;
pub mod network;
mod paths;

pub use cost::{AnalyticMarginal, Marginal, PiecewiseLinearMarginal, Rule};
pub use efpa::{run_efpa, EfpaOptions, InitialSolution, ParametricSolution, SolutionSegment};
pub use error::{Error, Result};
pub use fw::{solve_fixed, FwOptions, FwResult};
pub use instance::{AnalyticInstance, Instance, PwqInstance};
pub use mca::{run_mca, ApproxParams, McaSolution};
pub use mcfi::{run_mcfi, InterpolatedSolution, McfiOptions};
pub use network::{DemandFunction, Mode, Network};
