//! Edge cost families, splines and MCA meshes.

mod analytic;
mod mesh;
mod piecewise;

pub use analytic::AnalyticMarginal;
pub use mesh::{admissible_step, linear_spline, mca_mesh, mesh_audit, step_slack, Mesh, Rule, StepBudget};
pub use piecewise::{Part, PiecewiseLinearMarginal};

/// A marginal cost `f` together with its Beckmann integral `F(x) = ∫₀ˣ f`.
pub trait Marginal {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
    fn integral(&self, x: f64) -> f64;

    /// Lower flow bound, if any (`x >= l`).
    fn lower_bound(&self) -> Option<f64> {
        None
    }

    /// Upper flow bound, if any (`x <= u`).
    fn upper_bound(&self) -> Option<f64> {
        None
    }
}
