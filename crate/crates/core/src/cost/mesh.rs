use serde::{Deserialize, Serialize};

use super::{AnalyticMarginal, Marginal, PiecewiseLinearMarginal};
use crate::error::{Error, Result};
use crate::network::Mode;

const MAX_MESH_POINTS: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    /// Look-ahead rule for general convex marginals.
    I,
    /// Endpoint rule; needs `|f''|` nondecreasing away from 0.
    II,
}

impl Rule {
    /// Rule II for BPR and Weymouth families, rule I otherwise.
    pub fn for_family(f: &AnalyticMarginal) -> Rule {
        match f {
            AnalyticMarginal::Polynomial { .. } => Rule::I,
            _ => Rule::II,
        }
    }
}

/// Shared `(α, β)` budget of a mesh: `m` edges and flow bound `x_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepBudget {
    pub alpha: f64,
    pub beta: f64,
    pub m: usize,
    pub x_max: f64,
}

impl StepBudget {
    fn rhs(&self, rule: Rule, f_abs: f64) -> f64 {
        let mx = self.m as f64 * self.x_max;
        let inner = match rule {
            Rule::I => ((self.alpha - 1.0) / (1.0 + self.alpha)) * f_abs + self.beta / ((1.0 + self.alpha) * mx),
            Rule::II => (self.alpha - 1.0) * f_abs + self.beta / mx,
        };
        2.0 * std::f64::consts::SQRT_2 * inner.max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub points: Vec<f64>,
}

impl Mesh {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("mesh needs at least two increasing points"));
        }
        Ok(Mesh { points })
    }

    pub fn steps(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Slack `rhs − lhs` of the step from `inner` outward by `delta` in direction `dir`.
pub fn step_slack(f: &AnalyticMarginal, inner: f64, delta: f64, dir: f64, rule: Rule, budget: &StepBudget) -> f64 {
    let reach = match rule {
        Rule::I => 2.0 * delta,
        Rule::II => delta,
    };
    let other = inner + dir * reach;
    let b2 = f.max_abs_second_derivative(inner.min(other), inner.max(other));
    budget.rhs(rule, f.value(inner).abs()) - delta * b2.sqrt()
}

/// Largest step in `(0, limit]` from `inner` in direction `dir` whose slack is nonnegative.
pub fn admissible_step(
    f: &AnalyticMarginal,
    inner: f64,
    limit: f64,
    dir: f64,
    rule: Rule,
    budget: &StepBudget,
) -> Result<f64> {
    if step_slack(f, inner, limit, dir, rule, budget) >= 0.0 {
        return Ok(limit);
    }
    let (mut lo, mut hi) = (0.0, limit);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if step_slack(f, inner, mid, dir, rule, budget) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= 0.0 || inner + dir * lo == inner {
        return Err(Error::invalid(format!(
            "zero admissible mesh step at x = {inner}; use beta > 0"
        )));
    }
    Ok(lo)
}

fn half_mesh(f: &AnalyticMarginal, x_max: f64, dir: f64, rule: Rule, budget: &StepBudget) -> Result<Vec<f64>> {
    let mut pts = vec![0.0];
    let mut x: f64 = 0.0;
    while x.abs() < x_max {
        let limit = x_max - x.abs();
        let mut delta = admissible_step(f, x, limit, dir, rule, budget)?;
        // The stored point rounds; shrink until the realized step still passes.
        let next = loop {
            let next = if delta >= limit { dir * x_max } else { x + dir * delta };
            if step_slack(f, x, (next - x).abs(), dir, rule, budget) >= 0.0 || delta <= 0.0 {
                break next;
            }
            delta *= 1.0 - 1e-12;
            if next.abs() >= x_max {
                delta = delta.min(limit * (1.0 - 1e-12));
            }
        };
        if next == x {
            return Err(Error::invalid(format!("zero admissible mesh step at x = {x}")));
        }
        x = next;
        pts.push(x);
        if pts.len() > MAX_MESH_POINTS {
            return Err(Error::ResourceLimit(format!("mesh exceeds {MAX_MESH_POINTS} points")));
        }
    }
    Ok(pts)
}

/// Mesh for the MCA spline, built outward from 0 so every step is measured from its
/// endpoint nearer to zero.
pub fn mca_mesh(f: &AnalyticMarginal, rule: Rule, budget: &StepBudget, mode: Mode) -> Result<Mesh> {
    if !(budget.x_max > 0.0) {
        return Err(Error::invalid("mesh range has zero measure (x_max = 0)"));
    }
    if !(budget.alpha > 1.0) || !(budget.beta >= 0.0) {
        return Err(Error::invalid("mesh needs alpha > 1 and beta >= 0"));
    }
    let pos = half_mesh(f, budget.x_max, 1.0, rule, budget)?;
    let points = match mode {
        Mode::Directed => pos,
        Mode::Undirected => {
            let neg = half_mesh(f, budget.x_max, -1.0, rule, budget)?;
            neg.into_iter().rev().chain(pos.into_iter().skip(1)).collect()
        }
    };
    Mesh::new(points)
}

/// Slack of every step of `mesh`, measured from the endpoint nearer to zero.
pub fn mesh_audit(f: &AnalyticMarginal, mesh: &Mesh, rule: Rule, budget: &StepBudget) -> Vec<f64> {
    mesh.points
        .windows(2)
        .map(|w| {
            if w[0] >= 0.0 {
                step_slack(f, w[0], w[1] - w[0], 1.0, rule, budget)
            } else {
                step_slack(f, w[1], w[1] - w[0], -1.0, rule, budget)
            }
        })
        .collect()
}

/// Interpolating spline. Points whose sampled value does not exceed the previous one
/// in floating point are skipped; the last point is always kept.
pub fn linear_spline(f: &AnalyticMarginal, mesh: &Mesh) -> Result<PiecewiseLinearMarginal> {
    let mut xs: Vec<f64> = Vec::with_capacity(mesh.len());
    let mut ys: Vec<f64> = Vec::with_capacity(mesh.len());
    let last = mesh.len() - 1;
    for (i, &x) in mesh.points.iter().enumerate() {
        let y = f.value(x);
        if i == last {
            while xs.len() > 1 && ys.last().is_some_and(|&p| p >= y) {
                xs.pop();
                ys.pop();
            }
        } else if ys.last().is_some_and(|&p| p >= y) {
            continue;
        }
        xs.push(x);
        ys.push(y);
    }
    PiecewiseLinearMarginal::interpolate(&xs, &ys)
}
