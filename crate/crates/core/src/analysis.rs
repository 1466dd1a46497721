//! Objective curves, price of anarchy, supports, and a reference convex solver.

use serde::{Deserialize, Serialize};

use crate::cost::{AnalyticMarginal, Marginal};
use crate::efpa::{EfpaOptions, ParametricSolution};
use crate::error::{Error, Result};
use crate::instance::{AnalyticInstance, Instance};
use crate::linalg::LaplacianState;
use crate::mca::{run_mca, ApproxParams};
use crate::mcfi::InterpolatedSolution;
use crate::network::{DemandFunction, Mode};

/// Anything that maps λ to a flow.
pub trait FlowPath {
    fn flow(&self, lambda: f64) -> Result<Vec<f64>>;
    fn lambda_range(&self) -> (f64, f64);
    /// Parameter values where the path has kinks.
    fn kinks(&self) -> Vec<f64>;
}

impl FlowPath for ParametricSolution {
    fn flow(&self, lambda: f64) -> Result<Vec<f64>> {
        self.flow_at(lambda).ok_or_else(|| Error::invalid("empty solution"))
    }

    fn lambda_range(&self) -> (f64, f64) {
        (self.segments.first().map_or(0.0, |s| s.lambda_lo), self.lambda_max())
    }

    fn kinks(&self) -> Vec<f64> {
        self.breakpoints()
    }
}

impl FlowPath for InterpolatedSolution {
    fn flow(&self, lambda: f64) -> Result<Vec<f64>> {
        self.query(lambda)
    }

    fn lambda_range(&self) -> (f64, f64) {
        (self.breakpoints.first().map_or(0.0, |b| b.lambda), self.lambda_max())
    }

    fn kinks(&self) -> Vec<f64> {
        self.breakpoints.iter().map(|b| b.lambda).collect()
    }
}

/// `n` uniform points over the range plus every kink, sorted and deduplicated.
pub fn default_grid(path: &impl FlowPath, n: usize) -> Vec<f64> {
    let (lo, hi) = path.lambda_range();
    let mut g = uniform_grid(lo, hi, n);
    g.extend(path.kinks().into_iter().filter(|l| (lo..=hi).contains(l)));
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// `(λ, C(x(λ)))` with `C` the Beckmann objective of `inst`.
pub fn objective_curve<M: Marginal>(path: &impl FlowPath, inst: &Instance<M>, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    grid.iter().map(|&l| Ok((l, inst.objective(&path.flow(l)?)))).collect()
}

/// `Σ x_e f_e(x_e)`.
pub fn total_travel_time<M: Marginal>(inst: &Instance<M>, x: &[f64]) -> f64 {
    inst.costs.iter().zip(x).map(|(f, &xe)| xe * f.value(xe)).sum()
}

/// Edges whose marginal matches the potential difference within `tol`.
pub fn support_of<M: Marginal>(inst: &Instance<M>, x: &[f64], pi: &[f64], tol: f64) -> Vec<usize> {
    let y = inst.network.potential_diff(pi);
    (0..inst.n_edges())
        .filter(|&e| (inst.costs[e].value(x[e]) - y[e]).abs() <= tol)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoaCurve {
    pub points: Vec<(f64, f64)>,
    /// λ where the set of used edges changes.
    pub transitions: Vec<f64>,
}

fn used_set(x: &[f64], tol: f64) -> Vec<bool> {
    x.iter().map(|&v| v > tol).collect()
}

fn transitions(sol: &ParametricSolution) -> Vec<f64> {
    let mut out = Vec::new();
    for w in sol.segments.windows(2) {
        let mid = |s: &crate::efpa::SolutionSegment| s.flow_at(0.5 * (s.lambda_lo + s.lambda_hi));
        let (a, b) = (mid(&w[0]), mid(&w[1]));
        let scale = a.iter().chain(&b).fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-9 * (1.0 + scale);
        if used_set(&a, tol) != used_set(&b, tol) {
            out.push(w[0].lambda_hi);
        }
    }
    out
}

/// Price of anarchy along the demand path, from MCA solves of the equilibrium and
/// the system optimum. The ratio is 1 where the demand vanishes.
pub fn poa_curve(
    inst: &AnalyticInstance,
    demand: &DemandFunction,
    params: &ApproxParams,
    grid: Option<&[f64]>,
    opts: EfpaOptions,
) -> Result<PoaCurve> {
    let so_inst = inst.system_optimal();
    for f in &so_inst.costs {
        if let AnalyticMarginal::Polynomial { coeffs } = f {
            if coeffs.iter().skip(1).any(|&c| c < 0.0) {
                return Err(Error::invalid("system-optimal marginal may be non-monotone"));
            }
        }
    }
    let ue = run_mca(inst, demand, params, opts)?.solution;
    let so = run_mca(&so_inst, demand, params, opts)?.solution;
    let grid = match grid {
        Some(g) => g.to_vec(),
        None => default_grid(&ue, 201),
    };
    let mut points = Vec::with_capacity(grid.len());
    for &l in &grid {
        // Zero demand: both optima are the zero flow.
        if demand.at(l)?.iter().all(|&v| v == 0.0) {
            points.push((l, 1.0));
            continue;
        }
        let a = total_travel_time(inst, &ue.flow(l)?);
        let b = total_travel_time(inst, &so.flow(l)?);
        let poa = if b > 0.0 { a / b } else { 1.0 };
        points.push((l, poa));
    }
    let mut tr = transitions(&ue);
    tr.extend(transitions(&so));
    tr.sort_by(f64::total_cmp);
    tr.dedup();
    Ok(PoaCurve {
        points,
        transitions: tr,
    })
}

fn flow_bounds<M: Marginal>(inst: &Instance<M>, f: &M) -> (f64, f64) {
    let lb = f.lower_bound().unwrap_or(f64::NEG_INFINITY);
    let ub = f.upper_bound().unwrap_or(f64::INFINITY);
    match inst.network.mode() {
        Mode::Directed => (lb.max(0.0), ub),
        Mode::Undirected => (lb, ub),
    }
}

/// Minimizer of `F(x) − y x` over the flow range, by bisection on `f(x) = y`.
fn inverse<M: Marginal>(f: &M, y: f64, lo: f64, hi: f64) -> f64 {
    if lo.is_finite() && f.value(lo) >= y {
        return lo;
    }
    if hi.is_finite() && f.value(hi) <= y {
        return hi;
    }
    let mut a = if lo.is_finite() { lo } else { -1.0 };
    let mut b = if hi.is_finite() { hi } else { 1.0 };
    while f.value(a) > y {
        a = if a < 0.0 { 2.0 * a } else { -1.0 };
    }
    while f.value(b) < y {
        b = if b > 0.0 { 2.0 * b } else { 1.0 };
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f.value(m) < y {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Reference solver for small instances: Newton's method on the dual with an exact
/// line search. Independent of the homotopy code; used to validate it.
pub fn oracle_solve<M: Marginal>(inst: &Instance<M>, demand: &[f64], tol: f64) -> Result<Vec<f64>> {
    let net = &inst.network;
    let n = net.n_vertices();
    let bounds: Vec<(f64, f64)> = inst.costs.iter().map(|f| flow_bounds(inst, f)).collect();
    let flows = |pi: &[f64]| -> Vec<f64> {
        net.potential_diff(pi)
            .iter()
            .zip(inst.costs.iter().zip(&bounds))
            .map(|(&y, (f, &(lo, hi)))| inverse(f, y, lo, hi))
            .collect()
    };
    let residual = |x: &[f64]| -> Vec<f64> {
        let g = net.net_inflow(x);
        demand.iter().zip(&g).map(|(d, v)| d - v).collect()
    };
    let scale = 1.0 + demand.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut pi = vec![0.0; n];
    for _ in 0..2000 {
        let x = flows(&pi);
        let r = residual(&x);
        if r.iter().all(|v| v.abs() <= tol * scale) {
            return Ok(x);
        }
        let c: Vec<f64> = inst
            .costs
            .iter()
            .zip(x.iter().zip(&bounds))
            .map(|(f, (&xe, &(lo, hi)))| {
                let interior = xe > lo && xe < hi;
                let d = f.derivative(xe);
                if interior && d > 0.0 {
                    1.0 / d
                } else {
                    0.0
                }
            })
            .collect();
        let cmax = c.iter().fold(0.0f64, |m, v| m.max(*v));
        let floor = 1e-9 * cmax.max(1e-6);
        let creg: Vec<f64> = c.iter().map(|v| v.max(floor)).collect();
        let mut lap = LaplacianState::assemble(net, &creg)?;
        let mean = r.iter().sum::<f64>() / n as f64;
        let rb: Vec<f64> = r.iter().map(|v| v - mean).collect();
        let mut dir = lap.reduced_solve(&rb)?;
        if dir.iter().all(|v| *v == 0.0) {
            dir = rb;
        }
        // φ'(t) = dirᵀ r(π + t·dir) decreases in t.
        let slope = |t: f64| -> f64 {
            let p: Vec<f64> = pi.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            residual(&flows(&p)).iter().zip(&dir).map(|(a, b)| a * b).sum()
        };
        let mut hi = 1.0;
        let mut guard = 0;
        while slope(hi) > 0.0 && guard < 200 {
            hi *= 2.0;
            guard += 1;
        }
        let mut lo = 0.0;
        let t = if slope(hi) >= 0.0 {
            hi
        } else {
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if slope(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        if t == 0.0 {
            break;
        }
        for (p, d) in pi.iter_mut().zip(&dir) {
            *p += t * d;
        }
    }
    let x = flows(&pi);
    let r = residual(&x);
    let worst = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if worst <= tol * scale {
        Ok(x)
    } else {
        Err(Error::ResourceLimit(format!(
            "oracle residual {worst:e} above tolerance"
        )))
    }
}
