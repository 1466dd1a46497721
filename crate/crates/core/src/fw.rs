//! Frank-Wolfe with parallel tangents for one fixed demand vector.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::cost::Marginal;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::network::Mode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwResult {
    pub flow: Vec<f64>,
    pub upper_cost: f64,
    pub lower_bound: f64,
    pub iterations: usize,
}

impl FwResult {
    pub fn relative_gap(&self) -> f64 {
        relative_gap(self.upper_cost, self.lower_bound)
    }
}

fn relative_gap(upper: f64, lower: f64) -> f64 {
    let gap = (upper - lower).max(0.0);
    if gap == 0.0 {
        0.0
    } else {
        gap / lower.abs().max(1e-300)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FwOptions {
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Parallel-tangent acceleration; restarted every `restart` iterations.
    pub partan: bool,
    pub restart: usize,
}

impl Default for FwOptions {
    fn default() -> Self {
        FwOptions {
            epsilon: 1e-4,
            max_iterations: 100_000,
            partan: true,
            restart: 50,
        }
    }
}

impl FwOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        FwOptions {
            epsilon,
            ..Self::default()
        }
    }
}

/// Flow box per edge. Undirected edges get `[−x_max, x_max]` on top of the marginal's bounds.
fn edge_box<M: Marginal>(inst: &Instance<M>, x_max: f64) -> (Vec<f64>, Vec<f64>) {
    inst.costs
        .iter()
        .map(|f| {
            let lb = f.lower_bound().unwrap_or(f64::NEG_INFINITY);
            let ub = f.upper_bound().unwrap_or(f64::INFINITY);
            match inst.network.mode() {
                Mode::Directed => (lb.max(0.0), ub),
                Mode::Undirected => (lb.max(-x_max), ub.min(x_max)),
            }
        })
        .unzip()
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `min wᵀs` subject to `Γs = demand` and `lo ≤ s ≤ hi`, by successive shortest paths.
fn box_min_cost_flow<M: Marginal>(
    inst: &Instance<M>,
    w: &[f64],
    lo: &[f64],
    hi: &[f64],
    demand: &[f64],
) -> Result<Vec<f64>> {
    let net = &inst.network;
    let n = net.n_vertices();
    let m = net.n_edges();
    let mut s = vec![0.0; m];
    for e in 0..m {
        if lo[e] > hi[e] {
            return Err(Error::Infeasible(format!("edge {e} has empty flow range")));
        }
        s[e] = if w[e] >= 0.0 { lo[e] } else { hi[e] };
        if !s[e].is_finite() {
            return Err(Error::invalid(format!(
                "negative weight {} on edge {e} without an upper bound",
                w[e]
            )));
        }
    }
    let inflow = net.net_inflow(&s);
    // Positive excess: the vertex still needs inflow.
    let mut excess: Vec<f64> = demand.iter().zip(&inflow).map(|(d, i)| d - i).collect();
    let scale = demand.iter().map(|x| x.abs()).sum::<f64>() + excess.iter().map(|x| x.abs()).sum::<f64>();
    let tol = 1e-13 * scale.max(1e-300);
    let mut p = vec![0.0; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<(usize, bool)>> = vec![None; n];
    let mut done = vec![false; n];
    let residual = |s: &[f64], e: usize, fwd: bool| if fwd { hi[e] - s[e] } else { s[e] - lo[e] };
    for _round in 0..(4 * (n + m) + 16) * 64 {
        if excess.iter().all(|x| x.abs() <= tol) {
            return Ok(s);
        }
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        pred.iter_mut().for_each(|q| *q = None);
        done.iter_mut().for_each(|d| *d = false);
        let mut heap = BinaryHeap::new();
        for v in 0..n {
            if excess[v] < -tol {
                dist[v] = 0.0;
                heap.push(Entry(0.0, v));
            }
        }
        let mut target = None;
        while let Some(Entry(d, v)) = heap.pop() {
            if done[v] || d > dist[v] {
                continue;
            }
            done[v] = true;
            if excess[v] > tol {
                target = Some(v);
                break;
            }
            let arcs = net
                .out_edges(v)
                .iter()
                .map(|&e| (e, true))
                .chain(net.in_edges(v).iter().map(|&e| (e, false)));
            for (e, fwd) in arcs {
                if residual(&s, e, fwd) <= tol {
                    continue;
                }
                let (a, b) = net.edge(e);
                let (to, cost) = if fwd { (b, w[e]) } else { (a, -w[e]) };
                if done[to] {
                    continue;
                }
                let nd = d + (cost + p[v] - p[to]).max(0.0);
                let better = nd < dist[to] || (nd == dist[to] && pred[to].is_some_and(|(pe, _)| e < pe));
                if better {
                    dist[to] = nd;
                    pred[to] = Some((e, fwd));
                    heap.push(Entry(nd, to));
                }
            }
        }
        let Some(t) = target else {
            return Err(Error::Infeasible(
                "demand cannot be routed within the edge bounds".into(),
            ));
        };
        let dt = dist[t];
        let mut amount = excess[t];
        let mut v = t;
        while let Some((e, fwd)) = pred[v] {
            amount = amount.min(residual(&s, e, fwd));
            let (a, b) = net.edge(e);
            v = if fwd { a } else { b };
        }
        amount = amount.min(-excess[v]);
        let src = v;
        let mut v = t;
        while let Some((e, fwd)) = pred[v] {
            let (a, b) = net.edge(e);
            if fwd {
                s[e] = (s[e] + amount).min(hi[e]);
                v = a;
            } else {
                s[e] = (s[e] - amount).max(lo[e]);
                v = b;
            }
        }
        excess[t] -= amount;
        excess[src] += amount;
        for u in 0..n {
            p[u] += dist[u].min(dt);
        }
    }
    Err(Error::ResourceLimit("linear oracle did not terminate".into()))
}

/// Extreme point minimizing `Σ w_e s_e` over flows meeting `demand`.
///
/// Directed: weights must be nonnegative and flows are uncapacitated, so this is a
/// shortest-path assignment. Undirected: flows are boxed to `[−x_max, x_max]`; when
/// `x_max` is `None` it defaults to `½‖demand‖₁`.
pub fn linear_oracle<M: Marginal>(
    inst: &Instance<M>,
    weights: &[f64],
    demand: &[f64],
    x_max: Option<f64>,
) -> Result<Vec<f64>> {
    if inst.network.mode() == Mode::Directed {
        if let Some(e) = weights.iter().position(|&w| w < 0.0) {
            return Err(Error::invalid(format!("negative weight on directed edge {e}")));
        }
    }
    let x_max = x_max.unwrap_or_else(|| 0.5 * demand.iter().map(|d| d.abs()).sum::<f64>());
    let (lo, hi) = edge_box(inst, x_max);
    box_min_cost_flow(inst, weights, &lo, &hi, demand)
}

/// Minimizer of `t ↦ C(x + t d)` over `[0, t_max]` by bisection on the derivative.
fn search<M: Marginal>(inst: &Instance<M>, x: &[f64], d: &[f64], t_max: f64) -> f64 {
    let slope = |t: f64| -> f64 {
        inst.costs
            .iter()
            .zip(x.iter().zip(d))
            .filter(|(_, (_, &de))| de != 0.0)
            .map(|(f, (&xe, &de))| f.value(xe + t * de) * de)
            .sum()
    };
    if !(t_max > 0.0) || slope(0.0) >= 0.0 {
        return 0.0;
    }
    if slope(t_max) <= 0.0 {
        return t_max;
    }
    let (mut lo, mut hi) = (0.0, t_max);
    while hi - lo > 1e-12 * t_max {
        let mid = 0.5 * (lo + hi);
        let g = slope(mid);
        if g.abs() <= 1e-10 {
            return mid;
        }
        if g > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Step `γ ∈ [0, 1]` minimizing `C(x + γ(y − x))`.
pub fn line_search<M: Marginal>(inst: &Instance<M>, x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    search(inst, x, &d, 1.0)
}

/// Largest `t` keeping `x + t d` inside the box, capped at `cap`.
fn max_step(x: &[f64], d: &[f64], lo: &[f64], hi: &[f64], cap: f64) -> f64 {
    let mut t = cap;
    for e in 0..x.len() {
        if d[e] > 0.0 && hi[e].is_finite() {
            t = t.min(((hi[e] - x[e]) / d[e]).max(0.0));
        } else if d[e] < 0.0 && lo[e].is_finite() {
            t = t.min(((lo[e] - x[e]) / d[e]).max(0.0));
        }
    }
    t
}

fn axpy(x: &[f64], t: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + t * b).collect()
}

/// Minimizes `Σ F_e(x_e)` subject to `Γx = demand`.
///
/// `start` must be feasible when given; otherwise the first oracle call provides the
/// initial point. The lower bound is the best Frank-Wolfe dual bound seen.
pub fn solve_fixed<M: Marginal>(
    inst: &Instance<M>,
    demand: &[f64],
    opts: &FwOptions,
    start: Option<Vec<f64>>,
) -> Result<FwResult> {
    if !(opts.epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    if demand.len() != inst.network.n_vertices() {
        return Err(Error::invalid("demand length does not match the network"));
    }
    let x_max = 0.5 * demand.iter().map(|d| d.abs()).sum::<f64>();
    let (lo, hi) = edge_box(inst, x_max);
    let mut x = match start {
        Some(x) => x,
        None => {
            let w = inst.marginals_at(&vec![0.0; inst.n_edges()]);
            let w: Vec<f64> = w.iter().map(|v| v.max(0.0)).collect();
            linear_oracle(inst, &w, demand, Some(x_max))?
        }
    };
    if x_max == 0.0 && x.iter().all(|&v| v == 0.0) {
        return Ok(FwResult {
            flow: x,
            upper_cost: 0.0,
            lower_bound: 0.0,
            iterations: 1,
        });
    }
    let mut upper = inst.objective(&x);
    let mut lower = f64::NEG_INFINITY;
    let mut prev: Option<Vec<f64>> = None;
    let mut since_restart = 0usize;
    for it in 1..=opts.max_iterations {
        let g = inst.marginals_at(&x);
        let y = linear_oracle(inst, &g, demand, Some(x_max))?;
        let gap: f64 = g
            .iter()
            .zip(x.iter().zip(&y))
            .map(|(gi, (xi, yi))| gi * (xi - yi))
            .sum();
        lower = lower.max(upper - gap.max(0.0));
        if relative_gap(upper, lower) <= opts.epsilon {
            return Ok(FwResult {
                flow: x,
                upper_cost: upper,
                lower_bound: lower,
                iterations: it,
            });
        }
        let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let gamma = search(inst, &x, &d, 1.0);
        let mut z = axpy(&x, gamma, &d);
        let mut cz = inst.objective(&z);
        if opts.partan && since_restart > 0 {
            if let Some(p) = &prev {
                let dz: Vec<f64> = z.iter().zip(p).map(|(a, b)| a - b).collect();
                let t_max = max_step(&z, &dz, &lo, &hi, 10.0);
                let t = search(inst, &z, &dz, t_max);
                if t > 0.0 {
                    let cand = axpy(&z, t, &dz);
                    let cc = inst.objective(&cand);
                    if cc <= cz {
                        z = cand;
                        cz = cc;
                    }
                }
            }
        }
        since_restart += 1;
        if since_restart >= opts.restart || cz > upper {
            since_restart = 0;
        }
        if cz <= upper {
            prev = Some(std::mem::replace(&mut x, z));
            upper = cz;
        } else {
            prev = None;
        }
    }
    let best = FwResult {
        flow: x,
        upper_cost: upper,
        lower_bound: lower,
        iterations: opts.max_iterations,
    };
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        gap: best.relative_gap(),
        best: Box::new(best),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::AnalyticMarginal;
    use crate::network::Network;
    use approx::assert_abs_diff_eq;

    fn pigou() -> Instance<AnalyticMarginal> {
        // s=0, m=1, t=2; the top link is s→t with cost 1, the bottom path has cost x.
        let k = 1e-6;
        let net = Network::new(3, vec![(0, 2), (0, 1), (1, 2), (2, 0)], Mode::Directed).unwrap();
        let costs = vec![
            AnalyticMarginal::linear(1.0, k),
            AnalyticMarginal::linear(0.0, 1.0),
            AnalyticMarginal::linear(0.0, k),
            AnalyticMarginal::linear(10.0, k),
        ];
        Instance::new(net, costs).unwrap()
    }

    #[test]
    fn oracle_prefers_cheaper_link() {
        let net = Network::new(3, vec![(0, 2), (0, 1), (1, 2), (2, 0)], Mode::Directed).unwrap();
        let inst = Instance::new(net, vec![AnalyticMarginal::linear(1.0, 0.0); 4]).unwrap();
        let y = linear_oracle(&inst, &[1.0, 1.0, 1.0, 1.0], &[-1.0, 0.0, 1.0], None).unwrap();
        assert_eq!(y, vec![1.0, 0.0, 0.0, 0.0]);
        let y = linear_oracle(&inst, &[3.0, 1.0, 1.0, 1.0], &[-1.0, 0.0, 1.0], None).unwrap();
        assert_eq!(y, vec![0.0, 1.0, 1.0, 0.0]);
        assert!(linear_oracle(&inst, &[-1.0, 1.0, 1.0, 1.0], &[-1.0, 0.0, 1.0], None).is_err());
    }

    #[test]
    fn undirected_negative_weight_saturates() {
        let net = Network::new(3, vec![(0, 1), (1, 2), (0, 2)], Mode::Undirected).unwrap();
        let inst = Instance::new(net, vec![AnalyticMarginal::linear(0.0, 1.0); 3]).unwrap();
        // Routing 1 unit 0→2. Edge 2 has weight −1 so it is pushed to +1;
        // the cycle 0→2→1→0 costs −1 + 1 + 1 > 0, so nothing else moves.
        let y = linear_oracle(&inst, &[1.0, 1.0, -1.0], &[-1.0, 0.0, 1.0], Some(1.0)).unwrap();
        assert_abs_diff_eq!(y[2], 1.0);
        assert_abs_diff_eq!(y[0], 0.0);
        assert_abs_diff_eq!(y[1], 0.0);
        // A cheaper reverse cycle makes the box bind on all three edges.
        let y = linear_oracle(&inst, &[-1.0, -1.0, 0.5], &[-1.0, 0.0, 1.0], Some(1.0)).unwrap();
        assert_abs_diff_eq!(y[0], 1.0);
        assert_abs_diff_eq!(y[1], 1.0);
        assert_abs_diff_eq!(y[2], 0.0);
    }

    #[test]
    fn pigou_equilibrium() {
        let inst = pigou();
        let r = solve_fixed(&inst, &[-1.0, 0.0, 1.0], &FwOptions::with_epsilon(1e-9), None).unwrap();
        assert!(r.lower_bound <= r.upper_cost);
        assert_abs_diff_eq!(r.upper_cost, 0.5, epsilon = 1e-5);
        assert_abs_diff_eq!(r.flow[1], 1.0, epsilon = 1e-5);
    }

    #[test]
    fn zero_demand() {
        let inst = pigou();
        let r = solve_fixed(&inst, &[0.0; 3], &FwOptions::default(), None).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.upper_cost, 0.0);
        assert_eq!(r.flow, vec![0.0; 4]);
    }

    #[test]
    fn line_search_identity() {
        let inst = pigou();
        let x = vec![0.5, 0.5, 0.5, 0.0];
        assert_eq!(line_search(&inst, &x, &x), 0.0);
    }

    #[test]
    fn line_search_matches_golden_section() {
        let inst = pigou();
        let x = vec![1.0, 0.0, 0.0, 0.0];
        let y = vec![0.0, 1.0, 1.0, 0.0];
        let g = line_search(&inst, &x, &y);
        let phi = |t: f64| inst.objective(&axpy(&x, t, &[-1.0, 1.0, 1.0, 0.0]));
        let (mut a, mut b) = (0.0f64, 1.0f64);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if phi(c) < phi(d) {
                b = d;
            } else {
                a = c;
            }
        }
        assert_abs_diff_eq!(g, 0.5 * (a + b), epsilon = 1e-8);
    }
}
