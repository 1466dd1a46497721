//! Exact parametric solver for piecewise-quadratic costs.
//!
//! The solver walks regions of potential space in which every edge sits on one
//! linear part of its marginal. Inside a region the potential is affine in λ
//! (`L_t π = b0 + λ b + Γ d_t`), so each region contributes one segment.
//!
//! Degenerate points (several edges on breakpoints, or a region whose support
//! graph is disconnected) are resolved by a depth-first search over neighbouring
//! regions at the current λ, with the flow held fixed. Disconnected supports are
//! reconnected by shifting the potential of a detached component until one of its
//! boundary edges reaches a breakpoint that leads into a finite part.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::cost::{Marginal, PiecewiseLinearMarginal};
use crate::error::{Error, Result};
use crate::instance::PwqInstance;
use crate::linalg::LaplacianState;
use crate::network::{DemandFunction, Mode};
use crate::paths::{Arc, Graph};

/// Part index per edge.
pub type Region = Vec<usize>;

const LAMBDA_MERGE: f64 = 1e-12;
const Y_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSegment {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub pi_offset: Vec<f64>,
    pub pi_dir: Vec<f64>,
    pub x_offset: Vec<f64>,
    pub x_dir: Vec<f64>,
    #[serde(default)]
    pub region: Region,
}

impl SolutionSegment {
    pub fn flow_at(&self, lambda: f64) -> Vec<f64> {
        affine(&self.x_offset, &self.x_dir, lambda)
    }

    pub fn potential_at(&self, lambda: f64) -> Vec<f64> {
        affine(&self.pi_offset, &self.pi_dir, lambda)
    }
}

fn affine(off: &[f64], dir: &[f64], lambda: f64) -> Vec<f64> {
    off.iter().zip(dir).map(|(a, b)| a + lambda * b).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EfpaStats {
    /// Part changes applied, including ones later undone by backtracking.
    pub pivots: usize,
    /// Reconnections of a disconnected support at constant flow.
    pub ambiguous_skips: usize,
    /// Regions left again because they admitted no forward motion.
    pub backtracks: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParametricSolution {
    pub segments: Vec<SolutionSegment>,
    #[serde(skip)]
    pub stats: EfpaStats,
}

impl ParametricSolution {
    pub fn lambda_max(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.lambda_hi)
    }

    pub fn segment_at(&self, lambda: f64) -> Option<&SolutionSegment> {
        let i = self.segments.partition_point(|s| s.lambda_hi < lambda);
        self.segments.get(i.min(self.segments.len().saturating_sub(1)))
    }

    pub fn flow_at(&self, lambda: f64) -> Option<Vec<f64>> {
        self.segment_at(lambda).map(|s| s.flow_at(lambda))
    }

    pub fn potential_at(&self, lambda: f64) -> Option<Vec<f64>> {
        self.segment_at(lambda).map(|s| s.potential_at(lambda))
    }

    /// Segment endpoints, starting with the first `lambda_lo`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.segments.first().map(|s| s.lambda_lo).into_iter().collect();
        out.extend(self.segments.iter().map(|s| s.lambda_hi));
        out
    }
}

#[derive(Debug, Clone)]
pub enum InitialSolution {
    /// `x = 0` is optimal at λ = 0.
    ZeroFlow,
    /// Optimal flow at λ = 0.
    Flow(Vec<f64>),
    /// Optimal potential at λ = 0.
    Potential(Vec<f64>),
}

#[derive(Debug, Clone, Copy)]
pub struct EfpaOptions {
    pub max_regions: usize,
    /// Regions explored while resolving one degenerate point.
    pub max_degenerate: usize,
}

impl Default for EfpaOptions {
    fn default() -> Self {
        EfpaOptions {
            max_regions: 1_000_000,
            max_degenerate: 200_000,
        }
    }
}

/// Shortest-path potential in the residual graph of `x0` (forward arcs weigh
/// `f(x0)`, backward arcs `−f(x0)` where the flow can decrease).
pub fn initial_potential<M: Marginal>(inst: &crate::instance::Instance<M>, x0: &[f64]) -> Result<Vec<f64>> {
    let net = &inst.network;
    let mut arcs = Vec::with_capacity(2 * net.n_edges());
    for (e, (&(u, v), f)) in net.edges().iter().zip(&inst.costs).enumerate() {
        let x = x0[e];
        let w = f.value(x);
        let tol = 1e-12 * (1.0 + x.abs());
        if f.upper_bound().is_none_or(|ub| x < ub - tol) {
            arcs.push(Arc {
                from: u,
                to: v,
                weight: w,
                edge: e,
            });
        }
        let can_decrease = match net.mode() {
            Mode::Undirected => f.lower_bound().is_none_or(|lb| x > lb + tol),
            Mode::Directed => x > f.lower_bound().unwrap_or(0.0) + tol,
        };
        if can_decrease {
            arcs.push(Arc {
                from: v,
                to: u,
                weight: -w,
                edge: e,
            });
        }
    }
    let g = Graph::new(net.n_vertices(), arcs);
    let dist = g.bellman_ford(net.reference(), 1e-13)?;
    if dist.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidNetwork("vertex unreachable from the reference".into()));
    }
    Ok(dist)
}

/// Part of every edge containing its potential difference, ties to the lower part.
pub fn locate_region(inst: &PwqInstance, pi: &[f64]) -> Region {
    inst.network
        .potential_diff(pi)
        .iter()
        .zip(&inst.costs)
        .map(|(&y, f)| f.locate(y))
        .collect()
}

fn region_conductances(inst: &PwqInstance, region: &[usize]) -> Vec<f64> {
    inst.costs.iter().zip(region).map(|(f, &t)| f.part(t).c).collect()
}

/// `b0 + λ b + Γ d_t`.
fn region_rhs(inst: &PwqInstance, region: &[usize], demand: &[f64]) -> Vec<f64> {
    let mut rhs = demand.to_vec();
    for (e, &(u, v)) in inst.network.edges().iter().enumerate() {
        let d = inst.costs[e].part(region[e]).d;
        rhs[u] -= d;
        rhs[v] += d;
    }
    rhs
}

/// Affine maps of one region.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentMaps {
    pub pi_offset: Vec<f64>,
    pub pi_dir: Vec<f64>,
    pub x_offset: Vec<f64>,
    pub x_dir: Vec<f64>,
}

fn flows_of(inst: &PwqInstance, region: &[usize], pi: &[f64], with_d: bool) -> Vec<f64> {
    inst.network
        .potential_diff(pi)
        .iter()
        .zip(inst.costs.iter().zip(region))
        .map(|(&y, (f, &t))| {
            let p = f.part(t);
            if with_d {
                p.c * y - p.d
            } else {
                p.c * y
            }
        })
        .collect()
}

/// `π(λ) = L*_t (b0 + Γ d_t) + λ L*_t b` and the matching flows.
pub fn region_segment(inst: &PwqInstance, region: &[usize], demand: &DemandFunction) -> Result<SegmentMaps> {
    let mut lap = LaplacianState::assemble(&inst.network, &region_conductances(inst, region))?;
    if lap.is_singular() {
        return Err(Error::Singular);
    }
    let pi_offset = lap.reduced_solve(&region_rhs(inst, region, &demand.b0))?;
    let pi_dir = lap.reduced_solve(&demand.b)?;
    Ok(SegmentMaps {
        x_offset: flows_of(inst, region, &pi_offset, true),
        x_dir: flows_of(inst, region, &pi_dir, false),
        pi_offset,
        pi_dir,
    })
}

/// Where a segment leaves its region.
#[derive(Debug, Clone, PartialEq)]
pub struct Exit {
    pub lambda: f64,
    /// `(edge, ±1)`: the part index moves up or down.
    pub crossings: Vec<(usize, i8)>,
}

struct Scan {
    immediate: Vec<(usize, i8)>,
    exit: Exit,
}

fn y_tol(s: f64) -> f64 {
    Y_TOL * (1.0 + s.abs())
}

fn scan_exits(inst: &PwqInstance, region: &[usize], y: &[f64], dy: &[f64], lambda: f64, merge: f64) -> Scan {
    let dmax = dy.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let dtol = 1e-12 * dmax;
    let mut immediate = Vec::new();
    let mut best = f64::INFINITY;
    let mut steps: Vec<(usize, i8, f64)> = Vec::new();
    for (e, f) in inst.costs.iter().enumerate() {
        let t = region[e];
        let (dir, gap, bound) = if dy[e] > dtol {
            let hi = f.sigma_hi(t);
            (1i8, hi - y[e], hi)
        } else if dy[e] < -dtol {
            let lo = f.sigma_lo(t);
            (-1i8, y[e] - lo, lo)
        } else {
            continue;
        };
        if !bound.is_finite() {
            continue;
        }
        let step = gap.max(0.0) / dy[e].abs();
        if gap <= y_tol(bound) || step <= merge {
            immediate.push((e, dir));
        } else {
            steps.push((e, dir, step));
            best = best.min(step);
        }
    }
    let crossings = if best.is_finite() {
        steps
            .iter()
            .filter(|s| s.2 <= best + LAMBDA_MERGE * (1.0 + best))
            .map(|s| (s.0, s.1))
            .collect()
    } else {
        Vec::new()
    };
    Scan {
        immediate,
        exit: Exit {
            lambda: lambda + best,
            crossings,
        },
    }
}

/// Largest λ up to which `seg` stays inside its region, starting from `from`.
pub fn lambda_exit(inst: &PwqInstance, seg: &SolutionSegment, from: f64) -> Exit {
    let y = inst.network.potential_diff(&seg.potential_at(from));
    let dy = inst.network.potential_diff(&seg.pi_dir);
    let scan = scan_exits(inst, &seg.region, &y, &dy, from, 0.0);
    if scan.immediate.is_empty() {
        scan.exit
    } else {
        Exit {
            lambda: from,
            crossings: scan.immediate,
        }
    }
}

struct Plan {
    maps: SegmentMaps,
    exit: f64,
}

enum Node {
    Ready(Plan),
    Pivots(Vec<(usize, i8)>),
}

/// Candidate reconnection of a detached support component.
struct Merge {
    edge: usize,
    part: usize,
    theta: f64,
    members: Vec<usize>,
}

/// Stateful walker; each call to [`Homotopy::advance`] yields the next segment.
pub struct Homotopy<'a> {
    inst: &'a PwqInstance,
    demand: &'a DemandFunction,
    opts: EfpaOptions,
    lap: LaplacianState,
    region: Region,
    lambda: f64,
    pi: Vec<f64>,
    finished: bool,
    regions: usize,
    explored: usize,
    pub stats: EfpaStats,
}

impl<'a> Homotopy<'a> {
    pub fn new(
        inst: &'a PwqInstance,
        demand: &'a DemandFunction,
        initial: InitialSolution,
        opts: EfpaOptions,
    ) -> Result<Self> {
        if demand.n_vertices() != inst.network.n_vertices() {
            return Err(Error::invalid("demand length does not match the network"));
        }
        let pi = match initial {
            InitialSolution::ZeroFlow => initial_potential(inst, &vec![0.0; inst.n_edges()])?,
            InitialSolution::Flow(x0) => {
                if x0.len() != inst.n_edges() {
                    return Err(Error::invalid("initial flow length mismatch"));
                }
                initial_potential(inst, &x0)?
            }
            InitialSolution::Potential(mut pi) => {
                if pi.len() != inst.network.n_vertices() {
                    return Err(Error::invalid("initial potential length mismatch"));
                }
                let r = pi[inst.network.reference()];
                pi.iter_mut().for_each(|p| *p -= r);
                pi
            }
        };
        let region = locate_region(inst, &pi);
        let lap = LaplacianState::assemble(&inst.network, &region_conductances(inst, &region))?;
        Ok(Homotopy {
            inst,
            demand,
            opts,
            lap,
            region,
            lambda: 0.0,
            pi,
            finished: false,
            regions: 0,
            explored: 0,
            stats: EfpaStats::default(),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Current optimal potential.
    pub fn potential(&self) -> &[f64] {
        &self.pi
    }

    pub fn region(&self) -> &[usize] {
        &self.region
    }

    /// Next segment of the solution, or `None` once λ_max is reached.
    pub fn advance(&mut self) -> Result<Option<SolutionSegment>> {
        if self.finished {
            return Ok(None);
        }
        self.regions += 1;
        if self.regions > self.opts.max_regions {
            return Err(Error::ResourceLimit(format!(
                "more than {} regions",
                self.opts.max_regions
            )));
        }
        let mut visited = HashSet::new();
        self.explored = 0;
        let plan = self.settle(&mut visited)?.ok_or_else(|| {
            Error::Infeasible(format!(
                "no region admits progress at lambda = {}; demand cannot be met within the bounds",
                self.lambda
            ))
        })?;
        let lmax = self.demand.lambda_max;
        let hi = plan.exit.min(lmax);
        let seg = SolutionSegment {
            lambda_lo: self.lambda,
            lambda_hi: hi,
            pi_offset: plan.maps.pi_offset,
            pi_dir: plan.maps.pi_dir,
            x_offset: plan.maps.x_offset,
            x_dir: plan.maps.x_dir,
            region: self.region.clone(),
        };
        self.pi = seg.potential_at(hi);
        self.lambda = hi;
        if plan.exit >= lmax {
            self.finished = true;
        }
        Ok(Some(seg))
    }

    fn set_part(&mut self, e: usize, t: usize) -> Result<()> {
        self.region[e] = t;
        self.stats.pivots += 1;
        self.lap.rank_one_update(e, self.inst.costs[e].part(t).c)
    }

    fn settle(&mut self, visited: &mut HashSet<Region>) -> Result<Option<Plan>> {
        if !visited.insert(self.region.clone()) {
            return Ok(None);
        }
        self.explored += 1;
        if self.explored > self.opts.max_degenerate {
            return Err(Error::ResourceLimit(format!(
                "degenerate point at lambda = {} not resolved within {} regions",
                self.lambda, self.opts.max_degenerate
            )));
        }
        if self.lap.is_singular() {
            for m in self.merges() {
                let saved = self.pi.clone();
                let old = self.region[m.edge];
                for &v in &m.members {
                    self.pi[v] += m.theta;
                }
                self.set_part(m.edge, m.part)?;
                self.stats.ambiguous_skips += 1;
                if let Some(plan) = self.settle(visited)? {
                    return Ok(Some(plan));
                }
                self.set_part(m.edge, old)?;
                self.pi = saved;
                self.stats.backtracks += 1;
            }
            return Ok(None);
        }
        match self.evaluate()? {
            Node::Ready(plan) => Ok(Some(plan)),
            Node::Pivots(list) => {
                let saved = self.pi.clone();
                for (e, dir) in list {
                    let old = self.region[e];
                    let new = if dir > 0 { old + 1 } else { old.wrapping_sub(1) };
                    if new >= self.inst.costs[e].n_parts() {
                        continue;
                    }
                    self.set_part(e, new)?;
                    if let Some(plan) = self.settle(visited)? {
                        return Ok(Some(plan));
                    }
                    self.set_part(e, old)?;
                    self.pi = saved.clone();
                    self.stats.backtracks += 1;
                }
                Ok(None)
            }
        }
    }

    /// Solves the current (non-singular) region at the current λ.
    fn evaluate(&mut self) -> Result<Node> {
        let inst = self.inst;
        let lambda = self.lambda;
        let demand = self.demand.at_unchecked(lambda);
        let pi_now = self.lap.reduced_solve(&region_rhs(inst, &self.region, &demand))?;
        let pi_dir = self.lap.reduced_solve(&self.demand.b)?;
        let y = inst.network.potential_diff(&pi_now);
        let dy = inst.network.potential_diff(&pi_dir);
        let merge = LAMBDA_MERGE * self.demand.lambda_max.max(1.0);
        let scan = scan_exits(inst, &self.region, &y, &dy, lambda, merge);
        self.pi = pi_now;
        if !scan.immediate.is_empty() {
            return Ok(Node::Pivots(scan.immediate));
        }
        let pi_offset: Vec<f64> = self.pi.iter().zip(&pi_dir).map(|(p, d)| p - lambda * d).collect();
        let maps = SegmentMaps {
            x_offset: flows_of(inst, &self.region, &pi_offset, true),
            x_dir: flows_of(inst, &self.region, &pi_dir, false),
            pi_offset,
            pi_dir,
        };
        Ok(Node::Ready(Plan {
            maps,
            exit: scan.exit.lambda,
        }))
    }

    /// Ways to reconnect the detached support component with the smallest vertex.
    fn merges(&self) -> Vec<Merge> {
        let inst = self.inst;
        let net = &inst.network;
        let n = net.n_vertices();
        let mut uf = UnionFind::new(n);
        for (e, &(u, v)) in net.edges().iter().enumerate() {
            if self.lap.conductance(e) > 0.0 {
                uf.union(u, v);
            }
        }
        let root = uf.find(net.reference());
        let Some(start) = (0..n).find(|&v| uf.find(v) != root) else {
            return Vec::new();
        };
        let comp = uf.find(start);
        let members: Vec<usize> = (0..n).filter(|&v| uf.find(v) == comp).collect();
        let inside: Vec<bool> = (0..n).map(|v| uf.find(v) == comp).collect();
        let net_demand: f64 = members.iter().map(|&v| self.demand.b[v]).sum();
        let scale = self
            .demand
            .b
            .iter()
            .map(|x| x.abs())
            .sum::<f64>()
            .max(f64::MIN_POSITIVE);

        // Shifting the component by θ moves y_e by ±θ on its boundary edges.
        let mut up: Vec<(f64, usize, usize)> = Vec::new();
        let mut down: Vec<(f64, usize, usize)> = Vec::new();
        for (e, &(u, v)) in net.edges().iter().enumerate() {
            if inside[u] == inside[v] {
                continue;
            }
            let s = if inside[v] { 1.0 } else { -1.0 };
            let f: &PiecewiseLinearMarginal = &inst.costs[e];
            let t = self.region[e];
            let y = self.pi[v] - self.pi[u];
            let hi = f.sigma_hi(t);
            let lo = f.sigma_lo(t);
            // Limits on θ from y + sθ ≤ hi (part t+1) and y + sθ ≥ lo (part t−1).
            if hi.is_finite() {
                let lim = s * (hi - y);
                if s > 0.0 {
                    up.push((lim, e, t + 1))
                } else {
                    down.push((lim, e, t + 1))
                }
            }
            if lo.is_finite() {
                let lim = s * (lo - y);
                if s > 0.0 {
                    down.push((lim, e, t - 1))
                } else {
                    up.push((lim, e, t - 1))
                }
            }
        }
        let pick = |list: &[(f64, usize, usize)], upper: bool| -> Vec<Merge> {
            let ext = if upper {
                list.iter().map(|c| c.0).fold(f64::INFINITY, f64::min)
            } else {
                list.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max)
            };
            if !ext.is_finite() {
                return Vec::new();
            }
            let tol = y_tol(ext);
            let mut out: Vec<Merge> = list
                .iter()
                .filter(|c| (c.0 - ext).abs() <= tol)
                .filter(|c| inst.costs[c.1].part(c.2).c > 0.0)
                .map(|c| Merge {
                    edge: c.1,
                    part: c.2,
                    theta: ext,
                    members: members.clone(),
                })
                .collect();
            out.sort_by_key(|m| m.edge);
            out
        };
        let ups = pick(&up, true);
        let downs = pick(&down, false);
        if net_demand < -1e-12 * scale {
            downs.into_iter().chain(ups).collect()
        } else {
            ups.into_iter().chain(downs).collect()
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Solves the whole parameter range `[0, λ_max]`.
pub fn run_efpa(
    inst: &PwqInstance,
    demand: &DemandFunction,
    initial: InitialSolution,
    opts: EfpaOptions,
) -> Result<ParametricSolution> {
    let mut walk = Homotopy::new(inst, demand, initial, opts)?;
    let mut segments = Vec::new();
    while let Some(seg) = walk.advance()? {
        segments.push(seg);
    }
    Ok(ParametricSolution {
        segments,
        stats: walk.stats.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Instance;
    use crate::network::Network;
    use approx::assert_abs_diff_eq;

    fn kinked_triangle() -> PwqInstance {
        let net = Network::new(3, vec![(0, 1), (1, 2), (0, 2)], Mode::Undirected).unwrap();
        let pl = |tau: f64, a: f64, b: f64| {
            PiecewiseLinearMarginal::from_parts(vec![tau], vec![1.0, a], vec![0.0, b]).unwrap()
        };
        Instance::new(net, vec![pl(3.0, 5.0, -12.0), pl(2.0, 3.0, -4.0), pl(1.0, 4.0, -3.0)]).unwrap()
    }

    fn kinked_triangle_demand(lmax: f64) -> DemandFunction {
        DemandFunction::source_sink(3, 0, 2, 1.0, lmax).unwrap()
    }

    #[test]
    fn locate_examples() {
        let inst = kinked_triangle();
        assert_eq!(locate_region(&inst, &[0.0, 0.0, 0.0]), vec![0, 0, 0]);
        assert_eq!(locate_region(&inst, &[0.0, 1.0, 2.0]), vec![0, 0, 1]);
        assert_eq!(locate_region(&inst, &[0.0, 0.5, 1.0]), vec![0, 0, 0]);
    }

    #[test]
    fn first_region_direction() {
        let inst = kinked_triangle();
        let maps = region_segment(&inst, &[0, 0, 0], &kinked_triangle_demand(6.0)).unwrap();
        assert_abs_diff_eq!(maps.pi_dir[2], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(maps.pi_dir[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(maps.pi_offset, vec![0.0; 3]);
        let zero = DemandFunction::new(vec![0.0; 3], vec![0.0; 3], 1.0).unwrap();
        assert_eq!(region_segment(&inst, &[0, 0, 0], &zero).unwrap().pi_dir, vec![0.0; 3]);
    }

    #[test]
    fn first_exit_is_edge_three() {
        let inst = kinked_triangle();
        let d = kinked_triangle_demand(6.0);
        let maps = region_segment(&inst, &[0, 0, 0], &d).unwrap();
        let seg = SolutionSegment {
            lambda_lo: 0.0,
            lambda_hi: 0.0,
            pi_offset: maps.pi_offset,
            pi_dir: maps.pi_dir,
            x_offset: maps.x_offset,
            x_dir: maps.x_dir,
            region: vec![0, 0, 0],
        };
        let exit = lambda_exit(&inst, &seg, 0.0);
        assert_abs_diff_eq!(exit.lambda, 1.5, epsilon = 1e-14);
        assert_eq!(exit.crossings, vec![(2, 1)]);
        let still = SolutionSegment {
            pi_dir: vec![0.0; 3],
            ..seg
        };
        assert_eq!(lambda_exit(&inst, &still, 0.0).lambda, f64::INFINITY);
    }

    #[test]
    fn kinked_triangle_walk() {
        let inst = kinked_triangle();
        let sol = run_efpa(
            &inst,
            &kinked_triangle_demand(6.0),
            InitialSolution::ZeroFlow,
            EfpaOptions::default(),
        )
        .unwrap();
        let bps = sol.breakpoints();
        let expect = [0.0, 1.5, 3.75, 5.75, 6.0];
        assert_eq!(bps.len(), expect.len());
        for (a, b) in bps.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let pts = [(0.0, 0.0), (1.0, 0.5), (4.0, 2.0), (8.0, 3.0)];
        for (lam, (pt, pv)) in expect.iter().zip(pts) {
            let pi = sol.potential_at(*lam).unwrap();
            assert_abs_diff_eq!(pi[2], pt, epsilon = 1e-12);
            assert_abs_diff_eq!(pi[1], pv, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_edge_identity() {
        let net = Network::new(2, vec![(0, 1)], Mode::Undirected).unwrap();
        let f = PiecewiseLinearMarginal::from_parts(vec![], vec![1.0], vec![0.0]).unwrap();
        let inst = Instance::new(net, vec![f]).unwrap();
        let d = DemandFunction::source_sink(2, 0, 1, 1.0, 3.0).unwrap();
        let sol = run_efpa(&inst, &d, InitialSolution::ZeroFlow, EfpaOptions::default()).unwrap();
        assert_eq!(sol.segments.len(), 1);
        assert_abs_diff_eq!(sol.flow_at(2.0).unwrap()[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sol.potential_at(2.0).unwrap()[1], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn initial_potential_kinked_triangle() {
        let inst = kinked_triangle();
        let pi = initial_potential(&inst, &[0.5, 0.5, 1.0]).unwrap();
        assert_abs_diff_eq!(pi[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(pi[2], 1.0, epsilon = 1e-15);
    }
}
