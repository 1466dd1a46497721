//! Minimum-cost flow interpolation: solve at chosen λ_i, interpolate linearly between.

use serde::{Deserialize, Serialize};

use crate::cost::{AnalyticMarginal, Marginal, Rule};
use crate::efpa::initial_potential;
use crate::error::{Error, Result};
use crate::fw::{linear_oracle, solve_fixed, FwOptions, FwResult};
use crate::instance::{AnalyticInstance, Instance};
use crate::linalg::LaplacianState;
use crate::mca::ApproxParams;
use crate::network::{source_sink_decompose, DemandFunction, Mode};
use crate::paths::{Arc, Graph};

/// Sub-budget spent on the Weymouth regularization.
pub const GAS_ALPHA: f64 = 1.0 + 1e-5;
pub const GAS_BETA: f64 = 1e-5;

pub const DEFAULT_EPSILON_DIRECTED: f64 = 0.0015;
pub const DEFAULT_EPSILON_UNDIRECTED: f64 = 0.0025;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub cost_lo: f64,
    pub cost_hi: f64,
}

/// Quantities needed to re-check one step of the rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub lambda: f64,
    pub delta: f64,
    pub cost_lo: f64,
    /// `M` (rule I) or `B` (rule II) the step was sized with.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolatedSolution {
    pub breakpoints: Vec<Breakpoint>,
    #[serde(default)]
    pub steps: Vec<StepRecord>,
    #[serde(default)]
    pub rule: Option<Rule>,
    /// Budget the steps were sized for, after any regularization split.
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub epsilon: f64,
    /// Regularization added to Weymouth marginals, 0 if none.
    #[serde(default)]
    pub zeta: f64,
}

impl InterpolatedSolution {
    pub fn lambda_max(&self) -> f64 {
        self.breakpoints.last().map_or(0.0, |b| b.lambda)
    }

    /// Convex combination of the two breakpoints around `lambda`.
    pub fn query(&self, lambda: f64) -> Result<Vec<f64>> {
        let bps = &self.breakpoints;
        let (first, last) = match (bps.first(), bps.last()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::invalid("empty interpolated solution")),
        };
        if !(first.lambda <= lambda && lambda <= last.lambda) {
            return Err(Error::Domain {
                name: "lambda",
                value: lambda,
                lo: first.lambda,
                hi: last.lambda,
            });
        }
        let i = bps.partition_point(|b| b.lambda <= lambda).saturating_sub(1);
        if i + 1 >= bps.len() {
            return Ok(last.x.clone());
        }
        let (a, b) = (&bps[i], &bps[i + 1]);
        let w = (lambda - a.lambda) / (b.lambda - a.lambda);
        Ok(a.x.iter().zip(&b.x).map(|(p, q)| (1.0 - w) * p + w * q).collect())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct McfiOptions {
    pub rule: Option<Rule>,
    /// Size `M`/`B` over the step itself instead of the whole remaining range.
    pub refined: bool,
    pub max_steps: usize,
    pub fw_max_iterations: usize,
}

impl Default for McfiOptions {
    fn default() -> Self {
        McfiOptions {
            rule: None,
            refined: true,
            max_steps: 5_000_000,
            fw_max_iterations: 100_000,
        }
    }
}

/// Shortest `s`-`t` distance when every edge can be used both ways at cost
/// `max(f(M), −f(−M))`.
pub fn nu_bound<M: Marginal>(inst: &Instance<M>, m: f64, s: usize, t: usize) -> f64 {
    nu_distances(inst, m, s)[t]
}

fn nu_distances<M: Marginal>(inst: &Instance<M>, m: f64, s: usize) -> Vec<f64> {
    let mut arcs = Vec::with_capacity(2 * inst.n_edges());
    for (e, (&(u, v), f)) in inst.network.edges().iter().zip(&inst.costs).enumerate() {
        let nu = f.value(m).max(-f.value(-m)).max(0.0);
        arcs.push(Arc {
            from: u,
            to: v,
            weight: nu,
            edge: e,
        });
        arcs.push(Arc {
            from: v,
            to: u,
            weight: nu,
            edge: e,
        });
    }
    Graph::new(inst.network.n_vertices(), arcs).dijkstra(s)
}

fn rule_rhs(params: &ApproxParams, eps: f64, cost_lo: f64) -> f64 {
    ((params.alpha - 1.0 - eps) / (1.0 + eps)) * cost_lo + params.beta / (1.0 + eps)
}

/// `Σ_j r_j ν^M(s_j, t_j)` over the source-sink decomposition of `b`.
fn rule_i_coefficient<M: Marginal>(inst: &Instance<M>, b: &[f64], m: f64) -> Result<f64> {
    let dec = source_sink_decompose(b)?;
    let mut total = 0.0;
    let mut cache: Vec<Option<Vec<f64>>> = vec![None; inst.network.n_vertices()];
    for t in &dec.triples {
        let d = cache[t.source].get_or_insert_with(|| nu_distances(inst, m, t.source));
        total += t.rate * d[t.sink];
    }
    Ok(total)
}

/// `√(bᵀ L*_B b)` with conductances `1 / max(f'(B), f'(−B))`.
fn rule_ii_coefficient<M: Marginal>(inst: &Instance<M>, b: &[f64], bound: f64) -> Result<f64> {
    let c: Vec<f64> = inst
        .costs
        .iter()
        .map(|f| {
            let d = f.derivative(bound).max(f.derivative(-bound));
            if d > 0.0 {
                1.0 / d
            } else {
                0.0
            }
        })
        .collect();
    let mut lap = LaplacianState::assemble(&inst.network, &c)?;
    if lap.is_singular() {
        return Err(Error::Singular);
    }
    let pi = lap.reduced_solve(b)?;
    let q: f64 = b.iter().zip(&pi).map(|(x, y)| x * y).sum();
    Ok(q.max(0.0).sqrt())
}

/// Largest `δ ∈ (0, rest]` with `δ·coef(δ) ≤ rhs`, `coef` nondecreasing.
fn largest_step(rest: f64, rhs: f64, mut coef: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    if rest <= 0.0 {
        return Ok((0.0, coef(0.0)?));
    }
    let c = coef(rest)?;
    if rest * c <= rhs {
        return Ok((rest, c));
    }
    // Start from the step the bound at δ = 0 allows, which is an upper bound.
    let c0 = coef(0.0)?;
    let mut hi = if c0 > 0.0 { (rhs / c0).min(rest) } else { rest };
    let c = coef(hi)?;
    if hi * c <= rhs {
        return Ok((hi, c));
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid * coef(mid)? <= rhs {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-6 * hi {
            break;
        }
    }
    Ok((lo, coef(lo)?))
}

fn zero_step_error() -> Error {
    Error::invalid("zero admissible step: the lower cost bound is 0, use beta > 0")
}

/// Rule-I step from `lambda` given a lower bound on `C(lambda)`; returns `(δ, M)`.
pub fn step_rule_i<M: Marginal>(
    inst: &Instance<M>,
    demand: &DemandFunction,
    lambda: f64,
    cost_lo: f64,
    params: &ApproxParams,
    eps: f64,
    refined: bool,
) -> Result<(f64, f64)> {
    let rest = demand.lambda_max - lambda;
    let rhs = rule_rhs(params, eps, cost_lo);
    if !(rhs > 0.0) {
        return Err(zero_step_error());
    }
    let whole = demand.max_inflow(0.0, demand.lambda_max)?;
    let m_of = |d: f64| -> Result<f64> {
        if refined {
            demand.max_inflow(lambda, (lambda + d).min(demand.lambda_max))
        } else {
            Ok(whole)
        }
    };
    let (delta, _) = largest_step(rest, rhs, |d| rule_i_coefficient(inst, &demand.b, m_of(d)?))?;
    if !(delta > 0.0) && rest > 0.0 {
        return Err(zero_step_error());
    }
    Ok((delta, m_of(delta)?))
}

/// Rule-II step; returns `(δ, B)`.
pub fn step_rule_ii<M: Marginal>(
    inst: &Instance<M>,
    demand: &DemandFunction,
    lambda: f64,
    cost_lo: f64,
    params: &ApproxParams,
    eps: f64,
    refined: bool,
) -> Result<(f64, f64)> {
    let rest = demand.lambda_max - lambda;
    let rhs = rule_rhs(params, eps, cost_lo);
    if !(rhs > 0.0) {
        return Err(zero_step_error());
    }
    let target = 2.0 * std::f64::consts::SQRT_2 * rhs.sqrt();
    let tail = demand.max_inflow(lambda, demand.lambda_max)?;
    let b_of = |d: f64| -> Result<f64> {
        if refined {
            demand.max_inflow(lambda, (lambda + d).min(demand.lambda_max))
        } else {
            Ok(tail)
        }
    };
    let (delta, _) = largest_step(rest, target, |d| rule_ii_coefficient(inst, &demand.b, b_of(d)?))?;
    if !(delta > 0.0) && rest > 0.0 {
        return Err(zero_step_error());
    }
    Ok((delta, b_of(delta)?))
}

/// Slack `rhs − lhs` of a recorded step, recomputed from scratch.
pub fn step_slack<M: Marginal>(
    inst: &Instance<M>,
    demand: &DemandFunction,
    rule: Rule,
    params: &ApproxParams,
    eps: f64,
    step: &StepRecord,
) -> Result<f64> {
    let rhs = rule_rhs(params, eps, step.cost_lo);
    Ok(match rule {
        Rule::I => rhs - step.delta * rule_i_coefficient(inst, &demand.b, step.bound)?,
        Rule::II => {
            2.0 * std::f64::consts::SQRT_2 * rhs.max(0.0).sqrt()
                - step.delta * rule_ii_coefficient(inst, &demand.b, step.bound)?
        }
    })
}

/// `ζ = 2 √((α' − 1) β' β* / (m x_max))` with `β*` the smallest Weymouth coefficient.
pub fn gas_zeta(inst: &AnalyticInstance, x_max: f64, alpha_sub: f64, beta_sub: f64) -> Result<f64> {
    let mut beta_min = f64::INFINITY;
    for f in &inst.costs {
        match f {
            AnalyticMarginal::Weymouth { beta } | AnalyticMarginal::RegularizedWeymouth { beta, .. } => {
                beta_min = beta_min.min(*beta)
            }
            _ => return Err(Error::invalid("gas_zeta needs Weymouth marginals")),
        }
    }
    if !(beta_min > 0.0) || !beta_min.is_finite() {
        return Err(Error::invalid(format!(
            "smallest Weymouth beta {beta_min} must be positive"
        )));
    }
    if !(x_max > 0.0) {
        return Err(Error::invalid("x_max must be positive"));
    }
    let m = inst.n_edges() as f64;
    Ok(2.0 * ((alpha_sub - 1.0) * beta_sub * beta_min / (m * x_max)).sqrt())
}

/// Weymouth instance with the regularization term added to every edge.
pub fn regularize(inst: &AnalyticInstance, zeta: f64) -> AnalyticInstance {
    let costs = inst
        .costs
        .iter()
        .map(|f| match f {
            AnalyticMarginal::Weymouth { beta } => AnalyticMarginal::RegularizedWeymouth { beta: *beta, zeta },
            other => other.clone(),
        })
        .collect();
    Instance {
        network: inst.network.clone(),
        costs,
    }
}

/// Routes `extra` on top of the feasible flow `x` along cheapest paths at `x`.
fn shift_flow<M: Marginal>(inst: &Instance<M>, x: &[f64], extra: &[f64]) -> Result<Vec<f64>> {
    if extra.iter().all(|&v| v == 0.0) {
        return Ok(x.to_vec());
    }
    let w: Vec<f64> = inst.marginals_at(x);
    let w = match inst.network.mode() {
        Mode::Directed => w.into_iter().map(|v| v.max(0.0)).collect(),
        Mode::Undirected => w,
    };
    let y = linear_oracle(inst, &w, extra, None)?;
    Ok(x.iter().zip(&y).map(|(a, b)| a + b).collect())
}

fn fw_solve<M: Marginal>(inst: &Instance<M>, d: &[f64], fw: &FwOptions, start: Option<Vec<f64>>) -> Result<FwResult> {
    solve_fixed(inst, d, fw, start)
}

/// Interpolated `(α, β)`-approximate solution from fixed-parameter solves.
///
/// Directed instances use rule I, undirected ones rule II. Pure Weymouth instances are
/// regularized first and the budget is split with the regularization.
pub fn run_mcfi(
    inst: &AnalyticInstance,
    demand: &DemandFunction,
    params: &ApproxParams,
    opts: &McfiOptions,
) -> Result<InterpolatedSolution> {
    params.validate()?;
    let mode = inst.network.mode();
    let eps = params.epsilon.unwrap_or(match mode {
        Mode::Directed => DEFAULT_EPSILON_DIRECTED,
        Mode::Undirected => DEFAULT_EPSILON_UNDIRECTED,
    });
    let rule = opts.rule.unwrap_or(match mode {
        Mode::Directed => Rule::I,
        Mode::Undirected => Rule::II,
    });
    let gas = inst
        .costs
        .iter()
        .all(|f| matches!(f, AnalyticMarginal::Weymouth { .. }));
    let (work, budget, zeta) = if gas && rule == Rule::II {
        let x_max = demand.max_inflow(0.0, demand.lambda_max)?.max(f64::MIN_POSITIVE);
        let zeta = gas_zeta(inst, x_max, GAS_ALPHA, GAS_BETA)?;
        let alpha = params.alpha / GAS_ALPHA;
        let beta = params.beta - alpha * GAS_BETA;
        if !(alpha > 1.0 + eps) || beta < 0.0 {
            return Err(Error::invalid("(alpha, beta) too small for the regularization budget"));
        }
        let sub = ApproxParams {
            alpha,
            beta,
            epsilon: Some(eps),
            rule: Some(rule),
        };
        (regularize(inst, zeta), sub, zeta)
    } else {
        let mut sub = *params;
        sub.epsilon = Some(eps);
        (inst.clone(), sub, 0.0)
    };
    budget.validate()?;
    let fw = FwOptions {
        epsilon: eps,
        max_iterations: opts.fw_max_iterations,
        ..FwOptions::default()
    };
    let check_monotone = rule == Rule::I && demand.has_offset();

    let mut breakpoints = Vec::new();
    let mut steps = Vec::new();
    let mut lambda = 0.0;
    let mut res = fw_solve(&work, &demand.at(0.0)?, &fw, None)?;
    loop {
        if check_monotone {
            let pi = initial_potential(&work, &res.flow)?;
            let slope: f64 = demand.b.iter().zip(&pi).map(|(a, b)| a * b).sum();
            if slope < -1e-9 * (1.0 + res.upper_cost.abs()) {
                return Err(Error::invalid(format!(
                    "C(λ) decreases at λ = {lambda} (bᵀπ = {slope}); use rule II"
                )));
            }
        }
        let cost_lo = res.lower_bound.max(0.0);
        breakpoints.push(Breakpoint {
            lambda,
            x: res.flow.clone(),
            cost_lo: res.lower_bound,
            cost_hi: res.upper_cost,
        });
        if lambda >= demand.lambda_max {
            break;
        }
        if steps.len() >= opts.max_steps {
            return Err(Error::ResourceLimit(format!(
                "more than {} interpolation steps",
                opts.max_steps
            )));
        }
        let (mut delta, bound) = match rule {
            Rule::I => step_rule_i(&work, demand, lambda, cost_lo, &budget, eps, opts.refined)?,
            Rule::II => step_rule_ii(&work, demand, lambda, cost_lo, &budget, eps, opts.refined)?,
        };
        let rest = demand.lambda_max - lambda;
        // λ + δ rounds; shrink until the stored step passes the audit exactly.
        let mut record = StepRecord {
            lambda,
            delta,
            cost_lo,
            bound,
        };
        let mut next = lambda;
        for _ in 0..64 {
            next = if delta >= rest {
                demand.lambda_max
            } else {
                lambda + delta
            };
            record.delta = next - lambda;
            if step_slack(&work, demand, rule, &budget, eps, &record)? >= 0.0 {
                break;
            }
            delta = record.delta * (1.0 - 1e-12);
        }
        if !(record.delta > 0.0) {
            return Err(Error::ResourceLimit(format!("step underflow at λ = {lambda}")));
        }
        steps.push(record);
        let delta = record.delta;
        let extra: Vec<f64> = demand.b.iter().map(|v| v * delta).collect();
        let start = shift_flow(&work, &res.flow, &extra)?;
        res = fw_solve(&work, &demand.at(next)?, &fw, Some(start))?;
        lambda = next;
    }
    Ok(InterpolatedSolution {
        breakpoints,
        steps,
        rule: Some(rule),
        alpha: budget.alpha,
        beta: budget.beta,
        epsilon: eps,
        zeta,
    })
}

/// Instance the steps of `sol` were sized on (regularized if `sol.zeta > 0`).
pub fn working_instance(inst: &AnalyticInstance, sol: &InterpolatedSolution) -> AnalyticInstance {
    if sol.zeta > 0.0 {
        regularize(inst, sol.zeta)
    } else {
        inst.clone()
    }
}

/// Slack of every recorded step; all must be nonnegative.
pub fn audit(inst: &AnalyticInstance, demand: &DemandFunction, sol: &InterpolatedSolution) -> Result<Vec<f64>> {
    let work = working_instance(inst, sol);
    let rule = sol.rule.ok_or_else(|| Error::invalid("solution carries no rule"))?;
    let params = ApproxParams {
        alpha: sol.alpha,
        beta: sol.beta,
        epsilon: Some(sol.epsilon),
        rule: Some(rule),
    };
    sol.steps
        .iter()
        .map(|s| step_slack(&work, demand, rule, &params, sol.epsilon, s))
        .collect()
}
