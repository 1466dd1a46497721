//! Marginal cost approximation: spline the marginals, then solve exactly.

use serde::{Deserialize, Serialize};

use crate::cost::{linear_spline, mca_mesh, AnalyticMarginal, Marginal, PiecewiseLinearMarginal, Rule, StepBudget};
use crate::efpa::{run_efpa, EfpaOptions, Homotopy, InitialSolution, ParametricSolution};
use crate::error::{Error, Result};
use crate::instance::{AnalyticInstance, Instance, PwqInstance};
use crate::network::{DemandFunction, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxParams {
    pub alpha: f64,
    pub beta: f64,
    /// Frank-Wolfe precision, used by MCFI only.
    pub epsilon: Option<f64>,
    /// Overrides the per-family rule choice.
    pub rule: Option<Rule>,
}

impl Default for ApproxParams {
    fn default() -> Self {
        ApproxParams {
            alpha: 1.01,
            beta: 1.0,
            epsilon: None,
            rule: None,
        }
    }
}

impl ApproxParams {
    pub fn new(alpha: f64, beta: f64) -> Self {
        ApproxParams {
            alpha,
            beta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0) || !self.alpha.is_finite() {
            return Err(Error::invalid(format!("alpha = {} must exceed 1", self.alpha)));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::invalid(format!("beta = {} must be nonnegative", self.beta)));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps < self.alpha - 1.0) {
                return Err(Error::invalid(format!("epsilon = {eps} must lie in (0, alpha - 1)")));
            }
        }
        Ok(())
    }
}

/// Checks that `|f''|` does not decrease away from 0 on a sample of `[−x_max, x_max]`.
fn rule_ii_applies(f: &AnalyticMarginal, x_max: f64, mode: Mode) -> bool {
    match f {
        AnalyticMarginal::Polynomial { .. } => {
            let k = 256;
            let side = |sign: f64| {
                let mut last = 0.0f64;
                (0..=k).all(|i| {
                    let x = sign * x_max * i as f64 / k as f64;
                    let v = f.second_derivative(x);
                    let ok = v.abs() >= last * (1.0 - 1e-12) && sign * v >= -1e-15;
                    last = v.abs();
                    ok
                })
            };
            side(1.0) && (mode == Mode::Directed || side(-1.0))
        }
        _ => true,
    }
}

/// Mesh sizes and rules picked per edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshReport {
    pub rules: Vec<Rule>,
    pub points: Vec<usize>,
    pub x_max: f64,
}

/// Spline-interpolated instance whose exact solution is `(α, β)`-approximate.
pub fn build_interpolated_instance(
    inst: &AnalyticInstance,
    demand: &DemandFunction,
    params: &ApproxParams,
) -> Result<(PwqInstance, MeshReport)> {
    params.validate()?;
    for f in &inst.costs {
        f.validate()?;
    }
    let mode = inst.network.mode();
    let mut x_max = demand.max_inflow(0.0, demand.lambda_max)?;
    if x_max == 0.0 {
        x_max = 1.0;
    }
    let budget = StepBudget {
        alpha: params.alpha,
        beta: params.beta,
        m: inst.n_edges(),
        x_max,
    };
    let mut costs = Vec::with_capacity(inst.n_edges());
    let mut rules = Vec::with_capacity(inst.n_edges());
    let mut points = Vec::with_capacity(inst.n_edges());
    for (e, f) in inst.costs.iter().enumerate() {
        let rule = params.rule.unwrap_or_else(|| Rule::for_family(f));
        if rule == Rule::II && !rule_ii_applies(f, x_max, mode) {
            return Err(Error::invalid(format!(
                "edge {e}: |f''| is not nondecreasing away from 0, rule II does not apply"
            )));
        }
        let mesh = mca_mesh(f, rule, &budget, mode)?;
        let spline = linear_spline(f, &mesh)?;
        let spline = match mode {
            Mode::Directed => spline.with_bounds(Some(0.0), None)?,
            Mode::Undirected => spline,
        };
        rules.push(rule);
        points.push(mesh.len());
        costs.push(spline);
    }
    let pwq = Instance::new(inst.network.clone(), costs)?;
    Ok((pwq, MeshReport { rules, points, x_max }))
}

#[derive(Debug, Clone)]
pub struct McaSolution {
    pub solution: ParametricSolution,
    pub instance: PwqInstance,
    pub mesh: MeshReport,
    /// Homotopy on `λ ↦ λ b0` used to reach the start of an affine demand.
    pub phase_one: Option<ParametricSolution>,
}

/// Solves `inst` on the whole demand range within `(α, β)`.
///
/// Demands with `b0 ≠ 0` need homogeneous marginals: the start point is then reached
/// by a first homotopy from zero flow along `λ b0`.
pub fn run_mca(
    inst: &AnalyticInstance,
    demand: &DemandFunction,
    params: &ApproxParams,
    opts: EfpaOptions,
) -> Result<McaSolution> {
    let (pwq, mesh) = build_interpolated_instance(inst, demand, params)?;
    if !demand.has_offset() {
        let solution = run_efpa(&pwq, demand, InitialSolution::ZeroFlow, opts)?;
        return Ok(McaSolution {
            solution,
            instance: pwq,
            mesh,
            phase_one: None,
        });
    }
    if !pwq.costs.iter().all(PiecewiseLinearMarginal::is_homogeneous) {
        return Err(Error::invalid(
            "affine demand with inhomogeneous costs needs a warm start (see run_mca_from)",
        ));
    }
    let n = inst.network.n_vertices();
    let lift = DemandFunction::new(vec![0.0; n], demand.b0.clone(), 1.0)?;
    let mut walk = Homotopy::new(&pwq, &lift, InitialSolution::ZeroFlow, opts)?;
    let mut first = Vec::new();
    while let Some(seg) = walk.advance()? {
        first.push(seg);
    }
    let pi = walk.potential().to_vec();
    let phase_one = ParametricSolution {
        segments: first,
        stats: walk.stats.clone(),
    };
    let solution = run_efpa(&pwq, demand, InitialSolution::Potential(pi), opts)?;
    Ok(McaSolution {
        solution,
        instance: pwq,
        mesh,
        phase_one: Some(phase_one),
    })
}

/// As [`run_mca`] with a caller-supplied optimal start at λ = 0.
pub fn run_mca_from(
    inst: &AnalyticInstance,
    demand: &DemandFunction,
    params: &ApproxParams,
    initial: InitialSolution,
    opts: EfpaOptions,
) -> Result<McaSolution> {
    let (pwq, mesh) = build_interpolated_instance(inst, demand, params)?;
    let solution = run_efpa(&pwq, demand, initial, opts)?;
    Ok(McaSolution {
        solution,
        instance: pwq,
        mesh,
        phase_one: None,
    })
}

/// Original-cost objective of an approximate flow.
pub fn original_cost<M: Marginal>(inst: &Instance<M>, x: &[f64]) -> f64 {
    inst.objective(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Network;
    use approx::assert_abs_diff_eq;

    #[test]
    fn linear_marginals_unchanged() {
        let net = Network::new(3, vec![(0, 1), (1, 2), (0, 2)], Mode::Undirected).unwrap();
        let inst = Instance::new(net, vec![AnalyticMarginal::linear(0.0, 1.0); 3]).unwrap();
        let d = DemandFunction::source_sink(3, 0, 2, 1.0, 2.0).unwrap();
        let (pwq, report) = build_interpolated_instance(&inst, &d, &ApproxParams::default()).unwrap();
        assert!(report.points.iter().all(|&p| p == 3));
        for f in &pwq.costs {
            for &x in &[-2.0, 0.3, 1.7] {
                assert_abs_diff_eq!(f.value(x), x, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn bad_params_rejected() {
        assert!(ApproxParams::new(1.0, 1.0).validate().is_err());
        assert!(ApproxParams::new(1.1, -1.0).validate().is_err());
        let mut p = ApproxParams::new(1.01, 1.0);
        p.epsilon = Some(0.02);
        assert!(p.validate().is_err());
    }

    #[test]
    fn forced_rule_ii_rejects_concave_polynomial() {
        let net = Network::new(2, vec![(0, 1), (1, 0)], Mode::Directed).unwrap();
        let f = AnalyticMarginal::polynomial(vec![1.0, 3.0, 1.0, -0.1]);
        let inst = Instance::new(net, vec![f.clone(), f]).unwrap();
        let d = DemandFunction::source_sink(2, 0, 1, 1.0, 5.0).unwrap();
        let mut p = ApproxParams {
            rule: Some(Rule::II),
            ..ApproxParams::default()
        };
        assert!(build_interpolated_instance(&inst, &d, &p).is_err());
        p.rule = None;
        assert!(build_interpolated_instance(&inst, &d, &p).is_ok());
    }

    #[test]
    fn phase_one_hands_over_its_flow() {
        let net = Network::new(3, vec![(0, 1), (1, 2), (0, 2)], Mode::Undirected).unwrap();
        let inst = Instance::new(
            net,
            vec![
                AnalyticMarginal::weymouth(1.0),
                AnalyticMarginal::weymouth(2.0),
                AnalyticMarginal::weymouth(0.5),
            ],
        )
        .unwrap();
        let d = DemandFunction::new(vec![-1.0, 0.5, 0.5], vec![-1.0, 0.0, 1.0], 1.0).unwrap();
        let out = run_mca(&inst, &d, &ApproxParams::new(1.01, 0.01), EfpaOptions::default()).unwrap();
        let p1 = out.phase_one.unwrap();
        let end = p1.flow_at(1.0).unwrap();
        let start = out.solution.flow_at(0.0).unwrap();
        for (a, b) in end.iter().zip(&start) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }
}
