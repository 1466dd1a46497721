use crate::cost::{AnalyticMarginal, Marginal, PiecewiseLinearMarginal};
use crate::error::{Error, Result};
use crate::network::Network;

/// A network with one marginal cost per edge.
#[derive(Debug, Clone)]
pub struct Instance<M> {
    pub network: Network,
    pub costs: Vec<M>,
}

pub type AnalyticInstance = Instance<AnalyticMarginal>;
pub type PwqInstance = Instance<PiecewiseLinearMarginal>;

impl<M: Marginal> Instance<M> {
    pub fn new(network: Network, costs: Vec<M>) -> Result<Self> {
        if costs.len() != network.n_edges() {
            return Err(Error::invalid(format!(
                "{} costs for {} edges",
                costs.len(),
                network.n_edges()
            )));
        }
        Ok(Instance { network, costs })
    }

    /// `C(x) = Σ F_e(x_e)`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.costs.iter().zip(x).map(|(f, &xe)| f.integral(xe)).sum()
    }

    pub fn marginals_at(&self, x: &[f64]) -> Vec<f64> {
        self.costs.iter().zip(x).map(|(f, &xe)| f.value(xe)).collect()
    }

    pub fn n_edges(&self) -> usize {
        self.costs.len()
    }
}

impl AnalyticInstance {
    /// Same network with system-optimal marginals `f + x f'`.
    pub fn system_optimal(&self) -> AnalyticInstance {
        Instance {
            network: self.network.clone(),
            costs: self.costs.iter().map(|f| f.system_optimal()).collect(),
        }
    }
}
