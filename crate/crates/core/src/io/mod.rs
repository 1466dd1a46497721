//! Instance formats and solution files.

pub mod gas;
pub mod solution;
pub mod tntp;

use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::AnalyticMarginal;
use crate::error::{Error, Result};
use crate::instance::{AnalyticInstance, Instance};
use crate::network::{DemandFunction, Network};

pub use gas::{parse_gas_json, write_gas_json};
pub use solution::{read_solution, write_solution, SolutionFile, SolutionFormat};
pub use tntp::{parse_tntp, parse_trips_total, write_tntp, TRIPS_DIVISOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceClass {
    DirectedTraffic,
    UndirectedGas,
    Generic,
}

/// A parsed instance: graph, costs, base demand and the rate of the s-t direction.
#[derive(Debug, Clone)]
pub struct InstanceBundle {
    pub network: Network,
    pub costs: Vec<AnalyticMarginal>,
    /// Offset `b0`.
    pub base: Vec<f64>,
    /// Rate of the s-t flow making up the direction `b`.
    pub rate: f64,
    pub class: InstanceClass,
    /// Original vertex labels, indexed by internal id.
    pub labels: Vec<String>,
}

impl InstanceBundle {
    pub fn instance(&self) -> Result<AnalyticInstance> {
        Instance::new(self.network.clone(), self.costs.clone())
    }

    /// `b0 + λ·rate·(1_t − 1_s)` on `[0, lambda_max]`, with internal ids.
    pub fn demand(&self, s: usize, t: usize, lambda_max: f64) -> Result<DemandFunction> {
        let n = self.network.n_vertices();
        let dir = DemandFunction::source_sink(n, s, t, self.rate, lambda_max)?;
        DemandFunction::new(self.base.clone(), dir.b, lambda_max)
    }

    /// Internal id of a vertex label.
    pub fn vertex(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::invalid(format!("unknown vertex {label}")))
    }
}

/// `count` distinct ordered source-sink pairs with `s != t`, drawn uniformly and
/// reproducible from `seed`.
pub fn sample_pairs(n: usize, count: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if n < 2 {
        return Err(Error::invalid("need at least two vertices to sample pairs"));
    }
    let total = n * (n - 1);
    if count > total {
        return Err(Error::invalid(format!("only {total} distinct pairs on {n} vertices")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample(&mut rng, total, count)
        .into_iter()
        .map(|k| {
            let (s, r) = (k / (n - 1), k % (n - 1));
            (s, if r >= s { r + 1 } else { r })
        })
        .collect())
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
